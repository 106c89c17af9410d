from datetime import datetime, timezone

import pytest

from ledgerflow.ingest import DROPS_PER_XRP, TransactionRecord


def make(ts, src, dst, xrp=None, drops=None, cur=("XRP", "XRP"), delivered=None):
    """Record factory; ``ts`` is 'YYYY-MM-DDThh:mm:ss' (UTC)."""
    if drops is None:
        drops = int(round((xrp if xrp is not None else 1) * DROPS_PER_XRP))
    stamp = datetime.fromisoformat(ts).replace(tzinfo=timezone.utc)
    return TransactionRecord(stamp, src, dst, cur[0], cur[1], drops, drops if delivered is None else delivered)


@pytest.fixture
def rec():
    return make


# criterion number -> (passed, description); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, desc = ACCEPTANCE[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {num:2d}: {desc}")
