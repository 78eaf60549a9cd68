import logging

import numpy as np
import pytest

from helpers import VERDICTS
from markovtest.cli import DESK, run_bench
from markovtest.engine import TestConfig

# replication seeds are BASE_SEED + r, so a longer run extends a shorter one
BASE_SEED = 1000


class BenchCache:
    """Model replications shared between test files; keyed by (model, T, k, variant)."""

    def __init__(self):
        self.rows = {}

    def results(self, model_id, T, k, R, variant="doubly_robust"):
        key = (model_id, T, k, variant)
        have = self.rows.get(key, [])
        if len(have) < R:
            config = TestConfig(**DESK, variant=variant)
            more = run_bench(model_id, [T], [k], R - len(have), config, BASE_SEED + len(have))
            for i, row in enumerate(more):
                row["replication"] = len(have) + i
            have = have + more
            self.rows[key] = have
        return have[:R]

    def rejection_fraction(self, model_id, T, k, R, variant="doubly_robust"):
        rows = self.results(model_id, T, k, R, variant)
        assert all(r["error"] is None for r in rows), [r["error"] for r in rows if r["error"]]
        return float(np.mean([r["reject"] for r in rows]))


@pytest.fixture(scope="session")
def bench_cache():
    logging.getLogger("markovtest.series").setLevel(logging.ERROR)
    return BenchCache()


def pytest_terminal_summary(terminalreporter):
    ran = [r for key in ("passed", "failed", "error")
           for r in terminalreporter.stats.get(key, []) if "test_acceptance" in r.nodeid]
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 13):
        terminalreporter.write_line(VERDICTS.get(number, f"criterion {number:>2} FAIL  no verdict recorded (test errored or was skipped)"))
