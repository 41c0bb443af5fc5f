"""Shared fixtures and the acceptance-criteria report.

Tests named ``test_criterion_NN_*`` in test_acceptance.py are collected into a
one-line-per-criterion PASS/FAIL block at the end of the run, aggregated over
parametrizations.
"""

import re

import numpy as np
import pytest

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


@pytest.fixture
def rng():
    return np.random.default_rng(20260825)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            m = _CRITERION.search(getattr(rep, "nodeid", "") or "")
            if not m:
                continue
            if status == "passed" and getattr(rep, "when", "call") != "call":
                continue
            key = (int(m.group(1)), m.group(2).split("[")[0])
            results[key] = results.get(key, True) and status == "passed"
    if not results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for (num, name), ok in sorted(results.items()):
        terminalreporter.write_line(
            f"criterion {num:02d} {name:<44s} {'PASS' if ok else 'FAIL'}"
        )
