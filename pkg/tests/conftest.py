"""Shared fixtures for the test suite.

The verification suite (nliphoton.checks) is expensive, so it runs once
per session; test_acceptance.py asserts on the stored results and the
terminal summary prints one line per check.
"""

import pytest

_STASH = {}


@pytest.fixture(scope="session")
def verification_results():
    from nliphoton import checks

    results = checks.run_all(seed=20260817)
    _STASH["results"] = results
    return {r.check_id: r for r in results}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = _STASH.get("results")
    if not results:
        return
    terminalreporter.section("verification suite")
    for r in results:
        terminalreporter.write_line(r.line())
