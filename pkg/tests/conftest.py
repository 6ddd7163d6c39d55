import random

import pytest

from knot.group import GroupParams, ScriptedRandom, generate_safe_prime
from knot.oracle import generators, safe_primes_between
from knot.protocol import SessionParams

EXAMPLE_GROUP = GroupParams(p=23, q=11, g=5)
EXAMPLE_SECRETS = [b"password for file 1", b"password for file 2", b"password for file 3",
                 b"password for file 4", b"password for file 5"]

# Desk-scale safe primes with their smallest generator, from enumeration.
TINY_GROUPS = [GroupParams(p, (p - 1) // 2, generators(p)[0]) for p in safe_primes_between(5, 200)]


@pytest.fixture
def example_session():
    return SessionParams.default(EXAMPLE_GROUP, 5, 2)


@pytest.fixture
def example_rngs():
    """(sender, receiver) randomness replaying N_A1=4, N_A2=8 and N_B1=2*5, N_B2=6."""
    return ScriptedRandom([4, 8]), ScriptedRandom([5, 6])


@pytest.fixture(scope="session")
def group_512():
    return generate_safe_prime(512, random.Random(512))


_ACCEPTANCE: list[tuple[str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): exit criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE.append((marker.args[0], "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in _ACCEPTANCE:
        terminalreporter.write_line(f"{verdict}  {name}")
