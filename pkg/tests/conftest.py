"""Shared fixtures plus the acceptance-summary reporting hook.

Acceptance tests register their checks through the ``acceptance`` fixture;
at the end of the run one PASS/FAIL line per criterion is printed so the
acceptance status is readable without scrolling through the pytest log.
"""

import pytest
from hypothesis import HealthCheck, settings

from trapsim.core import Environment, TrapSystem, derive_particle

settings.register_profile(
    "trapsim",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("trapsim")

# One entry per acceptance criterion: {"title": str, "checks": [(ok, detail)],
# "done": bool}.  Module-level so the terminal-summary hook can see it.
_ACCEPTANCE = {}


class _Recorder:
    def __init__(self, number, title):
        self.entry = _ACCEPTANCE.setdefault(
            number, {"title": title, "checks": [], "done": False})

    def check(self, ok, detail):
        self.entry["checks"].append((bool(ok), detail))
        assert ok, detail

    def done(self):
        self.entry["done"] = True


@pytest.fixture
def acceptance():
    return _Recorder


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        entry = _ACCEPTANCE[number]
        ok = entry["done"] and all(passed for passed, _ in entry["checks"])
        terminalreporter.write_line(
            f"ACCEPTANCE {number:2d} [{entry['title']}]: "
            f"{'PASS' if ok else 'FAIL'}")
        if not ok:
            for passed, detail in entry["checks"]:
                if not passed:
                    terminalreporter.write_line(f"    failed: {detail}")
            if not entry["done"]:
                terminalreporter.write_line(
                    "    (criterion did not run to completion)")


@pytest.fixture(scope="session")
def particle30():
    return derive_particle(radius=30.1e-6, density=7430.0, remanent_field=0.71)


@pytest.fixture(scope="session")
def particle27():
    return derive_particle(radius=27.0e-6, density=7430.0, remanent_field=0.71,
                           conductivity=1.0e6, chi_imag=1.4e-3)


@pytest.fixture(scope="session")
def trap30(particle30):
    return TrapSystem(well_radius=2.0e-3, well_depth=4.0e-3,
                      particle=particle30)


@pytest.fixture(scope="session")
def trap27(particle27):
    return TrapSystem(well_radius=2.0e-3, well_depth=4.0e-3,
                      particle=particle27)


@pytest.fixture(scope="session")
def environment():
    return Environment()
