import time

import numpy as np
import pytest

from ris.config import parse_config


def bundled(name: str):
    return parse_config(f"{name}.cfg")


class _Runs:
    """Scenario runs shared across test modules (each is run once per session)."""

    def __init__(self):
        self._traj = {}
        self._cert = {}
        self.timings = {}

    def config(self, name):
        return bundled(name)

    def trajectory(self, name):
        if name not in self._traj:
            sc = bundled(name).scenario
            t0 = time.perf_counter()
            self._traj[name] = sc.run()
            self.timings[name] = time.perf_counter() - t0
        return self._traj[name]

    def certificate(self, name):
        if name not in self._cert:
            from ris.verify.certificates import check_separately_global_certificate

            sc = bundled(name).scenario
            traj = self.trajectory(name)
            self._cert[name] = check_separately_global_certificate(
                traj, sc.verify, sc.rothe.y, snapshots=sc.snapshot_steps(traj.num_steps))
        return self._cert[name]


@pytest.fixture(scope="session")
def runs():
    return _Runs()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
