import numpy as np
import pytest

from carosac.kinematics import RigGeometry, default_rig


@pytest.fixture
def rig():
    return default_rig()


@pytest.fixture
def symmetric_rig():
    """Anchors at (+-2, +-2, 4) with zero offsets and a workspace around the origin."""
    anchors = np.array([[2.0, 2.0, 4.0], [-2.0, 2.0, 4.0], [-2.0, -2.0, 4.0], [2.0, -2.0, 4.0]])
    return RigGeometry(anchors, np.zeros((4, 3)), np.array([-1.0, -1.0, -1.0]), np.array([1.0, 1.0, 1.0]),
                       (1.0, 8.0))


DEFAULT_TOML = """
[rig]
anchors = [[2.0, 2.0, 4.0], [-2.0, 2.0, 4.0], [-2.0, -2.0, 4.0], [2.0, -2.0, 4.0]]
offsets = [[-0.05, -0.05, 0.0], [0.05, -0.05, 0.0], [0.05, 0.05, 0.0], [-0.05, 0.05, 0.0]]
workspace = [[-2.0, -2.0, 0.0], [2.0, 2.0, 2.0]]
length_bounds = [2.0, 7.0]
"""


@pytest.fixture
def write_config(tmp_path):
    def write(text=DEFAULT_TOML, name="rig.toml"):
        path = tmp_path / name
        path.write_text(text)
        return path
    return write


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request, capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""
    def report(number, name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} ({detail})"
        request.config.stash[ACCEPTANCE_KEY].append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
