import numpy as np
import pytest
from hypothesis import settings

from comgrasp.bench import Bench
from comgrasp.sceneio import default_scene_path, load_scene

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def scene():
    return load_scene(default_scene_path())


@pytest.fixture(scope="session")
def bench(scene):
    return Bench(scene)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
