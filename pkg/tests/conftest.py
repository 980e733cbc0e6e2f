import shutil
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from volsent.fixture import bundled_fixture_dir

settings.register_profile("default", max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def fixture_dir(tmp_path) -> Path:
    """A private copy of the bundled fixture (config, prices, headlines)."""
    dst = tmp_path / "fixture"
    shutil.copytree(bundled_fixture_dir(), dst)
    return dst
