import pytest

from mulink_plots import sample_dir


@pytest.fixture(scope="session")
def samples():
    d = sample_dir()
    assert d.is_dir(), f"sample data directory missing: {d}"
    return d
