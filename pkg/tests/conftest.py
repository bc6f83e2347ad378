import pytest

from crossbar_channel.config import default_bundle


@pytest.fixture(scope="session")
def bundle():
    """Reference parameter bundle (1024 x 1024, r_w = r_b = 10, ideal selectors)."""
    return default_bundle()


@pytest.fixture
def write_cfg(tmp_path):
    def _write(text: str):
        path = tmp_path / "params.cfg"
        path.write_text(text, encoding="utf-8")
        return path
    return _write
