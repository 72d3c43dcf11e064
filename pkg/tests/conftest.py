import pytest

from painleve import catalog


@pytest.fixture(scope="session")
def cat():
    return catalog.load_default()
