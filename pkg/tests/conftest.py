import pytest
from prefect.testing.utilities import prefect_test_harness

from uosdetect.settings import temporary_settings

from .fixtures import *


@pytest.fixture(autouse=True, scope="session")
def temp_uosdetect_settings():
    with temporary_settings(log_level="DEBUG", workers=1, chunk_size=1000):
        yield


@pytest.fixture(autouse=True)
def reset_settings_after_each_test():
    with temporary_settings(
        workers=1, chunk_size=1000, seed=None, plots=True, log_level="DEBUG"
    ):
        yield


@pytest.fixture(autouse=True, scope="session")
def prefect_test_fixture():
    """
    Run Prefect against temporary sqlite database
    """
    with prefect_test_harness():
        yield
