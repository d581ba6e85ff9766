"""
Shared fixtures
"""
import pytest
from loguru import logger

from app.config import settings


@pytest.fixture(autouse=True)
def quiet_settings(monkeypatch):
    """No log file and no progress bars during tests"""
    monkeypatch.setattr(settings, "log_file", None)
    monkeypatch.setattr(settings, "mc_progress", False)
    yield
    # sinks added inside a test may point at captured streams
    logger.remove()
