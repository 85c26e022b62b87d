import logging
from logging.handlers import RotatingFileHandler

import numpy as np
import pytest

from lgd.lgd_mission import builtin_mission, parse_mission
from lgd.lgd_paramspec import default_table

# Define the logger and set its name
logger = logging.getLogger("pytest_logger")
logger.setLevel(logging.DEBUG)

# Ensure handlers aren't added multiple times
if not logger.hasHandlers():
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(logging.Formatter(fmt="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
                                                   datefmt="%Y-%m-%d %H:%M:%S"))
    console_handler.setLevel(logging.INFO)
    logger.addHandler(console_handler)

    file_handler = RotatingFileHandler("pytest.log", maxBytes=10 * 1024 * 1024, backupCount=5)
    file_handler.setFormatter(logging.Formatter(fmt="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
                                                datefmt="%Y-%m-%d %H:%M:%S"))
    file_handler.setLevel(logging.DEBUG)
    logger.addHandler(file_handler)


def pytest_configure(config):
    """Runs once at the start of the test session."""
    logger.info("Global pytest logger initialized.")


@pytest.fixture(scope="session")
def table():
    """The shipped 23 parameter table."""
    return default_table()


@pytest.fixture(scope="session")
def mission():
    return builtin_mission()


@pytest.fixture(scope="session")
def short_mission():
    """One short leg so simulated tests stay quick."""
    return parse_mission("TAKEOFF 5\nRADIUS 2\nWP 10 0 5\nLAND\n")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
