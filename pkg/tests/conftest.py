import os
from pathlib import Path

import pytest

from _report import LINES

IMAGE_DIR = Path(os.environ.get("DPEH_IMAGE_DIR", Path(__file__).resolve().parents[1] / "data" / "images"))


@pytest.fixture(scope="session")
def image_dir() -> Path:
    return IMAGE_DIR


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
