import numpy as np
import pytest

from gaborbarcode.imaging import GrayImage, save_pgm

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    status = "SKIP" if report.skipped else ("FAIL" if report.failed else "PASS")
    if report.when == "call" or report.skipped or report.failed:
        prev = _criteria.get(number, (title, "PASS"))[1]
        worst = max(prev, status, key=["PASS", "SKIP", "FAIL"].index)
        _criteria[number] = (title, worst)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status = _criteria[number]
        terminalreporter.write_line(f"criterion {number:>2}  {status:<4}  {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def write_image(tmp_path):
    """Write a GrayImage (or pixel array) as PGM under tmp_path and return the path."""

    def _write(pixels, name="img.pgm"):
        image = pixels if isinstance(pixels, GrayImage) else GrayImage(pixels)
        path = tmp_path / name
        save_pgm(image, path)
        return path

    return _write
