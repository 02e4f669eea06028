import sys
from collections import OrderedDict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from geoqa import KnowledgeBase, Resources  # noqa: E402
from geoqa.resources import default_data_dir  # noqa: E402

DATA = default_data_dir()


@pytest.fixture(scope="session")
def kb():
    return KnowledgeBase.load(DATA / "kb")


@pytest.fixture(scope="session")
def res():
    return Resources.load(DATA / "tables")


# --- acceptance reporting -------------------------------------------------------

_criteria: "OrderedDict[int, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "ok": True, "ran": False})
    if report.when == "call" or report.failed:
        entry["ran"] = True
        if report.failed:
            entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        status = "PASS" if e["ok"] and e["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {e['title']}")
