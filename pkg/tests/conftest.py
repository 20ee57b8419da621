import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

DEMO_NETS = Path(__file__).resolve().parents[1] / "demos" / "networks"


@pytest.fixture
def nets_dir():
    return DEMO_NETS


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
