import numpy as np
import pytest

from jointlp import build_trellis, branch_metrics, dicode_spec, pr2_spec, single_parity_check

# one line per acceptance criterion, printed in the terminal summary
_CRITERIA: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[key])


@pytest.fixture
def criterion():
    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}"
        _CRITERIA[number] = line
        print(line)
        return ok
    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def spc3():
    return single_parity_check(3)


@pytest.fixture(params=["dic", "pdic", "pr2"])
def spec(request):
    return {"dic": dicode_spec(), "pdic": dicode_spec(precoded=True), "pr2": pr2_spec()}[request.param]


@pytest.fixture
def spc3_dic():
    """SPC(3) over the dicode channel from the zero state, y=(1, 0.2, -1), sigma=0.5."""
    g = single_parity_check(3)
    tr = build_trellis(dicode_spec(), 3)
    b = branch_metrics(tr, [1.0, 0.2, -1.0], 0.5)
    return g, tr, b
