import json
import os

import numpy as np
import pytest

from s2t.dataset import canonical_subject, make_subjects
from s2t.glyphs import default_bank
from s2t.model import ModelConfig, init_params

ACCEPTANCE_LOG = os.path.join(os.path.dirname(__file__), "_acceptance_results.json")


def pytest_sessionstart(session):
    if os.path.exists(ACCEPTANCE_LOG):
        os.remove(ACCEPTANCE_LOG)


@pytest.fixture(scope="session")
def bank():
    return default_bank()


@pytest.fixture(scope="session")
def neutral_subject():
    return canonical_subject()


@pytest.fixture(scope="session")
def subjects():
    return make_subjects(12, seed=99)


@pytest.fixture
def tiny_config():
    return ModelConfig(l_e=1, l_d=1, d_a=2, d_h=4, d_p=8, k=1, d_f=8, n=6, m=4,
                       vocab_size=11, dropout=0.0)


@pytest.fixture
def tiny_params(tiny_config):
    return init_params(tiny_config, seed=3, dtype=np.float64)


def record_criterion(number, passed, detail, part=None):
    """Collect one acceptance line; printed in the terminal summary.
    Multi-part criteria record under (number, part) and merge into one line."""
    rows = []
    if os.path.exists(ACCEPTANCE_LOG):
        with open(ACCEPTANCE_LOG) as f:
            rows = json.load(f)
    key = [number, part]
    rows = [r for r in rows if [r["criterion"], r.get("part")] != key]
    rows.append({"criterion": number, "part": part, "passed": bool(passed),
                 "detail": detail})
    with open(ACCEPTANCE_LOG, "w") as f:
        json.dump(rows, f)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not os.path.exists(ACCEPTANCE_LOG):
        return
    with open(ACCEPTANCE_LOG) as f:
        rows = json.load(f)
    merged = {}
    for row in rows:
        n = row["criterion"]
        if n in merged:
            merged[n] = (merged[n][0] and row["passed"],
                         merged[n][1] + "; " + row["detail"])
        else:
            merged[n] = (row["passed"], row["detail"])
    terminalreporter.section("acceptance criteria")
    for n in sorted(merged):
        passed, detail = merged[n]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}")
