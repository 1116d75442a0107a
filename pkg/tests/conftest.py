import json
import pathlib
import sys

import numpy as np
import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

DATA = pathlib.Path(__file__).resolve().parents[1] / "src" / "conegeo" / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def stored_model():
    from conegeo.likelihood import LinearModel

    with open(DATA / "generic_n3_d2.json") as fh:
        return LinearModel.from_json(json.load(fh))


@pytest.fixture
def stored_model_path():
    return DATA / "generic_n3_d2.json"


def pytest_terminal_summary(terminalreporter):
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance") and getattr(mod, "RESULTS", None):
            terminalreporter.section("acceptance criteria")
            for line in mod.RESULTS:
                terminalreporter.write_line(line)
