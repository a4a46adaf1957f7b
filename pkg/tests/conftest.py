# conftest.py
# Fixtures compartidas: el preset binario y su documento editable.

import copy

import pytest

from covert_game.model import Scenario
from covert_game.presets import binary_document, load_preset

# Constantes del escenario binario de referencia
LAM = 0.55
PI_BAR = 0.85
PI0 = 0.15
# Nivel de π̂ desde el que el posterior tras la observación incriminatoria alcanza π̄
PI_STAR = 0.3825 / 0.465


@pytest.fixture(scope="session")
def scenario() -> Scenario:
    return load_preset("example_sec4")


@pytest.fixture
def document() -> dict:
    return copy.deepcopy(binary_document())


def build(document: dict) -> Scenario:
    return Scenario.model_validate(document)
