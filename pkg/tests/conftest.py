from __future__ import annotations

import numpy as np
import pytest

from cocyclelab.base import (
    BernoulliMeasure,
    LebesgueMeasure,
    ShiftSystem,
    TorusSystem,
)

CAT = np.array([[2, 1], [1, 1]])


@pytest.fixture
def shift2() -> ShiftSystem:
    return ShiftSystem(alphabet_size=2, measure=BernoulliMeasure(weights=(0.5, 0.5)))


@pytest.fixture
def cat() -> TorusSystem:
    return TorusSystem(matrix=CAT, measure=LebesgueMeasure())
