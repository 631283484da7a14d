import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pronylab import core  # noqa: E402
from pronylab.error_geometry import RegularityParams, random_regular_signal  # noqa: E402

REGULAR = RegularityParams(eta=0.2, m_lo=0.5, m_hi=2.0)


def regular_corpus(n, seed=0, ds=(2, 3, 4), signs=False):
    rng = np.random.default_rng(seed)
    return [random_regular_signal(int(rng.choice(ds)), REGULAR, rng, signs=signs) for _ in range(n)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def pair():
    return core.SpikeSignal([1.0, 1.0], [-0.5, 0.5])
