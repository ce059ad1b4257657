import numpy as np
import pytest

from speechfill.dsp import Waveform


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_waveform(rng):
    def make(n=16000, rate=16000, scale=0.5):
        return Waveform(rng.uniform(-scale, scale, n), rate)

    return make
