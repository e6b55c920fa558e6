import numpy as np
import pytest

from slackmin.game import GameConfig, History, PRESETS


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def n5_config():
    return GameConfig(n=5, T=1000)


@pytest.fixture
def n5_model():
    return PRESETS["table1_n5"]


def random_history(rng, n: int, m: int, c_lo: float = -20.0,
                   c_hi: float = 60.0) -> History:
    """m steps of uniform incentives with arbitrary (not best-response) arms."""
    h = History(n)
    for t in range(1, m + 1):
        pi = rng.uniform(c_lo, c_hi, size=n)
        h.append(t, pi, int(rng.integers(1, n + 1)), 0.0)
    return h


def best_response_history(rng, s0, m: int, c_lo: float = -20.0,
                          c_hi: float = 60.0) -> History:
    """m steps where the chosen arm maximizes s0 + pi exactly."""
    s0 = np.asarray(s0, dtype=float)
    h = History(len(s0))
    for t in range(1, m + 1):
        pi = rng.uniform(c_lo, c_hi, size=len(s0))
        h.append(t, pi, int(np.argmax(s0 + pi)) + 1, 0.0)
    return h
