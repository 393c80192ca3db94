import numpy as np
import pytest

from seebeam.channel import draw_channels
from seebeam.model import SystemConfig


@pytest.fixture(scope="session")
def cfg_default():
    return SystemConfig()


@pytest.fixture(scope="session")
def channels_default(cfg_default):
    return draw_channels(cfg_default, 7)


@pytest.fixture(scope="session")
def cfg_scalar():
    """Single user, no eavesdroppers or harvesters: closed forms apply."""
    return SystemConfig(n_lue=1, n_eve=0, n_ehn=0, psr_ratios=(1.0,),
                        lue_dist_m=(16.0,), eve_dist_m=(), ehn_dist_m=())


@pytest.fixture(scope="session")
def channels_scalar(cfg_scalar):
    return draw_channels(cfg_scalar, 1)
