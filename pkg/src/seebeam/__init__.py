"""Robust secrecy-energy-efficiency beamforming for MISOME-SWIPT downlinks."""

from .model import (
    BeamformingSolution,
    HermitianMatrix,
    MetricsReport,
    SystemConfig,
    dbm_to_w,
    w_to_dbm,
)
from .channel import ChannelSet, UncertaintyBall, draw_channels

__version__ = "0.1.0"

__all__ = [
    "BeamformingSolution",
    "ChannelSet",
    "HermitianMatrix",
    "MetricsReport",
    "SystemConfig",
    "UncertaintyBall",
    "dbm_to_w",
    "draw_channels",
    "w_to_dbm",
    "__version__",
]
