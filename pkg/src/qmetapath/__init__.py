"""Path-based quantum meta-learning optimizer for RIS phase configuration."""

from .channel import (
    ChannelSet,
    LinkBudget,
    NetworkGeometry,
    PhaseVector,
    effective_channel,
    energy_cost,
    generate_channels,
    objective,
    quantize_phases,
    spectral_efficiency,
)
from .config import ExperimentConfig, load_config
from .engine import PathRegistry, QMetaConfig, ScenarioFeatures, run_episode
from .quantum import StateVector

__all__ = [
    "ChannelSet",
    "ExperimentConfig",
    "LinkBudget",
    "NetworkGeometry",
    "PathRegistry",
    "PhaseVector",
    "QMetaConfig",
    "ScenarioFeatures",
    "StateVector",
    "effective_channel",
    "energy_cost",
    "generate_channels",
    "load_config",
    "objective",
    "quantize_phases",
    "run_episode",
    "spectral_efficiency",
]
