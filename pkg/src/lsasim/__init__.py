"""Deterministic closed-loop spiking network simulator.

Spiking units with conduction delays and pairwise spike-timing plasticity
are coupled to simple environments that translate recent output spikes
into next-step stimulation. The package provides the network core,
topology builders, environments, metrics, and a declarative experiment
harness with a CLI (``lsasim run/sweep/report/presets``).
"""

from .backend import active_backend
from .core import (
    ConfigError,
    FAST_SPIKING,
    Network,
    NeuronParams,
    NumericalFault,
    REGULAR_SPIKING,
    SpikeLog,
    StimulationLog,
)
from .plasticity import StdpConfig, make_tables, on_spike_update, stdp_delta

__all__ = [
    "ConfigError",
    "FAST_SPIKING",
    "Network",
    "NeuronParams",
    "NumericalFault",
    "REGULAR_SPIKING",
    "SpikeLog",
    "StdpConfig",
    "StimulationLog",
    "active_backend",
    "make_tables",
    "on_spike_update",
    "stdp_delta",
]

__version__ = "0.1.0"
