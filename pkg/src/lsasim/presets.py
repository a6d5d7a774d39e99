"""Preset experiment configurations.

Each preset is a ready-to-run :class:`ExperimentConfig` covering one
experiment family: reinforcement and weakening on the three-neuron
network, the wall-avoidance task with its yoked control and ablation
sweeps, the prediction triad with its interval ablations, the proactive
loop topology, and the size-scaling signal-to-noise protocol.
"""

from __future__ import annotations

from dataclasses import replace

from .embodiment import EnvSpec
from .harness import ExperimentConfig
from .plasticity import StdpConfig
from .topology import TopologySpec


# Low gain keeps hidden-unit firing noise-dominated (strong periodic
# driving would strengthen weights through pure pre-before-post
# correlation, masking the embodiment effect); a 20 ms stimulation period
# (equal to the plasticity window) keeps hidden-unit potentiation and
# depression balanced one-to-one.
def _minimal_topology(**overrides) -> TopologySpec:
    base = TopologySpec(
        builder="minimal_lsa",
        size=3,
        n_inputs=1,
        n_outputs=1,
        delay={"constant": 1},
        syn_gain=0.5,
    )
    return replace(base, **overrides)


def _wall_topology(**overrides) -> TopologySpec:
    base = TopologySpec(
        builder="random",
        size=100,
        connection_probability=0.1,
        fraction_inhibitory=0.2,
        n_inputs=10,
        n_outputs=10,
        delay={"uniform_int": [1, 20]},
        initial_weight={"uniform": [0.0, 5.0]},
        syn_gain=3.0,
    )
    return replace(base, **overrides)


def _wall_env(**overrides) -> EnvSpec:
    base = EnvSpec(
        kind="wallworld1d",
        stimulation_period=10,
        action_window=20,
        length=100.0,
        speed=0.1,
        sensor_range=5.0,
        actuation_delay=0,
        decoder_threshold=3,
    )
    return replace(base, **overrides)


def fig3a_reinforcement() -> ExperimentConfig:
    return ExperimentConfig(
        name="fig3a-reinforcement",
        topology=_minimal_topology(),
        stdp=StdpConfig(),
        environment=EnvSpec(kind="reinforcement", stimulation_period=20),
        duration_ms=60_000,
        snapshot_period_ms=1000,
    )


def fig3b_weakening() -> ExperimentConfig:
    return ExperimentConfig(
        name="fig3b-weakening",
        topology=_minimal_topology(initial_weight={"constant": 5.0}),
        stdp=StdpConfig(),
        environment=EnvSpec(kind="weakening", stimulation_period=20),
        duration_ms=60_000,
        snapshot_period_ms=1000,
    )


def fig4_wallworld() -> ExperimentConfig:
    return ExperimentConfig(
        name="fig4-wallworld",
        topology=_wall_topology(),
        stdp=StdpConfig(),
        environment=_wall_env(),
        duration_ms=40_000,
        snapshot_period_ms=5000,
    )


def fig4_yoked_control() -> ExperimentConfig:
    return ExperimentConfig(
        name="fig4-yoked-control",
        topology=_wall_topology(),
        stdp=StdpConfig(),
        environment=replace(_wall_env(), kind="yoked", yoked_source="fig4-wallworld"),
        duration_ms=40_000,
        snapshot_period_ms=5000,
    )


def connectivity_sweep() -> ExperimentConfig:
    return ExperimentConfig(
        name="connectivity-sweep",
        topology=_wall_topology(),
        stdp=StdpConfig(),
        environment=_wall_env(),
        duration_ms=40_000,
        snapshot_period_ms=5000,
        sweep_axes={"topology.sever_io_paths": [False, True]},
        replicates=20,
    )


def loopdelay_sweep() -> ExperimentConfig:
    return ExperimentConfig(
        name="loopdelay-sweep",
        topology=_wall_topology(),
        stdp=StdpConfig(),
        environment=_wall_env(),
        duration_ms=40_000,
        snapshot_period_ms=5000,
        sweep_axes={"environment.actuation_delay": [0, 20, 60, 120]},
        replicates=20,
    )


def fig6_prediction() -> ExperimentConfig:
    return ExperimentConfig(
        name="fig6-prediction",
        topology=TopologySpec(
            builder="prediction_triad",
            size=3,
            n_inputs=2,
            n_outputs=0,
            interval_capacity=10,
            syn_gain=4.0,
        ),
        stdp=StdpConfig(),
        environment=EnvSpec(
            kind="predictable_pair",
            mean_interarrival=500,
            interval=10,
            gate_window=5,
        ),
        duration_ms=120_000,
        snapshot_period_ms=5000,
    )


def fig6_ablations() -> ExperimentConfig:
    base = fig6_prediction()
    return replace(
        base,
        name="fig6-ablations",
        sweep_axes={
            "environment.interval": [10, 200],
            "environment.randomize_interval": [False, True],
        },
        replicates=10,
    )


def fig7_proactive() -> ExperimentConfig:
    return ExperimentConfig(
        name="fig7-proactive",
        topology=TopologySpec(
            builder="proactive",
            connection_probability=0.2,
            fraction_inhibitory=0.2,
            n_inputs=4,
            n_outputs=4,
            n_hidden=20,
            delay={"uniform_int": [1, 5]},
            initial_weight={"uniform": [0.0, 5.0]},
            syn_gain=3.0,
        ),
        stdp=StdpConfig(),
        environment=EnvSpec(
            kind="predictable_pair",
            mean_interarrival=500,
            interval=10,
            gate_window=5,
        ),
        duration_ms=60_000,
        snapshot_period_ms=5000,
    )


def snr_size_sweep() -> ExperimentConfig:
    return ExperimentConfig(
        name="snr-size-sweep",
        topology=_wall_topology(size=100),
        stdp=StdpConfig(),
        environment=EnvSpec(kind="yoked", synthetic_period=250),
        duration_ms=20_000,
        snapshot_period_ms=5000,
        plasticity_enabled=False,
        sweep_axes={"topology.size": [100, 400, 1600]},
        replicates=6,
    )


PRESETS = {
    "fig3a-reinforcement": fig3a_reinforcement,
    "fig3b-weakening": fig3b_weakening,
    "fig4-wallworld": fig4_wallworld,
    "fig4-yoked-control": fig4_yoked_control,
    "connectivity-sweep": connectivity_sweep,
    "loopdelay-sweep": loopdelay_sweep,
    "fig6-prediction": fig6_prediction,
    "fig6-ablations": fig6_ablations,
    "fig7-proactive": fig7_proactive,
    "snr-size-sweep": snr_size_sweep,
}


def get_preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        from .core import ConfigError

        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown preset {name!r}; available: {known}")
    return PRESETS[name]()
