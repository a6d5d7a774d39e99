"""Network constructors and the input-output connectivity measure.

Every builder is deterministic under a fixed seed. Weight and delay
distributions are small dict specs (``{"uniform": [lo, hi]}``,
``{"uniform_int": [lo, hi]}`` or ``{"constant": v}``) so a topology is
fully expressible in the harness config format.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, FAST_SPIKING, Network, REGULAR_SPIKING
from .plasticity import StdpConfig

BUILDERS = ("minimal_lsa", "random", "prediction_triad", "proactive")


@dataclass
class TopologySpec:
    """Declarative description of one network shape."""

    builder: str = "random"
    size: int = 100
    connection_probability: float = 0.1
    fraction_inhibitory: float = 0.2
    n_inputs: int = 10
    n_outputs: int = 10
    input_ids: list[int] | None = None
    output_ids: list[int] | None = None
    delay: dict = field(default_factory=lambda: {"uniform_int": [1, 20]})
    initial_weight: dict = field(default_factory=lambda: {"uniform": [0.0, 5.0]})
    seed: int = 0
    noise_amp: float | None = None
    syn_gain: float = 1.0
    # Ablation switch: remove every <=2-hop input-to-output path.
    sever_io_paths: bool = False
    # prediction_triad only: upper bound on the summed path delay.
    interval_capacity: int = 10
    # proactive only
    n_hidden: int = 20

    def __post_init__(self):
        if self.builder not in BUILDERS:
            raise ConfigError(f"unknown builder {self.builder!r}, expected one of {BUILDERS}")
        if not 0.0 <= self.fraction_inhibitory <= 1.0:
            raise ConfigError("fraction_inhibitory must be in [0, 1]")
        if not 0.0 <= self.connection_probability <= 1.0:
            raise ConfigError("connection_probability must be in [0, 1]")


def _draw(rng, dist: dict, size: int, integer: bool = False) -> np.ndarray:
    if not isinstance(dist, dict) or len(dist) != 1:
        raise ConfigError(f"distribution spec must have exactly one key, got {dist!r}")
    (kind, args), = dist.items()
    if kind == "constant":
        out = np.full(size, args, dtype=np.int64 if integer else np.float64)
    elif kind == "uniform" and not integer:
        lo, hi = args
        out = rng.uniform(lo, hi, size)
    elif kind == "uniform_int" and integer:
        lo, hi = args
        out = rng.integers(lo, hi + 1, size)
    else:
        raise ConfigError(f"unsupported distribution {kind!r} for this field")
    return out


def _net_kwargs(spec: TopologySpec, stdp: StdpConfig | None) -> dict:
    kw = {"stdp": stdp, "syn_gain": spec.syn_gain, "seed": spec.seed}
    if spec.noise_amp is not None:
        kw["noise_amp"] = spec.noise_amp
    return kw


def build_minimal_lsa(
    seed: int,
    stdp: StdpConfig | None = None,
    noise_amp: float | None = None,
    initial_weight: float | None = None,
    syn_gain: float = 3.0,
) -> Network:
    """Three excitatory units: an input driving an output and a hidden unit.

    Both synapses start at the same weight with a 1 ms delay; the hidden
    unit has no outgoing synapses, so it can only listen. Input is neuron
    0, output neuron 1, hidden neuron 2.
    """
    cfg = stdp or StdpConfig()
    if initial_weight is None:
        rng = np.random.default_rng(seed)
        w0 = float(rng.uniform(0.0, 0.5 * cfg.w_max))
    else:
        w0 = float(initial_weight)
    kwargs = {"stdp": cfg, "syn_gain": syn_gain, "seed": seed}
    if noise_amp is not None:
        kwargs["noise_amp"] = noise_amp
    return Network(
        [REGULAR_SPIKING, REGULAR_SPIKING, REGULAR_SPIKING],
        [(0, 1, w0, 1), (0, 2, w0, 1)],
        input_ids=[0],
        output_ids=[1],
        **kwargs,
    )


def build_random(spec: TopologySpec, stdp: StdpConfig | None = None) -> Network:
    """Directed Erdos-Renyi network with designated input/output sets.

    Inhibitory units are drawn from the hidden population so the
    designated sets stay excitatory. With ``sever_io_paths`` every direct
    and 2-hop input-to-output path is removed after sampling, which forces
    the connectivity measure to zero at any threshold.
    """
    n = spec.size
    if n < 3:
        raise ConfigError("random topology needs size >= 3")
    cfg = stdp or StdpConfig()
    rng = np.random.default_rng(spec.seed)

    inputs = spec.input_ids if spec.input_ids is not None else list(range(spec.n_inputs))
    outputs = (
        spec.output_ids
        if spec.output_ids is not None
        else list(range(spec.n_inputs, spec.n_inputs + spec.n_outputs))
    )
    if any(i < 0 or i >= n for i in inputs + outputs):
        raise ConfigError("input/output ids out of range")
    if len(set(inputs)) != len(inputs) or len(set(outputs)) != len(outputs):
        raise ConfigError("input/output ids must be unique")
    io = set(inputs) | set(outputs)
    hidden = [i for i in range(n) if i not in io]
    n_inh = int(round(spec.fraction_inhibitory * n))
    if n_inh > len(hidden):
        raise ConfigError(
            f"{n_inh} inhibitory neurons requested but only {len(hidden)} hidden available"
        )
    inhibitory = set(
        int(i) for i in rng.choice(hidden, size=n_inh, replace=False)
    ) if n_inh else set()

    mask = rng.random((n, n)) < spec.connection_probability
    np.fill_diagonal(mask, False)
    if spec.sever_io_paths:
        mask[np.ix_(inputs, outputs)] = False
        relayed = mask[inputs, :].any(axis=0)
        for mid in np.flatnonzero(relayed):
            mask[mid, outputs] = False

    edges = np.argwhere(mask)
    weights = _draw(rng, spec.initial_weight, len(edges))
    weights = np.clip(weights, 0.0, cfg.w_max)
    delays = _draw(rng, spec.delay, len(edges), integer=True)
    synapses = [
        (int(p), int(q), float(w), int(d))
        for (p, q), w, d in zip(edges, weights, delays)
    ]
    params = [
        FAST_SPIKING if i in inhibitory else REGULAR_SPIKING for i in range(n)
    ]
    return Network(params, synapses, inputs, outputs, **_net_kwargs(spec, cfg))


def build_prediction_triad(
    interval_capacity: int = 10,
    seed: int = 0,
    stdp: StdpConfig | None = None,
    noise_amp: float | None = None,
    initial_weight: float | None = None,
    syn_gain: float = 4.0,
) -> Network:
    """Anticipatory input, inhibitory relay, target input.

    Neuron 0 (excitatory) receives the anticipatory stimulus and projects
    to neuron 1 (inhibitory), which projects to neuron 2 (excitatory, the
    target input). There is no direct 0->2 synapse; the two path delays
    sum to at most ``interval_capacity``.
    """
    if interval_capacity < 2:
        raise ConfigError("interval_capacity must be >= 2 (two synapses, 1 ms delay each)")
    cfg = stdp or StdpConfig()
    d1 = max(1, min(4, interval_capacity - 1))
    d2 = max(1, min(interval_capacity - d1, interval_capacity))
    w0 = 0.5 * cfg.w_max if initial_weight is None else float(initial_weight)
    kwargs = {"stdp": cfg, "syn_gain": syn_gain, "seed": seed}
    if noise_amp is not None:
        kwargs["noise_amp"] = noise_amp
    return Network(
        [REGULAR_SPIKING, FAST_SPIKING, REGULAR_SPIKING],
        [(0, 1, w0, d1), (1, 2, w0, d2)],
        input_ids=[0, 2],
        output_ids=[],
        **kwargs,
    )


def build_proactive(spec: TopologySpec, stdp: StdpConfig | None = None) -> Network:
    """Input, output, inhibitory and hidden populations wired so that
    stimulation can loop input -> output -> inhibitory -> input.

    Inhibitory units accept incoming synapses only from outputs, so
    removing the output population disconnects inputs from them.
    """
    cfg = stdp or StdpConfig()
    rng = np.random.default_rng(spec.seed)
    n_in, n_out = spec.n_inputs, spec.n_outputs
    n_inh = max(1, int(round(spec.fraction_inhibitory * (n_in + n_out + spec.n_hidden))))
    if min(n_in, n_out) < 1:
        raise ConfigError("proactive topology needs at least one input and one output")

    inputs = list(range(n_in))
    outputs = list(range(n_in, n_in + n_out))
    inhibitory = list(range(n_in + n_out, n_in + n_out + n_inh))
    hidden = list(range(n_in + n_out + n_inh, n_in + n_out + n_inh + spec.n_hidden))
    n = n_in + n_out + n_inh + len(hidden)

    p = spec.connection_probability
    edges: set[tuple[int, int]] = set()
    # Guaranteed loop: every population reaches the next one.
    for k, i in enumerate(inputs):
        edges.add((i, outputs[k % n_out]))
    for k, o in enumerate(outputs):
        edges.add((o, inhibitory[k % n_inh]))
    for k, h in enumerate(inhibitory):
        edges.add((h, inputs[k % n_in]))
    # Random extras, honoring the wiring rules: inhibitory units receive
    # only from outputs, and inputs never project to them directly.
    allowed_targets = {
        "input": outputs + hidden,
        "output": inhibitory + hidden + outputs,
        "inhibitory": inputs + hidden,
        "hidden": outputs + hidden,
    }
    pop_of = {}
    for i in inputs:
        pop_of[i] = "input"
    for o in outputs:
        pop_of[o] = "output"
    for h in inhibitory:
        pop_of[h] = "inhibitory"
    for h in hidden:
        pop_of[h] = "hidden"
    for pre in range(n):
        for post in allowed_targets[pop_of[pre]]:
            if pre != post and rng.random() < p:
                edges.add((pre, post))

    edge_list = sorted(edges)
    weights = np.clip(_draw(rng, spec.initial_weight, len(edge_list)), 0.0, cfg.w_max)
    delays = _draw(rng, spec.delay, len(edge_list), integer=True)
    synapses = [
        (pre, post, float(w), int(d))
        for (pre, post), w, d in zip(edge_list, weights, delays)
    ]
    params: list = [REGULAR_SPIKING] * (n_in + n_out) + [FAST_SPIKING] * n_inh
    params += [REGULAR_SPIKING] * len(hidden)
    return Network(params, synapses, inputs, outputs, **_net_kwargs(spec, cfg))


def connectivity_measure(net: Network, delay_threshold: int) -> float:
    """Fraction of (input, output) pairs joined by a directed path of at
    most 2 hops whose summed delay is within ``delay_threshold``.

    A pair where the input *is* the output counts as connected (empty
    path). Monotone non-decreasing in the threshold.
    """
    inputs = net.input_ids
    outputs = net.output_ids
    if inputs.size == 0 or outputs.size == 0:
        raise ConfigError("connectivity measure needs non-empty input and output sets")

    # direct[i] maps post -> smallest delay of a direct synapse
    direct: list[dict[int, int]] = [dict() for _ in range(net.n)]
    for k in range(net.n_synapses):
        pre, post, d = int(net.syn_pre[k]), int(net.syn_post[k]), int(net.syn_delay[k])
        if post not in direct[pre] or d < direct[pre][post]:
            direct[pre][post] = d

    out_set = set(int(o) for o in outputs)
    connected = 0
    for i in inputs:
        i = int(i)
        reach: dict[int, int] = {i: 0}
        for mid, d1 in direct[i].items():
            if d1 <= delay_threshold and (mid not in reach or d1 < reach[mid]):
                reach[mid] = d1
        for mid, d1 in list(reach.items()):
            for post, d2 in direct[mid].items():
                total = d1 + d2
                if total <= delay_threshold and (post not in reach or total < reach[post]):
                    reach[post] = total
        connected += sum(1 for o in out_set if o in reach)
    return connected / (inputs.size * outputs.size)
