"""Declarative experiment runner.

An :class:`ExperimentConfig` fully describes one closed-loop run
(topology, plasticity, environment, duration, seed) plus optional sweep
axes. Configs round-trip losslessly through JSON; unknown keys are hard
errors so a typo can never silently corrupt an ablation.

Seeding: the run seed deterministically derives separate topology, noise
and environment streams. Sweep replicate ``r`` of an axis combination
uses ``replicate_seed(master_seed, combination, r)``, so any single run
of a sweep can be reproduced on its own.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import ConfigError, Network, NumericalFault
from .embodiment import (
    EnvSpec,
    PredictablePairEnv,
    ReinforcementEnv,
    WallWorld1D,
    WeakeningEnv,
    YokedEnv,
    make_yoked,
    synthetic_schedule,
)
from .metrics import (
    MetricError,
    RunRecord,
    learning_success,
    prediction_error_rate,
    reaction_time_series,
    snr,
)
from .plasticity import StdpConfig
from .topology import (
    TopologySpec,
    build_minimal_lsa,
    build_prediction_triad,
    build_proactive,
    build_random,
)

METRICS_COLUMNS = ("run_id", "seed", "metric_name", "value")
RUNS_COLUMNS = ("run_id", "seed", "axes", "fault")


@dataclass
class ExperimentConfig:
    """Full declarative description of one run (or sweep of runs)."""

    topology: TopologySpec = field(default_factory=TopologySpec)
    stdp: StdpConfig = field(default_factory=StdpConfig)
    environment: EnvSpec = field(default_factory=EnvSpec)
    duration_ms: int = 10_000
    seed: int = 0
    snapshot_period_ms: int = 1000
    plasticity_enabled: bool = True
    sweep_axes: dict = field(default_factory=dict)
    replicates: int = 1
    name: str = "run"

    def __post_init__(self):
        if self.duration_ms <= 0:
            raise ConfigError("duration_ms must be > 0")
        if self.snapshot_period_ms <= 0:
            raise ConfigError("snapshot_period_ms must be > 0")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        for key in self.sweep_axes:
            _resolve_axis(self, key)  # raises on unknown parameter
            if not isinstance(self.sweep_axes[key], (list, tuple)) or not self.sweep_axes[key]:
                raise ConfigError(f"sweep axis {key!r} needs a non-empty value list")


_SECTIONS = {"topology": TopologySpec, "stdp": StdpConfig, "environment": EnvSpec}


def _resolve_axis(config: ExperimentConfig, dotted: str) -> tuple[str, str | None]:
    """Validate a sweep axis key like ``environment.actuation_delay`` or a
    top-level scalar like ``duration_ms``; returns (section, field)."""
    parts = dotted.split(".")
    if len(parts) == 1:
        names = {f.name for f in dataclasses.fields(ExperimentConfig)}
        if parts[0] not in names or parts[0] in _SECTIONS:
            raise ConfigError(f"unknown sweep parameter {dotted!r}")
        return parts[0], None
    if len(parts) == 2 and parts[0] in _SECTIONS:
        names = {f.name for f in dataclasses.fields(_SECTIONS[parts[0]])}
        if parts[1] not in names:
            raise ConfigError(f"unknown sweep parameter {dotted!r}")
        return parts[0], parts[1]
    raise ConfigError(f"unknown sweep parameter {dotted!r}")


def apply_override(config: ExperimentConfig, dotted: str, value) -> ExperimentConfig:
    section, fname = _resolve_axis(config, dotted)
    if fname is None:
        return replace(config, **{section: value})
    sub = replace(getattr(config, section), **{fname: value})
    return replace(config, **{section: sub})


# -- serialization ------------------------------------------------------


def _strict_dataclass(cls, data: dict, path: str):
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError(f"unknown config key {path}{key!r}")
    return cls(**data)


def config_to_dict(config: ExperimentConfig) -> dict:
    d = dataclasses.asdict(config)
    return d


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key in data:
        if key not in names:
            raise ConfigError(f"unknown config key {key!r}")
    kwargs = dict(data)
    if "topology" in kwargs:
        kwargs["topology"] = _strict_dataclass(TopologySpec, kwargs["topology"], "topology.")
    if "stdp" in kwargs:
        kwargs["stdp"] = _strict_dataclass(StdpConfig, kwargs["stdp"], "stdp.")
    if "environment" in kwargs:
        kwargs["environment"] = _strict_dataclass(EnvSpec, kwargs["environment"], "environment.")
    try:
        return ExperimentConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_json(config_to_dict(config)).encode()).hexdigest()


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def save_config(config: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n")


# -- seeding ------------------------------------------------------------


def derive_seeds(seed: int) -> tuple[int, int, int]:
    """(topology, noise, environment) seeds for one run."""
    state = np.random.SeedSequence(seed).generate_state(3, dtype=np.uint64)
    return tuple(int(s % (1 << 63)) for s in state)


def replicate_seed(master_seed: int, axis_items, r: int) -> int:
    payload = canonical_json([master_seed, sorted(list(axis_items)), r])
    digest = hashlib.sha256(payload.encode()).digest()
    return int.from_bytes(digest[:8], "big") % (1 << 63)


# -- run ----------------------------------------------------------------


def build_network(config: ExperimentConfig, topo_seed: int) -> Network:
    topo = replace(config.topology, seed=topo_seed)
    builder = topo.builder
    if builder == "minimal_lsa":
        iw = topo.initial_weight.get("constant")
        net = build_minimal_lsa(
            topo.seed, config.stdp, topo.noise_amp, iw, topo.syn_gain
        )
    elif builder == "random":
        net = build_random(topo, config.stdp)
    elif builder == "prediction_triad":
        iw = topo.initial_weight.get("constant")
        net = build_prediction_triad(
            topo.interval_capacity, topo.seed, config.stdp, topo.noise_amp, iw, topo.syn_gain
        )
    elif builder == "proactive":
        net = build_proactive(topo, config.stdp)
    else:  # unreachable, TopologySpec validates
        raise ConfigError(f"unknown builder {builder!r}")
    return net


def build_environment(config: ExperimentConfig, net: Network, env_rng) -> object:
    spec = config.environment
    inputs = net.input_ids
    n_out = int(net.output_ids.size)
    if spec.kind == "reinforcement":
        return ReinforcementEnv(spec, inputs, net.stim_log)
    if spec.kind == "weakening":
        return WeakeningEnv(spec, inputs, net.stim_log)
    if spec.kind == "wallworld1d":
        return WallWorld1D(spec, inputs, net.stim_log, n_outputs=n_out)
    if spec.kind == "predictable_pair":
        if inputs.size < 2:
            raise ConfigError("predictable_pair needs at least two input neurons")
        anticipatory = int(inputs[0])
        target = int(inputs[1])
        return PredictablePairEnv(spec, inputs, net.stim_log, env_rng, anticipatory, target)
    if spec.kind == "yoked":
        if spec.synthetic_period is not None:
            schedule = synthetic_schedule(spec.synthetic_period, inputs, config.duration_ms)
            return YokedEnv(spec, inputs, net.stim_log, schedule, n_outputs=n_out)
        if spec.yoked_source is None:
            raise ConfigError("yoked environment needs yoked_source or synthetic_period")
        source = _resolve_yoked_source(spec.yoked_source, config)
        return make_yoked(spec, inputs, net.stim_log, source, n_outputs=n_out)
    raise ConfigError(f"unknown environment kind {spec.kind!r}")


def _resolve_yoked_source(source: str, config: ExperimentConfig) -> RunRecord:
    from .presets import PRESETS  # local import, presets build on this module

    if source in PRESETS:
        # The source must be a different subject: replaying a run's own
        # schedule into the same seed reproduces that run exactly, which
        # would make the control meaningless.
        src_seed = replicate_seed(config.seed, (("yoked-source", source),), 0)
        src_cfg = PRESETS[source]()
        src_cfg = replace(src_cfg, seed=src_seed, sweep_axes={}, replicates=1)
        return run(src_cfg)
    path = Path(source)
    if path.is_dir():
        return load_record(path)
    raise ConfigError(f"yoked_source {source!r} is neither a preset name nor a record directory")


def run(config: ExperimentConfig, out_dir=None) -> RunRecord:
    """Execute one closed-loop run and optionally persist the record."""
    topo_seed, noise_seed, env_seed = derive_seeds(config.seed)
    net = build_network(config, topo_seed)
    net.reset(noise_seed)
    if not config.plasticity_enabled:
        net.set_plasticity(False)
    env_rng = np.random.default_rng(env_seed)
    env = build_environment(config, net, env_rng)

    out_mask = np.zeros(net.n, dtype=bool)
    out_mask[net.output_ids] = True
    inh_mask = np.zeros(net.n, dtype=bool)
    if net.inhibitory_ids.size:
        inh_mask[net.inhibitory_ids] = True

    period = config.snapshot_period_ms
    snap_times = [0]
    snaps = [net.syn_w.copy()]
    fault = None
    fired = np.empty(0, dtype=np.int32)
    try:
        for t in range(config.duration_ms):
            out_sp = fired[out_mask[fired]] if fired.size else fired
            inh_sp = fired[inh_mask[fired]] if fired.size else fired
            stim = env.step(out_sp, inh_sp, t)
            if stim:
                net.inject_stimulus(stim)
            fired = net.advance()
            if net.clock % period == 0:
                snap_times.append(net.clock)
                snaps.append(net.syn_w.copy())
    except NumericalFault as exc:
        fault = str(exc)
    if fault is None and snap_times[-1] != config.duration_ms:
        snap_times.append(config.duration_ms)
        snaps.append(net.syn_w.copy())

    times, ids = net.spike_log.to_arrays()
    record = RunRecord(
        config=config_to_dict(config),
        config_hash=config_hash(config),
        seed=config.seed,
        duration=config.duration_ms,
        env_kind=config.environment.kind,
        spike_times=times,
        spike_ids=ids,
        stim_rows=sorted(net.stim_log.rows),
        snapshot_times=np.array(snap_times, dtype=np.int64),
        weight_snapshots=np.array(snaps) if snaps else np.empty((0, 0)),
        syn_pre=net.syn_pre.copy(),
        syn_post=net.syn_post.copy(),
        syn_delay=net.syn_delay.copy(),
        input_ids=net.input_ids.copy(),
        output_ids=net.output_ids.copy(),
        inhibitory_ids=net.inhibitory_ids.copy(),
        env_trace=env.trace(),
        counters={
            "enqueued": net.enqueued_events,
            "delivered": net.delivered_events,
            "pending": net.pending_events,
        },
        fault=fault,
    )
    if out_dir is not None:
        persist_record(record, out_dir)
    return record


# -- metrics over a record ---------------------------------------------


def compute_metrics(record: RunRecord) -> dict[str, float]:
    """Environment-appropriate scalar metrics for one record."""
    out: dict[str, float] = {"total_spikes": float(record.spike_times.size)}
    try:
        res = snr(record)
        out["snr"] = res.ratio
        out["snr_evoked_rate"] = res.evoked_rate
        out["snr_baseline_rate"] = res.baseline_rate
    except MetricError:
        pass
    if record.env_kind in ("wallworld1d", "yoked"):
        series = reaction_time_series(record)
        out["episodes"] = float(len(series))
        try:
            out["learning_success"] = learning_success(series)
        except MetricError:
            pass
    if record.env_kind == "predictable_pair":
        try:
            out["prediction_error_rate"] = prediction_error_rate(record)
            final_third = record.duration - record.duration // 3
            out["prediction_error_final_third"] = prediction_error_rate(
                record, t_min=final_third
            )
        except MetricError:
            pass
    if record.input_ids.size and record.output_ids.size:
        try:
            k = record.synapse_index(int(record.input_ids[0]), int(record.output_ids[0]))
            out["io_weight_change"] = float(
                record.weight_snapshots[-1, k] - record.weight_snapshots[0, k]
            )
        except (KeyError, IndexError):
            pass
    return out


# -- persistence --------------------------------------------------------


def persist_record(record: RunRecord, out_dir) -> Path:
    """Write a record as a directory of deterministic files (no
    timestamps), so identical runs produce byte-identical trees."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps(record.config, indent=2, sort_keys=True) + "\n"
    )
    meta = {
        "config_hash": record.config_hash,
        "seed": record.seed,
        "duration_ms": record.duration,
        "env_kind": record.env_kind,
        "input_ids": [int(i) for i in record.input_ids],
        "output_ids": [int(i) for i in record.output_ids],
        "inhibitory_ids": [int(i) for i in record.inhibitory_ids],
        "counters": record.counters,
        "fault": record.fault,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    with open(out / "spikes.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("time_ms", "neuron_id"))
        for t, i in zip(record.spike_times, record.spike_ids):
            w.writerow((int(t), int(i)))
    with open(out / "stimulation.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("time_ms", "input_id", "delivered"))
        for t, i, ok in record.stim_rows:
            w.writerow((int(t), int(i), "true" if ok else "false"))
    with open(out / "synapses.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("index", "pre", "post", "delay_ms", "initial_weight"))
        for k in range(record.syn_pre.size):
            w.writerow(
                (
                    k,
                    int(record.syn_pre[k]),
                    int(record.syn_post[k]),
                    int(record.syn_delay[k]),
                    repr(float(record.weight_snapshots[0, k])),
                )
            )
    np.save(out / "weights.npy", record.weight_snapshots)
    np.save(out / "snapshot_times.npy", record.snapshot_times)
    (out / "env_trace.json").write_text(
        json.dumps(record.env_trace, sort_keys=True) + "\n"
    )
    return out


def load_record(record_dir) -> RunRecord:
    src = Path(record_dir)
    config = json.loads((src / "config.json").read_text())
    meta = json.loads((src / "meta.json").read_text())
    spikes = np.genfromtxt(src / "spikes.csv", delimiter=",", skip_header=1, dtype=np.int64)
    spikes = spikes.reshape(-1, 2) if spikes.size else np.empty((0, 2), dtype=np.int64)
    stim_rows = []
    with open(src / "stimulation.csv") as fh:
        reader = csv.reader(fh)
        next(reader)
        for t, i, ok in reader:
            stim_rows.append((int(t), int(i), ok == "true"))
    syn = np.genfromtxt(src / "synapses.csv", delimiter=",", skip_header=1, dtype=np.float64)
    syn = syn.reshape(-1, 5) if syn.size else np.empty((0, 5))
    env_trace = json.loads((src / "env_trace.json").read_text())
    return RunRecord(
        config=config,
        config_hash=meta["config_hash"],
        seed=meta["seed"],
        duration=meta["duration_ms"],
        env_kind=meta["env_kind"],
        spike_times=spikes[:, 0],
        spike_ids=spikes[:, 1],
        stim_rows=stim_rows,
        snapshot_times=np.load(src / "snapshot_times.npy"),
        weight_snapshots=np.load(src / "weights.npy"),
        syn_pre=syn[:, 1].astype(np.int32),
        syn_post=syn[:, 2].astype(np.int32),
        syn_delay=syn[:, 3].astype(np.int32),
        input_ids=np.array(meta["input_ids"], dtype=np.int64),
        output_ids=np.array(meta["output_ids"], dtype=np.int64),
        inhibitory_ids=np.array(meta["inhibitory_ids"], dtype=np.int64),
        env_trace=env_trace,
        counters=meta["counters"],
        fault=meta["fault"],
    )


def write_metrics_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRICS_COLUMNS)
        for row in rows:
            w.writerow([row[c] for c in METRICS_COLUMNS])


# -- sweep --------------------------------------------------------------


def _run_id(name: str, axis_items, r: int) -> str:
    parts = [name]
    for key, value in axis_items:
        parts.append(f"{key.replace('.', '_')}={value}")
    parts.append(f"r{r:02d}")
    return "__".join(parts)


def _sweep_task(args):
    base_dict, axis_items, r, out_dir = args
    base = config_from_dict(base_dict)
    cfg = replace(base, sweep_axes={}, replicates=1)
    for key, value in axis_items:
        cfg = apply_override(cfg, key, value)
    seed = replicate_seed(base.seed, axis_items, r)
    cfg = replace(cfg, seed=seed, name=_run_id(base.name, axis_items, r))
    record = run(cfg, out_dir=None if out_dir is None else Path(out_dir) / "runs" / cfg.name)
    metrics = {} if record.fault else compute_metrics(record)
    return cfg.name, seed, dict(axis_items), record.fault, metrics


def sweep(config: ExperimentConfig, out_dir=None, jobs: int = 1) -> list[dict]:
    """Run the Cartesian product of the sweep axes with replicates.

    Returns metrics rows ordered by (axis combination, replicate,
    metric name) regardless of execution order; per-run faults are
    recorded and never abort the sweep.
    """
    if not config.sweep_axes:
        raise ConfigError("sweep needs at least one axis")
    axes = sorted(config.sweep_axes.items())
    combos = list(itertools.product(*(values for _, values in axes)))
    keys = [key for key, _ in axes]
    base_dict = config_to_dict(config)

    tasks = []
    for combo in combos:
        axis_items = tuple(zip(keys, combo))
        for r in range(config.replicates):
            tasks.append((base_dict, axis_items, r, str(out_dir) if out_dir else None))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]

    metric_rows: list[dict] = []
    manifest_rows: list[dict] = []
    for run_id, seed, axis_map, fault, metrics in results:
        manifest_rows.append(
            {
                "run_id": run_id,
                "seed": seed,
                "axes": canonical_json(axis_map),
                "fault": fault or "",
            }
        )
        for metric_name in sorted(metrics):
            metric_rows.append(
                {
                    "run_id": run_id,
                    "seed": seed,
                    "metric_name": metric_name,
                    "value": metrics[metric_name],
                }
            )

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(metric_rows, out / "metrics.csv")
        with open(out / "runs.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(RUNS_COLUMNS)
            for row in manifest_rows:
                w.writerow([row[c] for c in RUNS_COLUMNS])
    return metric_rows


# -- plots --------------------------------------------------------------


def write_plots(record: RunRecord, out_dir) -> list[Path]:
    """Static raster and trajectory plots for one record."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(10, 4))
    t, i = record.spike_times, record.spike_ids
    if t.size > 200_000:
        stride = t.size // 200_000 + 1
        t, i = t[::stride], i[::stride]
    ax.scatter(t, i, s=2, marker="|", color="k")
    stim_t = [r[0] for r in record.stim_rows if r[2]]
    if stim_t and len(stim_t) < 4000:
        for ts in stim_t:
            ax.axvline(ts, color="tab:red", alpha=0.08, lw=0.5)
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("neuron")
    ax.set_title(f"spike raster ({record.env_kind})")
    fig.tight_layout()
    path = out / "raster.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(8, 4))
    snaps = record.weight_snapshots
    if snaps.size:
        if snaps.shape[1] <= 12:
            for k in range(snaps.shape[1]):
                ax.plot(
                    record.snapshot_times,
                    snaps[:, k],
                    label=f"{record.syn_pre[k]}->{record.syn_post[k]}",
                )
            ax.legend(fontsize=8)
        else:
            ax.plot(record.snapshot_times, snaps.mean(axis=1), label="mean weight")
            ax.legend()
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("weight")
    fig.tight_layout()
    path = out / "weights.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)

    if record.env_kind in ("wallworld1d",) and record.env_trace.get("positions"):
        fig, ax = plt.subplots(figsize=(10, 3))
        pos = np.array(record.env_trace["positions"])
        ax.plot(pos[:, 0], pos[:, 1], lw=0.8)
        ax.set_xlabel("time (ms)")
        ax.set_ylabel("position")
        fig.tight_layout()
        path = out / "trajectory.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)
    return written
