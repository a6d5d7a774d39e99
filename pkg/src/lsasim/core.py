"""Clock-driven spiking network with per-synapse conduction delays.

The simulated substrate is a two-variable quadratic spiking model
(regular-spiking parameters for excitatory units, fast-spiking for
inhibitory units) integrated on a fixed 1 ms clock with two 0.5 ms
half-steps for the membrane potential. Spikes travel along synapses with
integer millisecond delays through a ring buffer of scheduled currents;
plasticity updates are applied on every spike using nearest-neighbor
pairing (see :mod:`lsasim.plasticity`).

Determinism contract: identical (topology, config, seed) produce
bit-identical spike logs and weight matrices, regardless of which stepping
backend (compiled or pure NumPy) is active. All randomness flows through
an explicitly seeded per-network stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .plasticity import StdpConfig, make_tables

SPIKE_CUTOFF_MV = 30.0
REST_MV = -65.0

# Default pulse amplitude for current-pulse stimulation; strong enough to
# fire a resting regular-spiking unit within two steps.
PULSE_CURRENT = 40.0

# Default zero-mean noise standard deviation, calibrated so an isolated
# regular-spiking unit fires at roughly 1-2 Hz.
DEFAULT_NOISE_AMP = 3.8


class ConfigError(ValueError):
    """A configuration value is inconsistent or out of range."""


class NumericalFault(RuntimeError):
    """Integration produced a non-finite state; identifies the neuron."""

    def __init__(self, neuron: int, t: int):
        self.neuron = neuron
        self.t = t
        super().__init__(
            f"non-finite membrane state in neuron {neuron} at t={t} ms; "
            "check model parameters and input currents"
        )


@dataclass(frozen=True)
class NeuronParams:
    """Model constants of one unit. ``kind`` fixes the sign of all its
    outgoing synaptic effects."""

    a: float
    b: float
    c: float
    d: float
    kind: str = "excitatory"

    def __post_init__(self):
        if self.kind not in ("excitatory", "inhibitory"):
            raise ConfigError(f"unknown neuron kind {self.kind!r}")
        for name in ("a", "b", "c", "d"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"neuron parameter {name} must be finite")


REGULAR_SPIKING = NeuronParams(a=0.02, b=0.2, c=-65.0, d=8.0, kind="excitatory")
FAST_SPIKING = NeuronParams(a=0.1, b=0.2, c=-65.0, d=2.0, kind="inhibitory")


class SpikeLog:
    """Ordered (time, neuron) spike record, at most one entry per pair."""

    def __init__(self):
        self._steps: list[tuple[int, np.ndarray]] = []
        self._count = 0

    def append_step(self, t: int, ids: np.ndarray) -> None:
        if ids.size:
            self._steps.append((t, ids))
            self._count += ids.size

    def __len__(self) -> int:
        return self._count

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (times, neuron ids) as int64 arrays, time-ordered."""
        if not self._steps:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        times = np.concatenate(
            [np.full(ids.size, t, dtype=np.int64) for t, ids in self._steps]
        )
        ids = np.concatenate([ids.astype(np.int64) for _, ids in self._steps])
        return times, ids

    def clear(self) -> None:
        self._steps.clear()
        self._count = 0


class StimulationLog:
    """Time-stamped record of stimulation events.

    Each row is (time, input id, delivered). Suppressed events (logged by
    predictive environments) carry delivered=False.
    """

    COLUMNS = ("time_ms", "input_id", "delivered")

    def __init__(self):
        self.rows: list[tuple[int, int, bool]] = []

    def append(self, t: int, input_id: int, delivered: bool = True) -> None:
        self.rows.append((int(t), int(input_id), bool(delivered)))

    def __len__(self) -> int:
        return len(self.rows)

    def delivered_times(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows if r[2]], dtype=np.int64)

    def clear(self) -> None:
        self.rows.clear()


class Network:
    """A single-threaded spiking network state machine.

    Construct via the builders in :mod:`lsasim.topology`. Synapses are
    stored sorted by (pre, post); ``syn_w`` is the live weight vector and
    aliases the buffers used by the stepping kernel.
    """

    def __init__(
        self,
        params: list[NeuronParams],
        synapses: list[tuple[int, int, float, int]],
        input_ids,
        output_ids,
        stdp: StdpConfig | None = None,
        noise_amp: float = DEFAULT_NOISE_AMP,
        syn_gain: float = 1.0,
        seed: int = 0,
    ):
        n = len(params)
        if n == 0:
            raise ConfigError("network needs at least one neuron")
        self.n = n
        self.stdp = stdp or StdpConfig()
        self.noise_amp = float(noise_amp)
        self.syn_gain = float(syn_gain)
        self.seed = int(seed)

        self.pa = np.array([p.a for p in params], dtype=np.float64)
        self.pb = np.array([p.b for p in params], dtype=np.float64)
        self.pc = np.array([p.c for p in params], dtype=np.float64)
        self.pd = np.array([p.d for p in params], dtype=np.float64)
        self.sign = np.array(
            [1.0 if p.kind == "excitatory" else -1.0 for p in params], dtype=np.float64
        )
        self.inhibitory_ids = np.array(
            [i for i, p in enumerate(params) if p.kind == "inhibitory"], dtype=np.int64
        )

        self.input_ids = np.array(sorted(int(i) for i in input_ids), dtype=np.int64)
        self.output_ids = np.array(sorted(int(i) for i in output_ids), dtype=np.int64)
        for name, ids in (("input", self.input_ids), ("output", self.output_ids)):
            if ids.size and (ids.min() < 0 or ids.max() >= n):
                raise ConfigError(f"{name} ids out of range for {n} neurons")
        self._input_set = frozenset(int(i) for i in self.input_ids)

        synapses = sorted(synapses, key=lambda s: (s[0], s[1]))
        seen = set()
        for pre, post, w, delay in synapses:
            if pre == post:
                raise ConfigError(f"self-loop on neuron {pre}")
            if not (0 <= pre < n and 0 <= post < n):
                raise ConfigError(f"synapse ({pre}->{post}) out of range")
            if (pre, post) in seen:
                raise ConfigError(f"duplicate synapse ({pre}->{post})")
            seen.add((pre, post))
            if not (0.0 <= w <= self.stdp.w_max):
                raise ConfigError(f"initial weight {w} outside [0, w_max]")
            if int(delay) < 1:
                raise ConfigError(f"delay must be >= 1 ms, got {delay}")
        self.n_synapses = len(synapses)
        self.syn_pre = np.array([s[0] for s in synapses], dtype=np.int32)
        self.syn_post = np.array([s[1] for s in synapses], dtype=np.int32)
        self.syn_w = np.array([s[2] for s in synapses], dtype=np.float64)
        self.syn_delay = np.array([s[3] for s in synapses], dtype=np.int32)
        self._initial_w = self.syn_w.copy()

        # CSR over pre (synapses already sorted by pre) and an index
        # permutation grouped by post for incoming lookups.
        self.out_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.out_ptr, self.syn_pre + 1, 1)
        np.cumsum(self.out_ptr, out=self.out_ptr)
        order = np.lexsort((self.syn_pre, self.syn_post))
        self.in_idx = order.astype(np.int32)
        self.in_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.in_ptr, self.syn_post + 1, 1)
        np.cumsum(self.in_ptr, out=self.in_ptr)

        self.ltp_table, self.ltd_table = make_tables(self.stdp)

        max_delay = int(self.syn_delay.max()) if self.n_synapses else 1
        self._ring_rows = max_delay + 1
        self.ring = np.zeros((self._ring_rows, n), dtype=np.float64)
        self.ring_counts = np.zeros(self._ring_rows, dtype=np.int64)

        self.v = np.full(n, REST_MV, dtype=np.float64)
        self.u = self.pb * self.v
        self.last_spike = np.full(n, np.iinfo(np.int64).min // 4, dtype=np.int64)
        self.forced = np.zeros(n, dtype=np.uint8)
        self.pulse = np.zeros(n, dtype=np.float64)
        self.clock = 0

        self.spike_log = SpikeLog()
        self.stim_log = StimulationLog()

        self._fired_buf = np.empty(n, dtype=np.int32)
        self._zero_current = np.zeros(n, dtype=np.float64)
        self._noise_rng = np.random.default_rng(self.seed)
        self.plasticity_enabled = True
        self._bstate = backend.make_state(self)

    @property
    def kernel_window(self) -> int:
        """Pairing window seen by the stepping kernel; 1 disables updates
        (no pair can satisfy 0 < dt < 1)."""
        return int(self.stdp.tau_window) if self.plasticity_enabled else 1

    def set_plasticity(self, enabled: bool) -> None:
        """Enable or disable weight updates. Resets event counters, so
        call before running."""
        self.plasticity_enabled = bool(enabled)
        self._bstate = backend.make_state(self)

    # -- stepping -------------------------------------------------------

    def advance(self, external_current=None, noise_rng=None) -> np.ndarray:
        """Advance the clock by 1 ms and return the ids that fired.

        Scheduled currents arriving at the new time are delivered, every
        unit integrates one step under delivered + external + noise
        current, threshold crossings (and forced spikes) are logged and
        their outgoing currents scheduled at spike time + delay.
        """
        nt = self.clock + 1
        if external_current is None:
            ext = self.pulse
        else:
            ext = self.pulse.copy()
            if isinstance(external_current, dict):
                for i, amp in external_current.items():
                    ext[int(i)] += float(amp)
            else:
                ext = ext + np.asarray(external_current, dtype=np.float64)
        rng = self._noise_rng if noise_rng is None else noise_rng
        if self.noise_amp > 0.0:
            noise = rng.standard_normal(self.n) * self.noise_amp
        else:
            noise = self._zero_current

        n_fired, fault = backend.step(self._bstate, nt, noise, ext, self._fired_buf)
        if fault >= 0:
            raise NumericalFault(fault, nt)

        fired = self._fired_buf[:n_fired].copy()
        self.spike_log.append_step(nt, fired)
        self.forced[:] = 0
        self.pulse[:] = 0.0
        self.clock = nt
        return fired

    def inject_stimulus(self, targets, mode: str = "forced-spike") -> None:
        """Stimulate input neurons at the next step.

        ``forced-spike`` makes the targets fire on the next advance;
        ``current-pulse`` adds a fixed suprathreshold current for one step.
        Events are appended to the stimulation log.
        """
        targets = [int(t) for t in targets]
        if not targets:
            return
        bad = [t for t in targets if t not in self._input_set]
        if bad:
            raise ConfigError(f"stimulation targets {bad} are not input neurons")
        if mode == "forced-spike":
            for t in targets:
                self.forced[t] = 1
        elif mode == "current-pulse":
            for t in targets:
                self.pulse[t] += PULSE_CURRENT
        else:
            raise ConfigError(f"unknown stimulation mode {mode!r}")
        for t in sorted(targets):
            self.stim_log.append(self.clock + 1, t, delivered=True)

    def reset(self, seed: int | None = None) -> "Network":
        """Reinitialize state, clock, queues and logs; weights return to
        their builder-initial values and the noise stream is reseeded."""
        if seed is not None:
            self.seed = int(seed)
        self.v[:] = REST_MV
        self.u[:] = self.pb * self.v
        self.syn_w[:] = self._initial_w
        self.ring[:] = 0.0
        self.ring_counts[:] = 0
        self.last_spike[:] = np.iinfo(np.int64).min // 4
        self.forced[:] = 0
        self.pulse[:] = 0.0
        self.clock = 0
        self.spike_log.clear()
        self.stim_log.clear()
        self._noise_rng = np.random.default_rng(self.seed)
        backend.reset_counters(self._bstate)
        return self

    # -- introspection ---------------------------------------------------

    def incoming_synapses(self, neuron: int) -> np.ndarray:
        """Synapse indices terminating on ``neuron``, grouped storage order."""
        return self.in_idx[self.in_ptr[neuron] : self.in_ptr[neuron + 1]]

    def outgoing_synapses(self, neuron: int) -> np.ndarray:
        """Synapse indices originating at ``neuron`` (contiguous range)."""
        return np.arange(self.out_ptr[neuron], self.out_ptr[neuron + 1], dtype=np.int64)

    def synapse_index(self, pre: int, post: int) -> int:
        lo, hi = self.out_ptr[pre], self.out_ptr[pre + 1]
        for k in range(lo, hi):
            if self.syn_post[k] == post:
                return int(k)
        raise KeyError(f"no synapse ({pre}->{post})")

    def weight(self, pre: int, post: int) -> float:
        return float(self.syn_w[self.synapse_index(pre, post)])

    @property
    def enqueued_events(self) -> int:
        return backend.counters(self._bstate)[0]

    @property
    def delivered_events(self) -> int:
        return backend.counters(self._bstate)[1]

    @property
    def pending_events(self) -> int:
        return int(self.ring_counts.sum())

    def initial_weight(self, pre: int, post: int) -> float:
        return float(self._initial_w[self.synapse_index(pre, post)])
