"""Closed-loop environments.

An environment maps the spikes observed at time t to the set of input
neurons to stimulate at t+1, so a qualifying output spike changes the
stimulation exactly one simulation step later. Each variant realizes one
experimental condition:

* ``reinforcement``  - baseline periodic stimulation, withheld for a
  relief period after any output spike.
* ``weakening``      - no baseline; an output spike starts a punishment
  train of stimulation.
* ``wallworld1d``    - an agent shuttling on a line; approaching a wall
  triggers periodic sensor stimulation, a decoded turn (or bouncing off
  the wall) ends the approach.
* ``predictable_pair`` - anticipatory stimulus at T1, target stimulus at
  T2 = T1 + interval, suppressed when an inhibitory spike lands in the
  gate window just before T2.
* ``yoked``          - replay of a recorded delivered-stimulation
  schedule; outputs are decoded for bookkeeping but change nothing.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, StimulationLog

ENV_KINDS = ("reinforcement", "weakening", "wallworld1d", "predictable_pair", "yoked")


@dataclass
class EnvSpec:
    """Declarative description of one environment."""

    kind: str = "reinforcement"
    stimulation_period: int = 10
    relief_duration: int = 50
    punish_duration: int = 50
    action_window: int = 20
    # wallworld1d
    length: float = 100.0
    speed: float = 0.1
    sensor_range: float = 5.0
    actuation_delay: int = 0
    decoder_threshold: int | None = None
    # predictable_pair
    mean_interarrival: int = 500
    interval: int = 10
    gate_window: int = 5
    randomize_interval: bool = False
    interval_range: list[int] = field(default_factory=lambda: [1, 100])
    # yoked: path to a persisted source record, or the name of a preset to
    # run and replay, or a synthetic period (stimulate all inputs at that
    # period) for open-loop protocols.
    yoked_source: str | None = None
    synthetic_period: int | None = None

    def __post_init__(self):
        if self.kind not in ENV_KINDS:
            raise ConfigError(f"unknown environment kind {self.kind!r}")
        if self.stimulation_period < 1 or self.action_window < 1:
            raise ConfigError("stimulation_period and action_window must be >= 1 ms")
        if self.kind == "predictable_pair":
            if not self.randomize_interval and self.interval <= 0:
                raise ConfigError("interval must be > 0 in constant mode")
            if self.gate_window < 1:
                raise ConfigError("gate_window must be >= 1 ms")


def decode_action(spike_count: int, threshold: int) -> str:
    """Motor decoder: ``turn`` when the windowed output spike count
    reaches the threshold, else ``none``."""
    if threshold < 1:
        raise ConfigError("decoder threshold must be >= 1")
    return "turn" if spike_count >= threshold else "none"


def default_decoder_threshold(n_outputs: int) -> int:
    """One spike suffices for minimal nets; population outputs need a
    majority of the population size within the window."""
    return 1 if n_outputs <= 1 else max(1, n_outputs // 2)


class _SpikeWindow:
    """Rolling count of spike times within the last ``window`` ms."""

    def __init__(self, window: int):
        self.window = window
        self._times: deque[int] = deque()

    def add(self, t: int, count: int) -> None:
        for _ in range(count):
            self._times.append(t)

    def count_at(self, t: int) -> int:
        lo = t - self.window + 1
        while self._times and self._times[0] < lo:
            self._times.popleft()
        return len(self._times)


class Environment:
    """Base closed-loop environment."""

    kind: str = ""
    controllable: bool = True

    def __init__(self, spec: EnvSpec, input_ids, stim_log: StimulationLog):
        self.spec = spec
        self.input_ids = tuple(int(i) for i in input_ids)
        self.stim_log = stim_log

    def step(self, output_spikes, inhibitory_spikes, t: int) -> tuple[int, ...]:
        """Return the input neurons to stimulate at t+1, given the spikes
        observed at time t."""
        raise NotImplementedError

    def trace(self) -> dict:
        return {"kind": self.kind, "controllable": self.controllable}


class ReinforcementEnv(Environment):
    """Continuous periodic stimulation; any output spike withholds it for
    the relief duration."""

    kind = "reinforcement"
    controllable = True

    def __init__(self, spec, input_ids, stim_log):
        super().__init__(spec, input_ids, stim_log)
        self._relief_until = -1

    def step(self, output_spikes, inhibitory_spikes, t):
        if len(output_spikes):
            self._relief_until = t + self.spec.relief_duration
        nt = t + 1
        if nt % self.spec.stimulation_period == 0 and nt > self._relief_until:
            return self.input_ids
        return ()


class WeakeningEnv(Environment):
    """Silent baseline; each output spike (re)starts a punishment train of
    periodic stimulation, beginning on the very next step."""

    kind = "weakening"
    controllable = True

    def __init__(self, spec, input_ids, stim_log):
        super().__init__(spec, input_ids, stim_log)
        self._anchor = None

    def step(self, output_spikes, inhibitory_spikes, t):
        if len(output_spikes):
            self._anchor = t
        if self._anchor is None:
            return ()
        nt = t + 1
        offset = nt - self._anchor - 1
        if 0 <= offset and nt <= self._anchor + self.spec.punish_duration:
            if offset % self.spec.stimulation_period == 0:
                return self.input_ids
        return ()


class WallWorld1D(Environment):
    """Agent on a line segment with forward-facing wall sensors.

    While the faced wall is within sensor range, inputs are stimulated at
    the stimulation period. A decoded turn schedules a direction flip
    ``actuation_delay`` ms later; flipping away from the wall ends the
    approach episode and, with zero actuation delay, silences stimulation
    on the next step. Reaching the wall itself just presses against it
    (position clamps): stimulation keeps arriving until the agent turns,
    so relief is contingent on the decoded action alone.
    """

    kind = "wallworld1d"
    controllable = True

    def __init__(self, spec, input_ids, stim_log, n_outputs: int):
        super().__init__(spec, input_ids, stim_log)
        self.threshold = (
            spec.decoder_threshold
            if spec.decoder_threshold is not None
            else default_decoder_threshold(n_outputs)
        )
        self.pos = spec.length / 2.0
        self.direction = 1
        self._window = _SpikeWindow(spec.action_window)
        self._pending_flip = None
        self._armed = True
        self._in_range = False
        self._episode = None
        self._last_nt = 0
        self.episodes: list[dict] = []
        self.positions: list[tuple[int, float]] = []

    def _facing_distance(self) -> float:
        return (self.spec.length - self.pos) if self.direction > 0 else self.pos

    def _close_episode(self, t: int) -> None:
        ep = self._episode
        if ep is not None:
            ep["close"] = t
            if ep["first_stim"] is not None:
                self.episodes.append(ep)
        self._episode = None
        self._armed = True

    def step(self, output_spikes, inhibitory_spikes, t):
        sp = self.spec
        self._window.add(t, len(output_spikes))

        if self._in_range and self._armed and self._pending_flip is None:
            ep = self._episode
            if ep is not None and ep["first_stim"] is not None:
                count = self._window.count_at(t)
                if decode_action(count, self.threshold) == "turn":
                    ep["decode"] = t
                    self._pending_flip = t + sp.actuation_delay
                    self._armed = False

        if self._pending_flip is not None and self._pending_flip <= t:
            self.direction = -self.direction
            self._pending_flip = None

        self.pos += sp.speed * self.direction
        if self.pos >= sp.length:
            self.pos = sp.length
        elif self.pos <= 0.0:
            self.pos = 0.0

        nt = t + 1
        self._last_nt = nt
        in_range = self._facing_distance() < sp.sensor_range
        if in_range and not self._in_range:
            self._episode = {"open": nt, "first_stim": None, "decode": None, "close": None}
        elif not in_range and self._in_range:
            self._close_episode(nt)
        self._in_range = in_range

        if nt % 10 == 0:
            self.positions.append((nt, self.pos))

        if in_range and nt % sp.stimulation_period == 0:
            if self._episode is not None and self._episode["first_stim"] is None:
                self._episode["first_stim"] = nt
            return self.input_ids
        return ()

    def trace(self) -> dict:
        episodes = list(self.episodes)
        if self._episode is not None and self._episode["first_stim"] is not None:
            # Run ended mid-approach: censor at the run end.
            ep = dict(self._episode)
            ep["close"] = self._last_nt
            episodes.append(ep)
        return {
            "kind": self.kind,
            "controllable": self.controllable,
            "decoder_threshold": self.threshold,
            "episodes": episodes,
            "positions": self.positions,
        }


class PredictablePairEnv(Environment):
    """Anticipatory stimulus at random T1, target stimulus at T2.

    T1 arrivals follow an exponential interarrival process. The target
    stimulus at T2 = T1 + interval is suppressed (logged as undelivered)
    when any inhibitory spike landed in [T2 - gate_window, T2).
    """

    kind = "predictable_pair"
    controllable = True

    def __init__(self, spec, input_ids, stim_log, rng, anticipatory: int, target: int):
        super().__init__(spec, input_ids, stim_log)
        if anticipatory not in self.input_ids or target not in self.input_ids:
            raise ConfigError("anticipatory and target must be input neurons")
        self.anticipatory = int(anticipatory)
        self.target = int(target)
        self._rng = rng
        self._next_t1 = self._draw_gap(start=0)
        # Unordered: randomized intervals can schedule T2s out of order.
        self._pending_t2: list[int] = []
        self._inh_window = _SpikeWindow(spec.gate_window)
        self.t1_times: list[int] = []
        self.target_events: list[dict] = []

    def _draw_gap(self, start: int) -> int:
        gap = max(1, int(round(self._rng.exponential(self.spec.mean_interarrival))))
        return start + gap

    def _draw_interval(self) -> int:
        if self.spec.randomize_interval:
            lo, hi = self.spec.interval_range
            return int(self._rng.integers(lo, hi + 1))
        return int(self.spec.interval)

    def step(self, output_spikes, inhibitory_spikes, t):
        self._inh_window.add(t, len(inhibitory_spikes))
        nt = t + 1
        stim = []
        if nt == self._next_t1:
            stim.append(self.anticipatory)
            self.t1_times.append(nt)
            self._pending_t2.append(nt + self._draw_interval())
            self._next_t1 = self._draw_gap(start=nt)
        due = sum(1 for x in self._pending_t2 if x == nt)
        if due:
            self._pending_t2 = [x for x in self._pending_t2 if x != nt]
            # Called at t = T2 - 1, so the rolling count covers exactly
            # the gate [T2 - gate_window, T2).
            suppressed = self._inh_window.count_at(t) > 0
            delivered_once = False
            for _ in range(due):
                if suppressed:
                    self.stim_log.append(nt, self.target, delivered=False)
                elif not delivered_once:
                    stim.append(self.target)
                    delivered_once = True
                self.target_events.append({"t2": nt, "delivered": not suppressed})
        return tuple(stim)

    def trace(self) -> dict:
        return {
            "kind": self.kind,
            "controllable": self.controllable,
            "anticipatory_id": self.anticipatory,
            "target_id": self.target,
            "t1_times": self.t1_times,
            "target_events": self.target_events,
        }


class YokedEnv(Environment):
    """Output-decoupled replay of a delivered-stimulation schedule.

    Decoded turns are logged against the source episodes so reaction-time
    metrics stay comparable, but nothing the network does can change the
    stimulation.
    """

    kind = "yoked"
    controllable = False

    def __init__(self, spec, input_ids, stim_log, schedule, source_episodes=None,
                 n_outputs: int = 1):
        super().__init__(spec, input_ids, stim_log)
        if not schedule:
            raise ConfigError("yoked environment needs a non-empty source schedule")
        self._schedule: dict[int, tuple[int, ...]] = {}
        for t, ids in schedule:
            self._schedule[int(t)] = tuple(int(i) for i in ids)
        self.threshold = (
            spec.decoder_threshold
            if spec.decoder_threshold is not None
            else default_decoder_threshold(n_outputs)
        )
        self._window = _SpikeWindow(spec.action_window)
        self.episodes = [dict(ep, decode=None) for ep in (source_episodes or [])]
        self._ep_cursor = 0

    def step(self, output_spikes, inhibitory_spikes, t):
        self._window.add(t, len(output_spikes))
        while self._ep_cursor < len(self.episodes):
            ep = self.episodes[self._ep_cursor]
            close = ep["close"] if ep["close"] is not None else np.inf
            if t >= close:
                self._ep_cursor += 1
                continue
            if ep["first_stim"] is not None and t >= ep["first_stim"] and ep["decode"] is None:
                count = self._window.count_at(t)
                if decode_action(count, self.threshold) == "turn":
                    ep["decode"] = t
            break
        return self._schedule.get(t + 1, ())

    def trace(self) -> dict:
        return {
            "kind": self.kind,
            "controllable": self.controllable,
            "decoder_threshold": self.threshold,
            "episodes": self.episodes,
        }


def schedule_from_log(stim_rows) -> list[tuple[int, tuple[int, ...]]]:
    """Group delivered stimulation log rows into a (time, ids) schedule."""
    by_t: dict[int, list[int]] = {}
    for t, input_id, delivered in stim_rows:
        if delivered:
            by_t.setdefault(int(t), []).append(int(input_id))
    return [(t, tuple(sorted(ids))) for t, ids in sorted(by_t.items())]


def make_yoked(spec: EnvSpec, input_ids, stim_log, source_record, n_outputs: int = 1) -> YokedEnv:
    """Yoked environment replaying the delivered stimulations of a source
    run at their original times."""
    schedule = schedule_from_log(source_record.stim_rows)
    if not schedule:
        raise ConfigError("source run delivered no stimulation; nothing to replay")
    episodes = source_record.env_trace.get("episodes", [])
    return YokedEnv(spec, input_ids, stim_log, schedule, episodes, n_outputs)


def synthetic_schedule(period: int, input_ids, duration: int):
    """Open-loop schedule: stimulate every input at a fixed period."""
    ids = tuple(int(i) for i in input_ids)
    return [(t, ids) for t in range(period, duration + 1, period)]
