"""Quantitative measures over run records.

All metrics are pure functions of a :class:`RunRecord`; recomputing them
from the same record yields identical values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class MetricError(ValueError):
    """A metric's precondition is not met by the given record."""


@dataclass
class RunRecord:
    """Everything one closed-loop run produced.

    ``config`` is the serialized experiment configuration (a plain dict)
    and ``config_hash`` its canonical digest, so a record can always be
    traced back to — and reproduced from — the exact configuration.
    """

    config: dict
    config_hash: str
    seed: int
    duration: int
    env_kind: str
    spike_times: np.ndarray
    spike_ids: np.ndarray
    stim_rows: list[tuple[int, int, bool]]
    snapshot_times: np.ndarray
    weight_snapshots: np.ndarray  # [n_snapshots, n_synapses]
    syn_pre: np.ndarray
    syn_post: np.ndarray
    syn_delay: np.ndarray
    input_ids: np.ndarray
    output_ids: np.ndarray
    inhibitory_ids: np.ndarray
    env_trace: dict = field(default_factory=dict)
    counters: dict = field(default_factory=dict)
    fault: str | None = None

    def synapse_index(self, pre: int, post: int) -> int:
        hits = np.flatnonzero((self.syn_pre == pre) & (self.syn_post == post))
        if hits.size == 0:
            raise KeyError(f"no synapse ({pre}->{post}) in record")
        return int(hits[0])

    def output_spike_times(self) -> np.ndarray:
        mask = np.isin(self.spike_ids, self.output_ids)
        return self.spike_times[mask]


@dataclass(frozen=True)
class SnrResult:
    """Evoked/baseline ratio with an explicit validity flag.

    ``ratio`` is +inf when there is evoked activity but zero baseline,
    and NaN (with ``undefined`` set) when outputs never spiked.
    """

    ratio: float
    undefined: bool = False
    evoked_rate: float = 0.0
    baseline_rate: float = 0.0


def reaction_time_series(record: RunRecord) -> list[tuple[int, float]]:
    """Per wall-approach episode, the time from first in-range stimulation
    to the decoded turn; episodes with no turn are censored at the episode
    length. Only stimulated, closed episodes are measured."""
    if record.env_kind not in ("wallworld1d", "yoked"):
        raise MetricError(
            f"reaction times need a wallworld1d or yoked record, got {record.env_kind!r}"
        )
    series: list[tuple[int, float]] = []
    for ep in record.env_trace.get("episodes", []):
        first = ep.get("first_stim")
        close = ep.get("close")
        if first is None or close is None:
            continue
        decode = ep.get("decode")
        if decode is not None and decode >= first:
            rt = float(decode - first)
        elif decode is not None:
            rt = 0.0
        else:
            rt = float(close - first)
        series.append((len(series), rt))
    return series


def learning_success(series) -> float:
    """Quartile trend of a reaction-time series: mean of the first quarter
    of episodes minus mean of the last quarter. Positive means reactions
    got faster. Censored values enter at their cap."""
    values = [v for _, v in series] if series and isinstance(series[0], tuple) else list(series)
    n = len(values)
    if n < 4:
        raise MetricError(f"need at least 4 episodes for a trend, got {n}")
    q = max(1, n // 4)
    return float(np.mean(values[:q]) - np.mean(values[-q:]))


def snr(record: RunRecord, response_window: int = 20) -> SnrResult:
    """Output-population spike rate inside response windows after
    delivered stimulations, divided by the rate elsewhere."""
    delivered = sorted({t for t, _, ok in record.stim_rows if ok})
    if not delivered:
        raise MetricError("stimulation log is empty (or nothing was delivered)")
    out_times = record.output_spike_times()
    if out_times.size == 0:
        return SnrResult(ratio=math.nan, undefined=True)

    evoked = np.zeros(record.duration + 1, dtype=bool)
    for ts in delivered:
        lo = min(ts + 1, record.duration + 1)
        hi = min(ts + response_window, record.duration)
        if lo <= hi:
            evoked[lo : hi + 1] = True
    evoked[0] = False
    evoked_ms = int(evoked.sum())
    rest_ms = record.duration - evoked_ms
    in_evoked = int(evoked[out_times].sum())
    in_rest = int(out_times.size - in_evoked)

    evoked_rate = in_evoked / evoked_ms if evoked_ms else 0.0
    baseline_rate = in_rest / rest_ms if rest_ms else 0.0
    if baseline_rate == 0.0:
        return SnrResult(math.inf, False, evoked_rate, baseline_rate)
    return SnrResult(evoked_rate / baseline_rate, False, evoked_rate, baseline_rate)


def prediction_error_rate(record: RunRecord, t_min: int = 0, t_max: int | None = None) -> float:
    """Fraction of target stimulation events that were actually delivered
    (i.e. not suppressed by preceding inhibitory activity) within
    ``[t_min, t_max]``."""
    target = record.env_trace.get("target_id")
    if target is None:
        raise MetricError("record has no predictable-pair trace")
    hi = t_max if t_max is not None else record.duration
    events = [
        (t, ok)
        for t, input_id, ok in record.stim_rows
        if input_id == target and t_min <= t <= hi
    ]
    if not events:
        raise MetricError("no target stimulation events in the requested range")
    return sum(1 for _, ok in events if ok) / len(events)


def weight_trajectory(record: RunRecord, pre: int, post: int) -> tuple[np.ndarray, np.ndarray]:
    """Snapshot series (times, weights) of one synapse."""
    k = record.synapse_index(pre, post)
    return record.snapshot_times.copy(), record.weight_snapshots[:, k].copy()


def pairing_asymmetry(record: RunRecord, pre: int, post: int,
                      t_min: int = 0, t_max: int | None = None,
                      window: int = 20) -> tuple[float, float]:
    """Mean pre-before-post gap versus mean post-before-pre gap for one
    synapse over ``[t_min, t_max]``, using nearest-neighbor pairing.

    Returns ``(mean potentiation gap, mean depression gap)``; an empty
    depression set yields +inf for its mean (no depression pairs at all is
    the extreme of the asymmetry).
    """
    hi = t_max if t_max is not None else record.duration
    times, ids = record.spike_times, record.spike_ids
    sel = (times >= t_min) & (times <= hi) & ((ids == pre) | (ids == post))
    t_sel, id_sel = times[sel], ids[sel]
    ltp_gaps, ltd_gaps = [], []
    last_pre = last_post = None
    i = 0
    while i < t_sel.size:
        t = t_sel[i]
        batch = set()
        while i < t_sel.size and t_sel[i] == t:
            batch.add(int(id_sel[i]))
            i += 1
        # Simultaneous pre/post spikes pair at dt == 0 and count for neither.
        if post in batch and pre not in batch:
            if last_pre is not None and 0 < t - last_pre < window:
                ltp_gaps.append(t - last_pre)
        if pre in batch and post not in batch:
            if last_post is not None and 0 < t - last_post < window:
                ltd_gaps.append(t - last_post)
        if pre in batch:
            last_pre = t
        if post in batch:
            last_post = t
    mean_ltp = float(np.mean(ltp_gaps)) if ltp_gaps else math.inf
    mean_ltd = float(np.mean(ltd_gaps)) if ltd_gaps else math.inf
    return mean_ltp, mean_ltd
