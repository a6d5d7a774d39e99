"""Spike-timing dependent plasticity rule and its configuration.

Two kernel shapes are supported. The rectangular kernel applies a fixed
weight step for any pre/post spike pair closer than the plasticity window;
the exponential kernel scales the step down as the pair separation grows.
Both share the same sign rule: pre-before-post potentiates, post-before-pre
depresses, and pairs separated by the full window (or more) do nothing.

Weight updates are applied on every spike using nearest-neighbor pairing:
each firing neuron pairs once against the most recent spike of every
pre- and post-synaptic partner.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KERNELS = ("rectangular", "exponential")


@dataclass(frozen=True)
class StdpConfig:
    """Parameters of the pairwise plasticity rule.

    ``tau_window`` is an open bound: a pair separated by exactly
    ``tau_window`` ms is outside the rule. Amplitudes are magnitudes;
    the sign comes from the pairing order.
    """

    kernel: str = "exponential"
    a_plus: float = 0.1
    a_minus: float = 0.1
    tau_window: int = 20
    w_max: float = 10.0

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}, expected one of {KERNELS}")
        if not self.tau_window > 0:
            raise ValueError("tau_window must be > 0")
        if not (self.a_plus > 0 and self.a_minus > 0):
            raise ValueError("a_plus and a_minus must be > 0")
        if not self.w_max > 0:
            raise ValueError("w_max must be > 0")


def stdp_delta(dt: float, cfg: StdpConfig) -> float:
    """Signed weight change for a spike pair with ``dt = t_post - t_pre``.

    Total function: any finite dt maps to a (possibly zero) change.
    Simultaneous spikes (dt == 0) produce no change.
    """
    if dt == 0 or abs(dt) >= cfg.tau_window:
        return 0.0
    if cfg.kernel == "rectangular":
        shape = 1.0
    else:
        shape = float(np.exp(-abs(dt) / cfg.tau_window))
    if dt > 0:
        return cfg.a_plus * shape
    return -cfg.a_minus * shape


def make_tables(cfg: StdpConfig) -> tuple[np.ndarray, np.ndarray]:
    """Precompute per-millisecond magnitude tables for the stepping kernel.

    Returns ``(ltp, ltd)`` indexed by integer pair separation in
    ``[0, tau_window)``; index 0 is zero by the simultaneous-spike rule.
    Both simulation backends index these same tables, so the kernel shape
    is evaluated exactly once (here) per run.
    """
    w = int(cfg.tau_window)
    ltp = np.zeros(w, dtype=np.float64)
    ltd = np.zeros(w, dtype=np.float64)
    for d in range(1, w):
        ltp[d] = stdp_delta(float(d), cfg)
        ltd[d] = -stdp_delta(float(-d), cfg)
    return ltp, ltd


def on_spike_update(net, spiked: int, t: int) -> None:
    """Apply nearest-neighbor pairing updates for one spike.

    ``spiked`` fired at time ``t`` (already recorded in the network's
    last-spike history). Every incoming synapse pairs against its
    presynaptic partner's most recent spike; every outgoing synapse pairs
    against its postsynaptic partner's most recent spike. Results are
    clamped to ``[0, w_max]``.

    The stepping kernels inline this exact rule; this standalone form is
    the contract surface for tests and offline replay.
    """
    cfg = net.stdp
    w_cap = cfg.w_max
    wnd = cfg.tau_window
    last = net.last_spike
    for k in net.incoming_synapses(spiked):
        dt = t - last[net.syn_pre[k]]
        if 0 < dt < wnd:
            net.syn_w[k] = min(net.syn_w[k] + net.ltp_table[dt], w_cap)
    for k in net.outgoing_synapses(spiked):
        dt = t - last[net.syn_post[k]]
        if 0 < dt < wnd:
            net.syn_w[k] = max(net.syn_w[k] - net.ltd_table[dt], 0.0)
