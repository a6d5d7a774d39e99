"""Pure NumPy stepping kernel (reference implementation).

The compiled kernel in ``_kernel.pyx`` performs the exact same arithmetic
in the exact same order; the two must stay bit-identical. Any change here
must be mirrored there.
"""

from __future__ import annotations

import numpy as np

CUTOFF = 30.0


class State:
    """Aliases of the network's live arrays plus event counters."""

    def __init__(self, net):
        self.v = net.v
        self.u = net.u
        self.pa = net.pa
        self.pb = net.pb
        self.pc = net.pc
        self.pd = net.pd
        self.sign = net.sign
        self.syn_pre = net.syn_pre
        self.syn_post = net.syn_post
        self.syn_w = net.syn_w
        self.syn_delay = net.syn_delay
        self.out_ptr = net.out_ptr
        self.in_ptr = net.in_ptr
        self.in_idx = net.in_idx
        self.ring = net.ring
        self.ring_counts = net.ring_counts
        self.last_spike = net.last_spike
        self.forced = net.forced
        self.ltp = net.ltp_table
        self.ltd = net.ltd_table
        self.w_max = net.stdp.w_max
        self.window = int(net.kernel_window)
        self.syn_gain = net.syn_gain
        self.enqueued = 0
        self.delivered = 0


def make_state(net) -> State:
    return State(net)


def counters(state: State) -> tuple[int, int]:
    return state.enqueued, state.delivered


def reset_counters(state: State) -> None:
    state.enqueued = 0
    state.delivered = 0


def step(state: State, nt: int, noise, ext, fired_buf) -> tuple[int, int]:
    """One 1 ms step ending at time ``nt``. Returns (n fired, fault index)."""
    s = state
    v, u = s.v, s.u
    rows = s.ring.shape[0]
    row = nt % rows

    # Deliver scheduled currents, then clear the slot for reuse.
    current = s.ring[row] + ext + noise
    s.delivered += int(s.ring_counts[row])
    s.ring_counts[row] = 0
    s.ring[row, :] = 0.0

    # Two 0.5 ms half-steps for v, then one full step for u.
    v += 0.5 * (0.04 * v * v + 5.0 * v + 140.0 - u + current)
    v += 0.5 * (0.04 * v * v + 5.0 * v + 140.0 - u + current)
    u += s.pa * (s.pb * v - u)

    finite = np.isfinite(v) & np.isfinite(u)
    if not finite.all():
        return 0, int(np.flatnonzero(~finite)[0])

    fired = np.flatnonzero((v >= CUTOFF) | (s.forced != 0)).astype(np.int32)
    nf = int(fired.size)
    if nf == 0:
        return 0, -1
    fired_buf[:nf] = fired

    v[fired] = s.pc[fired]
    u[fired] += s.pd[fired]
    # History first, so simultaneous pairs see dt == 0 and stay untouched.
    s.last_spike[fired] = nt

    wnd = s.window
    for sp in fired:
        sp = int(sp)
        ks = s.in_idx[s.in_ptr[sp] : s.in_ptr[sp + 1]]
        if ks.size:
            dt = nt - s.last_spike[s.syn_pre[ks]]
            m = (dt > 0) & (dt < wnd)
            if m.any():
                kk = ks[m]
                s.syn_w[kk] = np.minimum(s.syn_w[kk] + s.ltp[dt[m]], s.w_max)
        k0, k1 = int(s.out_ptr[sp]), int(s.out_ptr[sp + 1])
        if k1 > k0:
            posts = s.syn_post[k0:k1]
            dt = nt - s.last_spike[posts]
            m = (dt > 0) & (dt < wnd)
            if m.any():
                kk = np.arange(k0, k1, dtype=np.int64)[m]
                s.syn_w[kk] = np.maximum(s.syn_w[kk] - s.ltd[dt[m]], 0.0)
            eff = s.sign[sp] * s.syn_gain
            slots = (nt + s.syn_delay[k0:k1]) % rows
            np.add.at(s.ring, (slots, posts), eff * s.syn_w[k0:k1])
            np.add.at(s.ring_counts, slots, 1)
            s.enqueued += k1 - k0
    return nf, -1
