# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled stepping kernel.

Mirrors ``_kernel_py.step`` operation-for-operation so results stay
bit-identical to the NumPy fallback (the extension is built with
-ffp-contract=off for that reason). Any change here must be mirrored
there.
"""

from libc.stdint cimport int32_t, int64_t, uint8_t
from libc.math cimport isfinite

import numpy as np

cdef double CUTOFF = 30.0


cdef class State:
    cdef double[::1] v, u, pa, pb, pc, pd, sign, syn_w, ltp, ltd, scratch
    cdef int32_t[::1] syn_pre, syn_post, syn_delay, in_idx
    cdef int64_t[::1] out_ptr, in_ptr, last_spike, ring_counts
    cdef uint8_t[::1] forced
    cdef double[:, ::1] ring
    cdef double w_max, syn_gain
    cdef int window, n, rows
    cdef public long long enqueued, delivered

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
        self.n = net.n
        self.rows = net.ring.shape[0]
        self.scratch = np.zeros(net.n, dtype=np.float64)
        self.enqueued = 0
        self.delivered = 0


def make_state(net):
    return State(net)


def counters(State state):
    return state.enqueued, state.delivered


def reset_counters(State state):
    state.enqueued = 0
    state.delivered = 0


def step(State s, long long nt, double[::1] noise, double[::1] ext,
         int32_t[::1] fired_buf):
    cdef int n = s.n
    cdef int rows = s.rows
    cdef int row = <int> (nt % rows)
    cdef int i, nf, sp, j
    cdef long long k, k0, k1, dt
    cdef int fault = -1
    cdef double w, eff
    cdef int wnd = s.window
    cdef double[::1] cur = s.scratch

    with nogil:
        for i in range(n):
            cur[i] = s.ring[row, i] + ext[i] + noise[i]
            s.ring[row, i] = 0.0
        s.delivered += s.ring_counts[row]
        s.ring_counts[row] = 0

        for i in range(n):
            s.v[i] += 0.5 * (0.04 * s.v[i] * s.v[i] + 5.0 * s.v[i] + 140.0 - s.u[i] + cur[i])
            s.v[i] += 0.5 * (0.04 * s.v[i] * s.v[i] + 5.0 * s.v[i] + 140.0 - s.u[i] + cur[i])
            s.u[i] += s.pa[i] * (s.pb[i] * s.v[i] - s.u[i])

        for i in range(n):
            if not (isfinite(s.v[i]) and isfinite(s.u[i])):
                fault = i
                break

        nf = 0
        if fault < 0:
            for i in range(n):
                if s.v[i] >= CUTOFF or s.forced[i] != 0:
                    fired_buf[nf] = i
                    nf += 1
            for j in range(nf):
                sp = fired_buf[j]
                s.v[sp] = s.pc[sp]
                s.u[sp] += s.pd[sp]
                s.last_spike[sp] = nt
            for j in range(nf):
                sp = fired_buf[j]
                for k in range(s.in_ptr[sp], s.in_ptr[sp + 1]):
                    i = s.in_idx[k]
                    dt = nt - s.last_spike[s.syn_pre[i]]
                    if 0 < dt < wnd:
                        w = s.syn_w[i] + s.ltp[dt]
                        if w > s.w_max:
                            w = s.w_max
                        s.syn_w[i] = w
                k0 = s.out_ptr[sp]
                k1 = s.out_ptr[sp + 1]
                for k in range(k0, k1):
                    dt = nt - s.last_spike[s.syn_post[k]]
                    if 0 < dt < wnd:
                        w = s.syn_w[k] - s.ltd[dt]
                        if w < 0.0:
                            w = 0.0
                        s.syn_w[k] = w
                eff = s.sign[sp] * s.syn_gain
                for k in range(k0, k1):
                    s.ring[<int> ((nt + s.syn_delay[k]) % rows), s.syn_post[k]] += eff * s.syn_w[k]
                    s.ring_counts[(nt + s.syn_delay[k]) % rows] += 1
                s.enqueued += k1 - k0

    if fault >= 0:
        return 0, fault
    return nf, -1
