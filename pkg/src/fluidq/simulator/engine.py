"""Compiled replication kernels.

Two kernels cover every supported input:

``grid_kernel``
    Forward-adaptive time stepping.  The step ``h`` is chosen from the
    current state only (halving ``dt`` while the state is close to a
    boundary), so the increments over the chosen step are still exact in
    law.  The Gaussian part is sampled jointly with its running minimum
    (Brownian-bridge minimum), which makes the Skorokhod regulator exact at
    the chosen times; subordinator jumps are applied at the right end of the
    step.

``event_kernel``
    Exact event-driven simulation of a spectrally positive compound Poisson
    input with linear drain (``sigma = 0``), where ``X``, ``L`` and ``Q`` are
    piecewise linear between jumps.

Both kernels accumulate batch statistics in-place (one row per segment) and
return period lengths and inspection-time records.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# local-time modes
LT_REGULATOR = 0   # L = scale * regulator of the reflection
LT_VISIT_MARKS = 1  # one exponential mark per visit to zero
LT_EPS_MARKS = 2   # one exponential mark per completed excursion above eps

# jump kinds
J_NONE = 0
J_CPP = 1
J_STABLE = 2
J_INVBM = 3

# column layout of the per-segment scalar accumulator
S_TIME = 0
S_L = 1
S_ZERO_TIME = 2
S_N_BUSY_START = 3
S_N_BUSY_END = 4
S_STEPS = 5
N_SCALARS = 6

# columns of the inspection record
I_TIME = 0
I_Q = 1
I_X = 2
I_QG = 3
I_G = 4
I_D = 5
I_D0 = 6
N_INSPECT = 7


@njit(cache=True, nogil=True)
def _jump(kind, p1, p2, h, g):
    """Total subordinator increment over a step of length ``h``."""
    if kind == J_CPP:
        k = g.poisson(p1 * h)
        s = 0.0
        for _ in range(k):
            s += g.exponential(1.0 / p2)
        return s
    if kind == J_STABLE:
        # Kanter's representation of a positive alpha-stable variable.
        alpha = p1
        u = math.pi * (1.0 - g.random())
        e = g.exponential(1.0)
        a = math.sin(alpha * u) / math.sin(u) ** (1.0 / alpha)
        b = (math.sin((1.0 - alpha) * u) / e) ** ((1.0 - alpha) / alpha)
        return (p2 * h) ** (1.0 / alpha) * a * b
    if kind == J_INVBM:
        # first passage of a standard Brownian motion over sqrt(2) c h
        lev = math.sqrt(2.0) * p1 * h
        z = g.standard_normal()
        return lev * lev / (z * z)
    return 0.0


@njit(cache=True, nogil=True)
def _grow(buf, n):
    if n < buf.shape[0]:
        return buf
    out = np.empty((2 * buf.shape[0] + 16,) + buf.shape[1:], dtype=buf.dtype)
    out[: buf.shape[0]] = buf
    return out


@njit(cache=True, nogil=True)
def _excursion(acc_d, acc_dg, s, ell, thetas, pa, pb):
    """Time integrals of exp(-theta D) and exp(-alpha D + beta G) over an excursion."""
    for i in range(thetas.shape[0]):
        th = thetas[i]
        acc_d[s, i] += -math.expm1(-th * ell) / th
    for i in range(pa.shape[0]):
        a, b = pa[i], pb[i]
        acc_dg[s, i] += (math.exp(-b * ell) - math.exp(-a * ell)) / (a - b)


@njit(cache=True, nogil=True)
def _zero_interval(acc_d, acc_dg, s, dur):
    # D = G = 0 while X sits at zero
    for i in range(acc_d.shape[1]):
        acc_d[s, i] += dur
    for i in range(acc_dg.shape[1]):
        acc_dg[s, i] += dur


@njit(cache=True, nogil=True)
def _time_above(q0, slope, u, a):
    """Length of ``{v in [0, u]: q0 + slope v > a}``."""
    q1 = q0 + slope * u
    if q0 > a and q1 > a:
        return u
    if q0 <= a and q1 <= a:
        return 0.0
    tc = (a - q0) / slope
    return u - tc if slope > 0 else tc


@njit(cache=True, nogil=True)
def grid_kernel(
    drift, sigma, jump_kind, jp1, jp2, jumps_up,
    lt_mode, lt_scale, eps,
    dt, n_levels, refine_k,
    burn_in, horizon, n_seg, inspect_every,
    a_grid, thetas, pa, pb,
    g_gauss, g_unif, g_jump, g_mark,
):
    seg_len = horizon / n_seg
    t_end = burn_in + horizon
    h_min = dt / 2.0 ** n_levels
    sig2 = sigma * sigma
    early = lt_mode == LT_REGULATOR

    acc = np.zeros((n_seg, N_SCALARS))
    acc_tail = np.zeros((n_seg, a_grid.shape[0]))
    acc_palm = np.zeros((n_seg, a_grid.shape[0]))
    acc_d = np.zeros((n_seg, thetas.shape[0]))
    acc_dg = np.zeros((n_seg, pa.shape[0]))
    idle = np.empty((1024, 2))
    busy = np.empty((1024, 2))
    n_idle = 0
    n_busy = 0
    n_ins_cap = int(horizon / inspect_every) + 2
    ins = np.full((n_ins_cap, N_INSPECT), np.nan)
    n_ins = 0
    pend_d = 0
    pend_d0 = 0

    t = 0.0
    x = 0.0
    q = 0.0
    armed = False
    last_z = -1.0
    q_at_z = 0.0
    last_g = -1.0
    last_d = -1.0
    next_ins = burn_in + inspect_every

    while t < t_end:
        # forward-adaptive step choice
        h = dt
        if lt_mode == LT_VISIT_MARKS:
            while h > h_min and x < refine_k * abs(drift) * h:
                h *= 0.5
        else:
            while h > h_min and q < h and x < refine_k * (sigma * math.sqrt(h) + abs(drift) * h):
                h *= 0.5
        if t + h > t_end:
            h = t_end - t

        w = drift * h
        if sigma > 0.0:
            w += sigma * math.sqrt(h) * g_gauss.standard_normal()
            u = 1.0 - g_unif.random()
            m = 0.5 * (w - math.sqrt(w * w - 2.0 * sig2 * h * math.log(u)))
        else:
            m = min(0.0, w)
        reg = max(0.0, -(x + m))
        xm = x + w + reg
        jmp = _jump(jump_kind, jp1, jp2, h, g_jump) if jump_kind != J_NONE else 0.0
        clip = False
        if jumps_up:
            xn = xm + jmp
        elif jmp >= xm:
            xn = 0.0
            clip = jmp > 0.0 or xm == 0.0
        else:
            xn = xm - jmp
        hit = reg > 0.0 or clip
        tz = t + 0.5 * h if reg > 0.0 else t + h

        # local time increment
        dl = 0.0
        if lt_mode == LT_REGULATOR:
            dl = lt_scale * reg
        elif lt_mode == LT_VISIT_MARKS:
            if hit:
                dl = g_mark.exponential(lt_scale)
        else:
            if hit and armed:
                dl = g_mark.exponential(lt_scale)
                armed = False
            if xn >= eps:
                armed = True

        # queue and period boundaries
        busy_end = -1.0
        busy_start = -1.0
        if early:
            qb = q
            qn = q + dl - h
            if qn <= 0.0:
                qn = 0.0
                if q > 0.0:
                    busy_end = t + min(q + dl, h)
            elif q == 0.0:
                busy_start = tz
        else:
            qd = q - h
            if qd <= 0.0:
                qd = 0.0
                if q > 0.0:
                    busy_end = t + q
            qb = qd
            qn = qd + dl
            if qd == 0.0 and dl > 0.0:
                busy_start = max(tz, t + q)

        measuring = t >= burn_in
        s = min(int((t - burn_in) / seg_len), n_seg - 1) if measuring else 0

        if busy_end >= 0.0:
            if measuring and last_d >= burn_in:
                busy = _grow(busy, n_busy)
                busy[n_busy, 0] = busy_end - last_d
                busy[n_busy, 1] = s
                n_busy += 1
            if measuring:
                acc[s, S_N_BUSY_END] += 1.0
            last_g = busy_end
        if busy_start >= 0.0:
            if measuring and last_g >= burn_in:
                idle = _grow(idle, n_idle)
                idle[n_idle, 0] = busy_start - last_g
                idle[n_idle, 1] = s
                n_idle += 1
            if measuring:
                acc[s, S_N_BUSY_START] += 1.0
            last_d = busy_start
            for k in range(pend_d0, n_ins):
                if ins[k, I_Q] == 0.0:
                    ins[k, I_D0] = busy_start - ins[k, I_TIME]
            pend_d0 = n_ins

        if hit:
            if measuring and last_z >= burn_in:
                _excursion(acc_d, acc_dg, s, tz - last_z, thetas, pa, pb)
            for k in range(pend_d, n_ins):
                ins[k, I_D] = tz - ins[k, I_TIME]
            pend_d = n_ins
            last_z = tz
            q_at_z = qn

        if measuring:
            acc[s, S_TIME] += h
            acc[s, S_L] += dl
            acc[s, S_STEPS] += 1.0
            for j in range(a_grid.shape[0]):
                if qn > a_grid[j]:
                    acc_tail[s, j] += h
                # Q rises through the local-time mass, so weight the part above a
                if dl > 0.0:
                    acc_palm[s, j] += dl - min(max(a_grid[j] - qb, 0.0), dl)

        t += h
        x = xn
        q = qn

        if t >= next_ins and n_ins < n_ins_cap:
            ins[n_ins, I_TIME] = t
            ins[n_ins, I_Q] = q
            ins[n_ins, I_X] = x
            ins[n_ins, I_QG] = q_at_z
            ins[n_ins, I_G] = last_z - t
            n_ins += 1
            next_ins += inspect_every

    return (acc, acc_tail, acc_palm, acc_d, acc_dg,
            idle[:n_idle].copy(), busy[:n_busy].copy(), ins[:n_ins].copy())


@njit(cache=True, nogil=True)
def event_kernel(
    drain, rate, jump_rate,
    burn_in, horizon, n_seg, inspect_every,
    a_grid, thetas, pa, pb,
    g_jump,
):
    """Spectrally positive input ``Y_t = -drain t + CPP`` with ``drain > 1``.

    While ``X > 0`` it decreases at rate ``drain`` and ``Q`` drains at rate 1;
    while ``X = 0`` the local time grows at rate ``drain`` and ``Q`` at
    ``drain - 1``.
    """
    seg_len = horizon / n_seg
    t_end = burn_in + horizon
    up = drain - 1.0

    acc = np.zeros((n_seg, N_SCALARS))
    acc_tail = np.zeros((n_seg, a_grid.shape[0]))
    acc_palm = np.zeros((n_seg, a_grid.shape[0]))
    acc_d = np.zeros((n_seg, thetas.shape[0]))
    acc_dg = np.zeros((n_seg, pa.shape[0]))
    idle = np.empty((1024, 2))
    busy = np.empty((1024, 2))
    n_idle = 0
    n_busy = 0
    n_ins_cap = int(horizon / inspect_every) + 2
    ins = np.full((n_ins_cap, N_INSPECT), np.nan)
    n_ins = 0
    pend_d = 0
    pend_d0 = 0

    t = 0.0
    x = 0.0
    q = 0.0
    last_z = -1.0  # end of the most recent zero interval of X (or now, if X = 0)
    q_at_z = 0.0
    last_g = -1.0
    last_d = -1.0
    next_ins = burn_in + inspect_every
    next_seg = burn_in
    t_jump = g_jump.exponential(1.0 / rate)

    while t < t_end:
        t_next = min(t_jump, next_ins, t_end)
        if next_seg > t and next_seg < t_next:
            t_next = next_seg
        u = t_next - t
        measuring = t >= burn_in
        s = min(int((t - burn_in) / seg_len), n_seg - 1) if measuring else 0

        # phase 1: X > 0 drains towards zero, Q drains at unit rate
        s1 = min(u, x / drain) if x > 0.0 else 0.0
        if s1 > 0.0:
            if measuring:
                for j in range(a_grid.shape[0]):
                    acc_tail[s, j] += _time_above(q, -1.0, min(q, s1), a_grid[j])
            if q > 0.0 and q <= s1:
                g_time = t + q
                if measuring and last_d >= burn_in:
                    busy = _grow(busy, n_busy)
                    busy[n_busy, 0] = g_time - last_d
                    busy[n_busy, 1] = s
                    n_busy += 1
                if measuring:
                    acc[s, S_N_BUSY_END] += 1.0
                last_g = g_time
                q = 0.0
            else:
                q = max(q - s1, 0.0)
            x = max(x - drain * s1, 0.0)
            if s1 < u:
                x = 0.0
        # phase 2: X = 0, local time at rate drain, Q grows at drain - 1
        s2 = u - s1
        if s2 > 0.0:
            tz = t + s1
            if s1 > 0.0:
                # X has just returned to zero: close the excursion
                if measuring and last_z >= burn_in:
                    _excursion(acc_d, acc_dg, s, tz - last_z, thetas, pa, pb)
                for k in range(pend_d, n_ins):
                    ins[k, I_D] = tz - ins[k, I_TIME]
                pend_d = n_ins
            if q == 0.0:
                if measuring and last_g >= burn_in:
                    idle = _grow(idle, n_idle)
                    idle[n_idle, 0] = tz - last_g
                    idle[n_idle, 1] = s
                    n_idle += 1
                if measuring:
                    acc[s, S_N_BUSY_START] += 1.0
                last_d = tz
                for k in range(pend_d0, n_ins):
                    if ins[k, I_Q] == 0.0:
                        ins[k, I_D0] = tz - ins[k, I_TIME]
                pend_d0 = n_ins
            if measuring:
                for j in range(a_grid.shape[0]):
                    above = _time_above(q, up, s2, a_grid[j])
                    acc_tail[s, j] += above
                    acc_palm[s, j] += drain * above
                acc[s, S_L] += drain * s2
                acc[s, S_ZERO_TIME] += s2
                _zero_interval(acc_d, acc_dg, s, s2)
            q += up * s2
            last_z = t_next
            q_at_z = q
        if measuring:
            acc[s, S_TIME] += u
            acc[s, S_STEPS] += 1.0
        t = t_next

        if t == t_jump:
            if x == 0.0:
                last_z = t
                q_at_z = q
            x += g_jump.exponential(1.0 / jump_rate)
            t_jump = t + g_jump.exponential(1.0 / rate)
        if t == next_seg:
            next_seg += seg_len
        if t >= next_ins and n_ins < n_ins_cap:
            ins[n_ins, I_TIME] = t
            ins[n_ins, I_Q] = q
            ins[n_ins, I_X] = x
            if x == 0.0:
                ins[n_ins, I_QG] = q
                ins[n_ins, I_G] = 0.0
                ins[n_ins, I_D] = 0.0
            else:
                ins[n_ins, I_QG] = q_at_z
                ins[n_ins, I_G] = last_z - t
            n_ins += 1
            if x == 0.0:
                # D = 0 is already known; earlier records were resolved when X hit zero
                pend_d = n_ins
            next_ins += inspect_every

    return (acc, acc_tail, acc_palm, acc_d, acc_dg,
            idle[:n_idle].copy(), busy[:n_busy].copy(), ins[:n_ins].copy())


@njit(cache=True, nogil=True)
def cpp_first_passage_kernel(drift, rate, jump_rate, q, level, t_max, n_paths, g):
    """Samples of ``exp(-q tau)`` for ``tau`` the first passage of
    ``Z_t = drift t - CPP_t`` below ``-level``; 0 when ``tau > t_max``."""
    out = np.zeros(n_paths)
    for i in range(n_paths):
        t = 0.0
        z = 0.0
        while True:
            tau = g.exponential(1.0 / rate)
            t += tau
            if t > t_max:
                break
            z += drift * tau - g.exponential(1.0 / jump_rate)
            if z < -level:
                out[i] = math.exp(-q * t)
                break
    return out
