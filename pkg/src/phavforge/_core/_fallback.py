"""Pure-Python versions of the compiled kernels.

Operation order mirrors ``_kernels.pyx`` line by line so that both backends
produce identical doubles; keep them in sync.
"""

from __future__ import annotations

import math

import numpy as np

OK = 0
DIVERGED = 1
NO_CONVERGENCE = 2

MAX_ITER = 100
MAX_BRACKET = 60
MAX_BISECT = 200
# a substep whose implicit solve fails is split in halves, at most this many times
MAX_SPLIT = 12
_TOL = 1e-14
_LOOSE_TOL = 1e-8


def triangular_icdf(u, a, b, c):
    u = np.asarray(u, dtype=np.float64)
    out = np.empty_like(u)
    flat_u = u.reshape(-1)
    flat_out = out.reshape(-1)
    ba = b - a
    ca = c - a
    bc = b - c
    for i in range(flat_u.shape[0]):
        x = flat_u[i]
        if ba == 0.0:
            flat_out[i] = a
        elif x * ba < ca:
            flat_out[i] = a + math.sqrt(x * ba * ca)
        else:
            flat_out[i] = b - math.sqrt((1.0 - x) * ba * bc)
    return out


def _potential(s, k, r, m):
    q = (s if s > m else m) - r
    return 0.5 * k * q * q


def _secant_slope(s0, s1, k, r, m):
    if s0 >= m and s1 >= m:
        return k * (0.5 * (s0 + s1) - r)
    if s0 < m and s1 < m:
        return 0.0
    so = s0 if s0 > s1 else s1
    si = s1 if s0 > s1 else s0
    return 0.5 * k * (so - m) * (so + m - 2.0 * r) / (so - si)


def _energy(st, px, py, pz, prm):
    mc, _, mt, _, kct, _, rct, ktp, _, rtp, mind, pinned = prm
    dx = st[0] - st[6]
    dy = st[1] - st[7]
    dz = st[2] - st[8]
    s_ct = math.sqrt(dx * dx + dy * dy + dz * dz)
    dx = st[6] - px
    dy = st[7] - py
    dz = st[8] - pz
    s_tp = math.sqrt(dx * dx + dy * dy + dz * dz)
    ke_c = 0.0
    if pinned == 0.0:
        ke_c = 0.5 * mc * (st[3] * st[3] + st[4] * st[4] + st[5] * st[5])
    ke_t = 0.5 * mt * (st[9] * st[9] + st[10] * st[10] + st[11] * st[11])
    return ke_c + ke_t + _potential(s_ct, kct, rct, 0.0) + _potential(s_tp, ktp, rtp, mind)


def _tp_coefficient(s0, s1, k, r, m):
    g = _secant_slope(s0, s1, k, r, m)
    ssum = s0 + s1
    if ssum > 0.0:
        return g / ssum
    return 0.0


def _iterate(st, p0, p1, h, prm, frozen, lam, v):
    """Fixed-point solve for the end-of-step velocities ``v`` (6 floats, updated in place).

    With ``frozen`` set the target-protagonist coefficient is ``lam`` rather
    than the secant value of the iterate. Returns ``(status, s_tp0, s_tp1)``
    with the spring lengths at the start and at the end of the step.
    """
    mc, dragc, mt, dragt, kct, cct, rct, ktp, ctp, rtp, mind, pinned = prm
    xc0, yc0, zc0, uc0, vc0, wc0, xt0, yt0, zt0, ut0, vt0, wt0 = st
    p0x, p0y, p0z = p0
    p1x, p1y, p1z = p1
    hh = 0.5 * h
    # protagonist mean velocity over the step
    upm = (p1x - p0x) / h
    vpm = (p1y - p0y) / h
    wpm = (p1z - p0z) / h

    a0x = xc0 - xt0
    a0y = yc0 - yt0
    a0z = zc0 - zt0
    s_ct0 = math.sqrt(a0x * a0x + a0y * a0y + a0z * a0z)
    b0x = xt0 - p0x
    b0y = yt0 - p0y
    b0z = zt0 - p0z
    s_tp0 = math.sqrt(b0x * b0x + b0y * b0y + b0z * b0z)
    # damping acts on steps that start outside the dead zone
    if s_tp0 >= mind:
        damp = ctp
    else:
        damp = 0.0

    uc1, vc1, wc1, ut1, vt1, wt1 = v
    delta = 0.0
    scale = 1.0
    status = NO_CONVERGENCE
    for _ in range(MAX_ITER):
        xc1 = xc0 + hh * (uc0 + uc1)
        yc1 = yc0 + hh * (vc0 + vc1)
        zc1 = zc0 + hh * (wc0 + wc1)
        xt1 = xt0 + hh * (ut0 + ut1)
        yt1 = yt0 + hh * (vt0 + vt1)
        zt1 = zt0 + hh * (wt0 + wt1)

        # camera-target spring, force on the camera
        a1x = xc1 - xt1
        a1y = yc1 - yt1
        a1z = zc1 - zt1
        s_ct1 = math.sqrt(a1x * a1x + a1y * a1y + a1z * a1z)
        g = _tp_coefficient(s_ct0, s_ct1, kct, rct, 0.0)
        ucm = 0.5 * (uc0 + uc1)
        vcm = 0.5 * (vc0 + vc1)
        wcm = 0.5 * (wc0 + wc1)
        utm = 0.5 * (ut0 + ut1)
        vtm = 0.5 * (vt0 + vt1)
        wtm = 0.5 * (wt0 + wt1)
        fcx = -g * (a0x + a1x) - cct * (ucm - utm)
        fcy = -g * (a0y + a1y) - cct * (vcm - vtm)
        fcz = -g * (a0z + a1z) - cct * (wcm - wtm)

        # target-protagonist spring with dead zone, force on the target
        b1x = xt1 - p1x
        b1y = yt1 - p1y
        b1z = zt1 - p1z
        if frozen:
            g = lam
        else:
            s_tp1 = math.sqrt(b1x * b1x + b1y * b1y + b1z * b1z)
            g = _tp_coefficient(s_tp0, s_tp1, ktp, rtp, mind)
        ftx = -g * (b0x + b1x) - damp * (utm - upm)
        fty = -g * (b0y + b1y) - damp * (vtm - vpm)
        ftz = -g * (b0z + b1z) - damp * (wtm - wpm)

        if pinned == 0.0:
            nuc = uc0 + h * (fcx / mc - dragc * ucm)
            nvc = vc0 + h * (fcy / mc - dragc * vcm)
            nwc = wc0 + h * (fcz / mc - dragc * wcm)
        else:
            nuc = 0.0
            nvc = 0.0
            nwc = 0.0
        nut = ut0 + h * ((ftx - fcx) / mt - dragt * utm)
        nvt = vt0 + h * ((fty - fcy) / mt - dragt * vtm)
        nwt = wt0 + h * ((ftz - fcz) / mt - dragt * wtm)

        delta = max(abs(nuc - uc1), abs(nvc - vc1), abs(nwc - wc1),
                    abs(nut - ut1), abs(nvt - vt1), abs(nwt - wt1))
        scale = 1.0 + max(abs(nuc), abs(nvc), abs(nwc), abs(nut), abs(nvt), abs(nwt))
        uc1, vc1, wc1 = nuc, nvc, nwc
        ut1, vt1, wt1 = nut, nvt, nwt
        if not delta == delta or delta > 1e300:
            status = DIVERGED
            break
        if delta <= _TOL * scale:
            status = OK
            break
    if status == NO_CONVERGENCE and delta <= _LOOSE_TOL * scale:
        status = OK

    v[0], v[1], v[2], v[3], v[4], v[5] = uc1, vc1, wc1, ut1, vt1, wt1
    b1x = xt0 + hh * (ut0 + ut1) - p1x
    b1y = yt0 + hh * (vt0 + vt1) - p1y
    b1z = zt0 + hh * (wt0 + wt1) - p1z
    return status, s_tp0, math.sqrt(b1x * b1x + b1y * b1y + b1z * b1z)


def _residual(st, p0, p1, h, prm, lam, v):
    """Solve with the target-protagonist coefficient fixed at ``lam``; return (status, lam - secant)."""
    v[0], v[1], v[2], v[3], v[4], v[5] = st[3], st[4], st[5], st[9], st[10], st[11]
    status, s0, s1 = _iterate(st, p0, p1, h, prm, True, lam, v)
    if status != OK:
        return status, 0.0
    return OK, lam - _tp_coefficient(s0, s1, prm[7], prm[9], prm[10])


def _solve_bracketed(st, p0, p1, h, prm, v):
    """Bisect on the target-protagonist coefficient.

    The secant coefficient jumps where the target sits on the dead-zone
    boundary, which stalls the plain fixed-point iteration. With the
    coefficient as the unknown the remaining system is smooth, and the
    residual changes sign across the solution.
    """
    lo = -1.0
    status, r_lo = _residual(st, p0, p1, h, prm, lo, v)
    n = 0
    while status == OK and r_lo > 0.0 and n < MAX_BRACKET:
        lo = 2.0 * lo - 1.0
        status, r_lo = _residual(st, p0, p1, h, prm, lo, v)
        n += 1
    if status != OK or r_lo > 0.0:
        return DIVERGED
    if r_lo == 0.0:
        return OK
    hi = 0.5 * prm[7] + 1.0
    status, r_hi = _residual(st, p0, p1, h, prm, hi, v)
    n = 0
    while status == OK and r_hi < 0.0 and n < MAX_BRACKET:
        hi = 2.0 * hi + 1.0
        status, r_hi = _residual(st, p0, p1, h, prm, hi, v)
        n += 1
    if status != OK or r_hi < 0.0:
        return DIVERGED
    if r_hi == 0.0:
        return OK
    for _ in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        status, r = _residual(st, p0, p1, h, prm, mid, v)
        if status != OK:
            return status
        if r == 0.0:
            return OK
        if r < 0.0:
            lo = mid
            r_lo = r
        else:
            hi = mid
            r_hi = r
    if -r_lo <= r_hi:
        status, _ = _residual(st, p0, p1, h, prm, lo, v)
    else:
        status, _ = _residual(st, p0, p1, h, prm, hi, v)
    return status


def _step(st, p0, p1, h, prm):
    """Advance ``st`` (list of 12 floats) by one substep in place; return status."""
    v = [st[3], st[4], st[5], st[9], st[10], st[11]]
    status, _, _ = _iterate(st, p0, p1, h, prm, False, 0.0, v)
    if status != OK:
        status = _solve_bracketed(st, p0, p1, h, prm, v)
        if status != OK:
            return status
    hh = 0.5 * h
    out = [
        st[0] + hh * (st[3] + v[0]),
        st[1] + hh * (st[4] + v[1]),
        st[2] + hh * (st[5] + v[2]),
        v[0],
        v[1],
        v[2],
        st[6] + hh * (st[9] + v[3]),
        st[7] + hh * (st[10] + v[4]),
        st[8] + hh * (st[11] + v[5]),
        v[3],
        v[4],
        v[5],
    ]
    for x in out:
        if not math.isfinite(x):
            return DIVERGED
    st[:] = out
    return OK


def _advance(st, p0, p1, h, prm, depth):
    status = _step(st, p0, p1, h, prm)
    if status == OK or depth >= MAX_SPLIT:
        return status
    mid = [0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1]), 0.5 * (p0[2] + p1[2])]
    status = _advance(st, p0, mid, 0.5 * h, prm, depth + 1)
    if status != OK:
        return status
    return _advance(st, mid, p1, 0.5 * h, prm, depth + 1)


def integrate_kite(protagonist, h, params, state0, emit_every):
    """Integrate the two-body Kite chain.

    ``protagonist`` holds positions at every substep boundary, shape
    ``(n_sub + 1, 3)``. Returns ``(states, energy, status)`` where ``states``
    has one 12-vector per emitted substep (every ``emit_every``-th, starting at
    0) and ``energy`` the mechanical energy after every substep.
    """
    prot = np.ascontiguousarray(protagonist, dtype=np.float64)
    prm = [float(x) for x in params]
    st = [float(x) for x in state0]
    n_sub = prot.shape[0] - 1
    n_emit = n_sub // emit_every + 1
    states = np.full((n_emit, 12), np.nan)
    energy = np.full(n_sub + 1, np.nan)
    pts = prot.tolist()

    states[0] = st
    energy[0] = _energy(st, pts[0][0], pts[0][1], pts[0][2], prm)
    k = 1
    for i in range(n_sub):
        if _advance(st, pts[i], pts[i + 1], h, prm, 0) != OK:
            return states, energy, DIVERGED
        p = pts[i + 1]
        energy[i + 1] = _energy(st, p[0], p[1], p[2], prm)
        if (i + 1) % emit_every == 0:
            states[k] = st
            k += 1
    return states, energy, OK
