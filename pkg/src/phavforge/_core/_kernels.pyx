# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Arithmetic mirrors ``_fallback.py`` exactly; keep in sync."""

import numpy as np

from libc.math cimport sqrt, fabs, isfinite

cdef int MAX_ITER = 100
cdef int MAX_BRACKET = 60
cdef int MAX_BISECT = 200
cdef int MAX_SPLIT = 12
cdef double TOL = 1e-14
cdef double LOOSE_TOL = 1e-8

cdef enum:
    OK = 0
    DIVERGED = 1
    NO_CONVERGENCE = 2


def triangular_icdf(u, double a, double b, double c):
    cdef double[::1] src = np.ascontiguousarray(u, dtype=np.float64).reshape(-1)
    out_arr = np.empty(src.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef double x
    cdef double ba = b - a
    cdef double ca = c - a
    cdef double bc = b - c
    for i in range(src.shape[0]):
        x = src[i]
        if ba == 0.0:
            out[i] = a
        elif x * ba < ca:
            out[i] = a + sqrt(x * ba * ca)
        else:
            out[i] = b - sqrt((1.0 - x) * ba * bc)
    return out_arr.reshape(np.shape(u))


cdef inline double _potential(double s, double k, double r, double m) nogil:
    cdef double q = (s if s > m else m) - r
    return 0.5 * k * q * q


cdef inline double _secant_slope(double s0, double s1, double k, double r, double m) nogil:
    cdef double so, si
    if s0 >= m and s1 >= m:
        return k * (0.5 * (s0 + s1) - r)
    if s0 < m and s1 < m:
        return 0.0
    so = s0 if s0 > s1 else s1
    si = s1 if s0 > s1 else s0
    return 0.5 * k * (so - m) * (so + m - 2.0 * r) / (so - si)


cdef inline double _energy(double* st, double px, double py, double pz, double* prm) nogil:
    cdef double dx, dy, dz, s_ct, s_tp, ke_c, ke_t
    dx = st[0] - st[6]
    dy = st[1] - st[7]
    dz = st[2] - st[8]
    s_ct = sqrt(dx * dx + dy * dy + dz * dz)
    dx = st[6] - px
    dy = st[7] - py
    dz = st[8] - pz
    s_tp = sqrt(dx * dx + dy * dy + dz * dz)
    ke_c = 0.0
    if prm[11] == 0.0:
        ke_c = 0.5 * prm[0] * (st[3] * st[3] + st[4] * st[4] + st[5] * st[5])
    ke_t = 0.5 * prm[2] * (st[9] * st[9] + st[10] * st[10] + st[11] * st[11])
    return ke_c + ke_t + _potential(s_ct, prm[4], prm[6], 0.0) + _potential(s_tp, prm[7], prm[9], prm[10])


cdef inline double _max6(double a, double b, double c, double d, double e, double f) nogil:
    cdef double m = a
    if b > m: m = b
    if c > m: m = c
    if d > m: m = d
    if e > m: m = e
    if f > m: m = f
    return m


cdef inline double _tp_coefficient(double s0, double s1, double k, double r, double m) nogil:
    cdef double g = _secant_slope(s0, s1, k, r, m)
    cdef double ssum = s0 + s1
    if ssum > 0.0:
        return g / ssum
    return 0.0


cdef int _iterate(double* st, double* p0, double* p1, double h, double* prm,
                  bint frozen, double lam, double* v, double* s_out) nogil:
    cdef double mc = prm[0], dragc = prm[1], mt = prm[2], dragt = prm[3]
    cdef double kct = prm[4], cct = prm[5], rct = prm[6]
    cdef double ktp = prm[7], ctp = prm[8], rtp = prm[9], mind = prm[10], pinned = prm[11]
    cdef double xc0 = st[0], yc0 = st[1], zc0 = st[2], uc0 = st[3], vc0 = st[4], wc0 = st[5]
    cdef double xt0 = st[6], yt0 = st[7], zt0 = st[8], ut0 = st[9], vt0 = st[10], wt0 = st[11]
    cdef double p0x = p0[0], p0y = p0[1], p0z = p0[2]
    cdef double p1x = p1[0], p1y = p1[1], p1z = p1[2]
    cdef double hh = 0.5 * h
    cdef double upm = (p1x - p0x) / h
    cdef double vpm = (p1y - p0y) / h
    cdef double wpm = (p1z - p0z) / h
    cdef double a0x = xc0 - xt0, a0y = yc0 - yt0, a0z = zc0 - zt0
    cdef double s_ct0 = sqrt(a0x * a0x + a0y * a0y + a0z * a0z)
    cdef double b0x = xt0 - p0x, b0y = yt0 - p0y, b0z = zt0 - p0z
    cdef double s_tp0 = sqrt(b0x * b0x + b0y * b0y + b0z * b0z)
    cdef double damp
    cdef double uc1 = v[0], vc1 = v[1], wc1 = v[2], ut1 = v[3], vt1 = v[4], wt1 = v[5]
    cdef double xc1, yc1, zc1, xt1, yt1, zt1, a1x, a1y, a1z, b1x, b1y, b1z
    cdef double s_ct1, s_tp1, g
    cdef double ucm, vcm, wcm, utm, vtm, wtm
    cdef double fcx, fcy, fcz, ftx, fty, ftz
    cdef double nuc, nvc, nwc, nut, nvt, nwt
    cdef double delta = 0.0, scale = 1.0
    cdef int it
    cdef int status = NO_CONVERGENCE

    if s_tp0 >= mind:
        damp = ctp
    else:
        damp = 0.0

    for it in range(MAX_ITER):
        xc1 = xc0 + hh * (uc0 + uc1)
        yc1 = yc0 + hh * (vc0 + vc1)
        zc1 = zc0 + hh * (wc0 + wc1)
        xt1 = xt0 + hh * (ut0 + ut1)
        yt1 = yt0 + hh * (vt0 + vt1)
        zt1 = zt0 + hh * (wt0 + wt1)

        a1x = xc1 - xt1
        a1y = yc1 - yt1
        a1z = zc1 - zt1
        s_ct1 = sqrt(a1x * a1x + a1y * a1y + a1z * a1z)
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

        b1x = xt1 - p1x
        b1y = yt1 - p1y
        b1z = zt1 - p1z
        if frozen:
            g = lam
        else:
            s_tp1 = sqrt(b1x * b1x + b1y * b1y + b1z * b1z)
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

        delta = _max6(fabs(nuc - uc1), fabs(nvc - vc1), fabs(nwc - wc1),
                      fabs(nut - ut1), fabs(nvt - vt1), fabs(nwt - wt1))
        scale = 1.0 + _max6(fabs(nuc), fabs(nvc), fabs(nwc), fabs(nut), fabs(nvt), fabs(nwt))
        uc1 = nuc
        vc1 = nvc
        wc1 = nwc
        ut1 = nut
        vt1 = nvt
        wt1 = nwt
        if not delta == delta or delta > 1e300:
            status = DIVERGED
            break
        if delta <= TOL * scale:
            status = OK
            break
    if status == NO_CONVERGENCE and delta <= LOOSE_TOL * scale:
        status = OK

    v[0] = uc1
    v[1] = vc1
    v[2] = wc1
    v[3] = ut1
    v[4] = vt1
    v[5] = wt1
    b1x = xt0 + hh * (ut0 + ut1) - p1x
    b1y = yt0 + hh * (vt0 + vt1) - p1y
    b1z = zt0 + hh * (wt0 + wt1) - p1z
    s_out[0] = s_tp0
    s_out[1] = sqrt(b1x * b1x + b1y * b1y + b1z * b1z)
    return status


cdef int _residual(double* st, double* p0, double* p1, double h, double* prm,
                   double lam, double* v, double* r) nogil:
    cdef double s[2]
    cdef int status
    v[0] = st[3]
    v[1] = st[4]
    v[2] = st[5]
    v[3] = st[9]
    v[4] = st[10]
    v[5] = st[11]
    status = _iterate(st, p0, p1, h, prm, 1, lam, v, s)
    if status != OK:
        r[0] = 0.0
        return status
    r[0] = lam - _tp_coefficient(s[0], s[1], prm[7], prm[9], prm[10])
    return OK


cdef int _solve_bracketed(double* st, double* p0, double* p1, double h, double* prm, double* v) nogil:
    cdef double lo = -1.0, hi, mid, r_lo, r_hi, r
    cdef int status, n, it
    status = _residual(st, p0, p1, h, prm, lo, v, &r_lo)
    n = 0
    while status == OK and r_lo > 0.0 and n < MAX_BRACKET:
        lo = 2.0 * lo - 1.0
        status = _residual(st, p0, p1, h, prm, lo, v, &r_lo)
        n += 1
    if status != OK or r_lo > 0.0:
        return DIVERGED
    if r_lo == 0.0:
        return OK
    hi = 0.5 * prm[7] + 1.0
    status = _residual(st, p0, p1, h, prm, hi, v, &r_hi)
    n = 0
    while status == OK and r_hi < 0.0 and n < MAX_BRACKET:
        hi = 2.0 * hi + 1.0
        status = _residual(st, p0, p1, h, prm, hi, v, &r_hi)
        n += 1
    if status != OK or r_hi < 0.0:
        return DIVERGED
    if r_hi == 0.0:
        return OK
    for it in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        status = _residual(st, p0, p1, h, prm, mid, v, &r)
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
        return _residual(st, p0, p1, h, prm, lo, v, &r)
    return _residual(st, p0, p1, h, prm, hi, v, &r)


cdef int _step(double* st, double* p0, double* p1, double h, double* prm) nogil:
    cdef double v[6]
    cdef double s[2]
    cdef double out[12]
    cdef double hh = 0.5 * h
    cdef int status, i
    v[0] = st[3]
    v[1] = st[4]
    v[2] = st[5]
    v[3] = st[9]
    v[4] = st[10]
    v[5] = st[11]
    status = _iterate(st, p0, p1, h, prm, 0, 0.0, v, s)
    if status != OK:
        status = _solve_bracketed(st, p0, p1, h, prm, v)
        if status != OK:
            return status
    out[0] = st[0] + hh * (st[3] + v[0])
    out[1] = st[1] + hh * (st[4] + v[1])
    out[2] = st[2] + hh * (st[5] + v[2])
    out[3] = v[0]
    out[4] = v[1]
    out[5] = v[2]
    out[6] = st[6] + hh * (st[9] + v[3])
    out[7] = st[7] + hh * (st[10] + v[4])
    out[8] = st[8] + hh * (st[11] + v[5])
    out[9] = v[3]
    out[10] = v[4]
    out[11] = v[5]
    for i in range(12):
        if not isfinite(out[i]):
            return DIVERGED
    for i in range(12):
        st[i] = out[i]
    return OK


cdef int _advance(double* st, double* p0, double* p1, double h, double* prm, int depth) nogil:
    cdef int status = _step(st, p0, p1, h, prm)
    cdef double mid[3]
    if status == OK or depth >= MAX_SPLIT:
        return status
    mid[0] = 0.5 * (p0[0] + p1[0])
    mid[1] = 0.5 * (p0[1] + p1[1])
    mid[2] = 0.5 * (p0[2] + p1[2])
    status = _advance(st, p0, mid, 0.5 * h, prm, depth + 1)
    if status != OK:
        return status
    return _advance(st, mid, p1, 0.5 * h, prm, depth + 1)


def integrate_kite(protagonist, double h, params, state0, int emit_every):
    cdef double[:, ::1] prot = np.ascontiguousarray(protagonist, dtype=np.float64)
    cdef double prm[12]
    cdef double st[12]
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t n_sub = prot.shape[0] - 1
    cdef Py_ssize_t n_emit = n_sub // emit_every + 1
    for j in range(12):
        prm[j] = float(params[j])
        st[j] = float(state0[j])
    states_arr = np.full((n_emit, 12), np.nan)
    energy_arr = np.full(n_sub + 1, np.nan)
    cdef double[:, ::1] states = states_arr
    cdef double[::1] energy = energy_arr
    cdef int status = OK

    for j in range(12):
        states[0, j] = st[j]
    energy[0] = _energy(st, prot[0, 0], prot[0, 1], prot[0, 2], prm)
    k = 1
    with nogil:
        for i in range(n_sub):
            status = _advance(st, &prot[i, 0], &prot[i + 1, 0], h, prm, 0)
            if status != OK:
                break
            energy[i + 1] = _energy(st, prot[i + 1, 0], prot[i + 1, 1], prot[i + 1, 2], prm)
            if (i + 1) % emit_every == 0:
                for j in range(12):
                    states[k, j] = st[j]
                k += 1
    return states_arr, energy_arr, status
