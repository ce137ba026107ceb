"""Compiled inner loops for the adaptive Schrodinger integrator.

The right-hand side is y' = -i H(t) y with H(t) = diag + C(t)*Tc +
M(t)*Tm + M'(t)*Tmp.  The three coupling terms share one CSR pattern with
real data; the envelopes are evaluated from flat parameter tuples so the
whole stepping loop stays inside nopython mode.

The stepper is the Dormand-Prince 5(4) embedded pair with the standard
PI (beta = 0.04) step-size controller.  Status codes: 0 = reached segment
end, 1 = step-size underflow, 2 = norm drift bound exceeded, 3 = step
budget exhausted.
"""

import numpy as np
from numba import njit

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
)
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = (
    35.0 / 384.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
)
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

# PI controller constants (classic dopri5 values)
_SAFE = 0.9
_BETA = 0.04
_EXPO1 = 0.2 - _BETA * 0.75
_FACC1 = 5.0  # max shrink h/5
_FACC2 = 0.1  # max growth 10h


@njit(cache=True, nogil=True, inline="always")
def _envelope(p, t):
    # p = (t_start, ramp_on, plateau, ramp_off, amplitude, shape_code)
    amp = p[4]
    if amp == 0.0:
        return 0.0
    t_start = p[0]
    t_end = t_start + p[1] + p[2] + p[3]
    if t <= t_start or t >= t_end:
        return 0.0
    ps = t_start + p[1]
    pe = ps + p[2]
    if ps <= t <= pe:
        return amp
    if t < ps:
        s = (t - t_start) / p[1]
    else:
        s = (t_end - t) / p[3]
    code = p[5]
    if code == 0.0:
        u = np.sin(0.5 * np.pi * s)
        return amp * u * u
    if code == 1.0:
        return amp * s
    return 0.0


@njit(cache=True, nogil=True, inline="always")
def _rhs(diag, indptr, indices, dc, dm, dmp, pc, pm, pmp, t, y, out):
    cv = _envelope(pc, t)
    mv = _envelope(pm, t)
    mpv = _envelope(pmp, t)
    n = y.shape[0]
    for r in range(n):
        acc = diag[r] * y[r]
        for k in range(indptr[r], indptr[r + 1]):
            w = cv * dc[k] + mv * dm[k] + mpv * dmp[k]
            acc += w * y[indices[k]]
        out[r] = -1j * acc


@njit(cache=True, nogil=True)
def dp54_segment(
    diag,
    indptr,
    indices,
    dc,
    dm,
    dmp,
    pc,
    pm,
    pmp,
    t0,
    t1,
    y,
    rtol,
    atol,
    hmax,
    h0,
    facold,
    norm0,
    drift_bound,
    max_steps,
):
    """Advance y in place from t0 to t1; returns controller state and stats."""
    n = y.shape[0]
    k1 = np.empty(n, dtype=np.complex128)
    k2 = np.empty(n, dtype=np.complex128)
    k3 = np.empty(n, dtype=np.complex128)
    k4 = np.empty(n, dtype=np.complex128)
    k5 = np.empty(n, dtype=np.complex128)
    k6 = np.empty(n, dtype=np.complex128)
    k7 = np.empty(n, dtype=np.complex128)
    ys = np.empty(n, dtype=np.complex128)
    ynew = np.empty(n, dtype=np.complex128)

    t = t0
    seg = t1 - t0
    h = h0
    if h > hmax:
        h = hmax
    if h > seg:
        h = seg
    max_drift = 0.0
    n_acc = 0
    n_rej = 0
    n_rhs = 0
    reject = False

    _rhs(diag, indptr, indices, dc, dm, dmp, pc, pm, pmp, t, y, k1)
    n_rhs += 1

    while t < t1:
        if n_acc + n_rej >= max_steps:
            return 3, h, facold, max_drift, n_acc, n_rej, n_rhs, t
        if h < 1e-13 * max(1.0, abs(t)):
            return 1, h, facold, max_drift, n_acc, n_rej, n_rhs, t
        last = False
        if t + h >= t1:
            h = t1 - t
            last = True

        for i in range(n):
            ys[i] = y[i] + h * _A21 * k1[i]
        _rhs(diag, indptr, indices, dc, dm, dmp, pc, pm, pmp, t + _C2 * h, ys, k2)
        for i in range(n):
            ys[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        _rhs(diag, indptr, indices, dc, dm, dmp, pc, pm, pmp, t + _C3 * h, ys, k3)
        for i in range(n):
            ys[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        _rhs(diag, indptr, indices, dc, dm, dmp, pc, pm, pmp, t + _C4 * h, ys, k4)
        for i in range(n):
            ys[i] = y[i] + h * (
                _A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i]
            )
        _rhs(diag, indptr, indices, dc, dm, dmp, pc, pm, pmp, t + _C5 * h, ys, k5)
        for i in range(n):
            ys[i] = y[i] + h * (
                _A61 * k1[i]
                + _A62 * k2[i]
                + _A63 * k3[i]
                + _A64 * k4[i]
                + _A65 * k5[i]
            )
        _rhs(diag, indptr, indices, dc, dm, dmp, pc, pm, pmp, t + h, ys, k6)
        for i in range(n):
            ynew[i] = y[i] + h * (
                _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
            )
        _rhs(diag, indptr, indices, dc, dm, dmp, pc, pm, pmp, t + h, ynew, k7)
        n_rhs += 6

        err_acc = 0.0
        for i in range(n):
            e = h * (
                _E1 * k1[i]
                + _E3 * k3[i]
                + _E4 * k4[i]
                + _E5 * k5[i]
                + _E6 * k6[i]
                + _E7 * k7[i]
            )
            ay = abs(y[i])
            ayn = abs(ynew[i])
            sc = atol + rtol * (ay if ay > ayn else ayn)
            q = abs(e) / sc
            err_acc += q * q
        err = np.sqrt(err_acc / n)

        fac11 = err**_EXPO1
        if err <= 1.0:
            facold = max(err, 1e-4)
            fac = fac11 / facold**_BETA
            fac = max(_FACC2, min(_FACC1, fac / _SAFE))
            hnew = h / fac
            t = t1 if last else t + h
            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]
            n_acc += 1

            s = 0.0
            for i in range(n):
                s += y[i].real * y[i].real + y[i].imag * y[i].imag
            drift = abs(np.sqrt(s) - norm0)
            if drift > max_drift:
                max_drift = drift
            if max_drift > drift_bound:
                return 2, h, facold, max_drift, n_acc, n_rej, n_rhs, t

            if reject and hnew > h:
                hnew = h
            reject = False
        else:
            hnew = h / min(_FACC1, fac11 / _SAFE)
            reject = True
            n_rej += 1

        h = hnew
        if h > hmax:
            h = hmax

    return 0, h, facold, max_drift, n_acc, n_rej, n_rhs, t
