"""Hot ODE kernels (Dormand-Prince 5(4) with adaptive steps).

Every function here is compiled by numba unless the numpy backend is selected
(see :mod:`tcres._accel`). They only use scalar arithmetic and small arrays.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import kernel

# Dormand-Prince tableau
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

STATUS_OK = 0
STATUS_MAX_STEPS = 1
STATUS_UNDERFLOW = 2

PRUFER_MODIFIED = 0
PRUFER_SCALED = 1

RADIAL_RAY = 0
RADIAL_XI = 1


# ---------------------------------------------------------------- Prufer phase


@kernel
def _prufer_rhs(x, theta, mu, h, e, zm, mode, scale):
    c = math.cos(x)
    v = e * c * c + zm * c
    if mode == PRUFER_MODIFIED:
        dv = -(2.0 * e * c + zm) * math.sin(x)
        gap = mu - v
        r = math.sqrt(gap) / h
        q = 0.25 * dv / gap
        return r - q * math.sin(2.0 * theta), 0.5 * q * (1.0 - math.cos(2.0 * theta))
    d = (mu - v) / (h * h)
    st = math.sin(theta)
    ct = math.cos(theta)
    return scale * ct * ct + d / scale * st * st, (scale - d / scale) * st * ct


@kernel
def prufer_integrate(theta0, a, b, mu, h, e, zm, mode, scale, rtol, atol, max_steps):
    """Integrate the Prufer phase and log-amplitude of the Hill equation.

    The potential is ``e*cos(x)**2 + zm*cos(x)``. ``mode`` selects the
    semiclassical phase (requires ``mu`` above the potential) or the classical
    phase with constant scale. Returns ``(theta, log_rho, steps, status)``.
    """
    x = a
    th = theta0
    lr = 0.0
    span = b - a
    if span == 0.0:
        return th, lr, 0, STATUS_OK
    direction = 1.0 if span > 0 else -1.0
    step = direction * min(abs(span), 0.05 * h)
    steps = 0
    while direction * (b - x) > 0.0:
        if steps >= max_steps:
            return th, lr, steps, STATUS_MAX_STEPS
        if direction * (x + step - b) > 0.0:
            step = b - x
        k1a, k1b = _prufer_rhs(x, th, mu, h, e, zm, mode, scale)
        k2a, k2b = _prufer_rhs(x + _C2 * step, th + step * _A21 * k1a, mu, h, e, zm, mode, scale)
        k3a, k3b = _prufer_rhs(
            x + _C3 * step, th + step * (_A31 * k1a + _A32 * k2a), mu, h, e, zm, mode, scale
        )
        k4a, k4b = _prufer_rhs(
            x + _C4 * step,
            th + step * (_A41 * k1a + _A42 * k2a + _A43 * k3a),
            mu, h, e, zm, mode, scale,
        )
        k5a, k5b = _prufer_rhs(
            x + _C5 * step,
            th + step * (_A51 * k1a + _A52 * k2a + _A53 * k3a + _A54 * k4a),
            mu, h, e, zm, mode, scale,
        )
        k6a, k6b = _prufer_rhs(
            x + step,
            th + step * (_A61 * k1a + _A62 * k2a + _A63 * k3a + _A64 * k4a + _A65 * k5a),
            mu, h, e, zm, mode, scale,
        )
        tha = th + step * (_B1 * k1a + _B3 * k3a + _B4 * k4a + _B5 * k5a + _B6 * k6a)
        lrb = lr + step * (_B1 * k1b + _B3 * k3b + _B4 * k4b + _B5 * k5b + _B6 * k6b)
        k7a, k7b = _prufer_rhs(x + step, tha, mu, h, e, zm, mode, scale)
        ea = step * (_E1 * k1a + _E3 * k3a + _E4 * k4a + _E5 * k5a + _E6 * k6a + _E7 * k7a)
        eb = step * (_E1 * k1b + _E3 * k3b + _E4 * k4b + _E5 * k5b + _E6 * k6b + _E7 * k7b)
        sa = atol + rtol * max(abs(th), abs(tha))
        sb = atol + rtol * max(abs(lr), abs(lrb))
        err = max(abs(ea) / sa, abs(eb) / sb)
        steps += 1
        if err <= 1.0:
            x = x + step
            th = tha
            lr = lrb
        fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** (-0.2)))
        step = step * fac
        if abs(step) < 1e-14 * max(1.0, abs(x)):
            return th, lr, steps, STATUS_UNDERFLOW
    return th, lr, steps, STATUS_OK


# ---------------------------------------------------------------- radial ODE


@kernel
def _radial_rhs(mode, t, u, w, k, zp, mu, rot, org):
    if mode == RADIAL_RAY:
        # u(z) with v = exp(i k z / 2) u, along z = org + rot * t
        z = org + rot * t
        iz = 1.0 / z
        r = (0.5j * k + 0.5 * zp) * z + (0.5 * k * k - mu) + 0.5 * zp * iz + 0.25 * k * k * iz * iz
        upp = -((1j * k * z * z + z) * w + r * u) * iz * iz
        return rot * w, rot * upp
    ch = math.cosh(t)
    q = k * k * ch * ch + zp * ch - mu
    return w, -q * u


@kernel
def radial_integrate(mode, t0, u0, w0, t_out, k, zp, mu, rot, org, rtol, atol, max_steps):
    """Integrate the radial equation from ``t0`` through the points ``t_out``.

    ``mode`` is ``RADIAL_RAY`` (factored solution along a rotated ray, ``t`` is
    the ray parameter) or ``RADIAL_XI`` (plain solution on the real axis).
    The state is rescaled when it grows large; ``log_scale`` accumulates the
    removed factors. Returns ``(u, w, log_scale, steps, status)`` arrays/values.
    """
    n_out = t_out.shape[0]
    us = np.zeros(n_out, dtype=np.complex128)
    ws = np.zeros(n_out, dtype=np.complex128)
    logs = np.zeros(n_out, dtype=np.float64)
    t = t0
    u = u0
    w = w0
    log_scale = 0.0
    steps = 0
    step = 0.0
    for j in range(n_out):
        target = t_out[j]
        span = target - t
        if span != 0.0:
            direction = 1.0 if span > 0 else -1.0
            if step == 0.0 or step * direction < 0.0:
                step = direction * min(abs(span), 1e-3 * max(1.0, abs(span)))
            while direction * (target - t) > 0.0:
                if steps >= max_steps:
                    us[j] = u
                    ws[j] = w
                    logs[j] = log_scale
                    return us, ws, logs, steps, STATUS_MAX_STEPS
                last = False
                if direction * (t + step - target) >= 0.0:
                    step = target - t
                    last = True
                k1u, k1w = _radial_rhs(mode, t, u, w, k, zp, mu, rot, org)
                k2u, k2w = _radial_rhs(
                    mode, t + _C2 * step, u + step * _A21 * k1u, w + step * _A21 * k1w, k, zp, mu, rot, org
                )
                k3u, k3w = _radial_rhs(
                    mode,
                    t + _C3 * step,
                    u + step * (_A31 * k1u + _A32 * k2u),
                    w + step * (_A31 * k1w + _A32 * k2w),
                    k, zp, mu, rot, org,
                )
                k4u, k4w = _radial_rhs(
                    mode,
                    t + _C4 * step,
                    u + step * (_A41 * k1u + _A42 * k2u + _A43 * k3u),
                    w + step * (_A41 * k1w + _A42 * k2w + _A43 * k3w),
                    k, zp, mu, rot, org,
                )
                k5u, k5w = _radial_rhs(
                    mode,
                    t + _C5 * step,
                    u + step * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u),
                    w + step * (_A51 * k1w + _A52 * k2w + _A53 * k3w + _A54 * k4w),
                    k, zp, mu, rot, org,
                )
                k6u, k6w = _radial_rhs(
                    mode,
                    t + step,
                    u + step * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u),
                    w + step * (_A61 * k1w + _A62 * k2w + _A63 * k3w + _A64 * k4w + _A65 * k5w),
                    k, zp, mu, rot, org,
                )
                un = u + step * (_B1 * k1u + _B3 * k3u + _B4 * k4u + _B5 * k5u + _B6 * k6u)
                wn = w + step * (_B1 * k1w + _B3 * k3w + _B4 * k4w + _B5 * k5w + _B6 * k6w)
                k7u, k7w = _radial_rhs(mode, t + step, un, wn, k, zp, mu, rot, org)
                eu = step * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u + _E7 * k7u)
                ew = step * (_E1 * k1w + _E3 * k3w + _E4 * k4w + _E5 * k5w + _E6 * k6w + _E7 * k7w)
                size = max(abs(u), abs(un)) + max(abs(w), abs(wn))
                err = max(abs(eu), abs(ew)) / (atol + rtol * size)
                steps += 1
                if err <= 1.0:
                    t = target if last else t + step
                    u = un
                    w = wn
                    big = max(abs(u), abs(w))
                    if big > 1e150 or (big < 1e-150 and big > 0.0):
                        u = u / big
                        w = w / big
                        log_scale += math.log(big)
                    fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** (-0.2)))
                else:
                    fac = max(0.2, 0.9 * err ** (-0.2))
                    last = False
                step = step * fac
                if abs(step) < 1e-15 * max(1.0, abs(t)):
                    us[j] = u
                    ws[j] = w
                    logs[j] = log_scale
                    return us, ws, logs, steps, STATUS_UNDERFLOW
        us[j] = u
        ws[j] = w
        logs[j] = log_scale
    return us, ws, logs, steps, STATUS_OK
