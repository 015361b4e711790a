"""Radial equation ``v'' + h^-2 (k^2 cosh(xi)^2 + Z+ cosh(xi) - mu) v = 0``.

The semiclassical parameter is absorbed by ``k -> k/h``, ``Z+ -> Z+/h^2`` and
``mu -> mu/h^2``; all Wronskians below refer to the rescaled equation, so
``W(v+, v-) = 2 i k / h``.

The outgoing solution is normalised by ``v+ ~ sqrt(2) exp(-xi/2 + i phi(xi, k))``.
It is built in the variable ``z = exp(xi)`` from the factorisation
``v = exp(i k z / 2) u(z)``: ``u`` has a convergent-in-practice asymptotic
series at large ``|z|``, which seeds a backward integration along a ray in
the complex ``z`` plane on which the companion solution is recessive. Tilting
the ray continues ``v+`` to ``Im k < 0``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from . import _kernels
from .angular import angular_eigenfunction, angular_eigenvalues
from .core import ProblemParams, Sheet, energy_from_e

RTOL = 1e-12
ATOL = 1e-300
MAX_STEPS = 5_000_000
SERIES_TOL = 1e-17
SERIES_TERMS = 400
CONE_MARGIN = 0.05
RAY_LIMIT = math.pi - 0.5
WRONSKIAN_POINTS = (0.5, 1.0, 2.0)
INCONSISTENCY_LIMIT = 1e-6
POLE_THRESHOLD = 1e-12


class RadialError(RuntimeError):
    pass


class BranchCutError(RadialError):
    def __init__(self, message: str, location: complex):
        super().__init__(f"{message} at t={location!r}")
        self.location = location


class PhaseForm(str, enum.Enum):
    SIMPLIFIED = "simplified"
    DECOMPOSED = "decomposed"


class WaveKind(str, enum.Enum):
    OUTGOING = "outgoing"
    INCOMING = "incoming"
    REGULAR = "regular"
    ROTATED = "rotated"


@dataclass(frozen=True)
class PhaseFunction:
    """Eikonal phase ``phi(xi, k)`` for the potential ``k^2 cosh^2 + Z+ cosh``.

    ``mu`` is carried for bookkeeping only; the phase omits it, which changes
    the normalisation of ``v+`` by a factor tending to one.
    """

    k: complex
    z_plus: float
    mu: complex = 0.0
    form: PhaseForm = PhaseForm.SIMPLIFIED


@dataclass(frozen=True)
class WaveSolution:
    kind: WaveKind
    k: complex
    mu: complex
    ray_angle: float
    xi: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray


@dataclass(frozen=True)
class JostData:
    k: complex
    mu: complex
    f_plus: complex
    f_minus: complex
    s_matrix: complex
    wronskian_check: float
    spread: float
    phase_form: PhaseForm
    ray_angles: tuple[float, float]


def _scaled(params: ProblemParams, k: complex, mu: complex) -> tuple[complex, float, complex]:
    h = params.h
    return complex(k) / h, params.z_plus / (h * h), complex(mu) / (h * h)


def _cquad(f, a: float, b: float, scale: float = 1.0) -> complex:
    opts = dict(epsabs=1e-15 * scale, epsrel=1e-12, limit=400)
    re, _ = integrate.quad(lambda t: f(t).real, a, b, **opts)
    im, _ = integrate.quad(lambda t: f(t).imag, a, b, **opts)
    return complex(re, im)


def default_form(k: complex, z_plus: float) -> PhaseForm:
    """Simplified form when ``|k|^2 > |Z+|`` with some margin, else decomposed."""
    return PhaseForm.SIMPLIFIED if abs(k) ** 2 > 1.05 * abs(z_plus) else PhaseForm.DECOMPOSED


def _decomposed_sign(k: complex) -> float:
    if k.real == 0.0:
        raise RadialError("decomposed phase needs Re k != 0")
    return 1.0 if k.real > 0 else -1.0


def _check_decomposed(k: complex, z: float) -> None:
    if k.imag == 0.0 and z < 0 and k.real**2 < -z:
        tau = math.sqrt(max((z / k.real**2) ** 2 - 1.0, 0.0))
        raise BranchCutError("turning point on the real axis for real k", complex(math.asinh(tau)))


def phase(pf: PhaseFunction, xi) -> complex:
    """``phi(xi, k)`` by adaptive quadrature along the segment ``[0, xi]``."""
    k = complex(pf.k)
    z = float(pf.z_plus)
    if k == 0:
        raise ValueError("k must be nonzero")
    xi = complex(xi)
    if pf.form is PhaseForm.SIMPLIFIED:
        if not abs(k) ** 2 > abs(z):
            raise ValueError("simplified phase needs |k|^2 > |Z+|")
        ts = np.linspace(0.0, 1.0, 2001)
        w = 1.0 + z / (k * k * np.cosh(ts * xi))
        crossing = np.nonzero((w.real[1:] < 0) & (np.sign(w.imag[1:]) != np.sign(w.imag[:-1])))[0]
        if crossing.size:
            raise BranchCutError("integrand crosses the square-root cut", complex(ts[crossing[0]] * xi))

        def f(s):
            c = cmath.cosh(s * xi)
            return xi * k * c * cmath.sqrt(1.0 + z / (k * k * c))

        return _cquad(f, 0.0, 1.0, abs(k) * max(1.0, abs(cmath.sinh(xi))))
    sgn = _decomposed_sign(k)
    _check_decomposed(k, z)
    top = cmath.sinh(xi)

    def g(s):
        tau = s * top
        return top * sgn * cmath.sqrt(k * k + z / cmath.sqrt(1.0 + tau * tau))

    return _cquad(g, 0.0, 1.0, abs(k) * max(1.0, abs(top)))


def phase_constant(k: complex, z_plus: float, form: Optional[PhaseForm] = None) -> complex:
    """``lim (phi(xi, k) - k sinh(xi) - Z+ xi / (2k))`` as ``xi -> +inf``.

    Odd in ``k``. Both forms give the same analytic function where they
    overlap.
    """
    k = complex(k)
    z = float(z_plus)
    if k == 0:
        raise ValueError("k must be nonzero")
    if z == 0.0:
        return 0.0j
    form = default_form(k, z) if form is None else PhaseForm(form)
    if form is PhaseForm.SIMPLIFIED:
        if not abs(k) ** 2 > abs(z):
            raise ValueError("simplified phase needs |k|^2 > |Z+|")
        k2 = k * k

        a = z / k2

        def f(t):
            et = math.exp(-t)
            w = a * 2.0 * et / (1.0 + et * et)
            # cosh(t) (sqrt(1+w) - 1) = a / (sqrt(1+w) + 1)
            return a / (cmath.sqrt(1.0 + w) + 1.0) - 0.5 * a

        return k * _cquad(f, 0.0, math.inf, abs(z / k2))
    sgn = _decomposed_sign(k)
    _check_decomposed(k, z)
    ks = sgn * k

    def g(tau):
        s = z / math.sqrt(1.0 + tau * tau)
        root = cmath.sqrt(ks * ks + s)
        # root - ks - s / (2 ks) = s^2 / ... written stably
        diff = s / (root + ks)
        return diff - s / (2.0 * ks)

    return sgn * _cquad(g, 0.0, math.inf, abs(z / ks) * 1e-2 + 1e-300)


# ---------------------------------------------------------------- outgoing wave


def admissible_cone(k: complex) -> tuple[float, float]:
    """Open interval of ray angles ``gamma`` on which ``v+(., k)`` is recessive."""
    a = cmath.phase(k)
    if a <= -0.5 * math.pi:
        a += 2.0 * math.pi
    lo = max(-a, -RAY_LIMIT)
    hi = min(math.pi - a, RAY_LIMIT)
    return lo, hi


def default_ray_angle(k: complex) -> float:
    """Fastest-decay direction ``pi/2 - arg k`` clipped into the cone."""
    a = cmath.phase(k)
    if a <= -0.5 * math.pi:
        a += 2.0 * math.pi
    lo, hi = admissible_cone(k)
    if hi - lo <= 2.0 * CONE_MARGIN:
        raise RadialError(f"no admissible ray for k={k!r}")
    return min(max(0.5 * math.pi - a, lo + CONE_MARGIN), hi - CONE_MARGIN)


def series_coefficients(k: complex, z: float, mu: complex, count: int) -> tuple[complex, np.ndarray]:
    """Exponent ``rho`` and coefficients ``b_j`` of ``u ~ z^rho sum b_j z^-j`` (``b_0 = 1``)."""
    rho = -0.5 + 0.5j * z / k
    b = np.zeros(count, dtype=complex)
    b[0] = 1.0
    half_k2 = 0.5 * k * k
    quarter_k2 = 0.25 * k * k
    for j in range(1, count):
        acc = ((rho - j + 1) ** 2 + half_k2 - mu) * b[j - 1]
        if j >= 2:
            acc += 0.5 * z * b[j - 2]
        if j >= 3:
            acc += quarter_k2 * b[j - 3]
        b[j] = acc / (1j * k * j)
        if not abs(b[j]) < 1e250:
            return rho, b[:j]
    return rho, b


def _series_eval(rho: complex, b: np.ndarray, zz: complex) -> Optional[tuple[complex, complex]]:
    """Optimally truncated series and derivative, or None if not accurate enough."""
    inv = 1.0 / zz
    total = 0.0j
    dtotal = 0.0j
    p = 1.0 + 0.0j
    best = math.inf
    for j in range(b.shape[0]):
        term = b[j] * p
        mag = abs(term)
        if j > 2 and mag > best:
            return None
        best = min(best, mag)
        total += term
        dtotal += (rho - j) * term
        if j > 2 and mag < SERIES_TOL * abs(total):
            zr = cmath.exp(rho * cmath.log(zz))
            return zr * total, zr * dtotal * inv
        p *= inv
    return None


def _ray_start(k: complex, z: float, mu: complex, org: complex, rot: complex):
    rho, b = series_coefficients(k, z, mu, SERIES_TERMS)
    t = max(8.0, 40.0 / abs(k))
    for _ in range(60):
        zz = org + rot * t
        res = _series_eval(rho, b, zz)
        if res is not None:
            return t, res
        t *= 1.5
    raise RadialError(f"asymptotic series did not converge for k={k!r}")


def _u_at(k: complex, z: float, mu: complex, org: complex, gamma: float) -> tuple[complex, complex]:
    rot = cmath.exp(1j * gamma)
    t0, (u0, du0) = _ray_start(k, z, mu, org, rot)
    us, ws, logs, _steps, status = _kernels.radial_integrate(
        _kernels.RADIAL_RAY, t0, u0, du0, np.array([0.0]), k, z, mu, rot, org, RTOL, ATOL, MAX_STEPS
    )
    if status != _kernels.STATUS_OK:
        raise RadialError("ray integration failed" + (" (step underflow)" if status == _kernels.STATUS_UNDERFLOW else ""))
    scale = math.exp(logs[0])
    return complex(us[0]) * scale, complex(ws[0]) * scale


def _outgoing_scaled(k: complex, z: float, mu: complex, gamma: float, xi: float, norm: complex):
    org = complex(math.exp(xi))
    u, du = _u_at(k, z, mu, org, gamma)
    ex = 0.5j * k * org
    if ex.real > 700:
        raise RadialError("outgoing wave overflows at this xi")
    f = norm * cmath.exp(ex)
    return f * u, f * org * (du + 0.5j * k * u)


def _check_ray(k: complex, gamma: float) -> None:
    lo, hi = admissible_cone(k)
    if not lo < gamma < hi:
        raise ValueError(f"ray angle {gamma} outside admissible cone ({lo}, {hi})")


def outgoing_wave(
    params: ProblemParams,
    k: complex,
    mu: complex,
    ray_angle: Optional[float] = None,
    grid: Sequence[float] = (0.0,),
    normalization: complex = 1.0,
) -> WaveSolution:
    """Outgoing solution ``v+`` and its ``xi``-derivative on a real grid.

    ``normalization`` multiplies the asymptotic normalisation (used to check
    that zeros and ``s`` do not depend on it).
    """
    k = complex(k)
    if k == 0:
        raise ValueError("k must be nonzero")
    ks, zs, ms = _scaled(params, k, mu)
    gamma = default_ray_angle(ks) if ray_angle is None else float(ray_angle)
    _check_ray(ks, gamma)
    norm = complex(normalization) * math.sqrt(2.0) * cmath.exp(1j * phase_constant(ks, zs))
    xs = np.asarray(grid, dtype=float)
    vals = np.empty(xs.shape, dtype=complex)
    ders = np.empty(xs.shape, dtype=complex)
    for i, x in enumerate(xs):
        vals[i], ders[i] = _outgoing_scaled(ks, zs, ms, gamma, float(x), norm)
    return WaveSolution(WaveKind.OUTGOING, k, complex(mu), gamma, xs, vals, ders)


def incoming_wave(
    params: ProblemParams, k: complex, mu: complex, ray_angle: Optional[float] = None, grid: Sequence[float] = (0.0,)
) -> WaveSolution:
    """``v-(xi, k) = v+(xi, -k)``."""
    w = outgoing_wave(params, -complex(k), mu, ray_angle, grid)
    return WaveSolution(WaveKind.INCOMING, complex(k), complex(mu), w.ray_angle, w.xi, w.values, w.derivatives)


def regular_wave(params: ProblemParams, k: complex, mu: complex, grid: Sequence[float]) -> WaveSolution:
    """Solution with ``v0(0) = 1``, ``v0'(0) = 0`` (even in ``k``)."""
    k = complex(k)
    if k == 0:
        raise ValueError("k must be nonzero")
    ks, zs, ms = _scaled(params, k, mu)
    xs = np.asarray(grid, dtype=float)
    order = np.argsort(xs, kind="stable")
    ts = xs[order]
    if ts.size and ts[0] < 0:
        raise ValueError("grid must be nonnegative")
    us, ws, logs, _steps, status = _kernels.radial_integrate(
        _kernels.RADIAL_XI, 0.0, 1.0 + 0.0j, 0.0j, ts, ks, zs, ms, 1.0 + 0.0j, 0.0j, RTOL, ATOL, MAX_STEPS
    )
    if status != _kernels.STATUS_OK:
        raise RadialError("regular solution integration failed")
    if np.any(logs > 700):
        raise RadialError("regular solution overflows on this grid")
    scale = np.exp(logs)
    vals = np.empty(xs.shape, dtype=complex)
    ders = np.empty(xs.shape, dtype=complex)
    vals[order] = us * scale
    ders[order] = ws * scale
    return WaveSolution(WaveKind.REGULAR, k, complex(mu), 0.0, xs, vals, ders)


def wronskian(f: complex, df: complex, g: complex, dg: complex) -> complex:
    """``W(f, g) = f' g - f g'``."""
    return df * g - f * dg


def wronskian_points(params: ProblemParams, k: complex) -> tuple[float, ...]:
    s = min(1.0, 10.0 / abs(complex(k) / params.h))
    return tuple(p * s for p in WRONSKIAN_POINTS)


def jost_fplus(params: ProblemParams, k: complex, mu: complex, ray_angle: Optional[float] = None) -> complex:
    """``f+(k) = W(v+, v0)``, evaluated at ``xi = 0`` where it equals ``v+'(0)``."""
    return outgoing_wave(params, k, mu, ray_angle, (0.0,)).derivatives[0]


def jost(
    params: ProblemParams,
    k: complex,
    mu: complex,
    ray_angle: Optional[float] = None,
    points: Optional[Sequence[float]] = None,
) -> JostData:
    """Jost functions, S-matrix element and a Wronskian self-check.

    Wronskians are taken at three interior points and averaged; their
    spread must stay below ``1e-6`` relative.
    """
    k = complex(k)
    if k == 0:
        raise ValueError("k must be nonzero")
    pts = wronskian_points(params, k) if points is None else tuple(points)
    vp = outgoing_wave(params, k, mu, ray_angle, pts)
    vm = outgoing_wave(params, -k, mu, None, pts)
    v0 = regular_wave(params, k, mu, pts)
    pairs = ((vp, v0), (vm, v0), (vp, vm))
    arrs = [np.array([wronskian(a.values[i], a.derivatives[i], b.values[i], b.derivatives[i]) for i in range(len(pts))]) for a, b in pairs]
    fp, fm, wpm = arrs
    f_plus = complex(fp.mean())
    f_minus = complex(fm.mean())
    target = 2j * k / params.h
    spread = 0.0
    for arr, (a, b) in zip(arrs, pairs):
        # relative to the size of the products, so a Jost zero does not look like an inconsistency
        terms = np.abs(a.derivatives * b.values) + np.abs(a.values * b.derivatives)
        ref = max(abs(arr.mean()), 1e-3 * float(terms.max()), 1e-300)
        spread = max(spread, float(np.max(np.abs(arr - arr.mean())) / ref))
    check = float(abs(wpm.mean() - target) / abs(target))
    if spread > INCONSISTENCY_LIMIT:
        raise RadialError(f"Wronskian inconsistency {spread:.3e} at points {pts} (W(v+,v-) check {check:.3e})")
    s = f_minus / f_plus if f_plus != 0 else complex("nan")
    ks, zs, _ = _scaled(params, k, mu)
    return JostData(k, complex(mu), f_plus, f_minus, s, check, spread, default_form(ks, zs), (vp.ray_angle, vm.ray_angle))


# ---------------------------------------------------------------- Green's function


def _fplus_or_raise(params: ProblemParams, k: complex, mu: complex) -> complex:
    fp = jost_fplus(params, k, mu)
    scale = abs(k / params.h)
    if abs(fp) < POLE_THRESHOLD * max(1.0, scale):
        raise RadialError("at or near a resonance/eigenvalue: f+ vanishes")
    return fp


def regular_normalized(params: ProblemParams, k: complex, mu: complex, x: float) -> complex:
    """``e(x, k) = v0(x, k) / f+(k)``."""
    fp = _fplus_or_raise(params, k, mu)
    return regular_wave(params, k, mu, (x,)).values[0] / fp


def radial_green(params: ProblemParams, k: complex, mu: complex, x: float, x_prime: float) -> complex:
    """``G(x, x'; k) = e(x<, k) v+(x>, k)``."""
    lo, hi = (x, x_prime) if x <= x_prime else (x_prime, x)
    fp = _fplus_or_raise(params, k, mu)
    v0 = regular_wave(params, k, mu, (lo,)).values[0]
    vp = outgoing_wave(params, k, mu, None, (hi,)).values[0]
    return v0 * vp / fp


def truncated_green_terms(
    params: ProblemParams,
    e: complex,
    n_max: int,
    point: tuple[float, float],
    point_prime: tuple[float, float],
    sheet: Sheet = Sheet.PHYSICAL,
) -> list[complex]:
    """Summands ``n = 0..n_max`` of the partial-wave expansion of the 2D Green's function."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    energy = energy_from_e(complex(e), sheet)
    xi, eta = point
    xi2, eta2 = point_prime
    levels = angular_eigenvalues(params, complex(e), n_max + 1)
    weight = math.cosh(xi2) ** 2 - math.cos(eta2) ** 2
    terms = []
    for lv in levels:
        a = angular_eigenfunction(lv, params, complex(e), eta)
        b = angular_eigenfunction(lv, params, complex(e), eta2)
        g = radial_green(params, energy.k, lv.mu, xi, xi2)
        terms.append(complex(a * b * g * weight))
    return terms


def truncated_green_2d(
    params: ProblemParams,
    e: complex,
    n_max: int,
    point: tuple[float, float],
    point_prime: tuple[float, float],
    sheet: Sheet = Sheet.PHYSICAL,
) -> complex:
    total = 0.0j
    for term in truncated_green_terms(params, e, n_max, point, point_prime, sheet):
        total = total + term
    return total
