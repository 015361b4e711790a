"""Prufer phase for the periodic angular equation and its high-energy expansion.

For ``-h^2 y'' + V y = mu y`` with ``mu > max V`` the semiclassical phase
``theta`` obeys

    theta' = sqrt(mu - V) / h - V' / (4 (mu - V)) sin(2 theta),

and zeros of ``y`` sit exactly where ``theta`` crosses a multiple of ``pi``.
Below the top of the potential the classical phase with a constant scale is
used instead; both count zeros identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate, optimize

from . import _kernels
from .angular import AngularLevel, Method, Parity
from .core import ProblemParams

RTOL = 1e-12
ATOL = 1e-13
MAX_STEPS = 20_000_000


class PruferError(RuntimeError):
    pass


@dataclass(frozen=True)
class PruferState:
    theta: float
    rho: float
    x: float


@dataclass(frozen=True)
class AsymptoticCoefficients:
    """Coefficients of ``sqrt(mu) = M + a1/M + a2/M^2 + a3/M^3`` with ``M = (m+1) h``."""

    a1: float
    a2: float
    a3: float


@dataclass(frozen=True)
class HillPotential:
    """``V(x) = e cos(x)^2 + z_minus cos(x)``."""

    e: float
    z_minus: float

    def __call__(self, x):
        c = np.cos(x)
        return self.e * c * c + self.z_minus * c

    def derivative(self, x):
        return -(2.0 * self.e * np.cos(x) + self.z_minus) * np.sin(x)

    def maximum(self) -> float:
        # maximum of e c^2 + z c over c in [-1, 1]
        cands = [self.e + self.z_minus, self.e - self.z_minus]
        if self.e < 0:
            c = -self.z_minus / (2.0 * self.e)
            if -1.0 <= c <= 1.0:
                cands.append(self.e * c * c + self.z_minus * c)
        return max(cands)

    def minimum(self) -> float:
        cands = [self.e + self.z_minus, self.e - self.z_minus]
        if self.e > 0:
            c = -self.z_minus / (2.0 * self.e)
            if -1.0 <= c <= 1.0:
                cands.append(self.e * c * c + self.z_minus * c)
        return min(cands)


def asymptotic_coefficients(e: float, z_minus: float) -> AsymptoticCoefficients:
    """Closed-form coefficients for the angular potential."""
    return AsymptoticCoefficients(a1=e / 4.0, a2=0.0, a3=(z_minus * z_minus - e * e / 4.0) / 16.0)


def _generic_advance(potential, derivative, h, mu, a, b, theta0):
    def rhs(x, y):
        gap = mu - potential(x)
        q = 0.25 * derivative(x) / gap
        th = y[0]
        return [math.sqrt(gap) / h - q * math.sin(2.0 * th), 0.5 * q * (1.0 - math.cos(2.0 * th))]

    sol = integrate.solve_ivp(rhs, (a, b), [theta0, 0.0], method="DOP853", rtol=RTOL, atol=ATOL)
    if not sol.success:
        raise PruferError(f"integration failed: {sol.message}")
    return float(sol.y[0, -1]), float(sol.y[1, -1])


def prufer_advance(
    potential: Union[HillPotential, Callable[[float], float]],
    h: float,
    mu: float,
    interval: tuple[float, float],
    anchor: float = 0.0,
    derivative: Optional[Callable[[float], float]] = None,
) -> PruferState:
    """Carry the semiclassical Prufer phase across ``interval``.

    ``anchor`` is ``theta`` at the left end. Requires ``mu`` above the potential
    on the interval. Returns the state at the right end (``rho`` starts at 1).
    """
    a, b = float(interval[0]), float(interval[1])
    if isinstance(potential, HillPotential):
        vmax = potential.maximum()
    else:
        grid = np.linspace(a, b, 4001)
        vmax = float(np.max([potential(x) for x in grid]))
    if not mu > vmax:
        raise PruferError(f"mu={mu} must exceed max V={vmax}")
    if isinstance(potential, HillPotential):
        th, lr, _steps, status = _kernels.prufer_integrate(
            float(anchor), a, b, float(mu), float(h), potential.e, potential.z_minus,
            _kernels.PRUFER_MODIFIED, 1.0, RTOL, ATOL, MAX_STEPS,
        )
        if status != _kernels.STATUS_OK:
            raise PruferError("step-size underflow" if status == _kernels.STATUS_UNDERFLOW else "too many steps")
    else:
        if derivative is None:

            def derivative(x, _f=potential):
                d = 1e-6 * max(1.0, abs(x))
                return (_f(x + d) - _f(x - d)) / (2.0 * d)

        th, lr = _generic_advance(potential, derivative, h, mu, a, b, float(anchor))
    return PruferState(theta=th, rho=math.exp(lr), x=b)


def zero_count(start: PruferState, end: PruferState) -> int:
    """Number of zeros in ``(a0, a1]`` from the phase at both ends.

    The start phase is anchored in ``[0, pi)``.
    """
    offset = math.floor(start.theta / math.pi)
    return int(math.floor(end.theta / math.pi)) - offset


def _phase_gain(params_e: float, z_minus: float, h: float, mu: float, theta0: float, mode: int, scale: float) -> float:
    th, _lr, _steps, status = _kernels.prufer_integrate(
        theta0, -math.pi, math.pi, mu, h, params_e, z_minus, mode, scale, RTOL, ATOL, MAX_STEPS
    )
    if status != _kernels.STATUS_OK:
        raise PruferError("phase integration failed")
    return th - theta0


def high_energy_mu(params: ProblemParams, e: float, m: int) -> AngularLevel:
    """Expansion of the pair ``mu_{2m+1}, mu_{2m+2}`` in powers of ``1/((m+1) h)``."""
    big_m = (m + 1) * params.h
    if big_m < 0.5:
        raise ValueError("(m+1) h must be at least 0.5")
    zm = params.z_minus
    mu = big_m * big_m + e / 2.0 + (zm * zm + e * e / 4.0) / (8.0 * big_m * big_m)
    err = big_m**-4 + (m + 1) ** -2.0
    return AngularLevel(
        index=2 * m + 1,
        mu=mu,
        parity=Parity.EVEN_SYM,
        method=Method.HIGH_ENERGY,
        err_estimate=err,
        e=e,
        continuation_guaranteed=e > 2.0 * abs(zm),
    )


def sqrt_mu_expansion(e: float, z_minus: float, big_m):
    """Three-term expansion of ``sqrt(mu)`` at ``M = (m+1) h``."""
    c = asymptotic_coefficients(e, z_minus)
    big_m = np.asarray(big_m, dtype=float)
    return big_m + c.a1 / big_m + c.a3 / big_m**3


@dataclass(frozen=True)
class ShootingResult:
    mu: float
    mu_even: float
    mu_odd: float
    err_estimate: float


def _shoot(e: float, zm: float, h: float, m: int, theta0: float, pred: float, width: float) -> float:
    pot = HillPotential(e, zm)
    vmax, vmin = pot.maximum(), pot.minimum()
    target = 2.0 * (m + 1) * math.pi
    cap = max(abs(pred), abs(vmax), abs(vmin)) * 16.0 + ((m + 2) * h) ** 2 * 16.0 + 16.0

    lo = pred - width
    hi = pred + width
    scale = max(1.0, math.sqrt(abs(pred - vmin) + h * h)) / h
    margin = 0.05 * (vmax - vmin) + 4.0 * h

    def mode_for(x_lo):
        return _kernels.PRUFER_MODIFIED if x_lo > vmax + margin else _kernels.PRUFER_SCALED

    def gain(mu, mode):
        return _phase_gain(e, zm, h, mu, theta0, mode, scale) - target

    mode = mode_for(lo)
    f_lo = gain(lo, mode)
    step = width
    while f_lo > 0:
        lo -= step
        step *= 2
        mode = mode_for(lo)
        f_lo = gain(lo, mode)
        if lo < vmin - cap:
            raise PruferError("no lower bracket")
    f_hi = gain(hi, mode)
    step = width
    while f_hi < 0:
        hi += step
        step *= 2
        f_hi = gain(hi, mode)
        if hi > cap:
            raise PruferError("bracket not found below mu cap")
    return optimize.brentq(lambda x: gain(x, mode), lo, hi, xtol=1e-15 * max(1.0, abs(pred)), rtol=1e-15)


def shooting_pair(params: ProblemParams, e: float, m: int) -> ShootingResult:
    """Solve the phase quantization ``theta(pi) - theta(-pi) = 2 (m+1) pi``.

    The potential is even, so the periodic eigenfunctions with ``2(m+1)`` zeros
    are one even function (``y' = 0`` at ``-pi``) and one odd function
    (``y = 0`` at ``-pi``). Both are shot and the midpoint is returned.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    h = params.h
    zm = params.z_minus
    big_m = (m + 1) * h
    pred = big_m * big_m + e / 2.0 + (zm * zm + e * e / 4.0) / (8.0 * big_m * big_m)
    err = big_m**-4 + (m + 1) ** -2.0
    width = 4.0 * err * max(1.0, big_m)
    # the expansion is only asymptotic in M; keep the bracket inside the physical range for small M
    pot = HillPotential(e, zm)
    ceiling = pot.maximum() + big_m * big_m + 1.0
    if pred > ceiling:
        pred = 0.5 * (pot.minimum() + ceiling)
    width = min(width, 0.5 * (ceiling - pot.minimum()))
    mu_odd = _shoot(e, zm, h, m, 0.0, pred, width)
    mu_even = _shoot(e, zm, h, m, 0.5 * math.pi, pred, width)
    mid = 0.5 * (mu_odd + mu_even)
    return ShootingResult(mu=mid, mu_even=mu_even, mu_odd=mu_odd, err_estimate=0.5 * abs(mu_odd - mu_even))


def shooting_eigenvalue(params: ProblemParams, e: float, m: int) -> AngularLevel:
    """Shooting oracle for the pair ``mu_{2m+1}, mu_{2m+2}`` (midpoint)."""
    res = shooting_pair(params, e, m)
    return AngularLevel(
        index=2 * m + 1,
        mu=res.mu,
        parity=Parity.EVEN_SYM,
        method=Method.SHOOTING,
        err_estimate=res.err_estimate,
        e=e,
        continuation_guaranteed=e > 2.0 * abs(params.z_minus),
        notes=f"even={res.mu_even!r}; odd={res.mu_odd!r}",
    )


def ground_shooting(params: ProblemParams, e: float) -> float:
    """Lowest periodic eigenvalue (even, no zeros) by shooting."""
    pot = HillPotential(e, params.z_minus)
    h = params.h
    vmin, vmax = pot.minimum(), pot.maximum()
    scale = max(1.0, math.sqrt(vmax - vmin + h * h)) / h

    def gain(mu):
        return _phase_gain(e, params.z_minus, h, mu, 0.5 * math.pi, _kernels.PRUFER_SCALED, scale)

    lo, hi = vmin - 1.0, vmax + h * h + 1.0
    return optimize.brentq(gain, lo, hi, xtol=1e-15 * max(1.0, abs(vmax)), rtol=1e-15)


def fit_coefficients(big_m: Sequence[float], sqrt_mu: Sequence[float], extra_terms: int = 2) -> np.ndarray:
    """Least-squares fit of ``sqrt(mu) - M`` against ``M^-1, M^-2, ...``.

    Returns the coefficients of ``M^-1 .. M^-(3+extra_terms)``.
    """
    big_m = np.asarray(big_m, dtype=float)
    y = np.asarray(sqrt_mu, dtype=float) - big_m
    powers = np.arange(1, 4 + extra_terms)
    design = big_m[:, None] ** (-powers[None, :].astype(float))
    # column scaling keeps the normal equations well conditioned
    norms = np.linalg.norm(design, axis=0)
    coef, *_ = np.linalg.lstsq(design / norms, y, rcond=None)
    return coef / norms


def correction_integral(e: float, z_minus: float, h: float, mu: float, weight: Callable[[float], float]) -> float:
    """``int weight(x) sin(2 theta(x)) dx`` over one period, ``theta`` started at 0."""
    pot = HillPotential(e, z_minus)
    if not mu > pot.maximum():
        raise PruferError("mu must exceed max V")

    def rhs(x, y):
        gap = mu - pot(x)
        q = 0.25 * pot.derivative(x) / gap
        s2 = math.sin(2.0 * y[0])
        return [math.sqrt(gap) / h - q * s2, weight(x) * s2]

    sol = integrate.solve_ivp(rhs, (-math.pi, math.pi), [0.0, 0.0], method="DOP853", rtol=1e-11, atol=1e-13)
    return float(sol.y[1, -1])
