"""Resonance location near the top of the radial barrier.

The radial potential has a non-degenerate maximum at ``xi = 0``; a local
harmonic model quantizes resonances by

    A_n(E, mu) = -Z+ - E + mu + s i h (2n+1) omega,   omega = sqrt(mu + c - Z+/2),

with ``s = i_sign`` (``-1`` gives ``Im E < 0`` on the low-energy family) and
``c`` an offset (``5 h^2 / 4`` in the complete model, dropped by the expanded
equations). Coupling ``A_n`` with an approximation of the angular eigenvalue
``mu(E)`` gives one implicit equation per regime; the direct route instead
solves ``f+(k, mu(k^2)) = 0`` with the radial and angular solvers.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from . import radial
from .angular import AngularError, LevelTracker
from .core import (
    ComplexEnergy,
    ParameterError,
    ProblemParams,
    Regime,
    ResonanceRecord,
    Sheet,
    energy_from_e,
    energy_from_k,
)

RESIDUAL_TOL = 1e-12
JOST_TOL = 1e-10
MAX_ITER = 100
C_MIN = 0.5


class ConvergenceError(RuntimeError):
    pass


class BranchError(RuntimeError):
    pass


@dataclass(frozen=True)
class BarrierTopModel:
    """Harmonic model at the barrier top: ``V ~ a_offset - omega^2 y^2``."""

    a_offset: complex
    omega: complex
    n: int


def _omega(mu: complex, z_plus: float, offset: float, strict: bool = True) -> complex:
    arg = complex(mu) + offset - 0.5 * z_plus
    if strict and arg.real <= 0:
        raise BranchError(f"Re(mu + c - Z+/2) = {arg.real:.6g} <= 0: no harmonic barrier top")
    return cmath.sqrt(arg)


def barrier_top_model(params: ProblemParams, n: int, k: complex, mu: complex) -> BarrierTopModel:
    h = params.h
    a = -params.z_plus - complex(k) ** 2 + complex(mu) - 0.5 * h * h
    return BarrierTopModel(a_offset=a, omega=_omega(mu, params.z_plus, 1.25 * h * h), n=n)


def barrier_top_An(
    params: ProblemParams,
    n: int,
    k: complex,
    mu: complex,
    i_sign: int = -1,
    omega_offset: Optional[float] = None,
    strict: bool = True,
) -> complex:
    """``A_n = -Z+ - k^2 + mu + i_sign * i h (2n+1) omega`` (error term dropped).

    ``strict`` enforces ``Re(omega^2) > 0``; the low-energy equations are
    evaluated with the principal root regardless.
    """
    h = params.h
    off = 1.25 * h * h if omega_offset is None else omega_offset
    om = _omega(mu, params.z_plus, off, strict)
    return -params.z_plus - complex(k) ** 2 + complex(mu) + i_sign * 1j * h * (2 * n + 1) * om


def rough_estimate(params: ProblemParams, n: int, mu: complex, i_sign: int = -1) -> complex:
    """Leading-order resonance for large ``Re mu``.

    ``Re E ~ Re mu - Z+`` and ``Im E ~ Im mu + i_sign (2n+1) h sqrt(Re mu)``.
    """
    mu = complex(mu)
    return complex(mu.real - params.z_plus, mu.imag + i_sign * (2 * n + 1) * params.h * math.sqrt(mu.real))


# ---------------------------------------------------------------- Newton


def newton(
    f: Callable[[complex], complex],
    x0: complex,
    scale: Callable[[complex], float],
    tol: float = RESIDUAL_TOL,
    max_iter: int = MAX_ITER,
    rel_step: float = 1e-6,
    guard: Optional[Callable[[complex], None]] = None,
) -> tuple[complex, complex, int]:
    """Damped complex Newton with a central-difference derivative.

    Steps are halved until ``|F|`` decreases; a trial point rejected by
    ``guard`` (raising :class:`BranchError`) is halved as well. Converged when
    ``|F(x)| < tol * scale(x)``. Returns ``(x, F(x), iterations)``.
    """
    x = complex(x0)
    fx = f(x)
    for it in range(max_iter):
        if abs(fx) < tol * scale(x):
            return x, fx, it
        d = rel_step * max(1.0, abs(x))
        dfx = (f(x + d) - f(x - d)) / (2.0 * d)
        if dfx == 0 or not cmath.isfinite(dfx):
            raise ConvergenceError("vanishing derivative")
        step = fx / dfx
        lam = 1.0
        for _ in range(40):
            xn = x - lam * step
            try:
                if guard is not None:
                    guard(xn)
                fn = f(xn)
            except (BranchError, AngularError, radial.RadialError, ValueError, ZeroDivisionError):
                fn = complex("nan")
            if cmath.isfinite(fn) and abs(fn) < abs(fx):
                break
            lam *= 0.5
        else:
            if abs(fx) < 1e3 * tol * scale(x):
                # limited by rounding; accept and let the caller record the residual
                return x, fx, it
            raise ConvergenceError(f"line search failed at x={x!r}, |F|={abs(fx):.3e}")
        if abs(xn - x) <= 4e-16 * abs(x):
            x, fx = xn, fn
            if abs(fx) < 1e3 * tol * scale(x):
                return x, fx, it + 1
            raise ConvergenceError(f"stagnated at x={x!r}, |F|={abs(fx):.3e}")
        x, fx = xn, fn
    if abs(fx) < tol * scale(x):
        return x, fx, max_iter
    raise ConvergenceError(f"no convergence in {max_iter} iterations (|F|={abs(fx):.3e})")


def _record(
    params: ProblemParams,
    n: int,
    m: int,
    e: complex,
    mu: complex,
    regime: Regime,
    residual: float,
    i_sign: int,
    branch: str = "",
    k: Optional[complex] = None,
) -> ResonanceRecord:
    energy = energy_from_k(k, Sheet.SECOND if k.imag < 0 else None) if k is not None else energy_from_e(e, Sheet.SECOND)
    return ResonanceRecord(
        n=n,
        m=m,
        energy=energy,
        mu=complex(mu),
        k_classical=-complex(mu).real,
        regime=regime,
        residual=float(residual),
        params=params,
        i_sign=i_sign,
        branch=branch,
    )


def _solve_with_sign(
    make_f: Callable[[int], Callable[[complex], complex]],
    guess: complex,
    scale: Callable[[complex], float],
    energy_of: Callable[[complex], complex],
    i_sign: Optional[int],
    keep_antiresonance: bool,
    guard: Optional[Callable[[complex], None]] = None,
) -> tuple[complex, complex, int]:
    """Root with ``Im E <= 0`` unless anti-resonances are kept.

    Tries ``i_sign = -1`` from the guess and its conjugate, then ``+1``.
    """
    signs = (i_sign,) if i_sign is not None else (-1, 1)
    last: Optional[Exception] = None
    for s in signs:
        f = make_f(s)
        for g in (guess, guess.conjugate()):
            try:
                x, fx, _ = newton(f, g, scale, guard=guard)
            except (ConvergenceError, BranchError) as exc:
                last = exc
                continue
            if keep_antiresonance or energy_of(x).imag <= 0:
                return x, fx, s
            last = ConvergenceError(f"root {energy_of(x)!r} lies in the anti-resonance half-plane")
            if g == g.conjugate():
                break
    raise ConvergenceError(str(last) if last else "no root")


# ---------------------------------------------------------------- equal charges


def equal_charges_lhs(params: ProblemParams, n: int, m: int, k: complex, i_sign: int = -1, omega_offset: Optional[float] = None) -> complex:
    """``k^2 + Z+ - (2n+1) k h - i_sign i h (2m+1) sqrt((2n+1) k h + c - Z+/2)``."""
    h = params.h
    off = 1.25 * h * h if omega_offset is None else omega_offset
    k = complex(k)
    mu = (2 * n + 1) * k * h
    # principal root without the barrier-top sign condition: with mu ~ (2n+1) k h
    # the argument is usually near -Z+/2
    om = cmath.sqrt(mu + off - 0.5 * params.z_plus)
    return k * k + params.z_plus - mu - i_sign * 1j * h * (2 * m + 1) * om


def _equal_charges_guess(params: ProblemParams, n: int, m: int, omega_offset: float) -> complex:
    h = params.h
    k = 1.0 + 0.0j
    # a few sweeps of the quadratic with omega frozen
    for _ in range(30):
        arg = (2 * n + 1) * k * h + omega_offset - 0.5 * params.z_plus
        om = cmath.sqrt(arg)
        c = params.z_plus - 1j * h * (2 * m + 1) * om
        b = -(2 * n + 1) * h
        disc = cmath.sqrt(b * b - 4 * c)
        r1, r2 = (-b + disc) / 2, (-b - disc) / 2
        k_new = r1 if r1.real >= r2.real else r2
        if abs(k_new - k) < 1e-10 * abs(k):
            return k_new
        k = k_new
    return k


def solve_equal_charges(
    params: ProblemParams,
    n: int,
    m: int,
    omega_offset: Optional[float] = None,
    guess: Optional[complex] = None,
    i_sign: Optional[int] = None,
    keep_antiresonance: bool = False,
) -> ResonanceRecord:
    """Equal-charge resonance, Newton on ``k``.

    The angular index ``n`` sits in ``mu = (2n+1) k h`` and ``m`` multiplies
    the barrier term, as in the published equation.
    """
    if params.z_minus != 0.0:
        raise ParameterError("equal charges require Z- = 0")
    off = 1.25 * params.h**2 if omega_offset is None else float(omega_offset)
    k0 = _equal_charges_guess(params, n, m, off) if guess is None else complex(guess)

    def make_f(s):
        return lambda k: equal_charges_lhs(params, n, m, k, s, off)

    def scale(k):
        return max(1.0, abs(k) ** 2)

    k, fk, s = _solve_with_sign(make_f, k0, scale, lambda k: k * k, i_sign, keep_antiresonance)
    if k.real < 0:
        k = -k
        fk = make_f(s)(k)
    mu = (2 * n + 1) * k * params.h
    return _record(params, n, m, k * k, mu, Regime.EQUAL_CHARGES, abs(fk) / scale(k), s, k=k)


# ---------------------------------------------------------------- low-lying


def low_lying_mu(params: ProblemParams, m: int, e: complex, branch: str) -> complex:
    """Bottom-of-well approximation of the angular eigenvalue.

    ``upper``: two wells at ``+-eta*``, ``-Z-^2/(4E) + sqrt(E - Z-^2/(4E)) (2m+1) h``.
    ``lower``: single well at ``pi``, ``E - Z- + sqrt(Z-/2 - E) (2m+1) h``.
    """
    zm = params.z_minus
    h = params.h
    e = complex(e)
    if branch == "upper":
        q = zm * zm / (4.0 * e)
        return -q + cmath.sqrt(e - q) * (2 * m + 1) * h
    if branch == "lower":
        return e - zm + cmath.sqrt(0.5 * zm - e) * (2 * m + 1) * h
    raise ValueError(f"unknown branch {branch!r}")


def low_lying_lhs(params: ProblemParams, n: int, m: int, e: complex, branch: str, i_sign: int = -1, omega_offset: float = 0.0) -> complex:
    mu = low_lying_mu(params, m, e, branch)
    return barrier_top_An(params, n, cmath.sqrt(e), mu, i_sign, omega_offset, strict=False)


def _side(params: ProblemParams, e: complex) -> str:
    # the double well exists when |Z- / (2E)| < 1; on the real axis this is E > Z-/2
    if params.z_minus == 0.0:
        return "upper"
    return "upper" if abs(e) > 0.5 * params.z_minus else "lower"


def _low_lying_guesses(params: ProblemParams, n: int, m: int, branch: str) -> list[complex]:
    zp, zm, h = params.z_plus, params.z_minus, params.h
    b = (2 * m + 1) * h
    out: list[complex] = []
    if branch == "upper":
        # s = sqrt(E) with Z- neglected: s^2 - b s + Z+ = 0
        disc = cmath.sqrt(b * b - 4 * zp)
        for s in sorted(((b + disc) / 2, (b - disc) / 2), key=lambda s: -s.real):
            out.append(s * s)
        disc2 = cmath.sqrt(zp * zp - zm * zm)
        out.extend([(-zp + disc2) / 2, (-zp - disc2) / 2])
    else:
        if b > 0:
            out.append(0.5 * zm - ((zp + zm) / b) ** 2)
        out.append(0.25 * zm + 0.0j)
    # the frozen-branch guard rejects real-axis points of the other side; tilt slightly
    return [g - 1e-3j * max(1.0, abs(g)) if g.imag == 0 else g for g in out]


def solve_low_lying(
    params: ProblemParams,
    n: int,
    m: int,
    branch: Optional[str] = None,
    omega_offset: float = 0.0,
    guess: Optional[complex] = None,
    i_sign: Optional[int] = None,
    keep_antiresonance: bool = False,
) -> ResonanceRecord:
    """Resonance from the bottom-of-well angular approximation, Newton on ``E``.

    The branch is taken from the initial guess and frozen; an iterate that
    changes side raises :class:`BranchError`.
    """
    if params.z_minus < 0:
        raise ParameterError("Z- must be >= 0")
    branches = (branch,) if branch is not None else ("upper", "lower")
    last: Optional[Exception] = None
    for br in branches:
        guesses = [complex(guess)] if guess is not None else _low_lying_guesses(params, n, m, br)
        for g in guesses:
            if branch is None and _side(params, g) != br:
                continue

            def guard(e, br=br):
                if branch is None and _side(params, e) != br:
                    raise BranchError(f"iterate {e!r} left the {br} branch")

            def make_f(s, br=br):
                return lambda e: low_lying_lhs(params, n, m, e, br, s, omega_offset)

            def scale(e):
                return max(1.0, abs(e))

            try:
                e, fe, s = _solve_with_sign(make_f, g, scale, lambda e: e, i_sign, keep_antiresonance, guard)
            except (ConvergenceError, BranchError) as exc:
                last = exc
                continue
            mu = low_lying_mu(params, m, e, br)
            return _record(params, n, m, e, mu, Regime.LOW_LYING, abs(fe) / scale(e), s, branch=br)
    raise ConvergenceError(f"low-lying solve failed for n={n}, m={m}: {last}")


# ---------------------------------------------------------------- high energy


def high_energy_mu_expr(params: ProblemParams, m: int, e: complex) -> complex:
    """``(m+1)^2 h^2 + E/2 + (Z-^2 + E^2/4) / (8 (m+1)^2 h^2)``."""
    big2 = ((m + 1) * params.h) ** 2
    return big2 + 0.5 * e + (params.z_minus**2 + 0.25 * e * e) / (8.0 * big2)


def high_energy_lhs(params: ProblemParams, n: int, m: int, e: complex, i_sign: int = -1, omega_offset: float = 0.0) -> complex:
    mu = high_energy_mu_expr(params, m, e)
    return barrier_top_An(params, n, cmath.sqrt(e), mu, i_sign, omega_offset)


def high_energy_guess(params: ProblemParams, m: int, branch: str = "small") -> complex:
    big2 = ((m + 1) * params.h) ** 2
    if branch == "small":
        return complex(2.0 * (big2 - params.z_plus))
    if branch == "large":
        c = big2 - params.z_plus + params.z_minus**2 / (8.0 * big2)
        return 16.0 * big2 * (0.5 + cmath.sqrt(0.25 - c / (8.0 * big2)))
    raise ValueError(f"unknown branch {branch!r}")


def family_label(params: ProblemParams, m: int, e: complex) -> str:
    """``small``/``large`` split for plotting, at ``4 (m+1)^2 h^2``."""
    return "large" if complex(e).real > 4.0 * ((m + 1) * params.h) ** 2 else "small"


def solve_high_energy(
    params: ProblemParams,
    n: int,
    m: int,
    branch: str = "small",
    c_min: float = C_MIN,
    omega_offset: float = 0.0,
    guess: Optional[complex] = None,
    i_sign: Optional[int] = None,
    keep_antiresonance: bool = False,
) -> ResonanceRecord:
    """High-energy resonance with the expanded angular eigenvalue, Newton on ``E``."""
    if (m + 1) * params.h < c_min:
        raise ParameterError(f"(m+1) h = {(m + 1) * params.h:.6g} below C_min = {c_min}")
    g = high_energy_guess(params, m, branch) if guess is None else complex(guess)

    def make_f(s):
        return lambda e: high_energy_lhs(params, n, m, e, s, omega_offset)

    def scale(e):
        return max(1.0, abs(e))

    e, fe, s = _solve_with_sign(make_f, g, scale, lambda e: e, i_sign, keep_antiresonance)
    mu = high_energy_mu_expr(params, m, e)
    return _record(params, n, m, e, mu, Regime.HIGH_ENERGY, abs(fe) / scale(e), s, branch=family_label(params, m, e))


# ---------------------------------------------------------------- exact angular coupling


def solve_barrier_top(
    params: ProblemParams,
    n: int,
    angular_index: int,
    guess: complex,
    i_sign: int = -1,
    omega_offset: float = 0.0,
) -> ResonanceRecord:
    """``A_n(E, mu_j(E)) = 0`` with ``mu_j`` from the angular solver (index ``j``)."""
    g = complex(guess)
    tracker = LevelTracker.for_index(params, g.real, angular_index)

    def f(e):
        mu = tracker.evaluate(e)
        return barrier_top_An(params, n, cmath.sqrt(e), mu, i_sign, omega_offset)

    def scale(e):
        return max(1.0, abs(e))

    e, fe, _ = newton(f, g, scale)
    mu = tracker.evaluate(e)
    m = (angular_index - 1) // 2
    rec = _record(params, n, m, e, mu, Regime.HIGH_ENERGY, abs(fe) / scale(e), i_sign, branch="exact_mu")
    return rec


def find_jost_zero(
    params: ProblemParams,
    n_angular: int,
    guess: ComplexEnergy,
    ray_angle: Optional[float] = None,
    tol: float = JOST_TOL,
    n_barrier: int = -1,
) -> ResonanceRecord:
    """Zero of ``k -> f+(k, mu_j(k^2))`` near ``guess``.

    ``mu_j`` is continued from real energy by the angular tracker. The result
    is classified as an eigenvalue (``Im k > 0``) or a resonance.
    """
    k0 = complex(guess.k)
    tracker = LevelTracker.for_index(params, k0.real**2 - k0.imag**2, n_angular)

    def fplus(k):
        mu = tracker.evaluate(k * k)
        return radial.jost_fplus(params, k, mu, ray_angle)

    d0 = 1e-6 * abs(k0)
    slope = abs((fplus(k0 + d0) - fplus(k0 - d0)) / (2 * d0))

    def scale(k):
        return max(slope * abs(k), 1e-300)

    try:
        k, fk, _ = newton(fplus, k0, scale, tol=tol)
    except AngularError as exc:
        raise ConvergenceError(f"angular tracking failed: {exc}") from exc
    mu = tracker.evaluate(k * k)
    kind = "eigenvalue" if k.imag > 0 else "resonance"
    m = (n_angular - 1) // 2
    return _record(params, n_barrier, m, k * k, mu, Regime.DIRECT_JOST, abs(fk) / scale(k), -1, branch=kind, k=k)


# ---------------------------------------------------------------- grids


def _failed(params: ProblemParams, n: int, m: int, regime: Regime, exc: Exception) -> ResonanceRecord:
    reason = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return ResonanceRecord(
        n=n,
        m=m,
        energy=None,
        mu=complex("nan+nanj"),
        k_classical=float("nan"),
        regime=regime,
        residual=float("nan"),
        params=params,
        status="failed",
        reason=reason,
    )


def solve_cell(params: ProblemParams, regime: Regime, n: int, m: int, **options) -> ResonanceRecord:
    """Solve one grid cell; errors become a failed record."""
    regime = Regime(regime)
    try:
        if regime is Regime.EQUAL_CHARGES:
            return solve_equal_charges(params, n, m, **options)
        if regime is Regime.LOW_LYING:
            return solve_low_lying(params, n, m, **options)
        if regime is Regime.HIGH_ENERGY:
            return solve_high_energy(params, n, m, **options)
        if n % 2:
            # f+ pairs v+ with the even regular solution, so odd barrier modes have no zero
            raise ConvergenceError(f"odd barrier index n={n} has no Jost zero on the half line")
        seed = solve_high_energy(params, n, m, **options)
        refined = solve_barrier_top(params, n, 2 * m + 1, seed.e, i_sign=seed.i_sign)
        rec = find_jost_zero(params, 2 * m + 1, refined.energy, n_barrier=n)
        if abs(rec.e - refined.e) > 0.5 * abs(refined.e.imag):
            raise ConvergenceError(f"Jost search left the seed basin: {refined.e} -> {rec.e}")
        return rec
    except (ConvergenceError, BranchError, ParameterError, AngularError, radial.RadialError, ValueError, ZeroDivisionError) as exc:
        return _failed(params, n, m, regime, exc)


def resonance_grid(
    params: ProblemParams,
    regime: Regime,
    n_range: Sequence[int],
    m_range: Sequence[int],
    threads: int = 1,
    **options,
) -> list[ResonanceRecord]:
    """All cells in ``(n, m)`` order; failures are embedded, never dropped."""
    ns = list(n_range)
    ms = list(m_range)
    if not ns or not ms:
        raise ValueError("ranges must be non-empty")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    cells = [(n, m) for n in ns for m in ms]

    def work(cell):
        return solve_cell(params, regime, cell[0], cell[1], **options)

    if threads == 1:
        return [work(c) for c in cells]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, cells))
