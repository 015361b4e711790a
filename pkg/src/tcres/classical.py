"""Classical bifurcation set in the (E, K) plane and related estimators.

``K`` is the constant of motion of the separated classical problem. The
curves below bound the regions where the level sets change topology; for
``E >= 0`` admissible values satisfy ``K_plus(E) <= K <= K_minus(E)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import ProblemParams, ResonanceRecord

UNBOUNDED = "unbounded"

CURVE_IDS = ("L0", "Lm1", "Lp2", "Lm2", "Lp3", "Lm3", "Kplus", "Kminus")


class Unbounded:
    """Sentinel for ``K_plus(E) = -infinity`` (E > 0)."""

    def __repr__(self) -> str:
        return "unbounded_below"

    def __eq__(self, other) -> bool:
        return isinstance(other, Unbounded)

    def __hash__(self) -> int:
        return hash("unbounded_below")


UNBOUNDED_BELOW = Unbounded()

KValue = Union[float, Unbounded]


@dataclass(frozen=True)
class BifurcationCurve:
    """Sampled curve; ``samples`` holds ``(E, K)`` pairs.

    ``L0`` is the vertical line ``E = 0`` and is sampled in K instead.
    """

    id: str
    samples: tuple[tuple[float, KValue], ...]


def k_minus(params: ProblemParams, e: float) -> float:
    zm = params.z_minus
    if e <= 0.5 * zm:
        return zm - e
    return zm * zm / (4.0 * e)


def k_plus(params: ProblemParams, e: float) -> KValue:
    zp = params.z_plus
    if e > 0.0:
        return UNBOUNDED_BELOW
    edge = min(-0.5 * zp, 0.0)
    if e <= edge:
        return -(zp + e)
    if e == 0.0:
        return UNBOUNDED_BELOW
    return zp * zp / (4.0 * e)


def estimate_K(record: ResonanceRecord) -> float:
    """Classical constant of motion attached to a resonance, ``-Re(mu)``."""
    return -float(np.real(record.mu))


def lyapunov_normalizer(e: float) -> float:
    """``sqrt(E) ln(E)``, the growth rate used to rescale high-energy resonances."""
    e = float(e)
    if not e > 1.0:
        raise ValueError("normalizer needs E > 1")
    return math.sqrt(e) * math.log(e)


def _line(es: np.ndarray, fn) -> tuple[tuple[float, float], ...]:
    return tuple((float(e), float(fn(e))) for e in es)


def bifurcation_diagram(
    params: ProblemParams, e_range: tuple[float, float], samples: int
) -> list[BifurcationCurve]:
    """Sample the eight curves of the diagram on ``e_range``.

    Hyperbolas ``4 E K = Z^2`` are sampled only where ``E != 0``.
    """
    emin, emax = float(e_range[0]), float(e_range[1])
    if not emax > emin:
        raise ValueError("degenerate energy range")
    if samples < 2:
        raise ValueError("need at least two samples")
    zp, zm = params.z_plus, params.z_minus
    es = np.linspace(emin, emax, samples)
    nonzero = es[es != 0.0]
    ks_all = []
    curves = []
    for fn in (lambda e: zm - e, lambda e: -zp - e, lambda e: -zm - e):
        ks_all.extend(fn(e) for e in es)
    for fn in (lambda e: zp * zp / (4.0 * e), lambda e: zm * zm / (4.0 * e)):
        ks_all.extend(fn(e) for e in nonzero)
    kmin, kmax = (min(ks_all), max(ks_all)) if ks_all else (-1.0, 1.0)
    k_axis = np.linspace(kmin, kmax, samples)
    curves.append(BifurcationCurve("L0", tuple((0.0, float(k)) for k in k_axis)))
    curves.append(BifurcationCurve("Lm1", _line(es, lambda e: zm - e)))
    curves.append(BifurcationCurve("Lp2", _line(es, lambda e: -zp - e)))
    curves.append(BifurcationCurve("Lm2", _line(es, lambda e: -zm - e)))
    curves.append(BifurcationCurve("Lp3", _line(nonzero, lambda e: zp * zp / (4.0 * e))))
    curves.append(BifurcationCurve("Lm3", _line(nonzero, lambda e: zm * zm / (4.0 * e))))
    curves.append(BifurcationCurve("Kplus", tuple((float(e), k_plus(params, e)) for e in es)))
    curves.append(BifurcationCurve("Kminus", tuple((float(e), k_minus(params, e)) for e in es)))
    return curves


def band(params: ProblemParams, e: float) -> tuple[KValue, float]:
    """Admissible K interval ``(K_plus(E), K_minus(E))`` for ``E >= 0``."""
    if e < 0:
        raise ValueError("band is defined for E >= 0")
    return k_plus(params, e), k_minus(params, e)


def serialize_k(value: KValue) -> Union[float, str]:
    return UNBOUNDED if isinstance(value, Unbounded) else float(value)


def projection_residual(records: Sequence[ResonanceRecord]) -> np.ndarray:
    """``|K_est + Z+ + Re E| / |K_est|`` for each record (distance to the bouncing-orbit line)."""
    out = []
    for rec in records:
        kk = estimate_K(rec)
        out.append(abs(kk + rec.params.z_plus + rec.e.real) / abs(kk))
    return np.array(out)
