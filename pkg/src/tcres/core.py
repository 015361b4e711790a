"""Shared value types and parameter bookkeeping.

All quantities are dimensionless, with the two centers fixed at -1 and +1.
"""

from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass, field
from typing import Optional


class ParameterError(ValueError):
    """Raised for invalid physical parameters."""


class Sheet(str, enum.Enum):
    PHYSICAL = "physical"
    SECOND = "second"


class Regime(str, enum.Enum):
    EQUAL_CHARGES = "equal_charges"
    LOW_LYING = "low_lying"
    HIGH_ENERGY = "high_energy"
    DIRECT_JOST = "direct_jost"


@dataclass(frozen=True)
class ProblemParams:
    """Charges and semiclassical parameter of one two-center configuration.

    Attributes
    ----------
    z1, z2 : float
        Charges after normalization, so that ``z2 >= z1``.
    h : float
        Semiclassical parameter.
    swapped : bool
        True when the input charges were exchanged during normalization.
    """

    z1: float
    z2: float
    h: float
    swapped: bool = False
    z_plus: float = field(init=False)
    z_minus: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "z_plus", float(self.z2 + self.z1))
        object.__setattr__(self, "z_minus", float(self.z2 - self.z1))

    @classmethod
    def from_sum_difference(cls, z_plus: float, z_minus: float, h: float) -> "ProblemParams":
        """Build validated params from ``(Z+, Z-)`` instead of the raw charges."""
        z1 = 0.5 * (z_plus - z_minus)
        z2 = 0.5 * (z_plus + z_minus)
        return validate_params(z1, z2, h)

    @property
    def original_charges(self) -> tuple[float, float]:
        return (self.z2, self.z1) if self.swapped else (self.z1, self.z2)


def validate_params(z1: float, z2: float, h: float) -> ProblemParams:
    """Normalize a charge pair so that ``Z- = z2 - z1 >= 0`` and check the domain."""
    z1 = float(z1)
    z2 = float(z2)
    h = float(h)
    if not h > 0.0:
        raise ParameterError(f"semiclassical parameter must be positive, got h={h}")
    if z1 == 0.0 or z2 == 0.0:
        raise ParameterError("zero charge")
    swapped = False
    if z2 < z1:
        z1, z2 = z2, z1
        swapped = True
    if z2 + z1 == z2 - z1:
        raise ParameterError("Z+ must differ from Z-")
    return ProblemParams(z1, z2, h, swapped)


def renormalize(params: ProblemParams) -> ProblemParams:
    """Re-run validation on already normalized params (idempotent)."""
    out = validate_params(params.z1, params.z2, params.h)
    if params.swapped and not out.swapped:
        out = ProblemParams(out.z1, out.z2, out.h, True)
    return out


@dataclass(frozen=True)
class ComplexEnergy:
    """Energy ``e = k**2`` together with the momentum ``k`` and its sheet."""

    e: complex
    k: complex
    sheet: Sheet

    def __post_init__(self) -> None:
        if abs(self.k * self.k - self.e) > 1e-14 * max(1.0, abs(self.e)):
            raise ParameterError("e must equal k**2")


def energy_from_k(k: complex, sheet_hint: Optional[Sheet] = None) -> ComplexEnergy:
    """Pair a momentum with its energy. The sheet follows ``Im k`` unless forced to second."""
    k = complex(k)
    if k == 0:
        raise ParameterError("k = 0 is excluded")
    if sheet_hint == Sheet.SECOND:
        sheet = Sheet.SECOND
    else:
        sheet = Sheet.PHYSICAL if k.imag >= 0.0 else Sheet.SECOND
    return ComplexEnergy(k * k, k, sheet)


def energy_from_e(e: complex, sheet: Sheet = Sheet.SECOND) -> ComplexEnergy:
    """Choose a momentum for a given energy.

    The second sheet is reached across the positive real k-axis, so there the
    root with ``Re k > 0`` is taken; on the physical sheet the root with
    ``Im k >= 0``. The stored energy is recomputed as ``k**2``.
    """
    k = cmath.sqrt(complex(e))
    if sheet == Sheet.PHYSICAL:
        if k.imag < 0.0:
            k = -k
    elif k.real < 0.0:
        k = -k
    return energy_from_k(k)


@dataclass(frozen=True)
class ResonanceRecord:
    """One solved (or failed) resonance cell.

    Attributes
    ----------
    n, m : int
        Barrier-top index and angular index.
    energy : ComplexEnergy or None
        Root, absent when the cell failed.
    mu : complex
        Separation constant used in the defining equation.
    k_classical : float
        Estimated classical constant of motion, ``-Re(mu)``.
    regime : Regime
    residual : float
        Absolute value of the defining equation at ``energy``.
    params : ProblemParams
    i_sign : int
        Sign of the imaginary barrier term used in the defining equation.
    status, reason : str
        ``"ok"`` or ``"failed"``, with a reason for failures.
    """

    n: int
    m: int
    energy: Optional[ComplexEnergy]
    mu: complex
    k_classical: float
    regime: Regime
    residual: float
    params: ProblemParams
    i_sign: int = -1
    status: str = "ok"
    reason: str = ""
    branch: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def e(self) -> complex:
        return self.energy.e if self.energy is not None else complex("nan+nanj")
