import cmath
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tcres.core import (
    ComplexEnergy,
    ParameterError,
    ProblemParams,
    Sheet,
    energy_from_e,
    energy_from_k,
    renormalize,
    validate_params,
)

charges = st.floats(-10, 10, allow_nan=False).filter(lambda z: abs(z) > 1e-3)
hs = st.floats(1e-4, 2.0)
momenta = st.complex_numbers(max_magnitude=50, allow_nan=False, allow_infinity=False).filter(lambda k: abs(k) > 1e-6)


def test_equal_charges():
    p = validate_params(1, 1, 0.01)
    assert (p.z_plus, p.z_minus, p.swapped) == (2.0, 0.0, False)


def test_swap_keeps_z_minus_nonnegative():
    p = validate_params(3, -1, 0.1)
    assert (p.z1, p.z2) == (-1.0, 3.0)
    assert (p.z_plus, p.z_minus) == (2.0, 4.0)
    assert p.swapped
    assert p.original_charges == (3.0, -1.0)


@pytest.mark.parametrize("raw", [(0, 1, 0.1), (1, 0, 0.1), (1, 2, 0.0), (1, 2, -0.5)])
def test_rejects(raw):
    with pytest.raises(ParameterError):
        validate_params(*raw)


def test_zero_charge_message():
    with pytest.raises(ParameterError, match="zero charge"):
        validate_params(0, 1, 0.1)


def test_z_plus_equal_z_minus_is_a_zero_charge():
    # Z+ = Z- forces z1 = 0
    with pytest.raises(ParameterError):
        ProblemParams.from_sum_difference(2.0, 2.0, 0.1)


def test_from_sum_difference():
    p = ProblemParams.from_sum_difference(-2.0, 4.0, 0.01)
    assert (p.z1, p.z2) == (-3.0, 1.0)


@given(charges, charges, hs)
def test_validate_idempotent(z1, z2, h):
    try:
        p = validate_params(z1, z2, h)
    except ParameterError:
        return
    q = renormalize(p)
    assert q == p
    assert p.z_minus >= 0
    assert p.z2 >= p.z1


@pytest.mark.parametrize(
    "k, e, sheet",
    [(1j, -1, Sheet.PHYSICAL), (1 - 0.1j, 0.99 - 0.2j, Sheet.SECOND), (2, 4, Sheet.PHYSICAL)],
)
def test_energy_from_k_examples(k, e, sheet):
    ce = energy_from_k(k)
    assert abs(ce.e - e) < 1e-15
    assert ce.sheet is sheet


def test_k_zero_rejected():
    with pytest.raises(ParameterError):
        energy_from_k(0)


def test_second_sheet_hint():
    assert energy_from_k(1 + 0.1j, Sheet.SECOND).sheet is Sheet.SECOND


def test_energy_mismatch_rejected():
    with pytest.raises(ParameterError):
        ComplexEnergy(1.0, 2.0, Sheet.PHYSICAL)


@given(momenta)
def test_round_trip(k):
    ce = energy_from_k(k)
    assert ce.k == k
    assert abs(ce.k * ce.k - ce.e) <= 1e-14 * max(1.0, abs(ce.e))
    assert (ce.sheet is Sheet.PHYSICAL) == (k.imag >= 0)


@given(momenta)
def test_energy_from_e_second_sheet(k):
    ce = energy_from_e(k * k)
    assert ce.k.real >= 0
    assert abs(ce.k * ce.k - k * k) <= 1e-13 * max(1.0, abs(k * k))
    phys = energy_from_e(k * k, Sheet.PHYSICAL)
    assert phys.k.imag >= 0
    assert cmath.isclose(phys.e, ce.e, rel_tol=1e-14, abs_tol=1e-300) or math.isclose(abs(phys.e), 0.0, abs_tol=1e-20)
