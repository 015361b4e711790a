import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import secant_root, winding_number, winding_number_box
from tcres import radial
from tcres import resonances as R
from tcres.angular import LevelTracker
from tcres.core import ParameterError, ProblemParams, Regime


def params(zp, zm, h):
    return ProblemParams.from_sum_difference(zp, zm, h)


PEQ = params(2.0, 0.0, 0.01)
PLL = params(-2.0, 4.0, 0.01)
PHE = params(2.0, 4.0, 0.05)


# ---------------------------------------------------------------- barrier-top model


def test_an_vanishes_with_h():
    k, zp = 1.5 + 0.2j, 2.0
    vals = []
    for h in (1e-2, 1e-3, 1e-4):
        p = params(zp, 1.0, h)
        vals.append(abs(R.barrier_top_An(p, 0, k, zp + k * k)))
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-3


def test_an_formula():
    p = params(2.0, 0.0, 0.01)
    k, mu = 2.0 + 0.1j, 5.0 + 0.3j
    om = cmath.sqrt(mu + 1.25e-4 - 1.0)
    expect = -2.0 - k * k + mu - 1j * 0.01 * 3 * om
    assert R.barrier_top_An(p, 1, k, mu) == pytest.approx(expect, rel=1e-15)
    model = R.barrier_top_model(p, 1, k, mu)
    assert model.a_offset == pytest.approx(-2.0 - k * k + mu - 0.5e-4, rel=1e-15)
    assert model.omega == pytest.approx(om, rel=1e-15)


def test_an_branch_violation():
    with pytest.raises(R.BranchError):
        R.barrier_top_An(params(2.0, 0.0, 0.01), 0, 1.0, 0.5)


def test_rough_estimate():
    p = params(2.0, 0.0, 0.01)
    mu = 100.0 + 0.3j
    assert R.rough_estimate(p, 0, mu, i_sign=1).imag == pytest.approx(0.1 + 0.3)
    assert R.rough_estimate(p, 0, mu).imag == pytest.approx(-0.1 + 0.3)
    assert R.rough_estimate(p, 2, mu).real == pytest.approx(98.0)


# ---------------------------------------------------------------- equal charges


def test_equal_charges_residual():
    rec = R.solve_equal_charges(PEQ, 0, 100)
    k = rec.energy.k
    assert abs(R.equal_charges_lhs(PEQ, 0, 100, k, rec.i_sign)) < 1e-12 * max(1, abs(k) ** 2)
    assert rec.regime is Regime.EQUAL_CHARGES
    assert rec.e.imag < 0


def test_equal_charges_argument_principle():
    rec = R.solve_equal_charges(PEQ, 0, 100)
    k = rec.energy.k
    f = lambda z: R.equal_charges_lhs(PEQ, 0, 100, z, rec.i_sign)
    lo, hi = k - (0.5 + 0.5j), k + (0.5 + 0.5j)
    assert winding_number_box(f, lo, hi, samples=200) == 1
    ref = secant_root(f, k + 0.2 - 0.1j, k + 0.21 - 0.1j)
    assert abs(ref - k) < 1e-10


def test_equal_charges_needs_zero_z_minus():
    with pytest.raises(ParameterError):
        R.solve_equal_charges(params(2.0, 1.0, 0.01), 0, 10)


def test_equal_charges_monotone_in_n():
    ims = [R.solve_equal_charges(PEQ, n, 150).e.imag for n in range(4)]
    assert all(b < a for a, b in zip(ims, ims[1:]))


# ---------------------------------------------------------------- low-lying


def test_low_lying_reduces_to_equal_charges():
    # the equal-charge equation places n in mu and m in the barrier term
    ec = R.solve_equal_charges(PEQ, 0, 5)
    ll = R.solve_low_lying(PEQ, 5, 0, omega_offset=1.25 * PEQ.h**2)
    assert abs(ll.e - ec.e) < 1e-10


def test_low_lying_root():
    rec = R.solve_low_lying(PLL, 0, 3)
    assert rec.e == pytest.approx(1.0721503401136812 - 1.7584977732844296j, abs=1e-10)
    assert rec.branch == "upper"
    assert rec.residual < 1e-12
    f = lambda e: R.low_lying_lhs(PLL, 0, 3, e, "upper", rec.i_sign)
    assert winding_number(f, rec.e, 0.05, samples=128) == 1


def test_low_lying_residual_contract():
    for n, m in [(0, 1), (2, 10), (4, 50)]:
        rec = R.solve_low_lying(params(2.0, 0.0, 0.01), n, m)
        assert rec.residual < 1e-12
        assert abs(R.low_lying_lhs(rec.params, n, m, rec.e, rec.branch, rec.i_sign)) < 1e-12 * max(1, abs(rec.e))


@pytest.mark.parametrize("guess", [1.0 - 1.7j, 3.0 - 0.5j, 0.5 - 0.1j, 1.5 - 0.05j, 1.9 - 0.3j])
def test_low_lying_branch_frozen(guess):
    side = "upper" if abs(guess) > 0.5 * PLL.z_minus else "lower"
    try:
        rec = R.solve_low_lying(PLL, 0, 3, guess=guess)
    except (R.ConvergenceError, R.BranchError):
        return
    assert rec.branch == side
    assert (abs(rec.e) > 0.5 * PLL.z_minus) == (side == "upper")


def test_low_lying_mu_branches():
    assert R.low_lying_mu(PLL, 0, 3.0, "upper") == pytest.approx(-16 / 12 + cmath.sqrt(3.0 - 16 / 12) * 0.01)
    assert R.low_lying_mu(PLL, 1, 1.0, "lower") == pytest.approx(1.0 - 4.0 + math.sqrt(1.0) * 0.03)
    with pytest.raises(ValueError):
        R.low_lying_mu(PLL, 0, 1.0, "middle")


# ---------------------------------------------------------------- high energy


def test_high_energy_residual():
    for branch in ("small", "large"):
        rec = R.solve_high_energy(PHE, 1, 205, branch=branch)
        assert rec.residual < 1e-12
        assert abs(R.high_energy_lhs(PHE, 1, 205, rec.e, rec.i_sign)) < 1e-12 * max(1, abs(rec.e))
        assert rec.e.imag < 0


def test_high_energy_precondition():
    with pytest.raises(ParameterError):
        R.solve_high_energy(PHE, 0, 5)


def test_high_energy_lands_on_lp2():
    p = params(2.0, 4.0, 0.001)
    rec = R.solve_high_energy(p, 0, 400, branch="large", c_min=0.35)
    assert abs(rec.k_classical + p.z_plus + rec.e.real) <= 0.01 * abs(rec.k_classical)


def test_high_energy_spacing():
    p = params(2.0, 4.0, 0.001)
    ims = [R.solve_high_energy(p, n, 9000).e.imag for n in range(4)]
    gaps = -np.diff(ims)
    assert np.max(gaps) / np.min(gaps) - 1 < 0.05
    assert abs(-ims[0] / np.mean(gaps) - 0.5) < 0.1 * 0.5


def test_rough_estimate_consistency():
    for n in range(4):
        rec = R.solve_high_energy(PHE, n, 210, branch="large")
        assert rec.mu.real >= 100
        est = R.rough_estimate(PHE, n, rec.mu, rec.i_sign)
        assert abs(rec.e.imag - est.imag) <= 10 / math.sqrt(rec.mu.real)


def test_family_label():
    p = PHE
    big2 = (201 * 0.05) ** 2
    assert R.family_label(p, 200, 3 * big2) == "small"
    assert R.family_label(p, 200, 5 * big2) == "large"


# ---------------------------------------------------------------- conjugate pairing


def test_conjugate_pairing_equal_charges():
    rec = R.solve_equal_charges(PEQ, 1, 40)
    anti = R.solve_equal_charges(PEQ, 1, 40, guess=rec.energy.k.conjugate(), i_sign=-rec.i_sign, keep_antiresonance=True)
    assert abs(anti.energy.k - rec.energy.k.conjugate()) < 1e-9


def test_conjugate_pairing_low_lying():
    rec = R.solve_low_lying(PLL, 0, 3)
    anti = R.solve_low_lying(PLL, 0, 3, branch=rec.branch, guess=rec.e.conjugate() + 0.01, i_sign=-rec.i_sign, keep_antiresonance=True)
    assert abs(anti.e - rec.e.conjugate()) < 1e-9


@given(st.integers(0, 3), st.integers(200, 230), st.sampled_from(["small", "large"]))
def test_conjugate_pairing_high_energy(n, m, branch):
    rec = R.solve_high_energy(PHE, n, m, branch=branch)
    guess = R.high_energy_guess(PHE, m, branch).conjugate() + 0.01j
    anti = R.solve_high_energy(PHE, n, m, guess=guess, i_sign=-rec.i_sign, keep_antiresonance=True)
    assert abs(anti.e - rec.e.conjugate()) < 1e-9 * max(1, abs(rec.e))


def test_antiresonance_filtered_by_default():
    rec = R.solve_high_energy(PHE, 0, 210)
    with pytest.raises(R.ConvergenceError):
        R.solve_high_energy(PHE, 0, 210, guess=rec.e.conjugate(), i_sign=-rec.i_sign)


# ---------------------------------------------------------------- direct Jost zeros

PJ = params(2.0, 0.0, 0.1)


@pytest.fixture(scope="module")
def jost_root():
    return R.solve_cell(PJ, Regime.DIRECT_JOST, 0, 99)


def test_jost_zero_contract(jost_root):
    rec = jost_root
    assert rec.ok and rec.regime is Regime.DIRECT_JOST
    assert rec.branch == "resonance"
    k0 = rec.energy.k
    tr = LevelTracker.for_index(PJ, k0.real**2 - k0.imag**2, 199)
    f = lambda k: radial.jost_fplus(PJ, k, tr.evaluate(k * k))
    ring = [f(k0 + 1e-2 * cmath.exp(1j * t)) for t in np.linspace(0, 2 * math.pi, 32, endpoint=False)]
    assert abs(f(k0)) < 1e-8 * np.median(np.abs(ring))
    assert winding_number(f, k0, 1e-2, samples=64) == 1


def test_jost_zero_near_exact_mu_root(jost_root):
    seed = R.solve_high_energy(PJ, 0, 99)
    bt = R.solve_barrier_top(PJ, 0, 199, seed.e, i_sign=seed.i_sign)
    # the remaining gap is the dropped O(h^{3/2}) term of the barrier-top model
    assert abs(jost_root.e - bt.e) < PJ.h**1.5 * abs(bt.e) ** 0.5


def test_odd_barrier_index_fails():
    rec = R.solve_cell(PJ, Regime.DIRECT_JOST, 1, 99)
    assert not rec.ok and "odd barrier index" in rec.reason


# ---------------------------------------------------------------- grids


def test_figure3_grid_shape():
    recs = R.resonance_grid(PEQ, Regime.LOW_LYING, range(5), range(1, 251))
    assert len(recs) == 1250
    assert [(r.n, r.m) for r in recs[:3]] == [(0, 1), (0, 2), (0, 3)]
    assert all(r.ok for r in recs)


@pytest.mark.parametrize("branch", ["small", "large"])
def test_figure4_no_failures(branch):
    recs = R.resonance_grid(PHE, Regime.HIGH_ENERGY, range(4), range(200, 221), branch=branch)
    assert len(recs) == 84
    assert all(r.ok for r in recs), [r.reason for r in recs if not r.ok]
    assert all(r.residual < 1e-12 for r in recs)


def test_grid_deterministic_and_thread_independent():
    a = R.resonance_grid(PHE, Regime.HIGH_ENERGY, range(3), range(200, 210))
    b = R.resonance_grid(PHE, Regime.HIGH_ENERGY, range(3), range(200, 210))
    c = R.resonance_grid(PHE, Regime.HIGH_ENERGY, range(3), range(200, 210), threads=4)
    assert [r.e for r in a] == [r.e for r in b] == [r.e for r in c]


def test_grid_embeds_failures():
    recs = R.resonance_grid(PHE, Regime.HIGH_ENERGY, [0], [1, 200])
    assert not recs[0].ok and "C_min" in recs[0].reason
    assert math.isnan(recs[0].residual)
    assert recs[1].ok


def test_grid_rejects_empty_ranges():
    with pytest.raises(ValueError):
        R.resonance_grid(PHE, Regime.HIGH_ENERGY, [], [1])
