"""Spectrum of the periodic angular operator ``-h^2 d^2 + Z- cos + E cos^2``.

The operator is discretized in a real trigonometric basis. Cosine and sine
modes never couple, so the problem splits into a cosine block and a sine
block. When ``Z- = 0`` each of those splits again by the parity of the mode
frequency, giving four blocks.

Matrices are stored as bands (the operator couples frequencies at most two
apart), real eigenpairs come from ``scipy.linalg.eig_banded`` and complex
energies are reached by continuation from the real axis with Rayleigh
quotient iteration.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .core import ProblemParams


class AngularError(RuntimeError):
    """Truncation ladder or continuation failure."""


class TrackingError(AngularError):
    def __init__(self, message: str, indices: tuple[int, ...] = ()):
        super().__init__(message)
        self.indices = indices


class Parity(str, enum.Enum):
    EVEN_SYM = "even_sym"
    EVEN_ANTISYM = "even_antisym"
    ODD_SYM = "odd_sym"
    ODD_ANTISYM = "odd_antisym"


class Method(str, enum.Enum):
    MATRIX = "matrix"
    SHOOTING = "shooting"
    QUASIMODE = "quasimode"
    HIGH_ENERGY = "high_energy"


PARITY_ORDER = {p: i for i, p in enumerate(Parity)}

# block name -> (trig kind, first frequency, frequency stride)
BLOCKS = {
    "cos": ("cos", 0, 1),
    "sin": ("sin", 1, 1),
    Parity.EVEN_SYM.value: ("cos", 0, 2),
    Parity.EVEN_ANTISYM.value: ("cos", 1, 2),
    Parity.ODD_SYM.value: ("sin", 1, 2),
    Parity.ODD_ANTISYM.value: ("sin", 2, 2),
}

START_TRUNCATION = 64
MAX_TRUNCATION = 4096
LADDER_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class AngularLevel:
    """One eigenvalue of the angular operator.

    Attributes
    ----------
    index : int
        Position in the ascending spectrum at real energy.
    mu : complex
    parity : Parity
    method : Method
    err_estimate : float
    block : str
        Basis block holding the eigenvector (matrix method only).
    coefficients : ndarray or None
        Normalized coefficients in the block basis (matrix method only).
    continuation_guaranteed : bool
        True when ``E > 2|Z-|``, where analytic continuation in E is proven.
    """

    index: int
    mu: complex
    parity: Parity
    method: Method
    err_estimate: float
    block: str = ""
    coefficients: Optional[np.ndarray] = None
    e: complex = 0.0
    continuation_guaranteed: bool = False
    notes: str = ""


@dataclass(frozen=True)
class MathieuParams:
    lam: complex
    gamma1: float
    gamma2: complex
    delta: complex


@dataclass(frozen=True)
class QuasimodeModel:
    """Harmonic model at the bottom of the angular potential.

    Attributes
    ----------
    eta_star : float
        Location of the minimum (``pi`` on the single-well branch).
    a_offset : float
        Potential value at the minimum.
    b_freq : float
        Harmonic frequency at the minimum.
    branch : str
        ``"double_well"`` for ``E > Z-/2`` and ``"pi_well"`` below.
    """

    eta_star: float
    a_offset: float
    b_freq: float
    branch: str


# ---------------------------------------------------------------- matrices


def block_frequencies(block: str, truncation: int) -> np.ndarray:
    kind, first, stride = BLOCKS[block]
    return first + stride * np.arange(truncation)


def _blocks_for(params: ProblemParams) -> tuple[str, ...]:
    if params.z_minus == 0.0:
        return tuple(p.value for p in Parity)
    return ("cos", "sin")


def hill_bands(
    block: str, truncation: int, h: float, z_minus: float, e: complex
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Diagonal, first and second super-diagonal of one block matrix."""
    kind, first, stride = BLOCKS[block]
    if stride == 2 and z_minus != 0.0:
        raise ValueError("four-block split needs Z- = 0")
    nfull = first + stride * truncation + 2
    freqs = np.arange(nfull, dtype=float)
    dtype = complex if isinstance(e, complex) or np.iscomplexobj(e) else float
    d0 = (h * h * freqs * freqs + 0.5 * e).astype(dtype)
    d1 = np.full(nfull - 1, 0.5 * z_minus, dtype=dtype)
    d2 = np.full(nfull - 2, 0.25 * e, dtype=dtype)
    if kind == "cos":
        d0[1] += 0.25 * e
        d1[0] *= math.sqrt(2.0)
        d2[0] *= math.sqrt(2.0)
    else:
        d0[1] -= 0.25 * e
    sel = first + stride * np.arange(truncation)
    if stride == 1:
        return d0[sel], d1[sel[:-1]], d2[sel[:-2]]
    # only the second diagonal of the full matrix survives inside a parity block
    return d0[sel], d2[sel[:-1]], np.zeros(max(truncation - 2, 0), dtype=dtype)


def hill_matrix(params: ProblemParams, e: complex, truncation: int, block: str = "cos") -> np.ndarray:
    """Dense matrix of the angular operator restricted to one basis block.

    The basis is ``1/sqrt(2 pi)``, ``cos(n eta)/sqrt(pi)`` and ``sin(n eta)/sqrt(pi)``.
    Blocks are ``"cos"`` and ``"sin"``, or one of the four parity names when
    ``Z- = 0``. The matrix is real symmetric for real ``e`` and complex
    symmetric otherwise.
    """
    if truncation < 8:
        raise ValueError("truncation must be at least 8")
    d0, d1, d2 = hill_bands(block, truncation, params.h, params.z_minus, e)
    mat = np.diag(d0) + np.diag(d1, 1) + np.diag(d1, -1)
    if d2.size:
        mat = mat + np.diag(d2, 2) + np.diag(d2, -2)
    return mat


def _upper_band(d0, d1, d2) -> np.ndarray:
    n = d0.size
    ab = np.zeros((3, n), dtype=d0.dtype)
    ab[2] = d0
    ab[1, 1:] = d1
    ab[0, 2:] = d2
    return ab


def _full_band(d0, d1, d2) -> np.ndarray:
    n = d0.size
    ab = np.zeros((5, n), dtype=complex)
    ab[2] = d0
    ab[1, 1:] = d1
    ab[0, 2:] = d2
    ab[3, :-1] = d1
    ab[4, :-2] = d2
    return ab


def _band_matvec(d0, d1, d2, v):
    out = d0 * v
    out[:-1] += d1 * v[1:]
    out[1:] += d1 * v[:-1]
    if d2.size:
        out[:-2] += d2 * v[2:]
        out[2:] += d2 * v[:-2]
    return out


def _block_eigs(block: str, truncation: int, params: ProblemParams, e: float, count: int):
    d0, d1, d2 = hill_bands(block, truncation, params.h, params.z_minus, float(e))
    count = min(count, truncation)
    vals, vecs = linalg.eig_banded(
        _upper_band(d0, d1, d2), select="i", select_range=(0, count - 1)
    )
    return vals, vecs


def _label(block: str, vec: np.ndarray) -> Parity:
    if block in (p.value for p in Parity):
        return Parity(block)
    weights = np.abs(vec) ** 2
    even_freq = weights[0::2].sum() if block == "cos" else weights[1::2].sum()
    odd_freq = weights.sum() - even_freq
    if block == "cos":
        return Parity.EVEN_SYM if even_freq >= odd_freq else Parity.EVEN_ANTISYM
    return Parity.ODD_SYM if odd_freq >= even_freq else Parity.ODD_ANTISYM


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    mags = np.abs(vec)
    big = np.nonzero(mags > 1e-12 * mags.max())[0]
    first = vec[big[0]]
    ref = first.real if abs(first.real) > 0 else first.imag
    return -vec if ref < 0 else vec


@dataclass
class _Candidate:
    mu: float
    block: str
    local: int
    vec: np.ndarray
    parity: Parity = field(default=Parity.EVEN_SYM)


def _real_spectrum(params: ProblemParams, e: float, count: int, truncation: int):
    cands: list[_Candidate] = []
    for block in _blocks_for(params):
        vals, vecs = _block_eigs(block, truncation, params, e, count)
        for j in range(vals.size):
            vec = _fix_sign(vecs[:, j])
            cands.append(_Candidate(float(vals[j]), block, j, vec, _label(block, vec)))
    cands.sort(key=lambda c: c.mu)
    scale = max(1.0, max(abs(c.mu) for c in cands))
    # ties only exist for Z- = 0 (free circle, parity pairs); order them by parity
    changed = params.z_minus == 0.0
    while changed:
        changed = False
        for i in range(len(cands) - 1):
            a, b = cands[i], cands[i + 1]
            if abs(a.mu - b.mu) <= 1e-12 * scale and PARITY_ORDER[a.parity] > PARITY_ORDER[b.parity]:
                cands[i], cands[i + 1] = b, a
                changed = True
    return cands[:count]


def real_spectrum(params: ProblemParams, e: float, count: int, start_truncation: int = START_TRUNCATION):
    """Lowest ``count`` eigenpairs at real ``e`` with the truncation ladder.

    Returns ``(candidates, truncation)``.
    """
    n = max(start_truncation, 8)
    while n < count + 16:
        n *= 2
    prev = _real_spectrum(params, e, count, n)
    while True:
        nxt = n * 2
        if nxt > MAX_TRUNCATION:
            raise AngularError(f"truncation ladder did not converge below {MAX_TRUNCATION} modes")
        cur = _real_spectrum(params, e, count, nxt)
        last_prev, last_cur = prev[-1].mu, cur[-1].mu
        if abs(last_cur - last_prev) <= LADDER_RTOL * max(1.0, abs(last_cur)):
            return cur, nxt
        prev, n = cur, nxt


def _check_nondegenerate(params: ProblemParams, cands) -> None:
    if params.z_minus <= 0.0:
        return
    scale = max(1.0, max(abs(c.mu) for c in cands))
    by_block: dict[str, list[float]] = {}
    for c in cands:
        by_block.setdefault(c.block, []).append(c.mu)
    for block, mus in by_block.items():
        gaps = np.diff(np.sort(mus))
        if gaps.size and gaps.min() <= 1e-12 * scale:
            raise AngularError(f"degenerate levels inside block {block}")


def angular_eigenvalues(
    params: ProblemParams,
    e: complex,
    count: int,
    start_truncation: int = START_TRUNCATION,
) -> list[AngularLevel]:
    """Lowest ``count`` angular eigenvalues at energy ``e``.

    At real energy the levels are sorted ascending. At complex energy each
    level is followed along the straight path from ``Re(e)``, keeping the
    index it had there.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    e = complex(e)
    guaranteed = e.real > 2.0 * abs(params.z_minus)
    cands, trunc = real_spectrum(params, e.real, count, start_truncation)
    _check_nondegenerate(params, cands)
    levels = []
    for idx, c in enumerate(cands):
        if e.imag == 0.0:
            mu: complex = c.mu
            vec = c.vec
        else:
            tracker = LevelTracker(params, c.block, c.local, e.real, trunc, vec=c.vec, mu=c.mu, index=idx)
            mu = tracker.evaluate(e)
            vec = tracker.vector
        err = LADDER_RTOL * max(1.0, abs(mu))
        levels.append(
            AngularLevel(
                index=idx,
                mu=mu if e.imag != 0.0 else float(np.real(mu)),
                parity=c.parity,
                method=Method.MATRIX,
                err_estimate=err,
                block=c.block,
                coefficients=vec,
                e=e,
                continuation_guaranteed=guaranteed,
            )
        )
    return levels


class LevelTracker:
    """Follows one eigenvalue of a block matrix as the energy moves in C.

    Each move goes along a straight segment in substeps. In every substep the
    eigenvalue is predicted from its first derivative and refined by Rayleigh
    quotient iteration for complex symmetric matrices (bilinear form). A
    substep is halved when the refined value strays from the prediction or the
    eigenvector turns, which is how two approaching levels are detected.
    """

    def __init__(
        self,
        params: ProblemParams,
        block: str,
        local: int,
        e_real: float,
        truncation: int,
        vec: Optional[np.ndarray] = None,
        mu: Optional[float] = None,
        index: int = -1,
    ):
        self.params = params
        self.block = block
        self.local = local
        self.index = index
        self.truncation = truncation
        if vec is None or mu is None:
            vals, vecs = _block_eigs(block, truncation, params, e_real, local + 1)
            mu = float(vals[local])
            vec = _fix_sign(vecs[:, local])
        self.e = complex(e_real)
        self.mu = complex(mu)
        self.vector = np.asarray(vec, dtype=complex)
        # derivative of the matrix with respect to E (matrix of cos^2)
        self._dbands = hill_bands(block, truncation, 0.0, 0.0, 1.0 + 0.0j)
        self.substeps_taken = 0

    @classmethod
    def for_index(
        cls, params: ProblemParams, e_real: float, index: int, start_truncation: int = START_TRUNCATION
    ) -> "LevelTracker":
        cands, trunc = real_spectrum(params, e_real, index + 1, start_truncation)
        c = cands[index]
        return cls(params, c.block, c.local, e_real, trunc, vec=c.vec, mu=c.mu, index=index)

    def _bands(self, e: complex):
        return hill_bands(self.block, self.truncation, self.params.h, self.params.z_minus, complex(e))

    def _rqi(self, e: complex, mu0: complex, v0: np.ndarray, tol: float = 1e-14):
        d0, d1, d2 = self._bands(e)
        v = v0 / cmath.sqrt(v0 @ v0)
        av = _band_matvec(d0, d1, d2, v)
        lam = (v @ av) / (v @ v)
        if abs(lam - mu0) > abs(mu0 - self.mu) + 1.0:
            lam = mu0
        for _ in range(30):
            ab = _full_band(d0 - lam, d1, d2)
            try:
                y = linalg.solve_banded((2, 2), ab, v, check_finite=False)
            except linalg.LinAlgError:
                break
            nrm = cmath.sqrt(y @ y)
            if nrm == 0:
                break
            v = y / nrm
            av = _band_matvec(d0, d1, d2, v)
            new = (v @ av) / (v @ v)
            done = abs(new - lam) <= tol * max(1.0, abs(new))
            lam = new
            if done:
                break
        return lam, v

    def evaluate(self, e: complex, min_substeps: int = 4) -> complex:
        """Move to energy ``e`` and return the tracked eigenvalue."""
        e = complex(e)
        total = e - self.e
        if total == 0:
            return self.mu
        dist = abs(total)
        frac = 0.0
        step = 1.0 / min_substeps
        while frac < 1.0:
            step = min(step, 1.0 - frac)
            e_next = self.e + total * step
            de = e_next - self.e
            dmu = (self.vector @ _band_matvec(*self._dbands, self.vector)) / (self.vector @ self.vector)
            pred = self.mu + dmu * de
            lam, v = self._rqi(e_next, pred, self.vector)
            overlap = abs(np.vdot(v, self.vector)) / max(
                1e-300, np.sqrt(np.sum(np.abs(v) ** 2) * np.sum(np.abs(self.vector) ** 2))
            )
            dev = abs(lam - pred)
            if dev <= 0.1 * abs(de) + 1e-12 * max(1.0, abs(lam)) and overlap > 0.5:
                self.e, self.mu, self.vector = e_next, lam, v
                frac += step
                step *= 1.5
                self.substeps_taken += 1
            else:
                step *= 0.5
                if step * dist < 1e-8 * max(1.0, dist):
                    raise TrackingError(
                        f"level {self.index} (block {self.block}, local {self.local}) "
                        f"collides near E={e_next}",
                        indices=(self.index,),
                    )
        self.e = e
        return self.mu

    def tail_ratio(self) -> float:
        """Weight of the last 10% of coefficients, a truncation diagnostic."""
        mags = np.abs(self.vector)
        cut = int(0.9 * mags.size)
        return float(mags[cut:].max() / mags.max())

    def level(self, continuation_guaranteed: bool = False) -> AngularLevel:
        vec = self.vector / cmath.sqrt(self.vector @ self.vector)
        vec = _fix_sign(vec)
        return AngularLevel(
            index=self.index,
            mu=self.mu,
            parity=_label(self.block, vec),
            method=Method.MATRIX,
            err_estimate=LADDER_RTOL * max(1.0, abs(self.mu)),
            block=self.block,
            coefficients=vec,
            e=self.e,
            continuation_guaranteed=continuation_guaranteed,
        )


# ---------------------------------------------------------------- eigenfunctions


def _basis_values(block: str, truncation: int, eta: np.ndarray) -> np.ndarray:
    kind, _first, _stride = BLOCKS[block]
    freqs = block_frequencies(block, truncation)
    arg = np.multiply.outer(eta, freqs)
    if kind == "cos":
        vals = np.cos(arg) / math.sqrt(math.pi)
        vals[..., freqs == 0] = 1.0 / math.sqrt(2.0 * math.pi)
        return vals
    return np.sin(arg) / math.sqrt(math.pi)


def angular_eigenfunction(level: AngularLevel, params: ProblemParams, e: complex, eta):
    """Evaluate the normalized eigenfunction of a matrix-method level at ``eta``.

    For real energy the function is real with unit L2 norm; for complex energy
    the coefficients carry the bilinear normalization ``sum c**2 = 1``.
    """
    if level.coefficients is None or level.method != Method.MATRIX:
        raise ValueError("level has no Fourier coefficients")
    coeffs = np.asarray(level.coefficients)
    eta_arr = np.asarray(eta, dtype=float)
    vals = _basis_values(level.block, coeffs.size, eta_arr) @ coeffs
    if np.isrealobj(coeffs) or np.all(np.abs(np.imag(coeffs)) == 0):
        vals = np.real(vals)
    return vals if eta_arr.ndim else vals[()]


# ---------------------------------------------------------------- asymptotic levels


def quasimode_model(params: ProblemParams, e: float) -> QuasimodeModel:
    zm = params.z_minus
    e = float(e)
    if not e > 0.0:
        raise ValueError("quasimode model needs E > 0")
    if e == 0.5 * zm:
        raise ValueError("E = Z-/2 is the boundary between the two wells")
    if e > 0.5 * zm:
        return QuasimodeModel(
            eta_star=math.acos(-zm / (2.0 * e)),
            a_offset=-zm * zm / (4.0 * e),
            b_freq=math.sqrt(e * (1.0 - zm * zm / (4.0 * e * e))),
            branch="double_well",
        )
    return QuasimodeModel(eta_star=math.pi, a_offset=e - zm, b_freq=math.sqrt(0.5 * zm - e), branch="pi_well")


def quasimode_mu(params: ProblemParams, e: float, n: int) -> AngularLevel:
    """Harmonic approximation ``A + B (2n+1) h`` at the bottom of the angular well.

    On the double-well branch each value approximates a pair of eigenvalues.
    """
    model = quasimode_model(params, e)
    mu = model.a_offset + model.b_freq * (2 * n + 1) * params.h
    note = "pair" if model.branch == "double_well" else "single"
    return AngularLevel(
        index=n,
        mu=mu,
        parity=Parity.EVEN_SYM,
        method=Method.QUASIMODE,
        err_estimate=params.h**1.5,
        e=e,
        continuation_guaranteed=e > 2.0 * abs(params.z_minus),
        notes=f"{model.branch}; {note}",
    )


def mathieu_parameters(mu: complex, e: complex, h: float, z_minus: float = 0.0) -> MathieuParams:
    """Rescaled parameters of the angular equation."""
    if not h > 0:
        raise ValueError("h must be positive")
    h2 = h * h
    return MathieuParams(
        lam=(2.0 * mu - e) / (2.0 * h2),
        gamma1=z_minus / h2,
        gamma2=e / (2.0 * h2),
        delta=e / (4.0 * h2),
    )


def mu_at(params: ProblemParams, e: complex, index: int) -> complex:
    """Single angular eigenvalue ``mu_index(e)``, continued from ``Re(e)`` when complex."""
    e = complex(e)
    tracker = LevelTracker.for_index(params, e.real, index)
    if e.imag == 0.0:
        return tracker.mu
    return tracker.evaluate(e)


def spectrum_values(levels: Sequence[AngularLevel]) -> np.ndarray:
    return np.array([lv.mu for lv in levels])
