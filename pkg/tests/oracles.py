"""Independent reference computations used only by the tests.

None of these share code with the package: the Mathieu oracle works in
mpmath from Bessel-function series, the Hill oracle uses the complex
exponential basis, and the zero counter is a plain winding-number sum.
"""

import cmath
import math

import mpmath as mp
import numpy as np


# ---------------------------------------------------------------- argument principle


def winding_number(f, center, radius, samples=256):
    """Zeros minus poles of ``f`` inside a circle, from the total change of arg f."""
    ts = np.linspace(0.0, 2.0 * math.pi, samples + 1)
    vals = [f(center + radius * cmath.exp(1j * t)) for t in ts]
    total = 0.0
    for a, b in zip(vals[:-1], vals[1:]):
        d = cmath.phase(b / a)
        if abs(d) > 2.5:
            raise ValueError("contour too coarse for this function")
        total += d
    return int(round(total / (2.0 * math.pi)))


def winding_number_box(f, lo, hi, samples=64):
    """Same count on the rectangle with corners ``lo`` and ``hi``."""
    corners = [complex(lo.real, lo.imag), complex(hi.real, lo.imag), complex(hi.real, hi.imag), complex(lo.real, hi.imag)]
    pts = []
    for a, b in zip(corners, corners[1:] + corners[:1]):
        pts.extend(a + (b - a) * t for t in np.linspace(0.0, 1.0, samples, endpoint=False))
    pts.append(corners[0])
    vals = [f(z) for z in pts]
    total = 0.0
    for a, b in zip(vals[:-1], vals[1:]):
        d = cmath.phase(b / a)
        if abs(d) > 2.5:
            raise ValueError("contour too coarse for this function")
        total += d
    return int(round(total / (2.0 * math.pi)))


def secant_root(f, x0, x1, tol=1e-13, max_iter=80):
    f0, f1 = f(x0), f(x1)
    for _ in range(max_iter):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        x0, f0 = x1, f1
        x1, f1 = x2, f(x2)
        if abs(x1 - x0) < tol * max(1.0, abs(x1)):
            return x1
    return x1


# ---------------------------------------------------------------- Hill matrix, exponential basis


def hill_exponential(h, z_minus, e, size):
    """Matrix of ``-h^2 d^2 + Z- cos + E cos^2`` on ``exp(i j eta)``, ``|j| <= size``."""
    js = np.arange(-size, size + 1)
    n = js.size
    mat = np.zeros((n, n), dtype=complex)
    mat[np.arange(n), np.arange(n)] = h * h * js * js + 0.5 * e
    for i in range(n - 1):
        mat[i, i + 1] = mat[i + 1, i] = 0.5 * z_minus
    for i in range(n - 2):
        mat[i, i + 2] = mat[i + 2, i] = 0.25 * e
    return mat


def hill_exponential_eigs(h, z_minus, e, size=200):
    vals = np.linalg.eigvals(hill_exponential(h, z_minus, e, size))
    return np.sort_complex(vals)


# ---------------------------------------------------------------- modified Mathieu, Z+ = 0


class ModifiedMathieu:
    """Solutions of ``w'' - (a - 2 q cosh 2x) w = 0`` for complex ``a``, ``q``.

    The radial equation with ``Z+ = 0`` and ``h = 1`` is of this form with
    ``a = mu - k^2/2`` and ``q = k^2/4``. The Floquet exponent comes from
    Whittaker's determinant formula; the outgoing solution is the Hankel
    series ``sum (-1)^r c_2r H1_{nu+2r}(2 sqrt(q) cosh x)`` and the even
    solution ``sum c_2r cosh((nu+2r) x)``.
    """

    def __init__(self, k, mu, terms=40, dps=30):
        self.dps = dps
        with mp.workdps(dps):
            self.k = mp.mpc(k)
            self.a = mp.mpc(mu) - self.k**2 / 2
            self.q = self.k**2 / 4
            self.terms = terms
            self.nu = self._exponent()
            self.c = self._coefficients()

    def _hill_delta(self, size=12):
        a, q = self.a, self.q
        mat = mp.matrix(2 * size + 1, 2 * size + 1)
        for i in range(2 * size + 1):
            r = i - size
            mat[i, i] = 1
            xi_r = q / ((2 * r) ** 2 - a)
            if i > 0:
                mat[i, i - 1] = xi_r
            if i < 2 * size:
                mat[i, i + 1] = xi_r
        return mp.det(mat)

    def _exponent(self):
        # determinant formula for a starting value, then the r = 0 equation
        delta = self._hill_delta()
        s = mp.sqrt(delta) * mp.sin(mp.pi * mp.sqrt(self.a) / 2)
        nu0 = 2 * mp.asin(s) / mp.pi
        return mp.findroot(lambda nu: self._central(nu)[0], nu0, solver="secant", tol=mp.mpf(10) ** (-2 * self.dps // 3))

    def _central(self, nu):
        a, q, n = self.a, self.q, self.terms
        up = [mp.mpc(0)] * (n + 2)
        for r in range(n, 0, -1):
            up[r] = q / (a - (nu + 2 * r) ** 2 - q * up[r + 1])
        down = [mp.mpc(0)] * (n + 2)
        for r in range(n, 0, -1):
            down[r] = q / (a - (nu - 2 * r) ** 2 - q * down[r + 1])
        return a - nu**2 - q * (up[1] + down[1]), up, down

    def _coefficients(self):
        a, nu, n = self.a, self.nu, self.terms
        res, up, down = self._central(nu)
        self.residual = abs(res) / max(1, abs(a))
        c = {0: mp.mpc(1)}
        for r in range(1, n + 1):
            c[r] = c[r - 1] * up[r]
            c[-r] = c[-r + 1] * down[r]
        return c

    def outgoing(self, x):
        """Hankel series and its derivative at real ``x > 0``."""
        with mp.workdps(self.dps):
            x = mp.mpf(x)
            arg = self.k * mp.cosh(x)
            darg = self.k * mp.sinh(x)
            n = self.terms
            # H at orders nu + j for j = -2n-1 .. 2n+1; derivatives reuse odd offsets
            hv = {j: mp.hankel1(self.nu + j, arg) for j in range(-2 * n - 1, 2 * n + 2)}
            val = mp.mpc(0)
            der = mp.mpc(0)
            for r, cr in self.c.items():
                term = (-1) ** abs(r) * cr
                val += term * hv[2 * r]
                der += term * (hv[2 * r - 1] - hv[2 * r + 1]) / 2 * darg
            return complex(val), complex(der)

    def even(self, x):
        with mp.workdps(self.dps):
            x = mp.mpf(x)
            val = mp.mpc(0)
            der = mp.mpc(0)
            for r, cr in self.c.items():
                order = self.nu + 2 * r
                val += cr * mp.cosh(order * x)
                der += cr * order * mp.sinh(order * x)
            return complex(val), complex(der)

    def jost_like(self, x=1.0):
        """``W(outgoing, even) / even(0)``, proportional to ``f+`` up to a nonvanishing factor."""
        vp, dvp = self.outgoing(x)
        ve, dve = self.even(x)
        e0, _ = self.even(0.0)
        return (dvp * ve - vp * dve) / e0
