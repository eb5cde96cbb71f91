"""Radial kernel calculus on the q-ary tree via the discrete Abel transform.

For the canonical flow on the q-ary tree, kernels of functions of the flow
Laplacian are radial up to the product-measure prefactor:

    K(x, y) = q**(-(level(x) + level(y))/2) * E(d(x, y)),

and E is recovered from the symmetric-gradient kernel on the integer line.
Internally everything is stored in the scaled form A(d) = q**(d/2) * E(d),
which is bounded (no overflow at large distance) and satisfies the backward
recursion A(d) = gradk(d+1) + A(d+2)/q.  Since level(x) + level(y) + d(x,y)
is always even, kernel values are integer powers of q times A, so the exact
backend never leaves the rationals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exactnum import QSurd
from .zline import z_grad_multiplier_kernel, z_gradkernel_lambda_poly


def sphere_count(q: int, d: int, r: int) -> int:
    """Number of vertices at distance d and level offset r from a fixed vertex."""
    if q < 1 or d < 0:
        raise ValueError("need q >= 1 and d >= 0")
    if abs(r) == d:
        return q ** ((d - r) // 2)
    gap = d - abs(r)
    if gap > 0 and gap % 2 == 0:
        return (q - 1) * q ** ((d - r) // 2 - 1)
    return 0


def sphere_weight_scaled(q: int, d: int, exact: bool = False):
    """q**(-d/2) * sum over the distance-d sphere of q**((level offset)/2).

    Equals 2 + (d-1)(q-1)/q for d >= 1 and 1 for d = 0; this is the scaled
    sphere weight entering every radial column sum (the degree-one factor).
    """
    if d == 0:
        return Fraction(1) if exact else 1.0
    if exact:
        return 2 + Fraction((d - 1) * (q - 1), q)
    return 2.0 + (d - 1) * (q - 1) / q


def _surd(q, x):
    return x if isinstance(x, QSurd) else QSurd(q, Fraction(x))


def abel_forward(q: int, phi) -> list:
    """J_q(phi)(j) = q^{j/2} [phi(j) + ((q-1)/q) sum_{k>=1} q^k phi(j+2k)].

    phi is a finitely supported sequence on the naturals (list); exact
    rational/QSurd input stays exact, floats go through floats.
    """
    phi = list(phi)
    n = len(phi)
    exact = not any(isinstance(x, float) or isinstance(x, complex) for x in phi)
    out = []
    for j in range(n):
        if exact:
            tail = sum((Fraction(q) ** k) * _surd(q, phi[j + 2 * k])
                       for k in range(1, (n - 1 - j) // 2 + 1)) or QSurd(q)
            s = _surd(q, phi[j]) + _surd(q, tail) * Fraction(q - 1, q)
            out.append(QSurd.sqrt_q_power(q, j) * s)
        else:
            tail = sum((float(q) ** k) * phi[j + 2 * k]
                       for k in range(1, (n - 1 - j) // 2 + 1))
            out.append(q ** (j / 2) * (phi[j] + (q - 1) / q * tail))
    return out


def abel_inverse(q: int, psi) -> list:
    """Inverse transform: sum_{j>=0} q^{-(n+2j)/2} (psi(n+2j) - psi(n+2j+2)).

    The summand is the symmetric gradient of psi at n+2j+1, with psi extended
    by zeros beyond its support.
    """
    psi = list(psi)
    n = len(psi)
    exact = not any(isinstance(x, float) or isinstance(x, complex) for x in psi)

    def at(i):
        if 0 <= i < n:
            return psi[i]
        return Fraction(0) if exact else 0.0

    out = []
    for m in range(n):
        if exact:
            acc = QSurd(q)
            for j in range(0, (n - m) // 2 + 1):
                g = _surd(q, at(m + 2 * j)) - _surd(q, at(m + 2 * j + 2))
                acc = acc + QSurd.sqrt_q_power(q, -(m + 2 * j)) * g
            out.append(acc)
        else:
            acc = 0.0
            for j in range(0, (n - m) // 2 + 1):
                acc += q ** (-(m + 2 * j) / 2) * (at(m + 2 * j) - at(m + 2 * j + 2))
            out.append(acc)
    return out


@dataclass
class RadialKernel:
    """Scaled radial coefficients A(d) = q^{d/2} E_F(d) for d <= kmax.

    tail_scaled bounds |A_true(d) - A(d)| uniformly in d (truncation of the
    geometric sum plus any unresolved gradient-kernel tail).
    """

    q: int
    A: np.ndarray
    kmax: int
    tail_scaled: float = 0.0
    meta: dict = field(default_factory=dict)

    def e(self, k: int) -> complex:
        if k < 0 or k > self.kmax:
            raise IndexError(f"k={k} beyond kmax={self.kmax}")
        return complex(self.A[k]) * self.q ** (-k / 2.0)

    def e_tail(self, k: int) -> float:
        return self.tail_scaled * self.q ** (-k / 2.0)

    def csv_rows(self):
        return [(k, self.e(k).real, self.e(k).imag, self.e_tail(k))
                for k in range(self.kmax + 1)]


def radial_from_gradkernel(q: int, gradk: np.ndarray, kmax: int,
                           grad_tail: float = 0.0, meta=None) -> RadialKernel:
    """Assemble A from one-sided gradient-kernel values gradk[n], n = 0..nmax.

    A(d) = sum_{j>=0} q^{-j} gradk(d+2j+1); the recursion runs backward from
    the end of the array.  grad_tail bounds |gradk(n)| past nmax, and feeds
    the recorded tail bound (geometric in 1/q).
    """
    if q < 2:
        raise ValueError("radial assembly needs q >= 2 (use zline for q = 1)")
    nmax = len(gradk) - 1
    if kmax + 1 > nmax:
        raise ValueError("gradient kernel array too short for kmax")
    A = np.zeros(nmax + 2, dtype=complex)
    for d in range(nmax - 1, -1, -1):
        A[d] = gradk[d + 1] + A[d + 2] / q
    tail = grad_tail / (1.0 - 1.0 / q)
    return RadialKernel(q, A[:kmax + 1].copy(), kmax, float(tail), meta or {})


def e_f_coefficients(q: int, fn, kmax: int, tol: float = 1e-12,
                     bandwidth: int = 64, grid: int | None = None) -> RadialKernel:
    """Radial coefficients of F(flow Laplacian) on the q-ary tree.

    The gradient kernel on the line is computed far enough out that both the
    geometric truncation and the remaining kernel mass are below tol.
    """
    if q < 2:
        raise ValueError("need q >= 2")
    # worst-case bound sup |gradk| <= 2 sup |F| feeds the geometric tail
    lam = np.linspace(0.0, 2.0, 257)
    supf = float(np.max(np.abs(np.asarray(fn(lam), dtype=complex))))
    supg = 2.0 * supf if supf > 0 else 1.0
    jmax = 1
    while supg * q ** (-jmax) / (1.0 - 1.0 / q) > tol:
        jmax += 1
        if jmax > 4000:
            raise ValueError("tolerance unreachable within j-limit")
    nmax = kmax + 2 * jmax + 2
    zk = z_grad_multiplier_kernel(fn, nmax, grid=grid, bandwidth=bandwidth)
    gradk = zk.one_sided()
    tail_grad = float(np.max(np.abs(gradk[-3:])))
    rad = radial_from_gradkernel(q, gradk, kmax, grad_tail=max(tail_grad, 0.0),
                                 meta={"nmax": nmax, "grid": zk.grid, "tol": tol})
    rad.tail_scaled += supg * q ** (-jmax) / (1.0 - 1.0 / q)
    return rad


def e_f_exact(q: int, coeffs, kmax: int) -> list[Fraction]:
    """Exact scaled coefficients A(d) for a polynomial in the Laplacian."""
    gk = z_gradkernel_lambda_poly(coeffs)
    hi = max((n for n in gk if n > 0), default=0)
    A = [Fraction(0)] * (max(kmax + 3, hi + 2))
    for d in range(len(A) - 3, -1, -1):
        A[d] = gk.get(d + 1, Fraction(0)) + A[d + 2] / q
    return A[:kmax + 1]


def homog_kernel_value(q: int, radial: RadialKernel, lx: int, ly: int, d: int):
    """K(x, y) = q^{-(lx+ly)/2} E(d) with its propagated tail bound.

    The formula is radial; the caller owns the geometry (whether a vertex
    pair with these levels and distance exists).
    """
    if d > radial.kmax:
        raise IndexError(f"distance {d} beyond kmax={radial.kmax}")
    if (lx + ly + d) % 2:
        raise ValueError("no vertex pair has odd level(x)+level(y)+d")
    pref = float(q) ** (-(lx + ly + d) // 2)
    return complex(radial.A[d]) * pref, radial.tail_scaled * pref


def homog_kernel_value_exact(q: int, A_exact, lx: int, ly: int, d: int) -> Fraction:
    if (lx + ly + d) % 2:
        raise ValueError("no vertex pair has odd level(x)+level(y)+d")
    return A_exact[d] * Fraction(q) ** (-(lx + ly + d) // 2)


_VARIANTS = ("plain", "grad_x", "gradstar_y", "grad_both")


def homog_weighted_opsum(q: int, radial: RadialKernel, weight, variant: str = "plain",
                         tail_check: bool = True):
    """sup_y sum_x w(d(x,y)) |K(x,y)| m(x) on the q-ary tree, in closed form.

    variant selects the operator: F(L) itself, grad F(L) (gradient in the
    first variable), F(L) grad* (gradient in the second), or grad F(L) grad*.
    The sum collapses over spheres; by homogeneity it does not depend on y.
    Returns (value, tail_estimate); raises if the truncated tail fails the
    dominated check.
    """
    if variant not in _VARIANTS:
        raise ValueError(f"variant must be one of {_VARIANTS}")
    A = radial.A
    kmax = radial.kmax
    terms = np.zeros(kmax - 1 if variant == "grad_both" else kmax, dtype=float)
    for d in range(len(terms)):
        s = sphere_weight_scaled(q, d)
        if variant == "plain":
            val = abs(A[d]) * s
        elif variant in ("grad_x", "gradstar_y"):
            b_near = abs(A[d] - A[d + 1] / q)
            b_far = abs(A[d] - A[d - 1]) if d >= 1 else 0.0
            val = b_near + (s - 1.0) * b_far
        else:
            if d == 0:
                val = abs(A[0] - 2 * A[1] / q + A[0] / q)
            else:
                b_comp = abs(A[d] - A[d - 1] - A[d + 1] / q + A[d] / q)
                b_inc = abs(A[d] - 2 * A[d - 1] + (A[d - 2] if d >= 2 else 0.0))
                val = 2.0 * b_comp + max(s - 2.0, 0.0) * b_inc
        terms[d] = weight(d) * val
    total = float(np.sum(terms))
    tail = float(np.sum(terms[-4:]))
    if tail_check and total > 0 and tail > 1e-6 * total + 1e-300:
        head = float(np.sum(terms[-8:-4]))
        if head <= tail:
            raise ValueError(
                f"dominated-tail check failed (kmax={kmax} too small: "
                f"last block {tail:.3e} vs previous {head:.3e})")
    return total, tail


def homog_weighted_l1(q: int, radial: RadialKernel, weight, tail_check: bool = True):
    """Weighted L1 column mass of F(L) on the q-ary tree (anchor-independent)."""
    return homog_weighted_opsum(q, radial, weight, "plain", tail_check)


def sharpness_radial(q: int, t: float, kmax: int, grid: int | None = None,
                     bump=None) -> dict:
    """Scaled oscillating-multiplier coefficients for the modulated cutoff.

    The multiplier is exp(i t lam) * bump(lam) with the documented smooth
    bump (plateau on [-1/4, 1/4], support in (-1/2, 1/2)).  Returns per-k
    values of q^{k/2} * (E(k) - sqrt(q) E(k+1)), the quantity whose
    (k+1)-weighted partial sums exhibit the lower-bound growth.
    """
    from .bumps import chi0
    bump = bump or chi0

    def fn(lam):
        return np.exp(1j * t * np.asarray(lam)) * bump(np.asarray(lam))

    nmax = int(2 * t) + 2 * kmax + 120
    if grid is None:
        grid = 1 << int(np.ceil(np.log2(max(8192, 16 * (nmax + int(t) + 40)))))
    zk = z_grad_multiplier_kernel(fn, nmax, grid=grid)
    rad = radial_from_gradkernel(q, zk.one_sided(), kmax + 1,
                                 grad_tail=float(np.max(np.abs(zk.one_sided()[-3:]))),
                                 meta={"t": t, "grid": zk.grid})
    A = rad.A
    scaled = {k: complex(A[k] - A[k + 1]) for k in range(kmax + 1)}
    return {
        "q": q,
        "t": t,
        "etilde_scaled": scaled,
        "etilde": {k: v * q ** (-k / 2.0) for k, v in scaled.items()},
        "tail_scaled": rad.tail_scaled,
        "grid": zk.grid,
    }
