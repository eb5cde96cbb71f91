"""Exact application of the shift pair and derived operators on windows.

Functions on a window are sparse dicts; every application returns a new
function together with the set of vertices where the result is certified
exact.  Certification tracks two facts: which stored values were exact so
far, and whether the function is known to vanish at every ambient vertex
outside the window (true initially for finitely supported input, and
invalidated once mass crosses the window boundary).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

from .ncpoly import Z1, Z2, NcPolynomial
from .trees import FlowMeasure, InsufficientMarginError, TreeWindow, Vertex, safe_region


@dataclass
class WindowFunction:
    values: dict[Vertex, complex]
    safe: frozenset[Vertex]
    zero_outside: bool

    def value(self, v: Vertex):
        return self.values.get(v, 0)


def indicator(window: TreeWindow, y: Vertex, scale=1) -> WindowFunction:
    if y not in window.level:
        raise KeyError(f"vertex {y} not in window")
    return WindowFunction({y: scale}, frozenset(window.vertices), True)


def _zero_on_incomplete(window: TreeWindow, f: WindowFunction) -> bool:
    return all(window.is_complete(v) for v in f.values if f.values[v])


def apply_shift(window: TreeWindow, measure: FlowMeasure, f: WindowFunction) -> WindowFunction:
    """(Sigma f)(x) = f(parent(x)); the apex value is known only if the
    function is certified zero outside the window."""
    vals: dict[Vertex, complex] = {}
    safe = set()
    for v in window.vertices:
        p = window.parent(v)
        if p is None:
            if f.zero_outside:
                safe.add(v)
            continue
        x = f.value(p)
        if x:
            vals[v] = x
        if p in f.safe:
            safe.add(v)
    zero = f.zero_outside and _zero_on_incomplete(window, f)
    return WindowFunction(vals, frozenset(safe), zero)


def apply_shift_adjoint(window: TreeWindow, measure: FlowMeasure,
                        f: WindowFunction) -> WindowFunction:
    """(Sigma* f)(x) = (1/m(x)) sum over successors of f(y) m(y)."""
    m = measure.values
    vals: dict[Vertex, complex] = {}
    safe = set()
    for v in window.vertices:
        cs = window.children(v)
        acc = 0
        for c in cs:
            fv = f.value(c)
            if fv:
                acc = acc + fv * m[c]
        if acc:
            vals[v] = acc / m[v]
        if all(c in f.safe for c in cs) and (window.is_complete(v) or f.zero_outside):
            safe.add(v)
    zero = f.zero_outside and not f.value(window.apex)
    return WindowFunction(vals, frozenset(safe), zero)


def apply_letter(window, measure, f, letter):
    if letter == Z1:
        return apply_shift(window, measure, f)
    if letter == Z2:
        return apply_shift_adjoint(window, measure, f)
    raise ValueError(f"unknown letter {letter}")


def apply_word(window: TreeWindow, measure: FlowMeasure, word: Iterable[int],
               f: WindowFunction) -> WindowFunction:
    """Apply a word over {Z1, Z2}; the rightmost letter acts first."""
    for letter in reversed(tuple(word)):
        f = apply_letter(window, measure, f, letter)
    return f


def apply_ncpoly(window: TreeWindow, measure: FlowMeasure, poly: NcPolynomial,
                 f: WindowFunction) -> WindowFunction:
    vals: dict[Vertex, complex] = {}
    safe = None
    zero = True
    for word, c in poly.terms.items():
        g = apply_word(window, measure, word, f)
        for v, x in g.values.items():
            val = vals.get(v, 0) + c * x
            if val:
                vals[v] = val
            elif v in vals:
                del vals[v]
        safe = g.safe if safe is None else (safe & g.safe)
        zero = zero and g.zero_outside
    if safe is None:
        safe = frozenset(window.vertices)
    return WindowFunction(vals, frozenset(safe), zero)


def _stencil(window: TreeWindow, measure: FlowMeasure, f: WindowFunction,
             combine: Callable, needs_parent: bool, needs_children: bool) -> WindowFunction:
    m = measure.values
    vals: dict[Vertex, complex] = {}
    safe = set()
    for v in window.vertices:
        p = window.parent(v)
        fp = f.value(p) if p is not None else 0
        child_acc = 0
        if needs_children:
            for c in window.children(v):
                fc = f.value(c)
                if fc:
                    child_acc = child_acc + fc * m[c]
            child_acc = child_acc / m[v] if child_acc else 0
        x = combine(f.value(v), fp, child_acc)
        if x:
            vals[v] = x
        ok = v in f.safe
        if needs_parent and ok:
            ok = (p in f.safe) if p is not None else f.zero_outside
        if needs_children and ok:
            ok = all(c in f.safe for c in window.children(v)) and \
                (window.is_complete(v) or f.zero_outside)
        if ok:
            safe.add(v)
    zero = f.zero_outside
    if needs_parent:
        zero = zero and _zero_on_incomplete(window, f)
    if needs_children:
        zero = zero and not f.value(window.apex)
    return WindowFunction(vals, frozenset(safe), zero)


def apply_gradient(window, measure, f):
    """(grad f)(x) = f(x) - f(parent(x))."""
    return _stencil(window, measure, f, lambda fv, fp, fc: fv - fp, True, False)


def apply_gradient_adjoint(window, measure, f):
    return _stencil(window, measure, f, lambda fv, fp, fc: fv - fc, False, True)


def apply_averaging(window, measure, f):
    """(A f)(x) = f(parent)/2 + (1/2m(x)) sum over successors of f m."""
    half = Fraction(1, 2) if measure.backend == "rational" else 0.5
    return _stencil(window, measure, f,
                    lambda fv, fp, fc: half * fp + half * fc, True, True)


def apply_laplacian(window, measure, f):
    """(L f)(x) = f(x) - (A f)(x); one unit of propagation per application."""
    half = Fraction(1, 2) if measure.backend == "rational" else 0.5
    return _stencil(window, measure, f,
                    lambda fv, fp, fc: fv - half * fp - half * fc, True, True)


def apply_lambda_poly(window, measure, coeffs, f: WindowFunction) -> WindowFunction:
    """sum_k coeffs[k] L^k f by iterated Laplacian stencils (radius = degree)."""
    vals: dict[Vertex, complex] = {}
    safe = frozenset(window.vertices)
    zero = f.zero_outside
    g = f
    for k, c in enumerate(coeffs):
        if k:
            g = apply_laplacian(window, measure, g)
        safe = safe & g.safe
        zero = zero and g.zero_outside
        if c:
            for v, x in g.values.items():
                val = vals.get(v, 0) + c * x
                if val:
                    vals[v] = val
                elif v in vals:
                    del vals[v]
    return WindowFunction(vals, safe, zero)


@dataclass
class KernelColumn:
    """Sparse kernel column x -> K(x, anchor) with a certification set.

    err_bound majorizes |true - stored| at every safe vertex; exact
    polynomial evaluation sets it to zero.
    """

    anchor: Vertex
    values: dict[Vertex, complex]
    safe: frozenset[Vertex]
    err_bound: float = 0.0

    def value(self, x: Vertex):
        return self.values.get(x, 0)

    def support(self):
        return [v for v, x in self.values.items() if x]

    def csv_rows(self, window: TreeWindow):
        rows = []
        for v in sorted(self.values):
            x = complex(self.values[v])
            rows.append((v, x.real, x.imag, window.distance(v, self.anchor),
                         window.level[v]))
        return rows


def _column_from_function(window, measure, g: WindowFunction, y, err=0.0) -> KernelColumn:
    my = measure.values[y]
    vals = {v: x / my for v, x in g.values.items()}
    return KernelColumn(y, vals, g.safe, err)


def kernel_column_poly(window: TreeWindow, measure: FlowMeasure,
                       poly: NcPolynomial, y: Vertex) -> KernelColumn:
    """Exact column of F(Sigma, Sigma*) at anchor y; needs y safe at deg F."""
    if y not in safe_region(window, poly.degree):
        raise InsufficientMarginError(
            f"anchor {y} is not safe at radius {poly.degree}")
    g = apply_ncpoly(window, measure, poly, indicator(window, y))
    return _column_from_function(window, measure, g, y)


def kernel_column_lambda_poly(window: TreeWindow, measure: FlowMeasure,
                              coeffs, y: Vertex) -> KernelColumn:
    """Column of sum coeffs[k] L^k, via stencils (margin = polynomial degree)."""
    deg = max(len(coeffs) - 1, 0)
    if y not in safe_region(window, deg):
        raise InsufficientMarginError(f"anchor {y} is not safe at radius {deg}")
    g = apply_lambda_poly(window, measure, coeffs, indicator(window, y))
    return _column_from_function(window, measure, g, y)


def modulation(window: TreeWindow, f: dict) -> dict:
    """Pointwise sign flip by level parity; involutive."""
    return {v: (x if window.level[v] % 2 == 0 else -x) for v, x in f.items()}


def weighted_col_sums(window: TreeWindow, measure: FlowMeasure,
                      column: KernelColumn,
                      weight: Callable[[int, int, int], float]):
    """sum over safe x of w(d(x,y), level(x), level(y)) |K(x,y)| m(x).

    Returns (value, truncated): truncated flags support reaching vertices
    that are unsafe or sit on the window boundary, where tail mass may be
    missing.
    """
    y = column.anchor
    ly = window.level[y]
    total = 0
    truncated = False
    dist = window.defect_distances()
    for v, x in column.values.items():
        if not x:
            continue
        if v not in column.safe:
            truncated = True
            continue
        if dist.get(v, 0) == 0:
            truncated = True
        d = window.distance(v, y)
        total = total + weight(d, window.level[v], ly) * abs(x) * measure.values[v]
    return total, truncated
