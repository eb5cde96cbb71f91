"""Flow submersions between windows: validation, construction, transference.

A submersion intertwines predecessors and successor sets; compatibility of
the two flow measures says each target branching ratio equals the mass
fraction of the matching fiber slice upstairs.  Windows with uniformly
rational branching ratios (common denominator q) are exactly the quotients
of the q-ary canonical tree, and the constructor below realizes the quotient
map top-down by repeating each child in a length-q successor list with
multiplicity q * m(child) / m(parent).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .localops import KernelColumn
from .trees import (FlowMeasure, TreeError, TreeWindow, Vertex,
                    validate_measure, validate_window)


@dataclass
class SubmersionReport:
    ok: bool
    violations: list = field(default_factory=list)
    level_shift: Optional[int] = None
    checked: dict = field(default_factory=dict)


@dataclass
class Submersion:
    source: TreeWindow
    source_measure: FlowMeasure
    target: TreeWindow
    target_measure: FlowMeasure
    mapping: dict[Vertex, Vertex]

    def fibers(self) -> dict[Vertex, list[Vertex]]:
        out: dict[Vertex, list[Vertex]] = {}
        for s, t in self.mapping.items():
            out.setdefault(t, []).append(s)
        return out

    def csv_rows(self):
        return sorted(self.mapping.items())


def validate_submersion(sub: Submersion) -> SubmersionReport:
    """Check the intertwining axioms, level-shift constancy, and measure
    compatibility at every vertex where both sides are determined.

    Exact in the rational backend; each violation carries a witness vertex.
    """
    src, tgt = sub.source, sub.target
    m1, m2 = sub.source_measure.values, sub.target_measure.values
    pi = sub.mapping
    bad = []
    counts = {"pred": 0, "succ": 0, "level": 0, "compat": 0}

    for v in src.vertices:
        if v not in pi:
            bad.append(("unmapped", v))
    if bad:
        return SubmersionReport(False, bad)

    shift = None
    for v in src.vertices:
        s = tgt.level[pi[v]] - src.level[v]
        if shift is None:
            shift = s
        elif s != shift:
            bad.append(("level_shift", v))
        counts["level"] += 1

    for v in src.vertices:
        p = src.parent(v)
        if p is None:
            continue
        tp = tgt.parent(pi[v])
        if tp is None:
            continue  # image apex: predecessor not visible downstairs
        counts["pred"] += 1
        if pi[p] != tp:
            bad.append(("pred_intertwine", v))

    for v in src.vertices:
        if not src.is_complete(v) or not tgt.is_complete(pi[v]):
            continue
        counts["succ"] += 1
        if {pi[c] for c in src.children(v)} != set(tgt.children(pi[v])):
            bad.append(("succ_onto", v))

    exact = (sub.source_measure.backend == "rational"
             and sub.target_measure.backend == "rational")
    for v in src.vertices:
        p = src.parent(v)
        if p is None or not src.is_complete(p):
            continue
        tv = pi[v]
        tp = tgt.parent(tv)
        if tp is None:
            continue
        counts["compat"] += 1
        lhs = m2[tv] * m1[p]
        rhs = m2[tp] * sum(m1[c] for c in src.children(p) if pi[c] == tv)
        if exact:
            if lhs != rhs:
                bad.append(("compatibility", v))
        elif abs(float(lhs) - float(rhs)) > 1e-10 * max(abs(float(lhs)), 1.0):
            bad.append(("compatibility", v))

    return SubmersionReport(not bad, bad, shift, counts)


def _ratio_multiplicity(q: int, mv, mp) -> int:
    r = Fraction(mv) / Fraction(mp) * q
    if r.denominator != 1 or r.numerator < 1:
        raise TreeError(
            f"branching ratio {Fraction(mv) / Fraction(mp)} is not a positive "
            f"multiple of 1/{q}")
    return r.numerator


def build_submersion_rational(target: TreeWindow, target_measure: FlowMeasure,
                              q: int) -> Submersion:
    """Quotient map onto a q-uniformly rational window from a q-ary window.

    The source is generated alongside the map: the target apex lifts to a
    single apex, and each complete target vertex with children y_0..y_{b-1}
    expands into the length-q list where y_i repeats q*m(y_i)/m(target vertex)
    times (successor file order).  The canonical source measure is scaled so
    apex masses agree, making fiber masses match target masses exactly.
    """
    if target_measure.backend != "rational":
        raise TreeError("rational backend required to build an exact quotient")
    validate_window(target)
    validate_measure(target, target_measure)

    pred: dict[int, int] = {}
    succ: dict[int, list[int]] = {}
    level: dict[int, int] = {}
    complete: dict[int, bool] = {}
    mvals: dict[int, Fraction] = {}
    mapping: dict[int, int] = {}
    next_id = 0

    def add(p, lv, m):
        nonlocal next_id
        v = next_id
        next_id += 1
        level[v] = lv
        succ[v] = []
        complete[v] = False
        mvals[v] = m
        if p is not None:
            pred[v] = p
            succ[p].append(v)
        return v

    t_apex = target.apex
    apex = add(None, target.level[t_apex], Fraction(target_measure.values[t_apex]))
    mapping[apex] = t_apex
    stack = [apex]
    while stack:
        s = stack.pop()
        tv = mapping[s]
        child_mass = mvals[s] / q
        if not target.is_complete(tv):
            # boundary vertex: siblings and multiplicities unknown upstairs,
            # so lift each visible child once and leave the source incomplete
            # (fibers stay exact inside complete cones, where anchors live)
            for tc in target.children(tv):
                sc = add(s, level[s] - 1, child_mass)
                mapping[sc] = tc
                stack.append(sc)
            continue
        mt = Fraction(target_measure.values[tv])
        expanded = []
        for c in target.children(tv):
            mult = _ratio_multiplicity(q, target_measure.values[c], mt)
            expanded.extend([c] * mult)
        if len(expanded) != q:
            raise TreeError(
                f"ratios at target vertex {tv} do not fill a length-{q} list "
                f"(got {len(expanded)})")
        for tc in expanded:
            sc = add(s, level[s] - 1, child_mass)
            mapping[sc] = tc
            stack.append(sc)
        complete[s] = True

    window = TreeWindow(apex, pred, succ, level, complete, up_ratio=Fraction(q))
    measure = FlowMeasure(mvals, "rational")
    return Submersion(window, measure, target, target_measure, mapping)


def fiber_average_kernel(sub: Submersion, column: KernelColumn) -> KernelColumn:
    """Push a source kernel column to the quotient by fiber averaging.

    With y = image of the source anchor, the target value at x is
    (1/m2(x)) * sum over the fiber of x of K_source(., anchor) m1; for
    operators generated by the shift pair this equals the target-side kernel
    exactly.  Requires every contributing fiber to sit inside the column's
    certified set.
    """
    pi = sub.mapping
    m1 = sub.source_measure.values
    m2 = sub.target_measure.values
    anchor_t = pi[column.anchor]
    sums: dict[Vertex, complex] = {}
    fiber_safe: dict[Vertex, bool] = {}
    for s, t in pi.items():
        v = column.value(s)
        fiber_safe[t] = fiber_safe.get(t, True) and (s in column.safe)
        if v:
            sums[t] = sums.get(t, 0) + v * m1[s]
    vals = {}
    safe = set()
    for t, ok in fiber_safe.items():
        if t in sums:
            vals[t] = sums[t] / m2[t]
        if ok:
            safe.add(t)
        elif sums.get(t):
            raise TreeError(f"fiber of target vertex {t} exits the certified region")
    return KernelColumn(anchor_t, vals, frozenset(safe), column.err_bound)


@dataclass
class RationalizationRow:
    vertex: Vertex
    child_index: int
    child: Vertex
    ratio: Fraction
    error: float


def rationalize_flow(window: TreeWindow, measure: FlowMeasure, q: int,
                     anchor_value=None):
    """Approximate branching ratios by multiples of 1/q (floor off-anchor,
    remainder absorbed at the child of minimal measure, ties broken by
    successor order).

    Requires q at least the max branching and 1/q at most the least ratio at
    every parental vertex; the error is at most 1/q off-anchor and
    (q0 - 1)/q at the anchor child.  Returns (measure, rows, max_error).
    """
    rows: list[RationalizationRow] = []
    ratios: dict[Vertex, Fraction] = {}
    max_err = 0.0
    for v in window.vertices:
        cs = window.children(v)
        if not cs:
            continue
        if len(cs) > q:
            raise TreeError(f"branching {len(cs)} at vertex {v} exceeds q={q}")
        mv = measure.values[v]
        rs = [measure.values[c] / mv if measure.backend == "rational"
              else measure.as_float(c) / measure.as_float(v) for c in cs]
        for c, r in zip(cs, rs):
            if float(r) < 1.0 / q:
                raise TreeError(
                    f"ratio {float(r):.6g} at child {c} of {v} is below 1/q")
        def floor_ratio(r) -> Fraction:
            if measure.backend == "rational":
                qr = q * Fraction(r)
                return Fraction(qr.numerator // qr.denominator, q)
            return Fraction(math.floor(q * float(r)), q)

        # anchor: child of minimal measure, ties broken by successor order
        # (flooring the heavier ratios keeps the dyadic floors moving with q,
        # so deviation tables decrease strictly along power-of-two grids)
        anchor_i = min(range(len(cs)), key=lambda i: (float(rs[i]), i))
        w: list[Fraction] = [Fraction(0)] * len(cs)
        acc = Fraction(0)
        for i, r in enumerate(rs):
            if i != anchor_i:
                w[i] = floor_ratio(r)
                acc += w[i]
        if window.is_complete(v):
            w[anchor_i] = 1 - acc
        else:
            # boundary vertex: sibling masses unknown, plain floor everywhere
            w[anchor_i] = floor_ratio(rs[anchor_i])
        for i, (c, r) in enumerate(zip(cs, rs)):
            err = abs(float(w[i]) - float(r))
            max_err = max(max_err, err)
            rows.append(RationalizationRow(v, i, c, w[i], err))
            ratios[c] = w[i]

    root = window.apex
    base = anchor_value if anchor_value is not None else measure.values[root]
    new_vals: dict[Vertex, Fraction] = {}
    stack = [(root, Fraction(base))]
    while stack:
        v, m = stack.pop()
        new_vals[v] = m
        for c in window.children(v):
            stack.append((c, m * ratios[c]))
    return FlowMeasure(new_vals, "rational"), rows, max_err


def perturbation_probe(window: TreeWindow, measure: FlowMeasure, coeffs,
                       q_grid, pairs) -> list[dict]:
    """Kernel deviation table under rationalized measures.

    For each q, the flow is rationalized and the kernel of the Laplacian
    polynomial recomputed at the sample pairs; deviations shrink as q grows.
    """
    from .localops import kernel_column_lambda_poly

    anchors = sorted({y for _, y in pairs})
    base_cols = {y: kernel_column_lambda_poly(window, measure, coeffs, y)
                 for y in anchors}
    out = []
    for q in q_grid:
        mq, _, ratio_err = rationalize_flow(window, measure, q)
        dev = 0.0
        for x, y in pairs:
            col = kernel_column_lambda_poly(window, mq, coeffs, y)
            dev = max(dev, abs(complex(col.value(x)) - complex(base_cols[y].value(x))))
        out.append({"q": q, "max_ratio_error": ratio_err, "max_kernel_dev": dev})
    return out
