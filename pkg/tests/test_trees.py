"""Window construction, validation, the JSON loader, and safe regions."""

import json
from fractions import Fraction

import pytest

from flowtree import (TreeError, ball_window, constant_ratio_window,
                      homogeneous_window, load_window, safe_region,
                      spine_window, validate_measure, validate_window,
                      window_to_json)


def doc(apex_level, vertices):
    return {"apex_level": apex_level, "vertices": vertices}


def test_load_three_vertex_path():
    window, measure = load_window(doc(0, [
        {"id": 0, "pred": None, "measure": "1", "complete": False},
        {"id": 1, "pred": 0, "measure": "1", "complete": False},
        {"id": 2, "pred": 1, "measure": "1", "complete": False},
    ]))
    assert len(window) == 3
    assert window.level[2] == -2
    assert measure.backend == "rational"


def test_load_flow_equation_forced():
    window, measure = load_window(doc(0, [
        {"id": 0, "pred": None, "measure": "1", "complete": True},
        {"id": 1, "pred": 0, "measure": "1/2", "complete": False},
        {"id": 2, "pred": 0, "measure": "1/2", "complete": False},
    ]))
    assert measure.of(1) == Fraction(1, 2)


def test_load_flow_violation():
    with pytest.raises(TreeError, match="flow equation"):
        load_window(doc(0, [
            {"id": 0, "pred": None, "measure": "1", "complete": True},
            {"id": 1, "pred": 0, "measure": "1/2", "complete": False},
            {"id": 2, "pred": 0, "measure": "1/3", "complete": False},
        ]))


def test_load_rejects_nonpositive_and_cycles():
    with pytest.raises(TreeError, match="nonpositive"):
        load_window(doc(0, [
            {"id": 0, "pred": None, "measure": "0", "complete": False},
        ]))
    with pytest.raises(TreeError):
        load_window(doc(0, [
            {"id": 0, "pred": 1, "measure": "1", "complete": False},
            {"id": 1, "pred": 0, "measure": "1", "complete": False},
        ]))
    with pytest.raises(TreeError, match="malformed"):
        load_window("{not json")


def test_json_roundtrip():
    w, m, _ = constant_ratio_window((Fraction(1, 3), Fraction(2, 3)), depth=3, up=2)
    w2, m2 = load_window(json.loads(json.dumps(window_to_json(w, m))))
    assert len(w2) == len(w)
    assert sorted(m2.values.values()) == sorted(m.values.values())


def test_homogeneous_window_counts_and_measure():
    w, m = homogeneous_window(1, depth=5, up=5)
    assert len(w) == 11  # the integer line
    assert all(m.of(v) == 1 for v in w.vertices)

    w, m = homogeneous_window(2, depth=3, up=0)
    assert len(w) == 15
    leaves = [v for v in w.vertices if w.level[v] == -3]
    assert len(leaves) == 8
    assert all(m.of(v) == Fraction(1, 8) for v in leaves)

    w, m = homogeneous_window(3, depth=2)
    assert len(w) == 13
    for v in w.vertices:
        if w.is_complete(v):
            assert sum(m.of(c) for c in w.children(v)) == m.of(v)
            assert len(w.children(v)) == 3


def test_vertex_cap():
    with pytest.raises(TreeError, match="cap"):
        homogeneous_window(2, depth=40)


def test_validate_catches_bad_levels():
    w, m = homogeneous_window(2, depth=2)
    w.level[w.children(w.apex)[0]] += 1
    with pytest.raises(TreeError):
        validate_window(w)


def test_measure_float_tolerance():
    w, m = homogeneous_window(2, depth=2, backend="float")
    validate_measure(w, m)
    m.values[w.children(w.apex)[0]] *= 1 + 1e-6
    with pytest.raises(TreeError):
        validate_measure(w, m)


def test_safe_region_radius_zero_is_everything():
    w, _ = homogeneous_window(2, depth=3)
    assert safe_region(w, 0) == set(w.vertices)


def test_safe_region_depth3_cone_radius_one():
    w, _ = homogeneous_window(2, depth=3, up=0)
    expect = {v for v in w.vertices
              if w.is_complete(v) and w.parent(v) is not None}
    assert safe_region(w, 1) == expect


def test_safe_region_nesting():
    w, _ = homogeneous_window(2, depth=5, up=5)
    for n in range(5):
        assert safe_region(w, n + 1) <= safe_region(w, n)


def brute_force_safe(window, n):
    """Dependency closure: B_n(x) present and B_{n-1}(x) complete."""
    out = set()
    for x in window.vertices:
        ball = {x}
        frontier = {x}
        ok = True
        for step in range(n):
            nxt = set()
            for v in frontier:
                p = window.parent(v)
                if p is None:
                    if v == window.apex:
                        ok = False  # ambient predecessor missing
                else:
                    nxt.add(p)
                if not window.is_complete(v):
                    ok = False  # some ambient child missing from the ball
                nxt.update(window.children(v))
            if not ok:
                break
            frontier = nxt - ball
            ball |= nxt
        if ok:
            out.add(x)
    return out


def test_safe_region_matches_dependency_closure():
    w, _ = homogeneous_window(2, depth=4, up=3)
    for n in (1, 2, 3):
        assert safe_region(w, n) == brute_force_safe(w, n)
    bw, _, _ = ball_window(3, 4)
    for n in (1, 2, 3, 4):
        assert safe_region(bw, n) == brute_force_safe(bw, n)


def test_ball_window_center_safety():
    w, m, c = ball_window(2, 5)
    assert c in safe_region(w, 5)
    assert c not in safe_region(w, 6)
    validate_window(w)
    validate_measure(w, m)


def test_distance_and_lca():
    w, _, c = ball_window(2, 4)
    p = w.parent(c)
    sib = [v for v in w.children(p) if v != c][0]
    assert w.distance(c, sib) == 2
    assert w.lca(c, sib) == p
    assert w.distance(c, c) == 0
    assert w.is_below(c, p) and not w.is_below(p, c)


def test_spine_window_structure():
    w, m, x1 = spine_window(depth=20)
    assert len(w.children(w.parent(x1))) == 2
    v = x1
    for _ in range(20):
        assert w.is_complete(v)
        assert len(w.children(v)) == 1
        assert m.of(w.children(v)[0]) == m.of(v)
        v = w.children(v)[0]


def test_homogeneous_branching_invariant():
    for q in (1, 2, 4):
        w, _ = homogeneous_window(q, depth=3, up=2)
        assert all(len(w.children(v)) == q
                   for v in w.vertices if w.is_complete(v))


def test_constant_ratio_flow_equation_exact():
    w, m, b = constant_ratio_window((Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)),
                                    depth=4, up=3)
    validate_window(w)
    validate_measure(w, m)
    assert m.of(b) == 1
    assert m.of(w.apex) == 27
