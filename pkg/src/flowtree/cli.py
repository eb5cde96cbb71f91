"""Command-line front end: build windows, run kernels and experiment sweeps.

Each subcommand writes CSV artifacts with a JSON metadata sidecar and exits
0 when its internal assertions pass, 1 on an assertion failure (with a
machine-readable failure record in the output directory), 2 on bad input.
Configs are flat JSON documents mirroring the flags; explicit flags
override config values.  Runs are sequential and deterministically ordered,
so a rational-backend rerun reproduces artifacts byte for byte.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import abel, analysis, quotient, reports, zline
from .bumps import imaginary_power_cut, named_multiplier
from .localops import kernel_column_lambda_poly, kernel_column_poly
from .ncpoly import NcPolynomial
from .trees import (TreeError, ball_window, constant_ratio_window,
                    homogeneous_window, load_window, safe_region, spine_window)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_SCHEMA = 2

GOLDEN_RATIO = (math.sqrt(5) - 1) / 2  # heavier branch of the golden flow


def parse_grid(text: str):
    """a:b:n for linear, a:b:nlog for log-spaced, or comma-separated values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"bad grid {text!r}")
        a, b = float(parts[0]), float(parts[1])
        log = parts[2].endswith("log")
        n = int(parts[2][:-3] if log else parts[2])
        if log:
            return list(np.exp(np.linspace(np.log(a), np.log(b), n)))
        return list(np.linspace(a, b, n))
    return [float(_eval_angle(tok)) for tok in text.split(",") if tok]


def _eval_angle(tok: str) -> float:
    tok = tok.strip()
    if "pi" in tok:
        num, _, den = tok.partition("/")
        scale = float(den) if den else 1.0
        lead = num.replace("pi", "").replace("*", "").strip()
        return (float(lead) if lead else 1.0) * math.pi / scale
    return float(tok)


def parse_ratios(text: str):
    return tuple(Fraction(tok) for tok in text.split(","))


def make_window(args, radius: int = 10):
    """Window selection shared by the subcommands."""
    if getattr(args, "tree", None):
        window, measure = load_window(args.tree)
        anchors = sorted(safe_region(window, min(radius, 4))) or [window.apex]
        return window, measure, anchors[len(anchors) // 2]
    kind = getattr(args, "window", "homog") or "homog"
    q = args.q or 2
    if kind == "homog":
        w, m, c = ball_window(q, radius, backend=args.backend or "rational")
        return w, m, c
    if kind == "zline":
        w, m, c = ball_window(1, max(radius, 12), backend=args.backend or "rational")
        return w, m, c
    if kind == "golden":
        depth = min(args.depth or 2 * radius, 2 * radius)
        w, m, c = constant_ratio_window((GOLDEN_RATIO, 1 - GOLDEN_RATIO),
                                        depth=depth, up=max(radius, 12),
                                        backend="float")
        # anchor mid-cone so pairs within `radius` stay inside
        vs = [v for v in w.vertices
              if w.level[v] == w.level[c] - depth // 2]
        return w, m, vs[0]
    if kind == "spine":
        w, m, x1 = spine_window(depth=args.depth or 140)
        return w, m, x1
    raise ValueError(f"unknown window kind {kind!r}")


def _operator_coeffs(args):
    if args.coeffs:
        return [Fraction(tok) for tok in args.coeffs.split(",")]
    return None


def _multiplier(args):
    if not args.multiplier:
        return None
    params = {}
    if args.t_param is not None:
        params["t"] = args.t_param
    if args.alpha is not None:
        params["alpha"] = args.alpha
    if args.k is not None:
        params["k"] = args.k
    return named_multiplier(args.multiplier, **params)



def _window_meta(window) -> dict:
    return {"window_size": len(window),
            "apex_level": window.level[window.apex]}


def cmd_kernel(args, out):
    coeffs = _operator_coeffs(args)
    radius = max((len(coeffs) - 1 if coeffs else args.degree or 8) + 1, 4)
    window, measure, anchor = make_window(args, radius)
    if coeffs is not None:
        col = kernel_column_lambda_poly(window, measure, coeffs, anchor)
        op_meta = {"lambda_coeffs": [str(c) for c in coeffs]}
    else:
        fn = _multiplier(args)
        if fn is None:
            raise ValueError("need --coeffs or --multiplier")
        from .chebyshev import cheb_approx, cheb_column
        model = cheb_approx(fn, args.degree or 24)
        col = cheb_column(window, measure, model, anchor)
        op_meta = {"multiplier": args.multiplier, "sup_err": model.sup_err}
        if (args.window or "homog") == "zline" and not args.tree:
            zk = zline.z_multiplier_kernel(fn, args.dmax or 16)
            zcsv = os.path.join(out, "zkernel.csv")
            reports.write_csv(zcsv, ["n", "re", "im"], zk.csv_rows())
            reports.write_meta(zcsv, {"multiplier": args.multiplier,
                                      "nmax": zk.nmax, "grid": zk.grid})
    pathcsv = os.path.join(out, "kernel.csv")
    reports.write_csv(pathcsv, ["x_id", "value_re", "value_im", "distance", "level_x"],
                      col.csv_rows(window),
                      comments=[f"anchor={col.anchor}", f"err_bound={col.err_bound!r}"])
    reports.write_meta(pathcsv, {**_window_meta(window), "anchor": col.anchor,
                                 "err_bound": col.err_bound, **op_meta})
    return {}


def cmd_heat(args, out):
    window, measure, anchor = make_window(args, radius=10)
    t = args.t_param if args.t_param is not None else 1.0
    col = analysis.heat_kernel_column(window, measure, t, anchor, args.degree)
    if not args.tree and (args.window or "homog") == "homog" and (args.q or 2) >= 2:
        rad = abel.e_f_coefficients(args.q or 2,
                                    lambda lam: np.exp(-t * np.asarray(lam)),
                                    kmax=24)
        rcsv = os.path.join(out, "radial.csv")
        reports.write_csv(rcsv, ["k", "E_re", "E_im", "tail_bound"], rad.csv_rows())
        reports.write_meta(rcsv, {"q": args.q or 2, "t": t, "kmax": 24,
                                  "tail_scaled": rad.tail_scaled, **rad.meta})
    mass = sum(v * measure.as_float(x) for x, v in col.values.items())
    pathcsv = os.path.join(out, "heat.csv")
    reports.write_csv(pathcsv, ["x_id", "value_re", "value_im", "distance", "level_x"],
                      col.csv_rows(window),
                      comments=[f"anchor={col.anchor}", f"err_bound={col.err_bound!r}"])
    reports.write_meta(pathcsv, {"t": t, "mass": complex(mass).real,
                                 **_window_meta(window)})
    tol = args.tol or 1e-6  # window truncation leaks a little column mass
    if abs(complex(mass) - 1.0) > max(1e3 * col.err_bound * len(window) ** 0.5, tol):
        return {"check": "heat mass conservation", "mass": complex(mass).real}
    return {}


def cmd_riesz(args, out):
    radius = args.dmax or 6
    window, measure, anchor = make_window(args, radius + 2)
    pairs = [(x, anchor) for x in window.vertices
             if window.distance(x, anchor) <= radius]
    pairs.sort()
    vals, errs = analysis.riesz_kernel_values(window, measure, pairs)
    rows = [(x, y, v.real, v.imag, e) for (x, y), v, e in zip(pairs, vals, errs)]
    pathcsv = os.path.join(out, "riesz.csv")
    reports.write_csv(pathcsv, ["x", "y", "re", "im", "err_est"], rows)
    reports.write_meta(pathcsv, {"pairs": len(pairs), "anchor": anchor,
                                 **_window_meta(window)})
    return {}


def cmd_riesz_skew_check(args, out):
    radius = args.dmax or 8
    window, measure, anchor = make_window(args, radius + 1)
    pairs = sorted((x, anchor) for x in window.vertices
                   if 0 < window.distance(x, anchor) <= radius)
    rep = analysis.riesz_skew_check(window, measure, pairs)
    pathcsv = os.path.join(out, "riesz_skew_check.csv")
    reports.write_csv(pathcsv, rep.csv_header(), rep.csv_rows())
    reports.write_meta(pathcsv, {"max_dev": rep.meta["max_dev"],
                                 "pairs": len(pairs), "tol": args.tol,
                                 **_window_meta(window)})
    tol = args.tol or 1e-6
    if rep.meta["max_dev"] > tol:
        return {"check": "riesz skew identity", "max_dev": rep.meta["max_dev"],
                "tol": tol}
    return {}


def cmd_abel_check(args, out):
    q = args.q or 3
    deg = args.degree or 5
    radius = deg + 1
    window, measure, center = ball_window(q, radius)
    rows = []
    exact = True
    col = None
    coeffs = [Fraction(0)] * (deg + 1)
    for k in range(0, deg + 1):
        coeffs_k = [Fraction(0)] * k + [Fraction(1)]
        colk = kernel_column_lambda_poly(window, measure, coeffs_k, center)
        a_exact = abel.e_f_exact(q, coeffs_k, kmax=deg + 2)
        for x in sorted(colk.values):
            d = window.distance(x, center)
            direct = colk.values[x]
            radial = abel.homog_kernel_value_exact(
                q, a_exact, window.level[x], window.level[center], d)
            ok = direct == radial
            exact = exact and ok
            rows.append((k, x, d, str(direct), str(radial), int(ok)))
    pathcsv = os.path.join(out, "abel_check.csv")
    reports.write_csv(pathcsv, ["degree", "x", "d", "direct", "radial", "match"],
                      rows)
    reports.write_meta(pathcsv, {"q": q, "max_degree": deg, "exact": exact})
    if not exact:
        return {"check": "abel/direct equivalence", "q": q}
    return {}


def cmd_transfer_check(args, out):
    q = args.q or 4
    ratios = parse_ratios(args.ratios) if args.ratios else (Fraction(3, 4), Fraction(1, 4))
    deg = args.degree or 4
    trials = args.trials or 20
    import random
    rng = random.Random(20240811)
    target, tmeas, base = constant_ratio_window(ratios, depth=2 * deg, up=0)
    sub = quotient.build_submersion_rational(target, tmeas, q)
    rep = quotient.validate_submersion(sub)
    rows = []
    ok_all = rep.ok
    t_anchor = next(v for v in target.vertices
                    if target.level[v] == target.level[base] - deg)
    src_anchor = next(s for s, t in sub.mapping.items()
                      if t == t_anchor and s in safe_region(sub.source, deg))
    for trial in range(trials):
        poly = NcPolynomial()
        for _ in range(rng.randint(1, 5)):
            word = tuple(rng.choice((1, 2)) for _ in range(rng.randint(0, deg)))
            poly = poly + NcPolynomial({word: Fraction(rng.randint(-3, 3), rng.randint(1, 3))})
        if poly.degree > deg or not poly.terms:
            poly = NcPolynomial({(1,): Fraction(1)})
        src_col = kernel_column_poly(sub.source, sub.source_measure, poly, src_anchor)
        pushed = quotient.fiber_average_kernel(sub, src_col)
        direct = kernel_column_poly(target, tmeas, poly, t_anchor)
        agree = all(pushed.value(v) == direct.value(v)
                    for v in set(pushed.values) | set(direct.values)
                    if v in pushed.safe and v in direct.safe)
        ok_all = ok_all and agree
        rows.append((trial, poly.degree, int(agree)))
    pathcsv = os.path.join(out, "transfer_check.csv")
    reports.write_csv(pathcsv, ["trial", "degree", "match"], rows)
    reports.write_meta(pathcsv, {"q": q, "ratios": [str(r) for r in ratios],
                                 "submersion_ok": rep.ok,
                                 "violations": rep.violations[:10]})
    subcsv = os.path.join(out, "submersion.csv")
    reports.write_csv(subcsv, ["source_id", "target_id"], sub.csv_rows())
    reports.write_meta(subcsv, {"q": q, "source_size": len(sub.source),
                                "target_size": len(sub.target),
                                "level_shift": rep.level_shift})
    if not ok_all:
        return {"check": "transference exactness"}
    return {}


def cmd_rationalize(args, out):
    window, measure, _ = make_window(args, radius=6)
    q = args.q or 64
    mq, rows, max_err = quotient.rationalize_flow(window, measure, q)
    csv_rows = [(r.vertex, r.child_index, r.ratio.numerator, r.ratio.denominator,
                 r.error) for r in rows]
    pathcsv = os.path.join(out, "rationalize.csv")
    reports.write_csv(pathcsv, ["vertex", "child_index", "ratio_num", "ratio_den",
                                "error"], csv_rows)
    reports.write_meta(pathcsv, {"q": q, "max_error": max_err})
    return {}


def cmd_weighted_sweep(args, out):
    ts = parse_grid(args.t_grid) if args.t_grid else [1.0, 4.0, 16.0, 64.0]
    qs = [int(v) for v in parse_grid(args.q_grid)] if args.q_grid else [2, 3, 5]
    eps = args.epsilon if args.epsilon is not None else 1.0
    rep = analysis.weighted_heat_sweep(eps, ts, qs)
    pathcsv = os.path.join(out, "weighted_sweep.csv")
    reports.write_csv(pathcsv, rep.csv_header(), rep.csv_rows())
    reports.write_meta(pathcsv, {"fits": rep.fit, **rep.meta})
    return {}


def cmd_level_sum(args, out):
    ts = parse_grid(args.t_grid) if args.t_grid else [2.0 ** k for k in range(8)]
    if args.ratios:
        window, measure, x = constant_ratio_window(parse_ratios(args.ratios),
                                                   depth=3, up=6)
    else:
        window, measure, x = ball_window(args.q or 2, 4)
    rep = analysis.level_sum_estimate(window, measure, ts, x)
    pathcsv = os.path.join(out, "level_sum.csv")
    reports.write_csv(pathcsv, rep.csv_header(), rep.csv_rows())
    reports.write_meta(pathcsv, {"fit": rep.fit, **rep.meta,
                                 **_window_meta(window)})
    return {}


def cmd_mh_norms(args, out):
    alpha = args.alpha if args.alpha is not None else 1.0
    ls = [int(v) for v in parse_grid(args.l_grid)] if args.l_grid else list(range(7))
    rep = analysis.mh_dyadic_norms(imaginary_power_cut(alpha), ls,
                                   q=args.q or 64)
    pathcsv = os.path.join(out, "mh_norms.csv")
    reports.write_csv(pathcsv, rep.csv_header(), rep.csv_rows())
    reports.write_meta(pathcsv, {"fit": rep.fit, "alpha": alpha, **rep.meta})
    return {}


def cmd_sharpness(args, out):
    ts = [int(v) for v in parse_grid(args.t_grid)] if args.t_grid \
        else list(range(10, 41))
    rep = analysis.sharpness_fit(args.q or 2, ts)
    sob = analysis.sobolev_growth(list(np.exp(np.linspace(np.log(30.0), np.log(300.0), 12))))
    pathcsv = os.path.join(out, "sharpness.csv")
    reports.write_csv(pathcsv, rep.csv_header(), rep.csv_rows())
    reports.write_meta(pathcsv, {"fit": rep.fit,
                                 "sobolev": {s: f for s, f in sob.items()},
                                 **rep.meta})
    return {}


def cmd_divergence(args, out):
    ds = [int(v) for v in parse_grid(args.d_grid)] if args.d_grid else [16, 32, 64]
    window, measure, x1 = (make_window(args) if getattr(args, "tree", None)
                           else spine_window(depth=2 * max(ds) + 4))
    if getattr(args, "tree", None):
        x1 = window.apex  # loaded windows: probe from the apex area
    rep = analysis.divergence_probe(window, measure, x1, ds)
    pathcsv = os.path.join(out, "divergence.csv")
    reports.write_csv(pathcsv, rep.csv_header(), rep.csv_rows())
    reports.write_meta(pathcsv, {"fit": rep.fit, **rep.meta})
    return {}


def cmd_spectrum(args, out):
    thetas = parse_grid(args.theta_grid) if args.theta_grid \
        else [0.0, math.pi / 3, math.pi]
    ds = [int(v) for v in parse_grid(args.d_grid)] if args.d_grid \
        else [25, 50, 100, 200]
    window, measure = homogeneous_window(1, depth=max(ds) + 4, up=4)
    o = next(v for v in window.vertices
             if window.level[v] == window.level[window.apex] - 4)
    rep = analysis.spectrum_probe(window, measure, o, thetas, ds)
    small, smeas, _ = ball_window(2, 6)
    lo, hi = analysis.rayleigh_bounds(small, smeas)
    pathcsv = os.path.join(out, "spectrum.csv")
    reports.write_csv(pathcsv, rep.csv_header(), rep.csv_rows())
    reports.write_meta(pathcsv, {"fit": rep.fit, "rayleigh": [lo, hi]})
    if lo < -1e-10 or hi > 2 + 1e-10:
        return {"check": "rayleigh bounds", "eig_range": [lo, hi]}
    return {}


COMMANDS = {
    "kernel": cmd_kernel,
    "heat": cmd_heat,
    "riesz": cmd_riesz,
    "riesz-skew-check": cmd_riesz_skew_check,
    "abel-check": cmd_abel_check,
    "transfer-check": cmd_transfer_check,
    "rationalize": cmd_rationalize,
    "weighted-sweep": cmd_weighted_sweep,
    "level-sum": cmd_level_sum,
    "mh-norms": cmd_mh_norms,
    "sharpness": cmd_sharpness,
    "divergence": cmd_divergence,
    "spectrum": cmd_spectrum,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flowtree",
                                description="flow-Laplacian kernel experiments")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON config mirroring the flags")
    p.add_argument("--tree", help="tree-description JSON file")
    p.add_argument("--window", choices=["homog", "zline", "golden", "spine"])
    p.add_argument("--q", type=int)
    p.add_argument("--q-grid", dest="q_grid")
    p.add_argument("--depth", type=int)
    p.add_argument("--degree", type=int)
    p.add_argument("--dmax", type=int)
    p.add_argument("--coeffs", help="comma list: Laplacian polynomial")
    p.add_argument("--multiplier", help="exp(-t*x) | x^k | x^{i*alpha} | schrodinger")
    p.add_argument("--t", dest="t_param", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--t-grid", dest="t_grid")
    p.add_argument("--l-grid", dest="l_grid")
    p.add_argument("--d-grid", dest="d_grid")
    p.add_argument("--theta-grid", dest="theta_grid")
    p.add_argument("--ratios", help="comma list of rational branching ratios")
    p.add_argument("--trials", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--backend", choices=["rational", "float"])
    p.add_argument("--out", default="flowtree-out")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker hint; output order is scheduling-independent")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SCHEMA if exc.code else EXIT_OK
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                conf = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_SCHEMA
        if not isinstance(conf, dict):
            print("config must be a JSON object", file=sys.stderr)
            return EXIT_SCHEMA
        for key, val in conf.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                print(f"config error: unknown key {key!r}", file=sys.stderr)
                return EXIT_SCHEMA
            if getattr(args, attr) in (None, parser.get_default(attr)):
                setattr(args, attr, val)
    out = args.out
    os.makedirs(out, exist_ok=True)
    try:
        failure = COMMANDS[args.command](args, out)
    except (TreeError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    if failure:
        record = {"command": args.command, "failure": failure}
        with open(os.path.join(out, "failure.json"), "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=2, sort_keys=True, default=str)
        print(f"assertion failure: {failure}", file=sys.stderr)
        return EXIT_ASSERTION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
