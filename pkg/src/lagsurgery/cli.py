"""Command-line front end: ``lagsurgery <command> [options]``.

Commands build the models, run their checks and print one line per check.
``--out`` writes the JSON report and ``--emit-slice`` writes the relevant
slice as SVG (or CSV for a ``.csv`` path).

Exit codes: 0 when every check passed, 1 when a check failed (including a
model violation raised mid-run), 2 for usage or parameter errors.  Errors
are reported as a JSON record on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__
from .errors import LagSurgeryError, ModelViolation
from .report import Report, RunConfig

PROG = "lagsurgery"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_handle(cfg: RunConfig) -> Report:
    from .core.curves import enclosed_area
    from .core.symplectic import verify_lagrangian
    from .handle import (
        HandleParams,
        build_handle,
        check_cylindricity,
        end_model,
        scan_singular_locus,
        teardrop_curve,
        X0_RANGE,
    )
    from .zero_surgery import lambda_prime_slice

    p = HandleParams(
        cfg.get("n", 3),
        cfg.get("k", 1),
        cfg.get("epsilon", 0.1),
        cfg.get("delta", 0.1),
        cfg.get("sigma_profile", "sharp"),
        cfg.get("rho_profile", "plateau"),
    )
    tol = cfg.get("tol", 1e-8)
    grid = cfg.get("grid", 7 if p.n <= 3 else 5)
    geom = build_handle(p)
    rep = Report("handle", cfg.to_dict())
    rep.results["params"] = p.to_dict()
    patches = list(geom.sheets)
    for which in ("Lambda", "Lambda'"):
        patches.extend(end_model(geom, which).patches)
    for patch in patches:
        v = verify_lagrangian(patch, grid, tol=tol)
        rep.add(v.name, v.passed, v.max_residual, 0.0, "trivial", tol, v.worst_point)
    cyl = check_cylindricity(geom, samples=grid, tol=1e-9)
    rep.add("cylindricity", cyl.passed, cyl.max_residual, 0.0, "paper", 1e-9, cyl.worst_point)
    rep.results["cylindricity"] = cyl.details
    if cfg.get("locus", p.n <= 4):
        scan = scan_singular_locus(geom, tol=1e-4)
        rep.add("singular_locus.offset", scan.max_offset <= 1e-4, scan.max_offset, 0.0, "paper", 1e-4)
        low = scan_singular_locus(geom, tol=1e-4, x0_bounds=(X0_RANGE[0], 1 - p.delta - 0.01))
        rep.add("singular_locus.low_x0_empty", len(low.points) == 0, len(low.points), 0, "paper")
        rep.results["singular_locus"] = scan.to_dict()
    if p.k <= p.n - 2:
        area = abs(enclosed_area(teardrop_curve(geom)))
        expected = 2 * p.epsilon**1.5
        rel = abs(area - expected) / expected
        rep.add("teardrop_area", rel <= 1e-6, area, expected, "paper", 1e-6)
        if cfg.get("emit_slice"):
            _emit(cfg, lambda_prime_slice(end_model(geom, "Lambda'")), "Lambda' slice")
    elif cfg.get("emit_slice"):
        raise LagSurgeryError("--emit-slice needs k <= n-2 (the slice lives in the last s-coordinate)")
    return rep


def cmd_maslov(cfg: RunConfig) -> Report:
    from .handle import HandleParams
    from .zero_surgery import ResolutionChoice, maslov_of_resolution

    res = cfg.get("resolution", "both")
    signs = {"both": (-1, 1), "minus": (-1,), "plus": (1,), "-": (-1,), "+": (1,)}
    if res not in signs:
        raise LagSurgeryError(f"resolution must be one of {sorted(signs)}")
    if cfg.get("n") is not None:
        n = cfg.get("n")
        ks = [cfg.get("k")] if cfg.get("k") is not None else list(range(n - 1))
        cases = [(n, k) for k in ks]
    else:
        n_max = cfg.get("n_max", 6)
        cases = [(n, k) for n in range(2, n_max + 1) for k in range(n - 1)]
    for n, k in cases:
        if not 0 <= k <= n - 2:
            raise LagSurgeryError(f"the Maslov computation needs 0 <= k <= n-2, got n={n}, k={k}")
    rep = Report("maslov", cfg.to_dict())
    rows = []
    for n, k in cases:
        params = HandleParams(n, k, cfg.get("epsilon", 0.1), cfg.get("delta", 0.1))
        for s in signs[res]:
            mu = maslov_of_resolution(params, ResolutionChoice(s), cfg.get("points", 512))
            expected = n - k - 1 if s > 0 else 1 - k
            name = "Phi+" if s > 0 else "Phi-"
            rows.append({"n": n, "k": k, "resolution": name, "mu": mu, "expected": expected})
            rep.add(f"maslov[n={n},k={k},{name}]", mu == expected, mu, expected, "paper")
    rep.results["table"] = rows
    return rep


def cmd_cpn(cfg: RunConfig) -> Report:
    from .atlas import build_cpn_model, chart_inverse, chart_map, composite_example, monotonicity_budget
    from .topology import lagrangian_resolution

    n, k = cfg.get("n", 5), cfg.get("k", 2)
    b = monotonicity_budget(n, k)
    rep = Report("cpn", cfg.to_dict())
    rep.results["budget"] = b.to_dict()
    rep.add("eta_L = eta_CPn / 2", b.eta_L_pi * 2 == b.eta_ambient_pi, str(b.eta_L_pi), str(b.eta_ambient_pi / 2), "paper")
    rep.add("required_area / eta_L = n-k-1", b.required_area_pi / b.eta_L_pi == n - k - 1,
            str(b.required_area_pi / b.eta_L_pi), n - k - 1, "paper")
    rep.add("maslov2 disc area = 2 eta_L", b.maslov2_disc_area_pi == 2 * b.eta_L_pi,
            str(b.maslov2_disc_area_pi), str(2 * b.eta_L_pi), "paper")
    rep.add("feasible: omega(sigma) < r pi", b.feasible, str(b.required_area_pi), f"< {b.r_monotone}", "paper")
    r = cfg.get("r", float(b.r_monotone))
    model = build_cpn_model(n, r)
    tol = cfg.get("tol", 1e-8)
    v = model.verify(cfg.get("grid", 7 if n <= 4 else 5), tol)
    rep.add(v.name, v.passed, v.max_residual, 0.0, "derived", tol, v.worst_point)
    rng = np.random.default_rng(cfg.get("seed", 0))
    x = rng.normal(size=(64, n + 1))
    x[:, -1] = np.abs(x[:, -1]) + 1e-3
    u = x / np.linalg.norm(x, axis=1, keepdims=True)
    img = chart_map(x)
    back = chart_inverse(img)
    err = float(np.abs(back - u).max())
    rep.add("chart inverts normalized representative", err < 1e-9, err, 0.0, "trivial", 1e-9)
    rep.add("chart image in D(pi/2)", bool(np.all(np.linalg.norm(img, axis=1) < np.pi / 2)),
            float(np.linalg.norm(img, axis=1).max()), "< pi/2", "paper")
    outcomes = {}
    for res in ("P", "Q"):
        try:
            outcomes[res] = composite_example(n, k, lagrangian_resolution(n, k, res)).expression
        except LagSurgeryError:
            continue
    rep.results["L_natural"] = outcomes
    if cfg.get("emit_slice"):
        _emit(cfg, model.slice_curves(), "L_r slice")
    return rep


def cmd_surgery(cfg: RunConfig) -> Report:
    from .topology import (
        ManifoldDescriptor,
        apply_surgery,
        euler_after_surgery,
        homology_transition,
        orientation_sign,
        trace_descriptor,
    )

    start = ManifoldDescriptor.parse(cfg.get("start", "S1xS4"))
    n = start.dim
    k = cfg.get("k", 1)
    resolve = cfg.get("resolve", "auto")
    mode = cfg.get("mode")
    rep = Report("surgery", cfg.to_dict())
    after_k = apply_surgery(start, k, None, mode)
    final = apply_surgery(start, k, resolve, mode)
    resolved = resolve not in ("none",)
    rows = [
        {"stage": "start", "expression": start.expression, "chi": start.chi, "orientable": start.orientable, "b1": start.b1},
        {"stage": f"{k}-surgery", "expression": after_k.expression, "chi": after_k.chi,
         "orientable": after_k.orientable, "b1": after_k.b1},
    ]
    chi_k = euler_after_surgery(start.chi, n, k)
    rep.add("chi after k-surgery", after_k.chi == chi_k, after_k.chi, chi_k, "paper")
    if resolved:
        rows.append({"stage": "0-surgery", "expression": final.expression, "chi": final.chi,
                     "orientable": final.orientable, "b1": final.b1})
        chi_0 = euler_after_surgery(chi_k, n, 0)
        rep.add("chi after 0-surgery", final.chi == chi_0, final.chi, chi_0, "paper")
        trace = trace_descriptor(start, k, resolve) if mode is None else None
        if trace is not None:
            rep.add("trace handles consistent", trace.consistent(), [list(h) for h in trace.handles],
                    [[k + 1, 1], [1, 1]], "paper")
            rep.results["trace"] = " + ".join(f"{i}-handle" for i, _ in trace.handles)
        if n % 2 == 0 and resolve == "auto" and start.orientable:
            verdict = orientation_sign(n, k).orientable_resolution
            rep.add("orientability verdict", final.orientable == (verdict == "yes"), final.orientable,
                    verdict == "yes", "paper")
        if 2 <= k <= n - 3 and start.closed:
            h1, _ = homology_transition(n, k, start.b1, 0)
            rep.add("b1 transition", final.b1 == h1, final.b1, h1, "paper")
    rep.results["stages"] = rows
    rep.results["result"] = final.to_dict()
    return rep


def cmd_tori(cfg: RunConfig) -> Report:
    from .atlas import build_rotation_lagrangian, clifford_chekanov_cobordisms, resolve_figure_eight, torus_area_plan

    tol = cfg.get("tol", 1e-8)
    grid = cfg.get("grid", 24)
    fe = resolve_figure_eight(cfg.get("scale", 1.0), cfg.get("cut", 0.1))
    rep = Report("tori", cfg.to_dict())
    s = fe.summary()
    rep.results["figure_eight"] = s
    rep.add("clifford winding pattern", s["winding_clifford"] == [1], s["winding_clifford"], [1], "paper")
    rep.add("chekanov winding pattern", s["winding_chekanov"] == [0, 0], s["winding_chekanov"], [0, 0], "paper")
    rep.add("resolved profiles embedded", s["crossings_clifford"] + s["crossings_chekanov"] == 0,
            s["crossings_clifford"] + s["crossings_chekanov"], 0, "derived")
    rep.add("area ordering A'' < A < A'", s["ordering_ok"], [s["A_chekanov"], s["A_whitney"], s["A_clifford"]],
            "A'' < A < A'", "paper")
    tori = [
        build_rotation_lagrangian(fe.whitney, fe.lobes, symmetric=True, label="whitney"),
        build_rotation_lagrangian(fe.clifford[0], fe.clifford, label="clifford"),
        build_rotation_lagrangian(fe.chekanov[0], fe.chekanov, label="chekanov"),
    ]
    for rl in tori:
        v = rl.verify(grid, tol)
        rep.add(v.name, v.passed, v.max_residual, 0.0, "trivial", tol, v.worst_point)
    if cfg.get("target") is not None:
        A = cfg.get("A", s["A_whitney"])
        At = cfg.get("A_target")
        if At is None:
            raise LagSurgeryError("--target needs --A-target")
        plan = torus_area_plan(A, cfg.get("target"), At)
        rep.results["plan"] = plan.to_dict()
        lo, hi = min(A, At), max(A, At)
        rep.results["cobordisms"] = [c.to_dict() for c in clifford_chekanov_cobordisms(lo, hi)]
    if cfg.get("emit_slice"):
        _emit(cfg, [fe.whitney, *fe.clifford, *fe.chekanov], "rotation profiles")
    return rep


def cmd_desing(cfg: RunConfig) -> Report:
    from .handle import HandleParams, build_handle, double_point_frames
    from .zero_surgery import EtaPair, SurgeryCurve, desingularization_model

    p = HandleParams(cfg.get("n", 2), cfg.get("k", 0), cfg.get("epsilon", 0.1), cfg.get("delta", 0.1))
    plus, minus = double_point_frames(build_handle(p))
    eta = EtaPair()
    curve = SurgeryCurve(cfg.get("kappa", 0.05))
    tol = cfg.get("tol", 1e-10)
    d = desingularization_model(eta, (minus, plus), curve, tol=tol, seed_grid=cfg.get("grid", 9))
    rep = Report("desing", cfg.to_dict())
    rep.results["desingularization"] = d.to_dict()
    rep.add("W double points on {x >= 0, v = 0}", d.locus_offset <= d.flat_width, d.locus_offset,
            f"<= {d.flat_width:.3g}", "paper", d.flat_width)
    rep.add("spliced slice crossings", d.crossings == 0, d.crossings, 0, "paper")
    rep.add("agrees with eta outside window", d.hausdorff_outside < 1e-9, d.hausdorff_outside, 0.0, "paper", 1e-9)
    rep.add("fibre slice crossings", d.fibre_crossings == 0, d.fibre_crossings, 0, "paper")
    for v in [d.fibre_lagrangian, *d.w_lagrangian]:
        rep.add(v.name, v.passed, v.max_residual, 0.0, "trivial", v.tol)
    if cfg.get("emit_slice"):
        _emit(cfg, [d.spliced, *eta.curves], "W slice")
    return rep


COMMANDS: Dict[str, Callable[[RunConfig], Report]] = {
    "handle": cmd_handle,
    "maslov": cmd_maslov,
    "cpn": cmd_cpn,
    "surgery": cmd_surgery,
    "tori": cmd_tori,
    "desing": cmd_desing,
}


def _emit(cfg: RunConfig, curves, title: str) -> None:
    from .svg import write_slice

    write_slice(cfg.get("emit_slice"), curves, title)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (flags override it)")
    common.add_argument("--out", help="write the JSON report here")
    common.add_argument("--emit-slice", dest="emit_slice", help="write the slice figure (.svg or .csv)")
    common.add_argument("--tol", type=float, help="verification tolerance")
    common.add_argument("--grid", type=int, help="samples per axis")
    common.add_argument("--seed", type=int, help="random seed (where sampling is random)")
    common.add_argument("--timestamp", action="store_true", help="record wall-clock time in the report")

    ap = argparse.ArgumentParser(prog=PROG, description="Verification toolkit for Lagrangian antisurgery and 0-surgery.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    h = sub.add_parser("handle", parents=[common], help="build Gamma and check it")
    h.add_argument("--n", type=int)
    h.add_argument("--k", type=int)
    h.add_argument("--epsilon", type=float)
    h.add_argument("--delta", type=float)
    h.add_argument("--sigma-profile", dest="sigma_profile")
    h.add_argument("--rho-profile", dest="rho_profile")
    h.add_argument("--locus", action=argparse.BooleanOptionalAction, default=None,
                   help="run the singular-locus scan (default for n <= 4)")

    m = sub.add_parser("maslov", parents=[common], help="Maslov indices of both resolutions")
    m.add_argument("--n", type=int)
    m.add_argument("--k", type=int)
    m.add_argument("--n-max", dest="n_max", type=int)
    m.add_argument("--resolution", choices=["both", "minus", "plus", "-", "+"])
    m.add_argument("--points", type=int)

    c = sub.add_parser("cpn", parents=[common], help="monotone examples in CP^n")
    c.add_argument("--n", type=int)
    c.add_argument("--k", type=int)
    c.add_argument("--r", type=float, help="fibre-sphere radius (default: the monotone value)")

    s = sub.add_parser("surgery", parents=[common], help="topology bookkeeping")
    s.add_argument("--start", help='descriptor, e.g. "S1xS4", "T2", "(S3xS2) # 2P5"')
    s.add_argument("--k", type=int)
    s.add_argument("--resolve", choices=["P", "Q", "auto", "none"])
    s.add_argument("--mode", choices=["trivial", "factor"])

    t = sub.add_parser("tori", parents=[common], help="Whitney sphere, Clifford and Chekanov tori")
    t.add_argument("--scale", type=float)
    t.add_argument("--cut", type=float)
    t.add_argument("--A", dest="A", type=float, help="Whitney area parameter for the area plan")
    t.add_argument("--target", choices=["clifford", "chekanov"])
    t.add_argument("--A-target", dest="A_target", type=float)

    d = sub.add_parser("desing", parents=[common], help="desingularization model W")
    d.add_argument("--n", type=int)
    d.add_argument("--k", type=int)
    d.add_argument("--epsilon", type=float)
    d.add_argument("--delta", type=float)
    d.add_argument("--kappa", type=float)
    return ap


def _error_record(exc: BaseException) -> str:
    return json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True)


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    opts = vars(args).copy()
    command = opts.pop("command")
    config_path = opts.pop("config")
    stamp = opts.pop("timestamp")
    try:
        cfg = RunConfig.load(command, config_path, opts)
        rep = COMMANDS[command](cfg)
    except ModelViolation as exc:
        print(_error_record(exc), file=sys.stderr)
        return 1
    except (LagSurgeryError, OSError, json.JSONDecodeError) as exc:
        print(_error_record(exc), file=sys.stderr)
        return 2
    rep.seed = cfg.get("seed")
    if stamp:
        rep.stamp()
    for line in rep.lines():
        print(line)
    for key, val in rep.results.items():
        if key in ("table", "stages"):
            for row in val:
                print("  " + "  ".join(f"{a}={b}" for a, b in row.items()))
        elif isinstance(val, (str, int, float)):
            print(f"  {key}: {val}")
    print(f"{command}: {'PASS' if rep.passed else 'FAIL'} ({sum(c.passed for c in rep.checks)}/{len(rep.checks)} checks)")
    if cfg.get("out"):
        rep.write(cfg.get("out"))
    return 0 if rep.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
