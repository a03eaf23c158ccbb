"""Command-line front end.

Every subcommand writes ``<out>/<command>.json`` (plus CSV tables where useful)
and exits with 0 when all checked inequalities hold, 1 on a violation, 2 when
the run is inconclusive or hit a budget, and 64 on malformed input.
"""
from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, io
from .io import SchemaError
from .metric import (FiniteMetricSpace, NetBudgetError, PointCloud, build_eps_net,
                     candidate_stream, hypercube_points, pairwise_distances, sample_sphere,
                     validate_net)

EXIT = {"pass": 0, "violation": 1, "inconclusive": 2}
EXIT_SCHEMA = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SchemaError(message)


def _common(p):
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="base seed (LIPEXT_SEED overrides)")
    p.add_argument("--tol", type=float, default=None, help="comparison tolerance")
    p.add_argument("--mc-samples", type=int, default=None, help="Monte-Carlo / probe budget")
    p.add_argument("--lp-budget", type=int, default=None, help="cap on LP flow variables")


def _tol(args, default):
    t = default if args.tol is None else args.tol
    if not t > 0:
        raise SchemaError("--tol must be positive")
    return t


def _mc(args, default):
    m = default if args.mc_samples is None else args.mc_samples
    if m <= 0:
        raise SchemaError("--mc-samples must be positive")
    return m


def _budget(args):
    from .retraction import DEFAULT_LP_BUDGET

    b = DEFAULT_LP_BUDGET if args.lp_budget is None else args.lp_budget
    if b <= 0:
        raise SchemaError("--lp-budget must be positive")
    return b


def _load_net(path):
    data = io.load_json(path)
    d = data.get("results", data)  # accept a net-gen report or a bare net
    d = d.get("net", d)
    io.check_space(d, "net")
    try:
        return PointCloud.from_dict(d)
    except (ValueError, KeyError) as exc:
        raise SchemaError(f"net: {exc}") from exc


# ---------------------------------------------------------------- commands

def cmd_net_gen(args):
    anchors = hypercube_points(args.dim, args.p).points if args.hypercube_anchors else None
    try:
        net, used = build_eps_net(args.dim, args.p, args.eps, seed=args.seed,
                                  max_candidates=args.max_candidates, anchors=anchors,
                                  antipodal=args.antipodal, return_consumed=True)
    except NetBudgetError as exc:
        return "inconclusive", {"error": str(exc), "net": exc.partial.to_dict()}, {}
    stream = candidate_stream(args.dim, args.p, args.seed, used, anchors=anchors,
                              antipodal=args.antipodal)
    stream_rep = validate_net(net, args.eps, args.eps, probe_points=stream)
    probe_rep = validate_net(net, args.eps, args.eps, probes=_mc(args, 100_000), seed=args.seed)
    status = "pass" if stream_rep.separated_ok and stream_rep.dense_ok else "violation"
    if status == "pass" and not probe_rep.dense_ok:
        # maximal for the stream, but random probes found a gap: the stream was too short
        status = "inconclusive"
    report = {"net": net.to_dict(), "size": len(net), "candidates_consumed": used,
              "stream_validation": stream_rep.to_dict(), "probe_validation": probe_rep.to_dict()}
    return status, report, {"net_points": [list(map(float, r)) for r in net.points]}


def cmd_w1(args):
    from .transport import (EXACT_MAX_SUPPORT, SignedMeasure, w1_norm_dual, w1_norm_exact,
                            w1_norm_primal)

    data = io.load_json(args.instance)
    io.check_space(io.require(data, "support", dict), "support")
    io.require(data, "weights", list)
    try:
        mu = SignedMeasure.from_dict(data)
    except ValueError as exc:
        raise SchemaError(f"instance: {exc}") from exc
    tol = _tol(args, 1e-7)
    primal, plan = w1_norm_primal(mu)
    dual, pot = w1_norm_dual(mu)
    report = {"primal": primal, "dual": dual, "potential": pot.values,
              "potential_violation": pot.max_violation(mu.support.dist),
              "plan": plan.flow, "support_size": mu.size}
    ok = abs(primal - dual) <= tol * max(1.0, abs(primal))
    w = [Fraction(x) for x in data["weights"]]
    if mu.size <= EXACT_MAX_SUPPORT and sum(w) == 0:
        ex = w1_norm_exact(mu.support.dist, w)
        report["exact"] = ex
        ok = ok and abs(primal - float(ex)) <= tol * max(1.0, abs(float(ex)))
    rows = [{"i": int(i), "j": int(j), "flow": plan.flow[i, j],
             "cost": plan.flow[i, j] * mu.support.dist[i, j]} for i, j in zip(*np.nonzero(plan.flow))]
    return ("pass" if ok else "violation"), report, {"plan": rows}


def _load_instance(path, L=None):
    from .retraction import ExtensionInstance

    data = io.load_json(path)
    io.check_space(io.require(data, "ambient", dict), "ambient")
    try:
        return data, ExtensionInstance.from_dict(data, L=L)
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"instance: {exc}") from exc


def cmd_lp_optimal(args):
    from .retraction import (BudgetError, optimal_uniform_error, optimal_uniform_error_convex,
                             verify_equivalence)

    _, inst = _load_instance(args.instance, args.L)
    solve = optimal_uniform_error_convex if args.convex else optimal_uniform_error
    try:
        res = solve(inst, args.eps_scale, backend=args.backend, lp_budget=_budget(args))
    except BudgetError as exc:
        return "inconclusive", {"error": str(exc)}, {}
    report = {"result": res.to_dict(), "L": inst.L, "eps_scale": args.eps_scale}
    status = "pass"
    if args.verify and not args.convex:
        ver = verify_equivalence(inst, res.family, res.certified_A, args.verify, args.seed,
                                 eps_scale=args.eps_scale)
        report["equivalence"] = ver.to_dict()
        status = "pass" if ver.passed else "violation"
    rows = [{"subset_index": i, "closeness": c} for i, c in enumerate(res.closeness)]
    return status, report, {"closeness": rows}


def _cert_status(cert):
    return "pass" if cert.lower_bound > 0 else "inconclusive"


def cmd_certify_l1(args):
    from .witnesses import (HypothesisError, Parameters, certificate_l1, choose_parameters,
                            closed_form_bound)

    if args.q is not None and args.eps is not None:
        par = Parameters(args.n, args.L, args.q, args.eps, "explicit", 5 * args.L <= args.n ** 0.25)
    else:
        try:
            par = choose_parameters(args.n, args.L, args.params.replace("-", "_"),
                                    enforce=not args.no_enforce)
        except HypothesisError as exc:
            return "inconclusive", {"error": str(exc)}, {}
    q = par.q if args.q is None else args.q
    eps = par.eps if args.eps is None else args.eps
    net = _load_net(args.net) if args.net else None
    if net is not None and net.dim != args.n:
        raise SchemaError(f"net lives in dimension {net.dim}, not {args.n}")
    try:
        cert = certificate_l1(net, args.L, q, eps, n=args.n)
    except ValueError as exc:
        return "violation", {"error": str(exc), "parameters": par.__dict__}, {}
    report = {"parameters": par.__dict__, "certificate": cert.to_dict(),
              "display_bound": closed_form_bound(args.n, args.L) if par.mode == "closed_form" else None,
              "parameters_in_range": par.in_range()}
    in_range = 0 < eps <= 0.5 and 1 < q <= 2 if par.mode != "explicit" else True
    status = _cert_status(cert) if in_range else "inconclusive"
    return status, report, {}


def cmd_certify_lp(args):
    from .witnesses import HypothesisError, certificate_lp, lp_parameters

    net = _load_net(args.net) if args.net else None
    n = net.dim if net is not None else args.n
    if n is None:
        raise SchemaError("give --n or --net")
    par = None
    q, eps = args.q, args.eps
    if args.auto_parameters:
        try:
            par = lp_parameters(n, args.p, args.L, enforce=not args.no_enforce)
        except HypothesisError as exc:
            return "inconclusive", {"error": str(exc)}, {}
        q, eps = par.q, par.eps
    if q is None or eps is None:
        raise SchemaError("give --q and --eps, or --auto-parameters")
    try:
        cert = certificate_lp(net, args.p, args.L, q, eps, n=n)
    except ValueError as exc:
        return "violation", {"error": str(exc)}, {}
    report = {"parameters": par.__dict__ if par else {"q": q, "eps": eps},
              "certificate": cert.to_dict()}
    return _cert_status(cert), report, {}


def _sphere_instance(args):
    """Symmetric net of S^{n-1} (subset) plus ``extra`` antipodal pairs (ambient only)."""
    from .sphere import symmetric_net_sphere

    if args.instance:
        data = io.load_json(args.instance)
        io.check_space(io.require(data, "ambient", dict), "ambient")
        X = np.asarray(data["ambient"]["points"], dtype=float)
        subset = list(io.require(data, "subset", list))
        eps = float(io.require(data, "eps", (int, float)))
        L = float(data.get("L", args.L))
        return X, subset, eps, L
    net = symmetric_net_sphere(args.n, args.eps, seed=args.seed)
    rng = np.random.default_rng([args.seed, 2])
    Y = sample_sphere(rng, args.extra, args.n, 2.0)
    X = np.vstack([net.points] + ([np.vstack([Y, -Y])] if args.extra else []))
    return X, list(range(len(net))), args.eps, args.L


def cmd_certify_l2(args):
    from .retraction import BudgetError, ExtensionInstance, optimal_uniform_error
    from .sphere import l2_chain_certificate, psi_lipschitz_check

    X, subset, eps, L = _sphere_instance(args)
    inst = ExtensionInstance(FiniteMetricSpace(pairwise_distances(X, 2.0)), subset, L)
    try:
        res = optimal_uniform_error(inst, eps, lp_budget=_budget(args))
    except BudgetError as exc:
        return "inconclusive", {"error": str(exc)}, {}
    seed = args.seed
    W = X[subset]
    rep = l2_chain_certificate(res.family, X, W, eps, L, mc_samples=_mc(args, 100_000),
                               seed=seed, tol=_tol(args, 1e-9))
    psi = psi_lipschitz_check(res.family, X, W, eps, L, seed=seed)
    status = rep.status
    if status == "pass" and not (psi["kr_step_ok"] and psi["lipschitz_ok"]):
        status = "violation"
    report = {"A_star": res.A_star, "certified_A": res.certified_A, "chain": rep.to_dict(),
              "psi_check": psi, "ambient_size": len(X), "net_size": len(subset)}
    return status, report, {}


def cmd_sphere_check(args):
    from .sphere import (imbalance_moment_check, projection_identity_check,
                         random_atomic_measure, sphere_area)

    samples = _mc(args, 1_000_000)
    rng = np.random.default_rng(args.seed)
    rows, proj_ok, imb_ok = [], 0, True
    for t in range(args.trials):
        mu = random_atomic_measure(rng, args.n, args.atoms)
        s = args.seed * 1_000_003 + t
        pr = projection_identity_check(mu, samples=samples, seed=s)
        im = imbalance_moment_check(mu, samples=samples, seed=s)
        proj_ok += pr["ok"]
        imb_ok &= im["ok"]
        rows.append({"trial": t, "seed": s, "projection_max_sigma": pr["max_deviation_sigma"],
                     "projection_ok": pr["ok"], "imbalance_l2": im["imbalance_l2"]["value"],
                     "bound": im["bound"], "sharp_bound": im["sharp_bound"],
                     "imbalance_ok": im["ok"], "sharp_ok": im["sharp_ok"]})
    frac = proj_ok / args.trials
    report = {"n": args.n, "trials": args.trials, "samples": samples,
              "projection_pass_fraction": frac, "imbalance_all_ok": bool(imb_ok),
              "sphere_area": {str(k): sphere_area(k) for k in range(args.n)},
              "trials_table": rows}
    status = "pass" if frac >= 0.95 and imb_ok else "violation"
    return status, report, {"trials": rows}


def cmd_transfer_check(args):
    from .transfer import (LinearOperatorSpec, coordinate_contraction, homogeneous_extension_check,
                           normalization_gap_check, sphere_map_check, transfer_g_construction)

    rng = np.random.default_rng(args.seed)
    pairs = _mc(args, 10_000)
    d = args.dim
    B = np.eye(d) + args.perturb * rng.standard_normal((d, d))
    op = LinearOperatorSpec.from_matrix(B, args.p_source, args.p_target)
    norm = normalization_gap_check(args.p_target, pairs, d, args.seed)
    smap = sphere_map_check(op, pairs, args.seed)
    hom = homogeneous_extension_check(op.phi, op.D, op.source_p, op.target_p, d, pairs, args.seed)
    net = build_eps_net(d, op.source_p, args.eps, seed=args.seed)
    f = coordinate_contraction(rng, d)
    g = transfer_g_construction(f, net, op, args.eps, seed=args.seed)["report"]
    checks = {"normalization": norm["ok"], "phi": smap["phi_ok"], "phi_inverse": smap["phi_inverse_ok"],
              "roundtrip": smap["roundtrip_ok"], "operator_bound": smap["operator_bound_ok"],
              "homogeneous_extension": hom["ok"], "g_lipschitz": g["g_lipschitz_ok"],
              "rescaling_identity": g["rescaling_identity_ok"], "three_term": g["three_term_ok"]}
    report = {"D": op.D, "D_exact": op.exact, "condition_number": op.cond, "checks": checks,
              "normalization": norm, "sphere_maps": smap, "homogeneous_extension": hom,
              "g_construction": g}
    return ("pass" if all(checks.values()) else "violation"), report, {}


def cmd_cross_validate(args):
    from .retraction import BudgetError, optimal_uniform_error
    from .witnesses import certificate_lp, hypercube_net_instance

    tol = _tol(args, 1e-6)
    if args.instance:
        data = io.load_json(args.instance)
        for k in ("n", "p", "eps", "L", "q"):
            io.require(data, k, (int, float, str))
        n, p, eps, L, q = (data[k] for k in ("n", "p", "eps", "L", "q"))
        extra = int(data.get("extra", 0))
    else:
        n, p, eps, L, q, extra = args.n, args.p, args.eps, args.L, args.q, args.extra
    try:
        net, inst = hypercube_net_instance(int(n), p, float(eps), float(L), args.seed, extra)
        res = optimal_uniform_error(inst, float(eps), lp_budget=_budget(args))
    except BudgetError as exc:
        return "inconclusive", {"error": str(exc)}, {}
    ceiling = res.A_star * float(eps)
    rows = []
    for name, qq in (("hypercube_snowflake", float(q)),):
        cert = certificate_lp(net, p, L, qq, float(eps))
        rows.append({"certificate": name, "q": qq, "value": cert.lower_bound,
                     "lp_ceiling": ceiling, "dominated": cert.lower_bound <= ceiling + tol})
    report = {"A_star": res.A_star, "certified_A": res.certified_A, "eps": float(eps),
              "net_size": len(net), "ambient_size": inst.ambient.size, "table": rows}
    ok = all(r["dominated"] for r in rows)
    return ("pass" if ok else "violation"), report, {"comparison": rows}


COMMANDS = {
    "net-gen": cmd_net_gen,
    "w1": cmd_w1,
    "lp-optimal": cmd_lp_optimal,
    "certify-l1": cmd_certify_l1,
    "certify-lp": cmd_certify_lp,
    "certify-l2": cmd_certify_l2,
    "sphere-check": cmd_sphere_check,
    "transfer-check": cmd_transfer_check,
    "cross-validate": cmd_cross_validate,
}


def build_parser():
    ap = _Parser(prog="lipext", description="Almost-extension verification toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("net-gen", help="greedy eps-net of a unit sphere")
    _common(p)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--p", default="2")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--antipodal", action="store_true")
    p.add_argument("--hypercube-anchors", action="store_true")
    p.add_argument("--max-candidates", type=int, default=200_000)

    p = sub.add_parser("w1", help="primal/dual/exact W1 norm of a signed measure")
    _common(p)
    p.add_argument("--instance", required=True)

    p = sub.add_parser("lp-optimal", help="optimal uniform error of a finite instance")
    _common(p)
    p.add_argument("--instance", required=True)
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--eps-scale", type=float, default=1.0)
    p.add_argument("--backend", choices=["highs", "simplex", "exact"], default="highs")
    p.add_argument("--convex", action="store_true")
    p.add_argument("--verify", type=int, default=0, help="random targets for the round trip")

    p = sub.add_parser("certify-l1", help="hypercube certificate in l_1")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--params", choices=["closed-form", "optimal"], default="closed-form")
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--net", default=None)
    p.add_argument("--no-enforce", action="store_true")

    p = sub.add_parser("certify-lp", help="hypercube certificate in l_p, 1 <= p < 2")
    _common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--net", default=None)
    p.add_argument("--auto-parameters", action="store_true")
    p.add_argument("--no-enforce", action="store_true")

    p = sub.add_parser("certify-l2", help="Euclidean moment chain on an LP family")
    _common(p)
    p.add_argument("--instance", default=None)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--eps", type=float, default=0.75)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--extra", type=int, default=2, help="extra antipodal pairs in the ambient")

    p = sub.add_parser("sphere-check", help="Monte-Carlo sphere identities")
    _common(p)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--atoms", type=int, default=5)

    p = sub.add_parser("transfer-check", help="sphere maps and the g construction")
    _common(p)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--p-source", default="2")
    p.add_argument("--p-target", default="2")
    p.add_argument("--perturb", type=float, default=0.2)
    p.add_argument("--eps", type=float, default=0.5)

    p = sub.add_parser("cross-validate", help="certificates against the LP optimum")
    _common(p)
    p.add_argument("--instance", default=None)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.8)
    p.add_argument("--L", type=float, default=0.25)
    p.add_argument("--q", type=float, default=1.5)
    p.add_argument("--extra", type=int, default=2)
    return ap


def run(argv=None):
    """Parse, execute and write reports. Returns ``(exit_code, report_or_None)``."""
    try:
        args = build_parser().parse_args(argv)
        args.seed = io.env_seed(args.seed)
        if args.seed < 0:
            raise SchemaError("--seed must be nonnegative")
        status, body, tables = COMMANDS[args.command](args)
    except SchemaError as exc:
        print(f"lipext: schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA, None
    report = {"schema": io.SCHEMA, "command": args.command, "status": status, "seed": args.seed,
              "config": {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "command")},
              "results": body}
    out = Path(args.out)
    io.write_report(report, out / f"{args.command}.json")
    for name, rows in tables.items():
        if rows:
            io.write_csv(rows, out / f"{args.command}_{name}.csv")
    print(f"{args.command}: {status}")
    return EXIT[status], report


def main(argv=None):
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
