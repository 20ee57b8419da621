"""Command-line front end.

Subcommands::

    crnbif parse NET.crn [--format json]
    crnbif analyze NET.crn --kind fold --free k [--set k=0.8] [--state 1,1]
    crnbif enlarge NET.crn --step "E1: X1 + X2 -> 2 X2" [--state 1,1]
    crnbif inherit NET.crn --step "E6: split r2 with Y1 + Y2" --kind fold --free k
    crnbif gallery [--out DIR] [--only r0-e2] [--csv] [--jobs 4]

Exit codes: 0 success, 1 partial gallery failure, 2 input error,
3 analysis failure (no bifurcation found, or a sweep that does not PASS),
4 invalid enlargement.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bifurcation as bif
from .dsl import DSLError, format_enlargement, parse_file
from .enlarge import EnlargementError, compose
from .inherit import SweepConfig, track_inherited_bifurcation
from .massaction import ChartDomainError, ReducedField, make_chart
from .network import NetworkError, conservation_basis

EXIT_OK, EXIT_PARTIAL, EXIT_INPUT, EXIT_ANALYSIS, EXIT_ENLARGE = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


# -- helpers -------------------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load(path: str, steps=()):
    """Parse a network file with extra enlargement statements appended."""
    text = _read(path)
    extra = []
    for s in steps:
        s = s.strip()
        extra.append(s if s.startswith("enlarge") else f"enlarge {s}")
    try:
        n_file = len(parse_file(text).enlargements)
        pf = parse_file(text + "\n" + "\n".join(extra))
    except DSLError as exc:
        raise InputError(f"{path}: {exc}") from None
    return pf, n_file


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise InputError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _assignments(items, what: str) -> dict[str, float]:
    out = {}
    for item in items or ():
        for part in item.split(","):
            if not part.strip():
                continue
            name, sep, value = part.partition("=")
            if not sep:
                raise InputError(f"{what}: expected name=value, got {part!r}")
            try:
                out[name.strip()] = float(value)
            except ValueError:
                raise InputError(f"{what}: {value!r} is not a number") from None
    return out


def _kappa(net, assigned: dict[str, float]) -> dict[str, float]:
    unknown = set(assigned) - set(net.param_names)
    if unknown:
        raise InputError(f"unknown parameter(s): {', '.join(sorted(unknown))}; "
                         f"network has {', '.join(net.param_names) or 'none'}")
    bad = [k for k, v in assigned.items() if not v > 0]
    if bad:
        raise InputError(f"rate constants must be positive: {', '.join(bad)}")
    return {p: assigned.get(p, 1.0) for p in net.param_names}


def _state(net, text: str | None) -> np.ndarray:
    if text is None:
        return np.ones(net.n)
    x = np.array(_floats(text, "--state"))
    if len(x) != net.n:
        raise InputError(f"--state needs {net.n} values ({', '.join(net.species)}), got {len(x)}")
    if not np.all(x > 0):
        raise InputError("--state must be strictly positive")
    return x


def _emit(args, text: str):
    if getattr(args, "output", None):
        Path(args.output).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _matrix_lines(M) -> list[str]:
    rows = [[str(v) for v in row] for row in M]
    width = max((len(v) for row in rows for v in row), default=1)
    return ["  [" + " ".join(v.rjust(width) for v in row) + "]" for row in rows]


# -- commands ------------------------------------------------------------------------------


def network_dict(net) -> dict:
    return {
        "species": list(net.species),
        "parameters": list(net.param_names),
        "reactions": [
            {"reactant": r.reactant.as_dict(), "product": r.product.as_dict(), "rate": str(r.rate)}
            for r in net.reactions
        ],
        "stoichiometric_matrix": net.stoichiometric_matrix.tolist(),
        "reactant_matrix": net.reactant_matrix.tolist(),
        "rank": net.rank,
        "conservation_basis": [[str(v) for v in row] for row in conservation_basis(net)],
    }


def cmd_parse(args) -> int:
    pf, _ = _load(args.path)
    net = pf.network
    if args.format == "json":
        d = network_dict(net)
        d["enlargements"] = [s.describe() for s in pf.enlargements]
        _emit(args, json.dumps(d, indent=2))
        return EXIT_OK
    lines = [net.format().rstrip(), "", f"rank {net.rank}", "Gamma (species x reactions):"]
    lines += _matrix_lines(net.stoichiometric_matrix)
    lines += ["reactant matrix Gamma_l:"]
    lines += _matrix_lines(net.reactant_matrix)
    cons = conservation_basis(net)
    lines.append("conservation basis:" if cons else "conservation basis: none")
    lines += _matrix_lines(cons)
    for s in pf.enlargements:
        lines.append(format_enlargement(s))
    _emit(args, "\n".join(lines))
    return EXIT_OK


def _analyze(net, args, kind):
    kappa = _kappa(net, _assignments(args.set, "--set"))
    x0 = _state(net, args.state)
    free = tuple(args.free) if args.free else None
    if free is not None:
        missing = [p for p in free if p not in net.param_names]
        if missing:
            raise InputError(f"--free: unknown parameter(s) {', '.join(missing)}")
        if len(free) != kind.codim:
            raise InputError(f"{kind.value} needs {kind.codim} free parameter(s), got {len(free)}")
    field = ReducedField(net, make_chart(net, x0))
    theta0 = np.zeros(field.dim) if args.theta is None else np.array(_floats(args.theta, "--theta"))
    if len(theta0) != field.dim:
        raise InputError(f"--theta needs {field.dim} values")
    tol = bif.Tolerances(eq_tol=args.eq_tol, bif_tol=args.bif_tol, trans_tol=args.trans_tol)
    if free is None:
        free = bif.choose_unfolding_params(field, kind, theta0, bif.kappa_vector(field, kappa))
    branches = []
    if args.no_scan or kind.codim > 1:
        bp = bif.locate_bifurcation(field, kind, (theta0, kappa), free, tol)
    else:
        lo, hi = args.bounds
        bp, branches = bif.scan_for_bifurcation(field, kind, kappa, free[0], (lo, hi),
                                                guesses=[theta0] + bif.seed_guesses(field.dim)[1:], tol=tol)
    return field, bp, branches


def cmd_analyze(args) -> int:
    pf, _ = _load(args.path)
    net = pf.network
    if net.depends_on_eps:
        if args.eps is None:
            raise InputError("network rates depend on eps; pass --eps")
        net = net.instantiate(args.eps)
    kind = bif.as_kind(args.kind)
    try:
        field, bp, branches = _analyze(net, args, kind)
    except (bif.BifurcationError, ChartDomainError) as exc:
        print(f"analysis failed: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    if bp is None:
        summary = [
            {"free_param": b.free_param, "points": len(b), "range": [min(b.kappa), max(b.kappa)] if len(b) else None,
             "notes": b.notes}
            for b in branches
        ]
        print(f"no {kind.value} bracket found in [{args.bounds[0]}, {args.bounds[1]}]", file=sys.stderr)
        print(json.dumps({"branches": summary}, indent=2), file=sys.stderr)
        return EXIT_ANALYSIS
    d = bp.to_dict()
    d["transversality"] = bif.transversality_certificate(field, bp).to_dict()
    d["species"] = list(net.species)
    if args.format == "json":
        _emit(args, json.dumps(d, indent=2))
    else:
        lines = [
            f"{kind.value} at x = {np.array2string(bp.x, precision=10)}",
            f"theta = {np.array2string(bp.theta, precision=10)}",
            "kappa = " + ", ".join(f"{k}={v:.12g}" for k, v in bp.kappa.items()),
            f"free parameters: {', '.join(bp.free_params)}",
            "eigenvalues: " + ", ".join(f"{z:.6g}" for z in bp.eigenvalues),
            f"sigma_min (relative) = {bp.sigma_min:.3e}",
        ]
        if bp.quadratic is not None:
            lines.append(f"quadratic coefficient = {bp.quadratic:.6g}; f_kappa = {bp.f_kappa}")
        if bp.l1 is not None:
            lines.append(f"l1 = {bp.l1:.6g}, omega = {bp.omega:.6g}")
        lines.append("flags: " + ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in bp.flags.items()))
        lines.append("PASS" if bp.passed else "FAIL")
        _emit(args, "\n".join(lines))
    return EXIT_OK if bp.passed else EXIT_ANALYSIS


def _enlarged(args, pf, n_file, base_point):
    net = pf.network
    if net.depends_on_eps:
        raise InputError("the base network must not depend on eps")
    steps = pf.enlargements
    if not steps:
        raise InputError("no enlargement given (use --step or enlarge statements in the file)")
    chart = make_chart(net, base_point)
    return compose(net, chart, steps)


def cmd_enlarge(args) -> int:
    pf, n_file = _load(args.path, args.step)
    base = _state(pf.network, args.state)
    try:
        enl = _enlarged(args, pf, n_file, base)
    except EnlargementError as exc:
        print(f"invalid enlargement: {exc}", file=sys.stderr)
        return EXIT_ENLARGE
    net = enl.network
    if args.format == "json":
        d = network_dict(net)
        d["chain"] = list(enl.chain)
        d["limit_data"] = [ld.to_dict() for ld in enl.limit_data]
        _emit(args, json.dumps(d, indent=2))
    else:
        lines = [net.format().rstrip(), ""]
        for step in enl.steps:
            lines.append(f"{step.move.describe()}  |  class: {step.limit.class_constraint}")
        _emit(args, "\n".join(lines))
    return EXIT_OK


def cmd_inherit(args) -> int:
    pf, n_file = _load(args.path, args.step)
    net = pf.network
    kind = bif.as_kind(args.kind)
    cfg = SweepConfig(eps_max=args.eps_max, eps_min=args.eps_min, n_points=args.points, seeding=args.seeding,
                      tol=bif.Tolerances(eq_tol=args.eq_tol, bif_tol=args.bif_tol, trans_tol=args.trans_tol))
    if args.base_json:
        try:
            bp = bif.BifPoint.from_dict(json.loads(_read(args.base_json)))
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(f"{args.base_json}: not a BifPoint JSON ({exc})") from None
    else:
        try:
            _, bp, _ = _analyze(net, args, kind)
        except (bif.BifurcationError, ChartDomainError) as exc:
            print(f"base analysis failed: {exc}", file=sys.stderr)
            return EXIT_ANALYSIS
        if bp is None:
            print(f"base analysis failed: no {kind.value} bracket found", file=sys.stderr)
            return EXIT_ANALYSIS
    try:
        enl = _enlarged(args, pf, n_file, bp.x)
    except EnlargementError as exc:
        print(f"invalid enlargement: {exc}", file=sys.stderr)
        return EXIT_ENLARGE
    rep = track_inherited_bifurcation(bp, enl, cfg, case_id=args.case_id or Path(args.path).stem)
    if args.csv:
        Path(args.csv).write_text(rep.to_csv())
    if args.format == "json":
        _emit(args, rep.to_json(indent=2))
    else:
        _emit(args, rep.summary())
    return EXIT_OK if rep.passed else EXIT_ANALYSIS


def cmd_gallery(args) -> int:
    from .gallery import case_ids, verify_paper_gallery

    if args.only:
        unknown = [c for c in args.only if c not in case_ids()]
        if unknown:
            raise InputError(f"unknown case(s) {', '.join(unknown)}; choose from {', '.join(case_ids())}")
    cfg = SweepConfig(eps_max=args.eps_max, eps_min=args.eps_min, n_points=args.points)
    suite = verify_paper_gallery(args.only, cfg, jobs=args.jobs)
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        for rep in suite.reports:
            (out / f"{rep.case_id}.json").write_text(rep.to_json(indent=2) + "\n")
            if args.csv:
                (out / f"{rep.case_id}.csv").write_text(rep.to_csv())
        (out / "summary.txt").write_text(suite.table() + "\n")
        (out / "summary.json").write_text(json.dumps(suite.to_dict(), indent=2) + "\n")
    if args.format == "json":
        print(json.dumps(suite.to_dict(), indent=2))
    else:
        print(suite.table())
        if suite.failures:
            print("failed: " + ", ".join(suite.failures))
    return EXIT_OK if suite.passed else EXIT_PARTIAL


# -- argument parsing ----------------------------------------------------------------------


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _add_analysis_flags(p):
    p.add_argument("--kind", choices=[k.value for k in bif.BifKind], default="fold")
    p.add_argument("--free", nargs="+", metavar="PARAM", help="unfolding parameters (default: pivoted QR choice)")
    p.add_argument("--set", action="append", metavar="NAME=VALUE",
                   help="rate constant values (seeds for the free ones); unset ones are 1")
    p.add_argument("--state", metavar="X1,X2,...", help="positive chart base point (default: all ones)")
    p.add_argument("--theta", metavar="T1,...", help="chart coordinates of the initial guess")
    p.add_argument("--bounds", nargs=2, type=_positive, default=(0.01, 10.0), metavar=("LO", "HI"),
                   help="range of the free parameter swept to bracket the bifurcation")
    p.add_argument("--no-scan", action="store_true", help="skip continuation; run Newton from the seed")
    p.add_argument("--eq-tol", type=_positive, default=bif.DEFAULT_TOL.eq_tol)
    p.add_argument("--bif-tol", type=_positive, default=bif.DEFAULT_TOL.bif_tol)
    p.add_argument("--trans-tol", type=_positive, default=bif.DEFAULT_TOL.trans_tol)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crnbif", description="Bifurcations of mass action networks and their enlargements.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="print the canonical network, Gamma, rank and conservation laws")
    p.add_argument("path")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("analyze", help="locate a bifurcation and print its certificate")
    p.add_argument("path")
    _add_analysis_flags(p)
    p.add_argument("--eps", type=_positive, help="value of eps for networks with eps-dependent rates")
    p.add_argument("--format", choices=("text", "json"), default="json")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("enlarge", help="apply enlargements and print the enlarged network")
    p.add_argument("path")
    p.add_argument("--step", action="append", default=[], metavar="STEP", help='e.g. "E1: X1 + X2 -> 2 X2"')
    p.add_argument("--state", metavar="X1,X2,...", help="base point for E2 (default: all ones)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_enlarge)

    p = sub.add_parser("inherit", help="run an inheritance sweep over eps")
    p.add_argument("path")
    p.add_argument("--step", action="append", default=[], metavar="STEP")
    _add_analysis_flags(p)
    p.add_argument("--base-json", help="stored BifPoint JSON instead of analysing the base")
    p.add_argument("--eps-max", type=_positive, default=1e-1)
    p.add_argument("--eps-min", type=_positive, default=1e-4)
    p.add_argument("--points", type=int, default=12)
    p.add_argument("--seeding", choices=("continuation", "limit"), default="continuation")
    p.add_argument("--case-id")
    p.add_argument("--csv", metavar="PATH", help="also write (eps, deviations, transverse Re) as CSV")
    p.add_argument("--format", choices=("text", "json"), default="json")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_inherit)

    p = sub.add_parser("gallery", help="run the built-in gallery of inheritance cases")
    p.add_argument("--out", metavar="DIR", help="write per-case JSON reports and a summary here")
    p.add_argument("--only", nargs="+", metavar="CASE")
    p.add_argument("--csv", action="store_true", help="write per-case convergence CSVs (needs --out)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--eps-max", type=_positive, default=1e-1)
    p.add_argument("--eps-min", type=_positive, default=1e-4)
    p.add_argument("--points", type=int, default=12)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_gallery)
    return ap


def _validate(args):
    if getattr(args, "eps_min", None) is not None and not args.eps_min < args.eps_max:
        raise InputError("--eps-min must be smaller than --eps-max")
    if getattr(args, "points", 12) < 2:
        raise InputError("--points must be at least 2")
    if getattr(args, "jobs", 1) < 1:
        raise InputError("--jobs must be at least 1")
    if getattr(args, "bounds", None) is not None and not args.bounds[0] < args.bounds[1]:
        raise InputError("--bounds must be increasing")
    if args.command == "gallery" and args.csv and not args.out:
        raise InputError("--csv needs --out")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DSLError, NetworkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
