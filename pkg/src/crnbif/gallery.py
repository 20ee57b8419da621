"""Built-in example networks and the inheritance gallery.

Every network is stored as DSL text.  A case names a base network, rate
constants near a bifurcation, the unfolding parameters and the chain of
enlargements; :func:`run_case` locates the base point and sweeps eps.
"""

from __future__ import annotations

import os
from fractions import Fraction
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bifurcation import (
    BifKind,
    BifPoint,
    BifurcationError,
    find_equilibrium,
    locate_bifurcation,
    scan_for_bifurcation,
    test_functions,
)
from .dsl import parse_file, parse_network
from .enlarge import compose
from .inherit import InheritanceReport, SweepConfig, track_inherited_bifurcation
from .massaction import ReducedField, make_chart
from .network import Network

NETWORKS = {
    "r0": """
        X1 + 2 X2 -> 3 X2 @ 1
        X2 -> X1 @ k
    """,
    "rb0": """
        X -> Y @ k3
        2 X + Y -> 3 X @ k4
    """,
    "rb1": """
        0 <-> X @ k1, k2
        X -> Y @ k3
        2 X + Y -> 3 X @ k4
    """,
    "rb2": """
        Z <-> X @ k1, k2
        X -> Y @ k3
        2 X + Y -> 3 X @ k4
    """,
    "rb3": """
        X <-> Y @ k3, k5
        X <-> Z @ k2, k1
        Y <-> Z @ k6, k7
        0 <-> X @ k8, k9
        0 <-> Y @ k10, k11
        0 <-> Z @ k12, k13
        2 X + Y -> 3 X @ k4
    """,
    "ra0": """
        0 -> X @ a
        X + Y -> 2 Y @ b
        Y -> 2 Z @ c
        X + Z -> 0 @ d
    """,
    "ra1": """
        0 -> X @ a
        X + Y -> W @ b
        W -> 2 Y @ e
        Y -> 2 Z @ c
        X + Z -> 0 @ d
    """,
    "ra2": """
        V -> X @ a
        X + Y -> V + W @ b
        V + W -> 2 Y @ e
        V + Y -> 2 Z @ c
        X + Z -> 2 V @ d
    """,
    "rc0": """
        Z + X -> 2 X @ k1
        X + Y -> 2 Y @ k2
        Y + Z -> 0 @ k3
        0 -> 2 Z @ k4
    """,
    "rc1": """
        Z + X -> 2 X @ k1
        X + Y -> 2 Y @ k2
        Y + Z -> 2 W @ k3
        2 W -> 2 Z @ k4
    """,
}

# The R_A0 rates use a common factor 0.3 on (a, b, c, d); a slower base
# time scale puts the whole eps grid inside the asymptotic regime.
RA0_RATES = {"a": 0.3, "b": 0.3, "c": 0.45, "d": 0.3}


def network(name: str) -> Network:
    return parse_network(NETWORKS[name])


@dataclass(frozen=True)
class Case:
    """One gallery entry.

    ``pre`` enlargement statements are applied first and the result is
    frozen at ``pre_eps``; the frozen network is then the base.  This is
    how a bifurcation of a schedule-dependent network (R_B2) is itself
    used as a base.
    """

    case_id: str
    title: str
    kind: str
    base: str
    kappa: dict
    x_seed: tuple
    free: tuple[str, ...]
    steps: str
    pre: str = ""
    pre_eps: float | None = None
    grid_search: bool = False
    notes: tuple[str, ...] = ()


R0_KAPPA = {"k": 0.9}
R0_X = (1.0, 1.0)
BRUSS_KAPPA = {"k1": 1.0, "k2": 1.0, "k3": 1.8, "k4": 1.0}
# R_B2 bases for R_B3 are frozen at eps1 = 0.1 and run three times faster;
# the E1 and E2 additions carry rate constant eps, so a faster base keeps
# them a small perturbation over the whole grid.
RB3_FOLD_KAPPA = {"k3": 2.7, "k4": 3.0}
RB3_HOPF_KAPPA = {"k1": 3.0, "k2": 3.0, "k3": 5.4, "k4": 3.0}

CASES: tuple[Case, ...] = (
    Case("r0-e1", "R0 -> R1: dependent reaction", "fold", "r0", R0_KAPPA, R0_X, ("k",),
         "enlarge E1: X1 + X2 -> 2 X2"),
    Case("r0-e2", "R0 -> R2: fully open extension", "fold", "r0", R0_KAPPA, R0_X, ("k",), "enlarge E2"),
    Case("r0-e3", "R0 -> R3: dependent species", "fold", "r0", R0_KAPPA, R0_X, ("k",),
         "enlarge E3: Y at r1[0->1], r2[1->0]"),
    Case("r0-e4", "R0 -> R4: new species with flows", "fold", "r0", R0_KAPPA, R0_X, ("k",),
         "enlarge E4: Y at r2[1->0]"),
    Case("r0-e5", "R0 -> R5: new reversible reaction", "fold", "r0", R0_KAPPA, R0_X, ("k",),
         "enlarge E5: Y1 + X1 <-> 2 Y2"),
    Case("r0-e6", "R0 -> R6: split reaction", "fold", "r0", R0_KAPPA, R0_X, ("k",),
         "enlarge E6: split r2 with Y1 + Y2"),
    Case("rb0-e5", "R_B0 -> R_B2 via E5 (fold)", "fold", "rb0", {"k3": 0.9, "k4": 1.0}, (1.0, 1.0), ("k3",),
         "enlarge E5: Z <-> X"),
    Case("rb1-e3", "R_B1 -> R_B2 via E3 (Hopf)", "hopf", "rb1", BRUSS_KAPPA, (1.0, 2.0), ("k3",),
         "enlarge E3: Z at r1[1->0], r2[0->1]"),
    Case("rb2-e1e2-fold", "R_B2 -> R_B3 via E1 + E2 (fold)", "fold", "rb0", RB3_FOLD_KAPPA, (1.0, 1.0),
         ("k3",), "enlarge E1: Y -> X\nenlarge E1: Y -> Z\nenlarge E1: Z -> Y\nenlarge E2",
         pre="enlarge E5: Z <-> X", pre_eps=0.1),
    Case("rb2-e1e2-hopf", "R_B2 -> R_B3 via E1 + E2 (Hopf)", "hopf", "rb1", RB3_HOPF_KAPPA, (1.0, 2.0), ("k3",),
         "enlarge E1: Y -> X\nenlarge E1: Y -> Z\nenlarge E1: Z -> Y\nenlarge E2",
         pre="enlarge E3: Z at r1[1->0], r2[0->1]", pre_eps=0.1),
    Case("ra0-e6e3", "R_A0 -> R_A1 -> R_A2 via E6 then E3 (Hopf, l1 < 0)", "hopf", "ra0", RA0_RATES,
         (1.5, 1.0 / 3.0, 2.0 / 9.0), ("d",),
         "enlarge E6: split r2 with W\nenlarge E3: V at r1[1->0], r2[0->1], r3[1->0], r4[0->2], r5[1->0]",
         grid_search=True),
    Case("rc0-e3", "R_C0 -> R_C1 via E3 (degenerate Hopf)", "hopf", "rc0",
         {"k1": 1.8, "k2": 1.0, "k3": 1.0, "k4": 1.0}, (0.7, 0.7, 1.4), ("k1",),
         "enlarge E3: W at r3[0->2], r4[2->0]",
         notes=("l1 of the enlarged network is reported without a criticality claim",)),
)


def case_ids() -> list[str]:
    return [c.case_id for c in CASES]


def get_case(case_id: str) -> Case:
    for c in CASES:
        if c.case_id == case_id:
            return c
    raise KeyError(f"unknown gallery case {case_id!r}; choose from {', '.join(case_ids())}")


def base_bifurcation(case: Case) -> tuple[Network, BifPoint, tuple]:
    """Locate the base bifurcation of a case.

    Returns the base network, the located point and the parsed main steps.
    """
    pf = parse_file(NETWORKS[case.base] + "\n" + case.pre + "\n" + case.steps)
    net = pf.network
    n_pre = len(parse_file(NETWORKS[case.base] + "\n" + case.pre).enlargements)
    pre, main = pf.enlargements[:n_pre], pf.enlargements[n_pre:]
    kappa = dict(case.kappa)
    if case.grid_search:
        bp = ra0_hopf(kappa)
    else:
        field = ReducedField(net, make_chart(net, case.x_seed))
        th = find_equilibrium(field, np.zeros(field.dim), kappa)
        bp = locate_bifurcation(field, case.kind, (th, kappa), case.free)
    if pre:
        eps1 = Fraction(str(case.pre_eps))
        enl = compose(net, make_chart(net, bp.x), pre)
        frozen = enl.network.instantiate(eps1)
        z0 = enl.seed(bp.x, bp.kappa, eps1)
        field = ReducedField(frozen, make_chart(frozen, z0))
        bp = locate_bifurcation(field, case.kind, (np.zeros(field.dim), bp.kappa), case.free)
        net = frozen
    return net, bp, main


def run_case(case: Case | str, cfg: SweepConfig = SweepConfig()) -> InheritanceReport:
    """Locate the base point and run the inheritance sweep for one case."""
    if isinstance(case, str):
        case = get_case(case)
    try:
        net, bp, steps = base_bifurcation(case)
    except (BifurcationError, ValueError, np.linalg.LinAlgError) as exc:
        rep = InheritanceReport(case.case_id, case.kind, [], {}, cfg, [], False,
                                notes=[f"base bifurcation not located: {exc}"])
        return rep
    enl = compose(net, make_chart(net, bp.x), steps)
    rep = track_inherited_bifurcation(bp, enl, cfg, case_id=case.case_id)
    rep.notes.extend(case.notes)
    rep.extra["title"] = case.title
    if case.pre:
        rep.extra["base_frozen_at_eps"] = case.pre_eps
    return rep


def _run_one(args):
    case_id, cfg = args
    return run_case(case_id, cfg)


@dataclass
class SuiteReport:
    reports: list[InheritanceReport] = field(default_factory=list)

    @property
    def failures(self) -> list[str]:
        return [r.case_id for r in self.reports if r.verdict != "PASS"]

    @property
    def passed(self) -> bool:
        return not self.failures

    def table(self) -> str:
        lines = [f"{'case':<16} {'kind':<5} {'verdict':<12} {'slope':>7} {'max extra Re':>14}"]
        for r in self.reports:
            fit = r.fit
            slope = "exact" if fit.status == "exact" else ("-" if fit.kappa_slope is None else f"{fit.kappa_slope:.3f}")
            mins = [p.min_extra_real for p in r.points if p.min_extra_real is not None]
            ext = f"{max(mins):.3e}" if mins else "-"
            lines.append(f"{r.case_id:<16} {r.kind:<5} {r.verdict:<12} {slope:>7} {ext:>14}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "cases": [r.case_id for r in self.reports],
            "verdicts": {r.case_id: r.verdict for r in self.reports},
            "failures": self.failures,
        }


def verify_paper_gallery(only: Sequence[str] | None = None, cfg: SweepConfig = SweepConfig(),
                         jobs: int = 1) -> SuiteReport:
    """Run every gallery case (or those in ``only``) and collect the reports.

    Case failures are recorded in their reports; the suite never stops early.
    """
    ids = list(only) if only else case_ids()
    for cid in ids:
        get_case(cid)
    if jobs > 1 and len(ids) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_one, [(cid, cfg) for cid in ids]))
    else:
        reports = [run_case(cid, cfg) for cid in ids]
    return SuiteReport(reports)


# -- parameter studies ---------------------------------------------------------------


def hopf_grid_bisection(field, kappa, free: str, values: Sequence[float], theta0=None, xtol: float = 1e-12):
    """Find Hopf points along ``free`` by a grid scan and bisection.

    The Hopf test function (bialternate determinant, relative) is sampled
    along the grid with equilibria followed from point to point; each
    sign change with a genuine complex pair is bisected and then polished
    by :func:`locate_bifurcation`.

    Returns:
        List of located BifPoints, in grid order.
    """
    kv = dict(kappa)
    th = np.zeros(field.dim) if theta0 is None else np.asarray(theta0, dtype=float)
    samples = []
    for v in values:
        kv[free] = float(v)
        try:
            th = find_equilibrium(field, th, kv)
        except BifurcationError:
            samples.append(None)
            continue
        tv = test_functions(field, th, kv, "hopf")
        samples.append((float(v), th.copy(), float(tv.relative[0])))
    found = []
    for a, b in zip(samples, samples[1:]):
        if a is None or b is None or np.sign(a[2]) == np.sign(b[2]):
            continue
        (lo, th_lo, g_lo), (hi, _, _) = a, b
        th_mid = th_lo
        while abs(hi - lo) > xtol * max(1.0, abs(lo)):
            mid = 0.5 * (lo + hi)
            kv[free] = mid
            th_mid = find_equilibrium(field, th_mid, kv)
            g_mid = float(test_functions(field, th_mid, kv, "hopf").relative[0])
            if np.sign(g_mid) == np.sign(g_lo):
                lo, g_lo = mid, g_mid
            else:
                hi = mid
        kv[free] = 0.5 * (lo + hi)
        try:
            bp = locate_bifurcation(field, "hopf", (th_mid, dict(kv)), (free,))
        except BifurcationError:
            continue
        if bp.guard == "ok":
            found.append(bp)
    return found


def ra0_hopf(rates: dict | None = None, d_values: Sequence[float] | None = None) -> BifPoint:
    """Hopf point of R_A0 with l1 < 0, by grid search in d plus bisection.

    The grid is scanned from large to small d and the first Hopf point
    with negative first Lyapunov coefficient is returned.
    """
    rates = dict(RA0_RATES if rates is None else rates)
    net = network("ra0")
    a, b, c = rates["a"], rates["b"], rates["c"]
    d_values = np.geomspace(10.0, 1e-2, 61) * a if d_values is None else np.asarray(d_values)
    d0 = float(d_values[0])
    y = a / (3 * c)
    x0 = np.array([c / b, y, 2 * b * y / d0])
    field = ReducedField(net, make_chart(net, x0))
    for bp in hopf_grid_bisection(field, rates, "d", d_values):
        if bp.passed and bp.l1 is not None and bp.l1 < 0:
            return bp
    raise BifurcationError("no supercritical Hopf point found on the grid")


def hopf_curve_l1(field, bp: BifPoint, along: str, values: Sequence[float]) -> list[tuple[float, float, float]]:
    """Follow a Hopf curve in two parameters and record l1.

    ``along`` is stepped through ``values`` while the point's own free
    parameter is solved for; returns (along value, free value, l1)
    triples for the points that were located.
    """
    free = bp.free_params
    kv = dict(bp.kappa)
    th = np.asarray(bp.theta, dtype=float)
    out = []
    for v in values:
        kv[along] = float(v)
        try:
            p = locate_bifurcation(field, "hopf", (th, kv), free)
        except BifurcationError:
            break
        if p.guard != "ok" or p.l1 is None or not (p.flags["equilibrium"] and p.flags["test"]):
            break
        th, kv = p.theta, dict(p.kappa)
        out.append((float(v), float(kv[free[0]]), float(p.l1)))
    return out


def l1_sign_change(path: Sequence[tuple[float, float, float]]) -> tuple[float, float] | None:
    """First consecutive pair of ``along`` values on a Hopf curve where l1 changes sign."""
    for (v0, _, a), (v1, _, b) in zip(path, path[1:]):
        if a * b < 0:
            return v0, v1
    return None


def ra0_l1_sign_change(bp: BifPoint | None = None, d_end: float = 0.75, n: int = 60, xtol: float = 1e-10):
    """Follow the R_A0 Hopf curve in (d, c) from the supercritical point and bracket l1 = 0.

    The curve is parametrized by d with c solved for.  A sign change of l1
    between consecutive points is refined by bisection in d.

    Returns:
        (path, estimate) where ``path`` holds (d, c, l1) triples and
        ``estimate`` is the (d, c, l1) point with l1 closest to zero after
        refinement, or None when l1 keeps its sign.
    """
    bp = ra0_hopf() if bp is None else bp
    net = network("ra0")
    field = ReducedField(net, make_chart(net, bp.x))
    start = locate_bifurcation(field, "hopf", (np.zeros(field.dim), bp.kappa), ("c",))
    path = hopf_curve_l1(field, start, "d", np.linspace(bp.kappa["d"], d_end, n))
    bracket = l1_sign_change(path)
    if bracket is None:
        return path, None
    lo, hi = bracket
    i = [p[0] for p in path].index(lo)
    kv = dict(start.kappa)
    kv["c"], kv["d"] = path[i][1], lo
    p_lo = locate_bifurcation(field, "hopf", (np.zeros(field.dim), kv), ("c",))
    l_lo = p_lo.l1
    best = path[i]
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        kv = dict(p_lo.kappa)
        kv["d"] = mid
        p_mid = locate_bifurcation(field, "hopf", (p_lo.theta, kv), ("c",))
        best = (mid, float(p_mid.kappa["c"]), float(p_mid.l1))
        if np.sign(p_mid.l1) == np.sign(l_lo):
            lo, p_lo, l_lo = mid, p_mid, p_mid.l1
        else:
            hi = mid
    return path, best


def probe_seed() -> int:
    """Seed for randomized probes; CRN_INHERIT_SEED overrides the default."""
    return int(os.environ.get("CRN_INHERIT_SEED", "20240501"))


def rc1_l1_probe(n_samples: int = 40, seed: int | None = None, spread: float = 1.5) -> list[dict]:
    """Sample rate constants of R_C1 and compute l1 at the Hopf point in k1.

    k2, k3, k4 are drawn log-uniformly from [e^-spread, e^spread]; k1 is
    the unfolding parameter.  Returns one record per sample where a
    passing Hopf point was found.
    """
    rng = np.random.default_rng(probe_seed() if seed is None else seed)
    net = network("rc1")
    field = ReducedField(net, make_chart(net, [0.25] * net.n))
    records = []
    for _ in range(n_samples):
        k2, k3, k4 = np.exp(rng.uniform(-spread, spread, 3))
        kappa = {"k1": 1.0, "k2": float(k2), "k3": float(k3), "k4": float(k4)}
        bp, _ = scan_for_bifurcation(field, "hopf", kappa, "k1", (0.01, 100.0))
        if bp is None or not bp.passed or bp.l1 is None:
            continue
        records.append({"kappa": dict(bp.kappa), "l1": float(bp.l1), "omega": bp.omega})
    return records
