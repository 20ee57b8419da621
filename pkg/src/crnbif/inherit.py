"""Numerical verification that an enlarged network inherits a bifurcation.

For each eps on a decreasing geometric grid the bifurcation is located in
the full enlarged system, reduced to its own positive stoichiometric class,
with the same kind and unfolding parameters as the base point.  The report
collects the deviation from the base point, the eigenvalues that do not
come from the base spectrum, positivity, and a log-log convergence fit.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np
from scipy.optimize import linear_sum_assignment

from .bifurcation import (
    DEFAULT_TOL,
    BifKind,
    BifPoint,
    BifurcationError,
    Tolerances,
    locate_bifurcation,
)
from .enlarge import Enlarged
from .massaction import Chart, ChartDomainError, Kinetics, ReducedField, chart_basis

ZERO_DEVIATION = 1e-13


@dataclass(frozen=True)
class SweepConfig:
    """Grid and acceptance settings for an inheritance sweep.

    ``seeding`` is ``"continuation"`` (start each eps from the previous
    solution) or ``"limit"`` (cold start from the singular-limit data).
    """

    eps_max: float = 1e-1
    eps_min: float = 1e-4
    n_points: int = 12
    seeding: str = "continuation"
    tol: Tolerances = DEFAULT_TOL
    slope_threshold: float = 0.9
    min_fit_points: int = 4
    monotone_slack: float = 0.05

    def __post_init__(self):
        if not 0 < self.eps_min < self.eps_max:
            raise ValueError("need 0 < eps_min < eps_max")
        if self.n_points < 2:
            raise ValueError("need at least two grid points")
        if self.seeding not in ("continuation", "limit"):
            raise ValueError("seeding must be 'continuation' or 'limit'")

    def grid(self) -> np.ndarray:
        return np.geomspace(self.eps_max, self.eps_min, self.n_points)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tol"] = asdict(self.tol)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "SweepConfig":
        d = dict(d)
        d["tol"] = Tolerances(**d.get("tol", {}))
        return cls(**d)


@dataclass
class PointRecord:
    eps: float
    located: bool
    bif: dict | None = None
    x_base: list[float] | None = None
    extras: list[float] | None = None
    theta_base: list[float] | None = None
    kappa_dev: float | None = None
    theta_dev: float | None = None
    matched: list[list[float]] = field(default_factory=list)
    extra_eigs: list[list[float]] = field(default_factory=list)
    # largest real part among the transverse eigenvalues, i.e. the margin closest to zero
    min_extra_real: float | None = None
    error: str | None = None

    @property
    def bif_pass(self) -> bool:
        return bool(self.located and self.bif and self.bif["pass"])

    def passed(self, transverse: bool) -> bool:
        if not self.bif_pass:
            return False
        if transverse and self.extra_eigs and not self.min_extra_real < 0:
            return False
        return True


@dataclass
class Fit:
    status: str  # "ok", "exact" or "inconclusive"
    n_points: int
    kappa_slope: float | None = None
    kappa_intercept: float | None = None
    theta_slope: float | None = None
    theta_intercept: float | None = None


def _line(xs, ys):
    A = np.vstack([xs, np.ones_like(xs)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ys, rcond=None)
    return float(slope), float(intercept)


def fit_deviations(eps, kappa_dev, theta_dev=None, min_points: int = 4) -> Fit:
    """Least-squares slopes of log-deviation against log eps."""
    eps = np.asarray(eps, dtype=float)
    kd = np.asarray(kappa_dev, dtype=float)
    if len(eps) < min_points:
        return Fit("inconclusive", len(eps))
    keep = kd > ZERO_DEVIATION
    fit = Fit("ok", len(eps))
    if keep.sum() == 0:
        fit.status = "exact"
    elif keep.sum() < min_points:
        return Fit("inconclusive", int(keep.sum()))
    else:
        fit.kappa_slope, fit.kappa_intercept = _line(np.log(eps[keep]), np.log(kd[keep]))
    if theta_dev is not None:
        td = np.asarray(theta_dev, dtype=float)
        tk = td > ZERO_DEVIATION
        if tk.sum() >= min_points:
            fit.theta_slope, fit.theta_intercept = _line(np.log(eps[tk]), np.log(td[tk]))
    return fit


@dataclass
class InheritanceReport:
    case_id: str
    kind: str
    chain: list[str]
    base: dict
    config: SweepConfig
    points: list[PointRecord]
    transverse: bool
    notes: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    # -- derived results -----------------------------------------------------
    @property
    def fit(self) -> Fit:
        ok = [p for p in self.points if p.located]
        return fit_deviations([p.eps for p in ok], [p.kappa_dev for p in ok], [p.theta_dev for p in ok],
                              self.config.min_fit_points)

    def monotone(self) -> bool:
        """Deviations shrink along the grid (slack allowed at the two largest eps)."""
        ok = [p for p in self.points if p.located]
        for attr in ("kappa_dev", "theta_dev"):
            vals = [getattr(p, attr) for p in ok]
            for i in range(1, len(vals)):
                prev, cur = vals[i - 1], vals[i]
                if cur <= ZERO_DEVIATION:
                    continue
                slack = self.config.monotone_slack if i <= 2 else 0.0
                if cur > prev * (1 + slack) + ZERO_DEVIATION:
                    return False
        return True

    @property
    def first_failing_eps(self) -> float | None:
        for p in self.points:
            if not p.passed(self.transverse):
                return p.eps
        return None

    @property
    def verdict(self) -> str:
        if not self.points:
            return "FAIL"
        if self.first_failing_eps is not None:
            return "FAIL"
        fit = self.fit
        if fit.status == "inconclusive":
            return "INCONCLUSIVE"
        if fit.status == "ok" and fit.kappa_slope < self.config.slope_threshold:
            return "FAIL"
        if not self.monotone():
            return "FAIL"
        return "PASS"

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def summary(self) -> str:
        fit = self.fit
        slope = "exact" if fit.status == "exact" else (
            "n/a" if fit.kappa_slope is None else f"{fit.kappa_slope:.3f}")
        mins = [p.min_extra_real for p in self.points if p.min_extra_real is not None]
        trans = f", max transverse Re {max(mins):.3e}" if mins else ""
        return f"{self.case_id or 'case'}: {self.verdict} ({self.kind}, slope {slope}{trans})"

    # -- serialization ---------------------------------------------------------
    def to_dict(self) -> dict:
        fit = self.fit
        return {
            "case_id": self.case_id,
            "kind": self.kind,
            "chain": list(self.chain),
            "base": self.base,
            "config": self.config.to_dict(),
            "grid": [p.eps for p in self.points],
            "transverse": self.transverse,
            "points": [asdict(p) for p in self.points],
            "fit": asdict(fit),
            "monotone": self.monotone(),
            "verdict": self.verdict,
            "first_failing_eps": self.first_failing_eps,
            "notes": list(self.notes),
            "extra": self.extra,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: Mapping) -> "InheritanceReport":
        return cls(
            case_id=d["case_id"],
            kind=d["kind"],
            chain=list(d["chain"]),
            base=d["base"],
            config=SweepConfig.from_dict(d["config"]),
            points=[PointRecord(**p) for p in d["points"]],
            transverse=d["transverse"],
            notes=list(d.get("notes", [])),
            extra=dict(d.get("extra", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "InheritanceReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps", "kappa_dev", "theta_dev", "min_transverse_real"])
        for p in self.points:
            w.writerow([repr(p.eps), "" if p.kappa_dev is None else repr(p.kappa_dev),
                        "" if p.theta_dev is None else repr(p.theta_dev),
                        "" if p.min_extra_real is None else repr(p.min_extra_real)])
        return buf.getvalue()


def convergence_fit(report: InheritanceReport) -> Fit:
    return report.fit


def _match(reference: np.ndarray, spectrum: np.ndarray):
    cost = np.abs(reference[:, None] - spectrum[None, :])
    rows, cols = linear_sum_assignment(cost)
    order = np.argsort(rows)
    matched_idx = cols[order]
    rest = [j for j in range(len(spectrum)) if j not in set(matched_idx)]
    return spectrum[matched_idx], spectrum[rest]


def _pairs(z) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in z]


def track_inherited_bifurcation(base: BifPoint, enlarged: Enlarged, cfg: SweepConfig = SweepConfig(),
                                case_id: str = "") -> InheritanceReport:
    """Follow the base bifurcation through the enlarged network as eps decreases.

    Args:
        base: Located bifurcation of the base network (should pass).
        enlarged: Output of :func:`crnbif.enlarge.compose`; its chart must be
            the base chart at ``base``.
        cfg: Grid and tolerances.
        case_id: Label stored in the report.
    """
    if enlarged.chart is None:
        raise ValueError("the enlargement needs the base chart")
    net = enlarged.network
    g0, lam = chart_basis(net)
    base_chart = enlarged.chart
    g0_base = base_chart.gamma0.astype(float)
    x_tilde = np.asarray(base.x, dtype=float)
    free = base.free_params
    kappa_tilde = np.array([base.kappa[p] for p in free])
    base_eigs = np.asarray(base.eigenvalues)
    kind = base.kind
    report = InheritanceReport(case_id, kind.value, list(enlarged.chain), base.to_dict(), cfg, [],
                               enlarged.transverse)
    if not base.passed:
        report.notes.append("base point does not pass its own checks")

    prev = None  # (x_base, extras, kappa)
    reference = base_eigs
    for eps in cfg.grid():
        eps = float(eps)
        rec = PointRecord(eps, False)
        report.points.append(rec)
        if prev is None or cfg.seeding == "limit":
            kappa_seed = dict(base.kappa)
            try:
                z0 = enlarged.seed(x_tilde, kappa_seed, eps)
            except (ValueError, FloatingPointError) as exc:
                rec.error = f"class selection failed: {exc}"
                continue
        else:
            xb, ex, kappa_seed = prev
            z0 = enlarged.lift(xb, ex, eps)
        if not np.all(z0 > 0):
            rec.error = "class selection failed: seed state not positive"
            continue
        chart = Chart(z0, g0, lam)
        field_e = ReducedField(net, chart, kinetics=Kinetics(net, eps))
        try:
            bp = locate_bifurcation(field_e, kind, (np.zeros(chart.r), kappa_seed), free, cfg.tol)
        except (BifurcationError, ChartDomainError, np.linalg.LinAlgError, ValueError) as exc:
            rec.error = f"{type(exc).__name__}: {exc}"
            continue
        rec.located = True
        rec.bif = bp.to_dict()
        xb, ex = enlarged.project(bp.x, eps)
        rec.x_base = [float(v) for v in xb]
        rec.extras = [float(v) for v in ex]
        th, *_ = np.linalg.lstsq(g0_base, xb - x_tilde, rcond=None)
        rec.theta_base = [float(v) for v in th]
        rec.theta_dev = float(np.linalg.norm(th))
        rec.kappa_dev = float(np.linalg.norm(np.array([bp.kappa[p] for p in free]) - kappa_tilde))
        matched, rest = _match(reference, np.asarray(bp.eigenvalues))
        reference = matched
        rec.matched = _pairs(matched)
        rec.extra_eigs = _pairs(rest)
        rec.min_extra_real = float(np.max(rest.real)) if len(rest) else None
        prev = (xb, ex, dict(bp.kappa))
    return report


def eigen_convergence(report: InheritanceReport) -> float | None:
    """Distance between matched eigenvalues at the smallest eps and the base spectrum."""
    ok = [p for p in report.points if p.located]
    if not ok:
        return None
    base = np.array([complex(a, b) for a, b in report.base["eigenvalues"]])
    last = np.array([complex(a, b) for a, b in ok[-1].matched])
    cost = np.abs(base[:, None] - last[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max()) if len(r) else 0.0


def is_finite_report(report: InheritanceReport) -> bool:
    return all(p.kappa_dev is None or math.isfinite(p.kappa_dev) for p in report.points)
