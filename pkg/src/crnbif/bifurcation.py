"""Equilibria, continuation, bifurcation test functions and transversality.

Functions here work with any *field* object exposing

``dim``, ``param_names``, ``value``, ``jac``, ``jac_kappa``, ``hess``,
``third``, ``jac_theta_kappa``, ``hess_theta_kappa`` and ``in_domain``

with the shapes documented on :class:`crnbif.massaction.ReducedField`.
Parameter vectors are ordered like ``param_names``; mappings are accepted
wherever a parameter point is expected.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field as dc_field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

log = logging.getLogger(__name__)


class BifKind(str, Enum):
    FOLD = "fold"
    HOPF = "hopf"
    CUSP = "cusp"

    @property
    def codim(self) -> int:
        return 2 if self is BifKind.CUSP else 1


@dataclass(frozen=True)
class Tolerances:
    """Acceptance thresholds.

    ``eq_tol`` is relative to the largest term of f (floored at 1);
    ``bif_tol`` applies to the normalized test values; ``trans_tol`` to
    σ_min(Dh)/‖Dh‖; ``guard_tol`` bounds |Re λ| of the Hopf pair relative
    to max(1, ‖D_θf‖).
    """

    eq_tol: float = 1e-12
    bif_tol: float = 1e-8
    trans_tol: float = 1e-6
    guard_tol: float = 1e-8
    omega_tol: float = 1e-6


DEFAULT_TOL = Tolerances()


class BifurcationError(RuntimeError):
    """Newton-type failure; ``last`` holds the last iterate when available."""

    def __init__(self, message: str, last=None):
        super().__init__(message)
        self.last = last


class SingularJacobianError(BifurcationError):
    pass


class NotHopfError(BifurcationError):
    pass


def as_kind(kind) -> BifKind:
    return kind if isinstance(kind, BifKind) else BifKind(str(kind).lower())


def kappa_vector(field, kappa) -> np.ndarray:
    names = field.param_names
    if isinstance(kappa, Mapping):
        return np.array([float(kappa[p]) for p in names])
    kv = np.atleast_1d(np.asarray(kappa, dtype=float))
    if kv.shape != (len(names),):
        raise ValueError(f"expected {len(names)} parameter values")
    return kv


def _scale(field, theta, kv) -> float:
    if hasattr(field, "scale"):
        return max(1.0, field.scale(theta, kv))
    return 1.0


# -- linear algebra helpers ------------------------------------------------------


def bialternate(A: np.ndarray) -> np.ndarray:
    """The bialternate product 2A⊙I acting on the exterior square.

    Its eigenvalues are the sums λ_i + λ_j (i < j) of eigenvalues of A, so
    its determinant vanishes exactly when two eigenvalues sum to zero.
    Basis pairs (p, q) with p > q in lexicographic order.
    """
    n = A.shape[0]
    pairs = [(p, q) for p in range(1, n) for q in range(p)]
    M = np.zeros((len(pairs), len(pairs)), dtype=A.dtype)
    for a, (p, q) in enumerate(pairs):
        for b, (r, s) in enumerate(pairs):
            v = 0
            if s == q:
                v += A[p, r]
            if s == p:
                v -= A[q, r]
            if r == p:
                v += A[q, s]
            if r == q:
                v -= A[p, s]
            M[a, b] = v
    return M


def adjugate(M: np.ndarray) -> np.ndarray:
    """Classical adjoint by cofactors; well defined for singular M."""
    n = M.shape[0]
    if n == 1:
        return np.ones((1, 1))
    adj = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(M, i, axis=0), j, axis=1)
            adj[j, i] = (-1) ** (i + j) * np.linalg.det(minor)
    return adj


def _normalized_det(M: np.ndarray) -> float:
    """det M divided by the product of its largest n-1 singular values (floored at 1)."""
    if M.size == 0:
        return 1.0
    d = float(np.linalg.det(M))
    sv = np.linalg.svd(M, compute_uv=False)
    return d / max(1.0, float(np.prod(sv[:-1])))


def _null_vectors(J: np.ndarray):
    """Right and left null vectors of a nearly singular J with <p, q> = 1."""
    U, s, Vt = np.linalg.svd(J)
    q = Vt[-1]
    p = U[:, -1]
    pq = p @ q
    if abs(pq) < 1e-14:
        return q, p
    return q, p / pq


# -- equilibria ----------------------------------------------------------------


@dataclass
class NewtonInfo:
    theta: np.ndarray
    iterations: int
    residual: float


def find_equilibrium(field, theta_guess, kappa, eq_tol: float = DEFAULT_TOL.eq_tol, max_iter: int = 50,
                     return_info: bool = False):
    """Newton iteration on f(·, κ) from ``theta_guess``.

    Steps are halved while they would leave the chart domain.

    Raises:
        SingularJacobianError: D_θf singular away from an equilibrium.
        BifurcationError: no convergence within ``max_iter`` steps.
    """
    kv = kappa_vector(field, kappa)
    th = np.atleast_1d(np.asarray(theta_guess, dtype=float)).copy()
    if not field.in_domain(th):
        raise BifurcationError("initial guess outside the chart domain", th)
    for it in range(max_iter + 1):
        f = np.asarray(field.value(th, kv), dtype=float)
        res = float(np.max(np.abs(f))) if f.size else 0.0
        if res <= eq_tol * _scale(field, th, kv):
            info = NewtonInfo(th, it, res)
            return info if return_info else th
        if it == max_iter:
            break
        J = np.asarray(field.jac(th, kv), dtype=float)
        try:
            if np.linalg.cond(J) > 1e15:
                raise np.linalg.LinAlgError
            step = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            raise SingularJacobianError("singular Jacobian at a non-equilibrium", th) from None
        lam = 1.0
        while not field.in_domain(th + lam * step):
            lam *= 0.5
            if lam < 1e-10:
                raise BifurcationError("Newton step leaves the positive orthant", th)
        th = th + lam * step
        if not np.all(np.isfinite(th)):
            raise BifurcationError("Newton iteration diverged", th)
    raise BifurcationError(f"no convergence in {max_iter} Newton steps (residual {res:.3e})", th)


# -- test functions --------------------------------------------------------------


@dataclass
class TestFunctionValue:
    """Test-function values at a point.

    ``values`` holds the raw components for ``kind``; ``relative`` the
    normalized ones used for tolerance checks.  ``fold`` and ``hopf`` are
    always filled when defined (hopf needs dim ≥ 2).
    """

    __test__ = False

    kind: BifKind
    values: np.ndarray
    relative: np.ndarray
    fold: float
    hopf: float | None
    cusp: tuple[float, float] | None
    eigenvalues: np.ndarray
    guard: str
    omega: float | None = None


def _hopf_guard(eig: np.ndarray, jnorm: float, tol: Tolerances) -> tuple[str, float | None]:
    n = len(eig)
    if n < 2:
        return "dimension below 2", None
    best, bi, bj = np.inf, 0, 1
    for i in range(n):
        for j in range(i + 1, n):
            d = abs(eig[i] + eig[j])
            if d < best:
                best, bi, bj = d, i, j
    li, lj = eig[bi], eig[bj]
    omega = abs(li.imag)
    if omega < tol.omega_tol:
        return "neutral saddle, not Hopf", None
    bound = tol.guard_tol * max(1.0, jnorm)
    near = [lam for lam in eig if abs(lam.real) <= max(bound, abs(li.real) * 1.0001) and lam.imag >= tol.omega_tol]
    if abs(li.real) > bound:
        return "pair off the imaginary axis", omega
    if len(near) != 1:
        return "more than one imaginary pair", omega
    return "ok", omega


def test_functions(field, theta, kappa, kind="fold", tol: Tolerances = DEFAULT_TOL) -> TestFunctionValue:
    """Evaluate the fold, Hopf and cusp test functions at (θ, κ)."""
    kind = as_kind(kind)
    kv = kappa_vector(field, kappa)
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    J = np.asarray(field.jac(th, kv), dtype=float)
    eig = np.linalg.eigvals(J)
    fold = float(np.linalg.det(J))
    fold_rel = _normalized_det(J)
    hopf = hopf_rel = None
    guard, omega = "not evaluated", None
    if J.shape[0] >= 2:
        Bi = bialternate(J)
        hopf = float(np.linalg.det(Bi))
        hopf_rel = _normalized_det(Bi)
        guard, omega = _hopf_guard(eig, float(np.linalg.norm(J, 2)), tol)
    cusp = None
    if kind in (BifKind.FOLD, BifKind.CUSP):
        H = np.asarray(field.hess(th, kv), dtype=float)
        if J.shape[0] == 1:
            cusp = (fold, float(H[0, 0, 0]))
        else:
            q, p = _null_vectors(J)
            cusp = (fold, float(p @ np.einsum("abc,b,c->a", H, q, q)))
    if kind is BifKind.FOLD:
        values, rel = np.array([fold]), np.array([fold_rel])
    elif kind is BifKind.HOPF:
        if hopf is None:
            raise ValueError("Hopf test needs a reduced dimension of at least 2")
        values, rel = np.array([hopf]), np.array([hopf_rel])
    else:
        values = np.array(cusp)
        rel = np.array([fold_rel, cusp[1]])
    return TestFunctionValue(kind, values, rel, fold, hopf, cusp, eig, guard, omega)


test_functions.__test__ = False  # keep pytest from collecting it


def _g_and_grad(field, kind: BifKind, th, kv, free_idx):
    """Test function g and its derivatives in θ and the free parameters."""
    J = np.asarray(field.jac(th, kv), dtype=float)
    H = np.asarray(field.hess(th, kv), dtype=float)
    Jk = np.asarray(field.jac_theta_kappa(th, kv), dtype=float)[:, :, free_idx]
    r = J.shape[0]
    if kind is BifKind.FOLD:
        adj = adjugate(J)
        g = np.array([np.linalg.det(J)])
        gt = np.array([[np.sum(adj.T * H[:, :, k]) for k in range(r)]])
        gk = np.array([[np.sum(adj.T * Jk[:, :, p]) for p in range(len(free_idx))]])
    elif kind is BifKind.HOPF:
        Bi = bialternate(J)
        adj = adjugate(Bi)
        g = np.array([np.linalg.det(Bi)])
        gt = np.array([[np.sum(adj.T * bialternate(H[:, :, k])) for k in range(r)]])
        gk = np.array([[np.sum(adj.T * bialternate(Jk[:, :, p])) for p in range(len(free_idx))]])
    else:
        if r != 1:
            raise ValueError("cusp location is supported only for one-dimensional reduced systems")
        T = np.asarray(field.third(th, kv), dtype=float)
        Hk = np.asarray(field.hess_theta_kappa(th, kv), dtype=float)[:, :, :, free_idx]
        g = np.array([J[0, 0], H[0, 0, 0]])
        gt = np.array([[H[0, 0, 0]], [T[0, 0, 0, 0]]])
        gk = np.vstack([Jk[0, 0, :], Hk[0, 0, 0, :]])
    return g, gt, gk


def _h_system(field, kind, th, kv, free_idx):
    f = np.asarray(field.value(th, kv), dtype=float)
    J = np.asarray(field.jac(th, kv), dtype=float)
    Jp = np.asarray(field.jac_kappa(th, kv), dtype=float)[:, free_idx]
    g, gt, gk = _g_and_grad(field, kind, th, kv, free_idx)
    h = np.concatenate([f, g])
    Dh = np.block([[J, Jp], [gt, gk]])
    return h, Dh


def choose_unfolding_params(field, kind, theta, kappa, c: int | None = None) -> tuple[str, ...]:
    """Pick c parameters that unfold h = (f, g) transversely.

    D_κh is projected onto the orthogonal complement of range(D_θh) and the
    first c pivots of a column-pivoted QR factorization are taken.
    """
    kind = as_kind(kind)
    c = kind.codim if c is None else c
    kv = kappa_vector(field, kappa)
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    all_idx = list(range(len(field.param_names)))
    if len(all_idx) < c:
        raise ValueError(f"{kind.value} needs {c} free parameters, network has {len(all_idx)}")
    _, Dh = _h_system(field, kind, th, kv, all_idx)
    r = field.dim
    Dth, Dk = Dh[:, :r], Dh[:, r:]
    U, s, _ = np.linalg.svd(Dth, full_matrices=True)
    rank = int(np.sum(s > 1e-12 * max(1.0, s[0] if s.size else 1.0)))
    comp = U[:, rank:]
    proj = comp.T @ Dk if comp.shape[1] else Dk
    _, _, piv = scipy.linalg.qr(proj, pivoting=True, mode="economic")
    chosen = sorted(piv[:c])
    return tuple(field.param_names[i] for i in chosen)


# -- located points -------------------------------------------------------------------


@dataclass
class Transversality:
    sigma_min: float
    sigma_min_raw: float
    rank_theta: int
    expected_rank: int
    free_params: tuple[str, ...]
    threshold: float

    @property
    def passed(self) -> bool:
        return self.sigma_min > self.threshold and self.rank_theta == self.expected_rank

    def to_dict(self) -> dict:
        return {
            "sigma_min": self.sigma_min,
            "sigma_min_raw": self.sigma_min_raw,
            "rank_theta": self.rank_theta,
            "expected_rank": self.expected_rank,
            "free_params": list(self.free_params),
            "threshold": self.threshold,
            "pass": self.passed,
        }


@dataclass
class BifPoint:
    """A located bifurcation with its diagnostics."""

    kind: BifKind
    theta: np.ndarray
    x: np.ndarray
    kappa: dict[str, float]
    free_params: tuple[str, ...]
    eigenvalues: np.ndarray
    test_values: np.ndarray
    test_relative: np.ndarray
    residual: float
    residual_tol: float
    sigma_min: float
    rank_theta: int
    quadratic: float | None = None
    f_kappa: list[float] = dc_field(default_factory=list)
    l1: float | None = None
    omega: float | None = None
    guard: str = "ok"
    iterations: int = 0
    tol: Tolerances = DEFAULT_TOL

    @property
    def flags(self) -> dict[str, bool]:
        return {
            "equilibrium": self.residual <= self.residual_tol,
            "test": bool(np.all(np.abs(self.test_relative) <= self.tol.bif_tol)),
            "transversal": self.sigma_min > self.tol.trans_tol and self.rank_theta == len(self.theta),
            "positive": bool(np.all(self.x > 0) and all(v > 0 for v in self.kappa.values())),
            "hopf_guard": self.kind is not BifKind.HOPF or self.guard == "ok",
        }

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "theta": [float(v) for v in self.theta],
            "x": [float(v) for v in self.x],
            "kappa": {k: float(v) for k, v in self.kappa.items()},
            "free_params": list(self.free_params),
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "test_values": [float(v) for v in self.test_values],
            "test_relative": [float(v) for v in self.test_relative],
            "residual": self.residual,
            "residual_tol": self.residual_tol,
            "sigma_min": self.sigma_min,
            "rank_theta": self.rank_theta,
            "quadratic": self.quadratic,
            "f_kappa": list(self.f_kappa),
            "l1": self.l1,
            "omega": self.omega,
            "guard": self.guard,
            "iterations": self.iterations,
            "tolerances": asdict(self.tol),
            "flags": self.flags,
            "pass": self.passed,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "BifPoint":
        return cls(
            kind=BifKind(d["kind"]),
            theta=np.array(d["theta"], dtype=float),
            x=np.array(d["x"], dtype=float),
            kappa=dict(d["kappa"]),
            free_params=tuple(d["free_params"]),
            eigenvalues=np.array([complex(a, b) for a, b in d["eigenvalues"]]),
            test_values=np.array(d["test_values"], dtype=float),
            test_relative=np.array(d["test_relative"], dtype=float),
            residual=d["residual"],
            residual_tol=d["residual_tol"],
            sigma_min=d["sigma_min"],
            rank_theta=d["rank_theta"],
            quadratic=d.get("quadratic"),
            f_kappa=list(d.get("f_kappa", [])),
            l1=d.get("l1"),
            omega=d.get("omega"),
            guard=d.get("guard", "ok"),
            iterations=d.get("iterations", 0),
            tol=Tolerances(**d["tolerances"]) if "tolerances" in d else DEFAULT_TOL,
        )


def equilibrate(M: np.ndarray, sweeps: int = 30) -> np.ndarray:
    """Ruiz row/column scaling so that every row and column has max-norm close to 1.

    Stiff enlargements put entries of size 1/eps into the fast rows; the
    scaled matrix keeps the rank but removes that artificial spread.
    """
    M = np.array(M, dtype=float)
    for _ in range(sweeps):
        rows = np.sqrt(np.max(np.abs(M), axis=1))
        cols = np.sqrt(np.max(np.abs(M), axis=0))
        rows[rows == 0] = 1.0
        cols[cols == 0] = 1.0
        M = M / rows[:, None] / cols[None, :]
        if np.all(np.abs(rows - 1) < 1e-3) and np.all(np.abs(cols - 1) < 1e-3):
            break
    return M


def _critical_count(kind: BifKind) -> int:
    return 2 if kind is BifKind.HOPF else 1


def center_schur_complement(A: np.ndarray, Dh: np.ndarray, kind) -> tuple[np.ndarray, np.ndarray, int]:
    """Reduce D_(θ,κ)h to the critical directions of A.

    A = D_θf is put in real Schur form with the eigenvalues nearest the
    imaginary axis first (the zero eigenvalue for fold/cusp, the
    conjugate pair for Hopf).  In those orthogonal coordinates the
    remaining hyperbolic block T22 is eliminated, leaving the Schur
    complement S.  Since det Dh = ±det T22 · det S, Dh is regular exactly
    when S is; but S is free of the 1/eps spread that fast directions put
    into Dh.

    Returns:
        (S, eigenvalues of T22, number of critical directions k); the first
        k columns of S belong to θ.
    """
    kind = as_kind(kind)
    r = A.shape[0]
    k = _critical_count(kind)
    if r <= k:
        return Dh, np.zeros(0, dtype=complex), r
    eig = np.linalg.eigvals(A)
    if kind is BifKind.HOPF:
        cand = [i for i in range(r) if eig[i].imag > 0] or list(range(r))
        i0 = min(cand, key=lambda i: abs(eig[i].real))
        targets = [eig[i0], np.conj(eig[i0])]
    else:
        targets = [eig[int(np.argmin(np.abs(eig)))]]
    scale = max(1.0, float(np.max(np.abs(eig))))

    def pick(re, im):
        z = complex(re, im)
        return min(abs(z - t) for t in targets) <= 1e-8 * scale

    T, Z, sdim = scipy.linalg.schur(A, output="real", sort=pick)
    if sdim != k:
        # clustered spectrum: fall back to the full matrix
        return Dh, np.zeros(0, dtype=complex), r
    n_rows, n_cols = Dh.shape
    rot_r = np.eye(n_rows)
    rot_c = np.eye(n_cols)
    rot_r[:r, :r] = Z.T
    rot_c[:r, :r] = Z
    M = rot_r @ Dh @ rot_c
    hyp = list(range(k, r))
    rest_r = [i for i in range(n_rows) if i not in hyp]
    rest_c = [j for j in range(n_cols) if j not in hyp]
    T22 = M[np.ix_(hyp, hyp)]
    S = M[np.ix_(rest_r, rest_c)] - M[np.ix_(rest_r, hyp)] @ np.linalg.solve(T22, M[np.ix_(hyp, rest_c)])
    return S, np.linalg.eigvals(T22), k


def _transversality(field, kind, th, kv, free_params, tol: Tolerances) -> Transversality:
    free_idx = [field.param_names.index(p) for p in free_params]
    _, Dh = _h_system(field, kind, th, kv, free_idx)
    r = field.dim
    A = np.asarray(field.jac(th, kv), dtype=float)
    try:
        S, hyp, k = center_schur_complement(A, Dh, kind)
    except np.linalg.LinAlgError:
        S, hyp, k = Dh, np.zeros(0, dtype=complex), r
    Se = equilibrate(S)
    sv = np.linalg.svd(Se, compute_uv=False)
    s_th = np.linalg.svd(Se[:, :k], compute_uv=False)
    rank = (r - k) + (int(np.sum(s_th > 1e-10 * max(1.0, s_th[0]))) if s_th.size else 0)
    smin = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
    if hyp.size and np.min(np.abs(hyp)) <= tol.trans_tol * max(1.0, float(np.max(np.abs(hyp)))):
        smin = 0.0
    return Transversality(smin, float(np.linalg.svd(Dh, compute_uv=False)[-1]), rank, r, tuple(free_params),
                          tol.trans_tol)


def transversality_certificate(field, bp: BifPoint, tol: Tolerances | None = None) -> Transversality:
    """Relative σ_min of the reduced, equilibrated D_(θ,κ_free) h and the rank of D_θh."""
    tol = tol or bp.tol
    kv = kappa_vector(field, bp.kappa)
    free = bp.free_params or choose_unfolding_params(field, bp.kind, bp.theta, kv)
    return _transversality(field, bp.kind, bp.theta, kv, free, tol)


def diagnose(field, kind, theta, kappa, free_params: Sequence[str], tol: Tolerances = DEFAULT_TOL,
             iterations: int = 0, with_l1: bool = True) -> BifPoint:
    """Assemble a BifPoint with all diagnostics at (θ, κ)."""
    kind = as_kind(kind)
    kv = kappa_vector(field, kappa)
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    f = np.asarray(field.value(th, kv), dtype=float)
    tv = test_functions(field, th, kv, kind, tol)
    tr = _transversality(field, kind, th, kv, tuple(free_params), tol)
    x = np.asarray(field.state(th), dtype=float) if hasattr(field, "state") else th.copy()
    fk = np.asarray(field.jac_kappa(th, kv), dtype=float)
    free_idx = [field.param_names.index(p) for p in free_params]
    quad = None
    f_kappa: list[float] = []
    if kind in (BifKind.FOLD, BifKind.CUSP):
        quad = tv.cusp[1] if tv.cusp else None
        if field.dim == 1:
            f_kappa = [float(fk[0, i]) for i in free_idx]
        else:
            _, p = _null_vectors(np.asarray(field.jac(th, kv), dtype=float))
            f_kappa = [float(p @ fk[:, i]) for i in free_idx]
    bp = BifPoint(
        kind=kind,
        theta=th,
        x=x,
        kappa={name: float(v) for name, v in zip(field.param_names, kv)},
        free_params=tuple(free_params),
        eigenvalues=tv.eigenvalues,
        test_values=tv.values,
        test_relative=tv.relative,
        residual=float(np.max(np.abs(f))) if f.size else 0.0,
        residual_tol=tol.eq_tol * _scale(field, th, kv),
        sigma_min=tr.sigma_min,
        rank_theta=tr.rank_theta,
        quadratic=quad,
        f_kappa=f_kappa,
        omega=tv.omega,
        guard=tv.guard if kind is BifKind.HOPF else "ok",
        iterations=iterations,
        tol=tol,
    )
    if kind is BifKind.HOPF and with_l1 and tv.guard == "ok":
        bp.l1 = lyapunov_l1(field, bp)
    return bp


def locate_bifurcation(field, kind, seed, free_params: Sequence[str] | None = None,
                       tol: Tolerances = DEFAULT_TOL, max_iter: int = 50, with_l1: bool = True) -> BifPoint:
    """Solve h = (f, g) = 0 in (θ, κ_free) by Newton's method from ``seed``.

    Args:
        field: Reduced field.
        kind: ``"fold"``, ``"hopf"`` or ``"cusp"``.
        seed: Pair (θ, κ) where κ gives every parameter value; the
            non-free ones stay fixed.
        free_params: Unfolding parameter names (codim of ``kind`` of them);
            chosen by pivoted QR at the seed when omitted.

    Returns:
        The located point.  A non-transverse solution is returned with its
        flags set rather than raised.

    Raises:
        BifurcationError: divergence or the iterate leaving the positive orthant.
    """
    kind = as_kind(kind)
    theta0, kappa0 = seed
    kv = kappa_vector(field, kappa0).copy()
    th = np.atleast_1d(np.asarray(theta0, dtype=float)).copy()
    if free_params is None:
        free_params = choose_unfolding_params(field, kind, th, kv)
    free_params = tuple(free_params)
    if len(free_params) != kind.codim:
        raise ValueError(f"{kind.value} needs exactly {kind.codim} free parameters, got {free_params}")
    free_idx = [field.param_names.index(p) for p in free_params]
    if not field.in_domain(th):
        raise BifurcationError("seed outside the chart domain", (th, kv))
    r = field.dim
    it = 0
    for it in range(1, max_iter + 1):
        h, Dh = _h_system(field, kind, th, kv, free_idx)
        if not np.all(np.isfinite(h)):
            raise BifurcationError("non-finite residual", (th, kv))
        try:
            step = np.linalg.solve(Dh, -h)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(Dh, -h, rcond=None)[0]
        lam = 1.0
        while True:
            th_new = th + lam * step[:r]
            kv_new = kv.copy()
            kv_new[free_idx] += lam * step[r:]
            if field.in_domain(th_new) and np.all(kv_new[free_idx] > 0):
                break
            lam *= 0.5
            if lam < 1e-10:
                raise BifurcationError("iterate leaves the positive orthant", (th, kv))
        z = np.concatenate([th, kv[free_idx]])
        th, kv = th_new, kv_new
        if lam == 1.0 and np.max(np.abs(step)) <= 1e-13 * (1.0 + np.max(np.abs(z))):
            break
    else:
        h, _ = _h_system(field, kind, th, kv, free_idx)
        if np.max(np.abs(h[:r])) > 1e3 * tol.eq_tol * _scale(field, th, kv):
            raise BifurcationError(f"no convergence in {max_iter} iterations", (th, kv))
    return diagnose(field, kind, th, kv, free_params, tol, iterations=it, with_l1=with_l1)


# -- first Lyapunov coefficient ----------------------------------------------------------


def first_lyapunov(A: np.ndarray, B, C, q_scale: complex = 1.0, omega_tol: float = DEFAULT_TOL.omega_tol) -> float:
    """First Lyapunov coefficient of ẋ = Ax + B(x,x)/2 + C(x,x,x)/6 + ...

    Projection method: Aq = iωq, Aᵀp = -iωp, with q of unit norm (then
    multiplied by ``q_scale``) and p̄ᵀq = 1.
    """
    eig, V = np.linalg.eig(A)
    cand = [i for i in range(len(eig)) if eig[i].imag > omega_tol]
    if not cand:
        raise NotHopfError("no eigenvalue with positive imaginary part")
    i = min(cand, key=lambda k: abs(eig[k].real))
    omega = eig[i].imag
    q = V[:, i] / np.linalg.norm(V[:, i]) * q_scale
    # left eigenvector: uᵀA = λuᵀ  <=>  Aᵀu = λu
    ew, W = np.linalg.eig(A.T)
    u = W[:, int(np.argmin(np.abs(ew - eig[i])))]
    pbar = u / (u @ q)  # p̄ᵀq = 1
    n = A.shape[0]
    qb = np.conj(q)
    Aq = np.linalg.solve(A.astype(complex), B(q, qb))
    r = np.linalg.solve(2j * omega * np.eye(n) - A, B(q, q))
    val = pbar @ C(q, q, qb) - 2 * (pbar @ B(q, Aq)) + pbar @ B(qb, r)
    return float(np.real(val) / (2 * omega))


def lyapunov_l1(field, bp_or_point, kappa=None, q_scale: complex = 1.0) -> float:
    """First Lyapunov coefficient at a Hopf point of ``field``.

    Accepts a BifPoint or a θ vector (then ``kappa`` is required).  Negative
    values mean a supercritical bifurcation.
    """
    if isinstance(bp_or_point, BifPoint):
        th, kv = bp_or_point.theta, kappa_vector(field, bp_or_point.kappa)
    else:
        th, kv = np.atleast_1d(np.asarray(bp_or_point, dtype=float)), kappa_vector(field, kappa)
    A = np.asarray(field.jac(th, kv), dtype=float)
    H = np.asarray(field.hess(th, kv), dtype=float)
    T = np.asarray(field.third(th, kv), dtype=float)

    def B(u, v):
        return np.einsum("abc,b,c->a", H, u, v)

    def C(u, v, w):
        return np.einsum("abcd,b,c,d->a", T, u, v, w)

    return first_lyapunov(A, B, C, q_scale)


# -- continuation -----------------------------------------------------------------------


@dataclass
class Bracket:
    kind: BifKind
    index: int  # sign change between points index and index + 1
    kappa: tuple[float, float]
    theta: tuple[np.ndarray, np.ndarray]

    def midpoint(self) -> tuple[np.ndarray, float]:
        return (self.theta[0] + self.theta[1]) / 2, sum(self.kappa) / 2


@dataclass
class Branch:
    free_param: str
    kappa_fixed: dict[str, float]
    theta: list[np.ndarray] = dc_field(default_factory=list)
    kappa: list[float] = dc_field(default_factory=list)
    fold: list[float] = dc_field(default_factory=list)
    hopf: list[float | None] = dc_field(default_factory=list)
    brackets: list[Bracket] = dc_field(default_factory=list)
    notes: list[str] = dc_field(default_factory=list)

    def __len__(self) -> int:
        return len(self.kappa)

    def kappa_at(self, i: int) -> dict[str, float]:
        d = dict(self.kappa_fixed)
        d[self.free_param] = self.kappa[i]
        return d

    def to_dict(self) -> dict:
        return {
            "free_param": self.free_param,
            "kappa_fixed": self.kappa_fixed,
            "points": [
                {"theta": [float(v) for v in t], "kappa": k, "fold": f, "hopf": h}
                for t, k, f, h in zip(self.theta, self.kappa, self.fold, self.hopf)
            ],
            "brackets": [
                {"kind": b.kind.value, "index": b.index, "kappa": list(b.kappa)} for b in self.brackets
            ],
            "notes": list(self.notes),
        }


def _record(field, branch: Branch, th, kv):
    J = np.asarray(field.jac(th, kv), dtype=float)
    branch.theta.append(th.copy())
    branch.kappa.append(float(kv[field.param_names.index(branch.free_param)]))
    branch.fold.append(float(np.linalg.det(J)))
    branch.hopf.append(float(np.linalg.det(bialternate(J))) if J.shape[0] >= 2 else None)
    i = len(branch) - 2
    if i >= 0:
        if np.sign(branch.fold[i]) != np.sign(branch.fold[i + 1]):
            branch.brackets.append(Bracket(BifKind.FOLD, i, (branch.kappa[i], branch.kappa[i + 1]),
                                           (branch.theta[i], branch.theta[i + 1])))
        if branch.hopf[i] is not None and np.sign(branch.hopf[i]) != np.sign(branch.hopf[i + 1]):
            branch.brackets.append(Bracket(BifKind.HOPF, i, (branch.kappa[i], branch.kappa[i + 1]),
                                           (branch.theta[i], branch.theta[i + 1])))


def continue_equilibrium(field, theta0, kappa, free_param: str, bounds: tuple[float, float],
                         ds: float = 0.02, ds_min: float = 1e-7, ds_max: float = 0.2, max_steps: int = 5000,
                         direction: int | None = None, eq_tol: float = DEFAULT_TOL.eq_tol) -> Branch:
    """Pseudo-arclength continuation of equilibria in one parameter.

    Sign changes of det D_θf and of the bialternate determinant between
    consecutive points are recorded as brackets.  The branch stops when the
    parameter leaves ``bounds``, the state leaves the positive orthant, or
    the step size underflows; the reason is recorded in ``notes``.
    """
    kv = kappa_vector(field, kappa).copy()
    p = field.param_names.index(free_param)
    lo, hi = bounds
    fixed = {name: float(v) for name, v in zip(field.param_names, kv) if name != free_param}
    branch = Branch(free_param, fixed)
    try:
        th = find_equilibrium(field, theta0, kv, eq_tol=eq_tol)
    except BifurcationError as exc:
        branch.notes.append(f"no equilibrium found at the seed: {exc}")
        return branch
    _record(field, branch, th, kv)
    r = field.dim
    if direction is None:
        direction = 1 if kv[p] - lo <= hi - kv[p] else -1

    def F(z):
        k = kv.copy()
        k[p] = z[r]
        return np.asarray(field.value(z[:r], k), dtype=float)

    def DF(z):
        k = kv.copy()
        k[p] = z[r]
        return np.hstack([np.asarray(field.jac(z[:r], k), dtype=float),
                          np.asarray(field.jac_kappa(z[:r], k), dtype=float)[:, [p]]])

    def tangent(z, prev=None):
        t = np.linalg.svd(DF(z))[2][-1]
        if prev is None:
            if t[r] * direction < 0:
                t = -t
        elif t @ prev < 0:
            t = -t
        return t

    z = np.concatenate([th, [kv[p]]])
    t = tangent(z)
    h = ds
    for _ in range(max_steps):
        accepted = False
        while h >= ds_min:
            zp = z + h * t
            if not field.in_domain(zp[:r]) or zp[r] <= 0:
                h /= 2
                continue
            zc = zp.copy()
            ok = False
            for k_it in range(8):
                if not field.in_domain(zc[:r]) or zc[r] <= 0:
                    break
                res = np.concatenate([F(zc), [t @ (zc - zp)]])
                M = np.vstack([DF(zc), t])
                try:
                    dz = np.linalg.solve(M, -res)
                except np.linalg.LinAlgError:
                    break
                zc = zc + dz
                if np.max(np.abs(dz)) <= 1e-11 * (1 + np.max(np.abs(zc))):
                    ok = field.in_domain(zc[:r]) and zc[r] > 0
                    break
            if ok and np.linalg.norm(zc - z) <= 2 * h:
                accepted = True
                if k_it <= 2:
                    h = min(h * 1.5, ds_max)
                break
            h /= 2
        if not accepted:
            branch.notes.append("step size underflow or branch leaves the positive orthant; branch truncated")
            break
        t = tangent(zc, t)
        z = zc
        kv[p] = z[r]
        _record(field, branch, z[:r], kv)
        if not lo <= z[r] <= hi:
            branch.notes.append(f"{free_param} left the range [{lo}, {hi}]")
            break
    else:
        branch.notes.append("maximum number of steps reached")
    return branch


def seed_guesses(dim: int, spread: Sequence[float] = (0.0, 0.3, -0.3)) -> list[np.ndarray]:
    """Deterministic small set of chart coordinates for multi-start Newton."""
    out = [np.zeros(dim)]
    for s in spread[1:]:
        out.append(np.full(dim, s))
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = s
            out.append(e)
    return out


def scan_for_bifurcation(field, kind, kappa, free_param: str, bounds: tuple[float, float],
                         guesses: Sequence[np.ndarray] | None = None, tol: Tolerances = DEFAULT_TOL,
                         ds: float = 0.02, ds_max: float = 0.2) -> tuple[BifPoint | None, list[Branch]]:
    """Continue from equilibria at both ends of ``bounds`` and refine the first bracket of ``kind``.

    Returns the located point (or None) and the branches that were traced.
    """
    kind = as_kind(kind)
    kv = kappa_vector(field, kappa).copy()
    p = field.param_names.index(free_param)
    guesses = list(guesses) if guesses is not None else seed_guesses(field.dim)
    branches = []
    for start, direction in ((bounds[0], 1), (bounds[1], -1)):
        k0 = kv.copy()
        k0[p] = start
        for g in guesses:
            if not field.in_domain(g):
                continue
            try:
                th0 = find_equilibrium(field, g, k0, eq_tol=tol.eq_tol)
            except BifurcationError:
                continue
            br = continue_equilibrium(field, th0, k0, free_param, bounds, ds=ds, ds_max=ds_max, direction=direction)
            branches.append(br)
            for b in br.brackets:
                if b.kind is not kind:
                    continue
                th_mid, k_mid = b.midpoint()
                kk = kv.copy()
                kk[p] = k_mid
                try:
                    bp = locate_bifurcation(field, kind, (th_mid, kk), (free_param,), tol)
                except BifurcationError:
                    continue
                if kind is BifKind.HOPF and bp.guard != "ok":
                    continue
                return bp, branches
            break
    return None, branches
