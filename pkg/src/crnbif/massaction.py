"""Mass action fields, charts on stoichiometric classes and their derivatives.

All evaluators accept either float arrays or object arrays of ``Fraction``;
with rational inputs every value and derivative is computed exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import exact
from .network import Network

POSITIVITY_FLOOR = 1e-12


class ChartDomainError(ValueError):
    """A point x = x̃ + Γ₀θ left the positive orthant."""


class IntegrationError(RuntimeError):
    pass


def _is_exact(*arrays) -> bool:
    for a in arrays:
        arr = np.asarray(a, dtype=object).ravel()
        if any(isinstance(v, Fraction) for v in arr):
            return True
    return False


def _param_values(kappa) -> list:
    if isinstance(kappa, Mapping):
        return list(kappa.values())
    if kappa is None:
        return []
    return np.ravel(np.asarray(kappa, dtype=object)).tolist()


def _as_vec(values, exact_mode: bool) -> np.ndarray:
    if exact_mode:
        return np.array([v if isinstance(v, Fraction) else Fraction(v) for v in np.ravel(values)], dtype=object)
    return np.asarray(values, dtype=float).ravel()


class Kinetics:
    """Rate constants of a network as affine functions of its free parameters.

    At a fixed ``eps`` the constant of reaction j is ``c0[j] + C[j] @ kappa``.

    Args:
        net: The network.
        eps: Value substituted for the schedule variable; required when any
            rate depends on it.
    """

    def __init__(self, net: Network, eps=None):
        self.net = net
        self.eps = eps
        self.param_names = net.param_names
        p = len(self.param_names)
        pos = {name: i for i, name in enumerate(self.param_names)}
        c0 = np.empty(net.m, dtype=object)
        C = np.zeros((net.m, p), dtype=object)
        C[:] = 0
        for j, r in enumerate(net.reactions):
            const, per = r.rate.coefficients(eps)
            c0[j] = const
            for name, c in per.items():
                C[j, pos[name]] = c
        self.c0_exact, self.C_exact = c0, C
        self.c0 = c0.astype(float)
        self.C = C.astype(float)
        self.reactant = net.reactant_matrix.T.copy()  # m x n exponents
        self.gamma = net.stoichiometric_matrix

    def kappa_vector(self, kappa) -> np.ndarray:
        """Parameter values as a vector ordered like ``param_names``."""
        if isinstance(kappa, Mapping):
            missing = [p for p in self.param_names if p not in kappa]
            if missing:
                raise ValueError(f"missing parameter values: {missing}")
            vals = [kappa[p] for p in self.param_names]
        elif kappa is None or np.isscalar(kappa):
            if kappa is None and self.param_names:
                raise ValueError("parameter values required")
            vals = [kappa] * len(self.param_names)
        else:
            vals = list(np.ravel(kappa))
            if len(vals) != len(self.param_names):
                raise ValueError(f"expected {len(self.param_names)} parameter values, got {len(vals)}")
        if not vals:
            return np.zeros(0)
        return _as_vec(vals, _is_exact(vals))

    def constants(self, kappa_vec: np.ndarray) -> np.ndarray:
        if kappa_vec.dtype == object:
            return self.c0_exact + self.C_exact.dot(kappa_vec) if len(kappa_vec) else self.c0_exact.copy()
        return self.c0 + self.C @ kappa_vec

    def constants_for(self, kappa_vec, exact_mode: bool) -> np.ndarray:
        if exact_mode:
            kv = _as_vec(kappa_vec, True) if len(kappa_vec) else np.zeros(0, dtype=object)
            return self.c0_exact + (self.C_exact.dot(kv) if len(kv) else 0)
        return self.c0 + self.C @ np.asarray(kappa_vec, dtype=float)


def _monomials(x: np.ndarray, A: np.ndarray) -> np.ndarray:
    if x.dtype == object:
        return np.array([np.prod([xi**int(a) for xi, a in zip(x, row)]) for row in A], dtype=object)
    return np.prod(x[None, :] ** A, axis=1)


def _check_positive(x: np.ndarray):
    if any(v <= 0 for v in x):
        raise ChartDomainError(f"state leaves the positive orthant: {list(x)}")


def rate_vector(net: Network, x, kappa, eps=None) -> np.ndarray:
    """Mass action rates v_j = k_j * prod_i x_i^(Γ_l)_ij."""
    kin = Kinetics(net, eps)
    exact_mode = _is_exact(x, _param_values(kappa))
    xv = _as_vec(x, exact_mode)
    if len(xv) != net.n:
        raise ValueError(f"expected {net.n} concentrations, got {len(xv)}")
    _check_positive(xv)
    k = kin.constants_for(kin.kappa_vector(kappa), exact_mode)
    return k * _monomials(xv, kin.reactant)


def full_field(net: Network, x, kappa, eps=None) -> np.ndarray:
    """Right-hand side Γ v(x, κ) of the mass action ODE."""
    v = rate_vector(net, x, kappa, eps)
    return net.stoichiometric_matrix.astype(v.dtype).dot(v)


@dataclass(frozen=True)
class Chart:
    """Affine coordinates x = base_point + gamma0 @ theta on one class.

    Attributes:
        base_point: Positive point of the class (float or Fraction entries).
        gamma0: Integer n x r matrix whose columns span im Γ.
        lam: Rational r x m matrix with Γ = gamma0 @ lam.
    """

    base_point: np.ndarray
    gamma0: np.ndarray
    lam: np.ndarray

    @property
    def r(self) -> int:
        return self.gamma0.shape[1]

    @property
    def lam_float(self) -> np.ndarray:
        return self.lam.astype(float)

    def state(self, theta) -> np.ndarray:
        theta = np.asarray(theta)
        if theta.dtype == object or self.base_point.dtype == object:
            return self.base_point.astype(object) + self.gamma0.astype(object).dot(np.asarray(theta, dtype=object))
        return self.base_point + self.gamma0 @ theta.astype(float)

    def coordinates(self, x) -> np.ndarray:
        """Least-squares θ with base_point + Γ₀θ closest to x."""
        x = np.asarray(x, dtype=float)
        theta, *_ = np.linalg.lstsq(self.gamma0.astype(float), x - self.base_point.astype(float), rcond=None)
        return theta

    def rebased(self, base_point) -> "Chart":
        return Chart(np.asarray(base_point), self.gamma0, self.lam)


def chart_basis(net: Network) -> tuple[np.ndarray, np.ndarray]:
    """Integer basis Γ₀ of im Γ and the exact factor Λ."""
    gamma = net.stoichiometric_matrix.tolist()
    cols = exact.independent_columns(gamma)
    if not cols:
        raise ValueError("network has rank 0: no dynamics")
    basis = []
    for j in cols:
        basis.append(exact.primitive([row[j] for row in gamma]))
    g0 = exact.transpose(basis)
    lam = exact.solve(g0, gamma)
    return np.array(g0, dtype=np.int64), np.array(lam, dtype=object)


def make_chart(net: Network, base_point, gamma0=None) -> Chart:
    """Chart at ``base_point``; Γ₀ defaults to the first independent columns of Γ."""
    exact_mode = _is_exact(base_point)
    x0 = _as_vec(base_point, exact_mode)
    if len(x0) != net.n:
        raise ValueError(f"base point has {len(x0)} entries, network has {net.n} species")
    _check_positive(x0)
    if gamma0 is None:
        g0, lam = chart_basis(net)
    else:
        g0 = np.asarray(gamma0, dtype=np.int64)
        if exact.rank(g0.tolist()) != g0.shape[1] or g0.shape[1] != net.rank:
            raise ValueError("gamma0 must have rank(Γ) independent columns")
        lam = np.array(exact.solve(g0.tolist(), net.stoichiometric_matrix.tolist()), dtype=object)
    return Chart(x0, g0, lam)


class ReducedField:
    """The field f(θ, κ) = Λ v(x̃ + Γ₀θ, κ) and its derivatives in θ and κ.

    Shapes, with r = dim θ and P free parameters:
    ``value`` (r,), ``jac`` (r, r), ``jac_kappa`` (r, P), ``hess`` (r, r, r),
    ``third`` (r, r, r, r), ``jac_theta_kappa`` (r, r, P) and
    ``hess_theta_kappa`` (r, r, r, P).  Index order is always
    (component, derivative directions...).
    """

    def __init__(self, net: Network, chart: Chart, eps=None, kinetics: Kinetics | None = None):
        self.net = net
        self.chart = chart
        self.kin = kinetics or Kinetics(net, eps)
        self.param_names = self.kin.param_names
        self.dim = chart.r
        self._A = self.kin.reactant
        self._lam = {True: chart.lam, False: chart.lam_float}
        self._g0 = {True: chart.gamma0.astype(object), False: chart.gamma0.astype(float)}

    # -- helpers -------------------------------------------------------------
    def _setup(self, theta, kappa):
        exact_mode = _is_exact(theta, _param_values(kappa))
        th = _as_vec(theta, exact_mode)
        kv = self.kin.kappa_vector(kappa)
        if exact_mode:
            kv = _as_vec(kv, True) if len(kv) else np.zeros(0, dtype=object)
            x = _as_vec(self.chart.base_point, True) + self._g0[True].dot(th)
        else:
            kv = np.asarray(kv, dtype=float)
            x = self.chart.base_point.astype(float) + self._g0[False] @ th
        _check_positive(x)
        k = self.kin.constants_for(kv, exact_mode)
        return exact_mode, x, k

    def _Cmat(self, exact_mode):
        return self.kin.C_exact if exact_mode else self.kin.C

    def state(self, theta) -> np.ndarray:
        return self.chart.state(theta)

    def in_domain(self, theta) -> bool:
        return bool(np.all(self.chart.state(np.asarray(theta, dtype=float)) > 0))

    # -- monomial derivative tensors -----------------------------------------
    def _m0(self, x):
        return _monomials(x, self._A)

    def _m1(self, x, m):
        A = self._A
        return m[:, None] * A / x[None, :]

    def _m2(self, x, m):
        A = self._A.astype(x.dtype)
        n = len(x)
        eye = np.eye(n, dtype=int).astype(x.dtype)
        num = A[:, :, None] * A[:, None, :] - eye[None] * A[:, :, None]
        return m[:, None, None] * num / (x[:, None] * x[None, :])[None]

    def _m3(self, x, m):
        A = self._A.astype(x.dtype)
        n = len(x)
        d = np.eye(n, dtype=int).astype(x.dtype)
        ai = A[:, :, None, None]
        al = A[:, None, :, None]
        ao = A[:, None, None, :]
        dil = d[None, :, :, None]
        dio = d[None, :, None, :]
        dlo = d[None, None, :, :]
        num = ai * al * ao - dil * ai * ao - dio * ai * al - dlo * al * ai + 2 * dil * dlo * ai
        den = x[:, None, None] * x[None, :, None] * x[None, None, :]
        return m[:, None, None, None] * num / den[None]

    # -- evaluators -----------------------------------------------------------
    def value(self, theta, kappa) -> np.ndarray:
        ex, x, k = self._setup(theta, kappa)
        return self._lam[ex].dot(k * self._m0(x))

    def rates(self, theta, kappa) -> np.ndarray:
        ex, x, k = self._setup(theta, kappa)
        return k * self._m0(x)

    def scale(self, theta, kappa) -> float:
        """Size of the individual terms of f, used for relative tolerances."""
        ex, x, k = self._setup(theta, kappa)
        v = np.abs((k * self._m0(x)).astype(float))
        return float(max(1e-300, np.max(np.abs(self._lam[False]) @ v)))

    def jac(self, theta, kappa) -> np.ndarray:
        ex, x, k = self._setup(theta, kappa)
        m = self._m0(x)
        M1 = self._m1(x, m)
        return self._lam[ex].dot((k[:, None] * M1).dot(self._g0[ex]))

    def jac_kappa(self, theta, kappa) -> np.ndarray:
        ex, x, _ = self._setup(theta, kappa)
        m = self._m0(x)
        return self._lam[ex].dot(self._Cmat(ex) * m[:, None])

    def hess(self, theta, kappa) -> np.ndarray:
        ex, x, k = self._setup(theta, kappa)
        m = self._m0(x)
        M2 = self._m2(x, m)
        g0 = self._g0[ex]
        T = np.einsum("jil,ib,lc->jbc", M2, g0, g0)
        return np.einsum("aj,j,jbc->abc", self._lam[ex], k, T)

    def third(self, theta, kappa) -> np.ndarray:
        ex, x, k = self._setup(theta, kappa)
        m = self._m0(x)
        M3 = self._m3(x, m)
        g0 = self._g0[ex]
        T = np.einsum("jilo,ib,lc,od->jbcd", M3, g0, g0, g0)
        return np.einsum("aj,j,jbcd->abcd", self._lam[ex], k, T)

    def jac_theta_kappa(self, theta, kappa) -> np.ndarray:
        ex, x, _ = self._setup(theta, kappa)
        m = self._m0(x)
        M1g = self._m1(x, m).dot(self._g0[ex])
        return np.einsum("aj,jp,jb->abp", self._lam[ex], self._Cmat(ex), M1g)

    def hess_theta_kappa(self, theta, kappa) -> np.ndarray:
        ex, x, _ = self._setup(theta, kappa)
        m = self._m0(x)
        g0 = self._g0[ex]
        T = np.einsum("jil,ib,lc->jbc", self._m2(x, m), g0, g0)
        return np.einsum("aj,jp,jbc->abcp", self._lam[ex], self._Cmat(ex), T)


def reduced_field(net: Network, chart: Chart, eps=None) -> ReducedField:
    return ReducedField(net, chart, eps)


def multilinear_forms(field, theta, kappa):
    """Second and third derivative forms B(u, v) and C(u, v, w) of f at (θ, κ)."""
    H = field.hess(theta, kappa)
    T = field.third(theta, kappa)

    def B(u, v):
        return np.einsum("abc,b,c->a", H, u, v)

    def C(u, v, w):
        return np.einsum("abcd,b,c,d->a", T, u, v, w)

    return B, C


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray  # shape (len(t), n)
    species: tuple[str, ...]
    status: str = "complete"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *self.species])
        for ti, xi in zip(self.t, self.x):
            w.writerow([repr(float(ti)), *(repr(float(v)) for v in xi)])
        return buf.getvalue()


def integrate(
    net: Network,
    x0: Sequence[float],
    kappa,
    t_span: tuple[float, float],
    rtol: float = 1e-10,
    atol: float = 1e-12,
    eps=None,
    n_samples: int | None = None,
    floor: float = POSITIVITY_FLOOR,
) -> Trajectory:
    """Integrate the mass action ODE with an adaptive Runge-Kutta 5(4) scheme.

    Integration stops early, with ``status == "floor"``, once any coordinate
    reaches the positivity floor.  A step-size underflow raises
    ``IntegrationError``.
    """
    kin = Kinetics(net, eps)
    k = kin.constants(np.asarray(kin.kappa_vector(kappa), dtype=float))
    A = kin.reactant.astype(float)
    G = net.stoichiometric_matrix.astype(float)
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 <= 0):
        raise ValueError("initial state must be strictly positive")
    t0, t1 = map(float, t_span)
    if t1 == t0:
        return Trajectory(np.array([t0]), x0[None, :].copy(), net.species)

    def rhs(_t, x):
        return G @ (k * np.prod(np.abs(x)[None, :] ** A, axis=1))

    def hit_floor(_t, x):
        return float(np.min(x) - floor)

    hit_floor.terminal = True
    t_eval = np.linspace(t0, t1, n_samples) if n_samples else None
    sol = solve_ivp(rhs, (t0, t1), x0, method="RK45", rtol=rtol, atol=atol, events=hit_floor, t_eval=t_eval)
    if sol.status == -1:
        raise IntegrationError(f"integration failed at t={sol.t[-1] if len(sol.t) else t0}: {sol.message}")
    status = "floor" if sol.status == 1 else "complete"
    return Trajectory(sol.t, sol.y.T, net.species, status)
