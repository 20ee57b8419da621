"""Field protocol implemented directly from sympy expressions (independent oracle)."""

import numpy as np
import sympy as sp


class SymbolicField:
    """f(θ, κ) given as sympy expressions; derivatives by sympy differentiation."""

    def __init__(self, exprs, thetas, params, domain=None):
        self.exprs = [sp.sympify(e) for e in exprs]
        self.thetas = list(thetas)
        self.params = list(params)
        self.param_names = tuple(str(p) for p in params)
        self.dim = len(thetas)
        self._domain = domain
        args = self.thetas + self.params
        F = sp.Matrix(self.exprs)
        th, ka = self.thetas, self.params
        r, P = len(th), len(ka)
        self._f = sp.lambdify(args, F, "numpy")
        self._J = sp.lambdify(args, F.jacobian(th), "numpy")
        self._Jk = sp.lambdify(args, F.jacobian(ka) if P else sp.zeros(r, 0), "numpy")
        H = [[[sp.diff(e, a, b) for b in th] for a in th] for e in self.exprs]
        T = [[[[sp.diff(e, a, b, c) for c in th] for b in th] for a in th] for e in self.exprs]
        Jtk = [[[sp.diff(e, a, p) for p in ka] for a in th] for e in self.exprs]
        Htk = [[[[sp.diff(e, a, b, p) for p in ka] for b in th] for a in th] for e in self.exprs]
        self._H = sp.lambdify(args, H, "numpy")
        self._T = sp.lambdify(args, T, "numpy")
        self._Jtk = sp.lambdify(args, Jtk, "numpy")
        self._Htk = sp.lambdify(args, Htk, "numpy")

    def _args(self, theta, kappa):
        return [float(v) for v in np.ravel(theta)] + [float(v) for v in np.ravel(kappa)]

    def value(self, theta, kappa):
        return np.asarray(self._f(*self._args(theta, kappa)), dtype=float).ravel()

    def jac(self, theta, kappa):
        return np.asarray(self._J(*self._args(theta, kappa)), dtype=float).reshape(self.dim, self.dim)

    def jac_kappa(self, theta, kappa):
        return np.asarray(self._Jk(*self._args(theta, kappa)), dtype=float).reshape(self.dim, len(self.params))

    def hess(self, theta, kappa):
        return np.asarray(self._H(*self._args(theta, kappa)), dtype=float).reshape((self.dim,) * 3)

    def third(self, theta, kappa):
        return np.asarray(self._T(*self._args(theta, kappa)), dtype=float).reshape((self.dim,) * 4)

    def jac_theta_kappa(self, theta, kappa):
        return np.asarray(self._Jtk(*self._args(theta, kappa)), dtype=float).reshape(self.dim, self.dim, len(self.params))

    def hess_theta_kappa(self, theta, kappa):
        shape = (self.dim, self.dim, self.dim, len(self.params))
        return np.asarray(self._Htk(*self._args(theta, kappa)), dtype=float).reshape(shape)

    def in_domain(self, theta):
        return True if self._domain is None else bool(self._domain(np.asarray(theta, dtype=float)))
