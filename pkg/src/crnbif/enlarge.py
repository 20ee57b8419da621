"""The six network enlargements E1-E6 with their eps-dependent rate schedules.

Each step maps a network to a larger one whose rates are polynomial in eps
and 1/eps.  Applying a step also yields the affine maps that relate states
of the two networks:

* ``lift(x, e, eps)`` sends a state x of the smaller network and values e of
  the added coordinates to a state of the enlarged network on the positive
  class singled out by the construction (y - sᵀx = 1/eps for E3,
  δᵀŷ + ŷ̂ = 1 for E5/E6, and so on);
* ``project`` inverts it;
* ``limit_extra`` gives the eps -> 0 value of the added coordinates.

All maps accept float arrays as well as object arrays of ``Fraction`` or
sympy expressions, so reduced equations can be checked symbolically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import exact
from .massaction import Chart, chart_basis
from .network import Complex, Network, RateExpr, RateTerm, Reaction


class EnlargementError(ValueError):
    """An enlargement whose defining conditions fail; ``index`` is the step position."""

    def __init__(self, message: str, index: int | None = None):
        self.index = index
        super().__init__(message if index is None else f"step {index + 1}: {message}")


# -- enlargement moves ---------------------------------------------------------------


def _entries_str(species: str, entries) -> str:
    if not entries:
        return species
    body = ", ".join(f"r{j + 1}[{a}->{b}]" for j, a, b in entries)
    return f"{species} at {body}"


@dataclass(frozen=True)
class E1:
    """Add a reaction among existing species whose reaction vector lies in im Γ."""

    reactant: Complex
    product: Complex
    kind = "E1"

    def describe(self) -> str:
        return f"E1: {self.reactant} -> {self.product}"


@dataclass(frozen=True)
class E2:
    """Add all missing inflow and outflow reactions."""

    kind = "E2"

    def describe(self) -> str:
        return "E2"


@dataclass(frozen=True)
class E3:
    """Insert a new species Y whose net production is a combination sᵀΓ of old ones.

    ``entries`` lists (reaction index, reactant coefficient, product
    coefficient) for every reaction Y is added to.  ``s`` is found by an
    exact solve when omitted.
    """

    species: str
    entries: tuple[tuple[int, int, int], ...]
    s: tuple | None = None
    kind = "E3"

    def describe(self) -> str:
        return f"E3: {_entries_str(self.species, self.entries)}"


@dataclass(frozen=True)
class E4:
    """Insert a new species Y anywhere, together with the flows 0 <-> Y."""

    species: str
    entries: tuple[tuple[int, int, int], ...] = ()
    kind = "E4"

    def describe(self) -> str:
        return f"E4: {_entries_str(self.species, self.entries)}"


@dataclass(frozen=True)
class E5:
    """Add reversible reactions that involve new species."""

    pairs: tuple[tuple[Complex, Complex], ...]
    kind = "E5"

    def describe(self) -> str:
        return "E5: " + ", ".join(f"{a} <-> {b}" for a, b in self.pairs)


@dataclass(frozen=True)
class E6:
    """Split reactions a -> b into a -> s X + β Y -> b through new species Y."""

    splits: tuple[tuple[int, Complex], ...]
    kind = "E6"

    def describe(self) -> str:
        return "E6: " + ", ".join(f"split r{j + 1} with {c}" for j, c in self.splits)


# -- helpers ------------------------------------------------------------------------


def _fmat(rows) -> np.ndarray:
    return np.array(rows, dtype=object).reshape(len(rows), -1) if rows else np.zeros((0, 0), dtype=object)


def _pick(M_exact: np.ndarray, like: np.ndarray) -> np.ndarray:
    return M_exact if np.asarray(like).dtype == object else M_exact.astype(float)


def _vec(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype == object:
        return np.array(list(arr.ravel()), dtype=object)
    return arr.astype(float).ravel()


def _concat(*parts) -> np.ndarray:
    if any(np.asarray(p).dtype == object for p in parts):
        return np.concatenate([np.asarray(p, dtype=object) for p in parts])
    return np.concatenate([np.asarray(p, dtype=float) for p in parts])


def _rank(rows) -> int:
    return exact.rank(rows) if rows and len(rows[0]) else 0


def _eps_power(power: int) -> RateExpr:
    return RateExpr((RateTerm(power, None, Fraction(1)),))


def _exp_log(M: np.ndarray, logs: np.ndarray) -> np.ndarray:
    return np.exp(M.astype(float) @ logs)


def _linear_form(coeffs, names) -> str:
    out = ""
    for c, name in zip(coeffs, names):
        if not c:
            continue
        mag = "" if abs(c) == 1 else f"{abs(c)}*"
        if not out:
            out = ("-" if c < 0 else "") + mag + name
        else:
            out += (" - " if c < 0 else " + ") + mag + name
    return out or "0"


@dataclass(frozen=True)
class LimitData:
    """Singular-limit and class-selection data recorded by a step.

    Attributes:
        kind: Enlargement kind.
        species: Names of the added species (E3-E6).
        class_constraint: Human-readable description of the selected class.
        s: Dependence vector (E1 in Γ₀ coordinates, E3 in species coordinates).
        y0: Limit of the new flow species (E4).
        gamma: Exponent matrix γ of the limit w(0) = ... x^γ (E5, E6).
        delta: Matrix δ of the class constraint δᵀŷ + ŷ̂ = 1 (E5, E6).
        hat_rows: Added species forming the nonsingular block β̂ (E5, E6).
        beta_hat_inv_t: (β̂⁻¹)ᵀ, the exponent applied to first-leg rates (E6).
    """

    kind: str
    species: tuple[str, ...] = ()
    class_constraint: str = ""
    s: tuple | None = None
    y0: float | None = None
    gamma: np.ndarray | None = None
    delta: np.ndarray | None = None
    hat_rows: tuple[str, ...] = ()
    beta_hat_inv_t: np.ndarray | None = None

    def to_dict(self) -> dict:
        def conv(a):
            if a is None:
                return None
            return [[str(v) for v in row] for row in np.atleast_2d(a)]

        return {
            "kind": self.kind,
            "species": list(self.species),
            "class_constraint": self.class_constraint,
            "s": None if self.s is None else [str(v) for v in self.s],
            "y0": self.y0,
            "gamma": conv(self.gamma),
            "delta": conv(self.delta),
            "hat_rows": list(self.hat_rows),
        }


# -- applied steps ----------------------------------------------------------------------


@dataclass(frozen=True)
class Applied:
    """One enlargement applied to a concrete network."""

    move: object
    before: Network
    after: Network
    limit: LimitData
    n_extra: int = 0
    transverse: bool = False
    data: dict = field(default_factory=dict, compare=False)

    @property
    def kind(self) -> str:
        return self.move.kind

    @property
    def n(self) -> int:
        return self.before.n

    # maps between states -----------------------------------------------------
    def lift(self, x, e, eps) -> np.ndarray:
        x = _vec(x)
        k = self.kind
        if k == "E1":
            return x
        if k == "E2":
            Wt = _pick(self.data["Wt"], x)
            return x + Wt.dot(_vec(e))
        if k == "E3":
            s = _pick(self.data["s"], x)
            return _concat(x, [1 / eps + s.dot(x)])
        if k == "E4":
            return _concat(x, _vec(e)[:1])
        # E5 / E6
        w = _vec(e)
        K = _pick(self.data["K"], x)
        dT = _pick(self.data["deltaT"], x)
        xs = x + eps * K.dot(w)
        y = [None] * len(self.limit.species)
        yh = eps * w
        yo = 1 - eps * dT.dot(w) if len(self.data["other"]) else []
        for i, idx in enumerate(self.data["hat"]):
            y[idx] = yh[i]
        for i, idx in enumerate(self.data["other"]):
            y[idx] = yo[i]
        return _concat(xs, np.array(y, dtype=object if xs.dtype == object else float))

    def project(self, z, eps) -> tuple[np.ndarray, np.ndarray]:
        z = _vec(z)
        n, k = self.n, self.kind
        if k == "E1":
            return z, z[:0]
        if k == "E2":
            G = _pick(self.data["G"], z)
            Wt = _pick(self.data["Wt"], z)
            u = G.dot(z - _pick(self.data["anchor"], z))
            return z - Wt.dot(u), u
        if k == "E3":
            return z[:n], z[:0]
        if k == "E4":
            return z[:n], z[n:]
        yh = z[n:][self.data["hat"]]
        K = _pick(self.data["K"], z)
        return z[:n] - K.dot(yh), yh / eps

    def project_velocity(self, dz, eps) -> tuple[np.ndarray, np.ndarray]:
        """Linear part of ``project``: time derivatives in (x, e) coordinates."""
        dz = _vec(dz)
        n, k = self.n, self.kind
        if k == "E1":
            return dz, dz[:0]
        if k == "E2":
            G = _pick(self.data["G"], dz)
            Wt = _pick(self.data["Wt"], dz)
            du = G.dot(dz)
            return dz - Wt.dot(du), du
        if k == "E3":
            return dz[:n], dz[:0]
        if k == "E4":
            return dz[:n], dz[n:]
        dyh = dz[n:][self.data["hat"]]
        K = _pick(self.data["K"], dz)
        return dz[:n] - K.dot(dyh), dyh / eps

    def limit_extra(self, x, kappa: Mapping[str, float], eps) -> np.ndarray:
        """Limit values of the added coordinates at a state x of ``before``."""
        x = np.asarray(x, dtype=float)
        k = self.kind
        if k in ("E1", "E3"):
            return np.zeros(0)
        if k == "E2":
            return np.zeros(self.n_extra)
        if k == "E4":
            return np.ones(1)
        logx = np.log(x)
        if k == "E5":
            return _exp_log(self.limit.gamma, logx)
        rates = []
        for j in self.data["split_idx"]:
            r = self.before.reactions[j]
            mono = np.prod([x[self.before.index[s]] ** c for s, c in r.reactant.coeffs])
            rates.append(float(r.rate.evaluate(kappa, eps)) * mono)
        return np.exp(self.limit.beta_hat_inv_t.astype(float) @ np.log(rates) + self.limit.gamma.astype(float) @ logx)


# -- individual constructions -----------------------------------------------------------------


def _apply_e1(net: Network, move: E1, anchor) -> Applied:
    names = set(net.species)
    extra = (set(move.reactant.species) | set(move.product.species)) - names
    if extra:
        raise EnlargementError(f"E1 reaction uses new species {sorted(extra)}; use E4")
    if (move.reactant, move.product) in {(r.reactant, r.product) for r in net.reactions}:
        raise EnlargementError("E1 reaction is already present")
    vec = [move.product.get(s) - move.reactant.get(s) for s in net.species]
    g0, _ = chart_basis(net)
    try:
        s = exact.solve(g0.tolist(), [[v] for v in vec])
    except ValueError:
        raise EnlargementError(
            "reaction vector not in stoichiometric subspace (E1 inapplicable; E4 adds a species instead)"
        ) from None
    new = Reaction(move.reactant, move.product, _eps_power(1))
    after = Network(net.species, net.reactions + (new,))
    if after.rank != net.rank:
        raise EnlargementError("E1 changed the rank")
    lim = LimitData("E1", s=tuple(row[0] for row in s), class_constraint="class unchanged")
    return Applied(move, net, after, lim)


def _apply_e2(net: Network, move: E2, anchor) -> Applied:
    if anchor is None:
        raise EnlargementError(
            "E2 needs an eps-independent base point; after E3, E5 or E6 the inflow rates would not "
            "stay positive on (0, 1], so apply E2 to a located bifurcation of the enlarged network"
        )
    anchor = np.asarray(anchor)
    if any(v <= 0 for v in anchor):
        raise EnlargementError("E2 base point must be strictly positive")
    zero = Complex()
    reactions = list(net.reactions)
    where = {(r.reactant, r.product): j for j, r in enumerate(reactions)}
    for i, s in enumerate(net.species):
        c = anchor[i]
        coef = c if isinstance(c, Fraction) else (Fraction(int(c)) if float(c).is_integer() else float(c))
        one = Complex.of({s: 1})
        for pair, rate in (((zero, one), RateExpr((RateTerm(1, None, coef),))), ((one, zero), _eps_power(1))):
            if pair in where:
                j = where[pair]
                reactions[j] = reactions[j].with_rate(reactions[j].rate + rate)
            else:
                where[pair] = len(reactions)
                reactions.append(Reaction(pair[0], pair[1], rate))
    after = Network(net.species, tuple(reactions))
    if after.rank != net.n:
        raise EnlargementError("E2 did not produce full rank")
    W = exact.left_nullspace_rref(net.stoichiometric_matrix.tolist(), net.n)
    k = len(W)
    if k:
        WWt = exact.matmul(W, exact.transpose(W))
        G = exact.matmul(exact.inverse(WWt), W)
        Wt = exact.transpose(W)
    else:
        G, Wt = [], [[] for _ in range(net.n)]
    data = {
        "Wt": np.array(Wt, dtype=object).reshape(net.n, k),
        "G": np.array(G, dtype=object).reshape(k, net.n),
        "anchor": np.array([Fraction(v) if not isinstance(v, float) else v for v in anchor], dtype=object),
    }
    lim = LimitData("E2", class_constraint="all of the positive orthant (rank n); tracked on the old class")
    return Applied(move, net, after, lim, n_extra=k, transverse=k > 0, data=data)


def _new_species(net: Network, name: str):
    if name in net.species:
        raise EnlargementError(f"species {name!r} already exists")
    if name in net.param_names:
        raise EnlargementError(f"{name!r} is already a parameter name")


def _insert(net: Network, name: str, entries) -> list[Reaction]:
    reactions = list(net.reactions)
    seen = set()
    for j, a, b in entries:
        if not 0 <= j < net.m:
            raise EnlargementError(f"reaction r{j + 1} does not exist")
        if j in seen:
            raise EnlargementError(f"reaction r{j + 1} listed twice")
        if a < 0 or b < 0:
            raise EnlargementError("stoichiometric coefficients must be nonnegative")
        seen.add(j)
        r = reactions[j]
        reactions[j] = Reaction(r.reactant.plus(Complex.of({name: a})), r.product.plus(Complex.of({name: b})), r.rate)
    return reactions


def _apply_e3(net: Network, move: E3, anchor) -> Applied:
    _new_species(net, move.species)
    if not move.entries or all(a == 0 and b == 0 for _, a, b in move.entries):
        raise EnlargementError("E3 must add the species to a nonempty set of reactions")
    reactions = _insert(net, move.species, move.entries)
    row = [0] * net.m
    alpha = [0] * net.m
    for j, a, b in move.entries:
        row[j] = b - a
        alpha[j] = a
    gamma = net.stoichiometric_matrix.tolist()
    if move.s is not None:
        s = [Fraction(v) for v in move.s]
        if len(s) != net.n or [sum(si * gamma[i][j] for i, si in enumerate(s)) for j in range(net.m)] != row:
            raise EnlargementError("given s does not satisfy sᵀΓ = new row")
    else:
        try:
            # s is unique up to conservation laws; eliminating in reversed species order
            # puts the free variables first and keeps s supported on later species
            rev = [list(reversed(r)) for r in exact.transpose(gamma)]
            s = list(reversed(exact.particular_solution(rev, row)))
        except ValueError:
            raise EnlargementError("E3 would change the rank: the new row is not a combination of old rows") from None
    reactions = [r.with_rate(r.rate.times_eps(alpha[j])) for j, r in enumerate(reactions)]
    after = Network(net.species + (move.species,), tuple(reactions))
    if after.rank != net.rank:
        raise EnlargementError("E3 changed the rank")
    lhs = _linear_form([Fraction(1)] + [-v for v in s], (move.species,) + net.species)
    lim = LimitData("E3", (move.species,), f"{lhs} = 1/eps", s=tuple(s))
    return Applied(move, net, after, lim, data={"s": np.array(s, dtype=object)})


def _apply_e4(net: Network, move: E4, anchor) -> Applied:
    _new_species(net, move.species)
    reactions = _insert(net, move.species, move.entries)
    y = Complex.of({move.species: 1})
    reactions += [Reaction(Complex(), y, _eps_power(-1)), Reaction(y, Complex(), _eps_power(-1))]
    after = Network(net.species + (move.species,), tuple(reactions))
    if after.rank != net.rank + 1:
        raise EnlargementError("E4 must raise the rank by one")
    lim = LimitData("E4", (move.species,), f"class through y={move.species}=1", y0=1.0)
    return Applied(move, net, after, lim, n_extra=1, transverse=True)


def _hat_block(beta: list[list[int]], new: list[str], mprime: int, kind: str):
    """Row selection for β̂ and derived matrices."""
    if _rank(beta) < mprime:
        raise EnlargementError(f"{kind}: rank of β is below the number of added reactions ({mprime})")
    hat = exact.independent_columns(exact.transpose(beta))[:mprime]
    other = [i for i in range(len(new)) if i not in hat]
    bh = [beta[i] for i in hat]
    bh_inv = exact.inverse(bh)
    bhh = [beta[i] for i in other]
    delta_t = exact.matmul(bhh, bh_inv) if other else []  # δᵀ = β̂̂ β̂⁻¹ up to sign
    delta_t = [[-v for v in row] for row in delta_t]
    return hat, other, bh_inv, delta_t


def _finish_e56(move, net, after, new, alpha, beta, mprime, kind, extra_gamma=None):
    hat, other, bh_inv, delta_t = _hat_block(beta, new, mprime, kind)
    K = exact.matmul(alpha, bh_inv) if net.n else []  # n x m'
    gamma = [[-v for v in row] for row in exact.transpose(K)]  # m' x n
    bh_inv_t = exact.transpose(bh_inv)
    if extra_gamma is not None:
        gamma = [[-v for v in row] for row in exact.transpose(exact.matmul(extra_gamma, bh_inv))]
    delta = exact.transpose(delta_t) if other else []
    parts = []
    for row_i, o in enumerate(other):
        coeffs = [Fraction(1)] + [delta_t[row_i][c] for c in range(len(hat))]
        parts.append(_linear_form(coeffs, [new[o]] + [new[h] for h in hat]) + " = 1")
    desc = "; ".join(parts) if parts else "no constraint on added species"
    lim = LimitData(
        kind,
        tuple(new),
        desc,
        gamma=np.array(gamma, dtype=object).reshape(mprime, net.n),
        delta=np.array(delta, dtype=object).reshape(mprime, len(other)) if other else np.zeros((mprime, 0), dtype=object),
        hat_rows=tuple(new[i] for i in hat),
        beta_hat_inv_t=np.array(bh_inv_t, dtype=object),
    )
    data = {
        "K": np.array(K, dtype=object).reshape(net.n, mprime),
        "deltaT": np.array(delta_t, dtype=object).reshape(len(other), mprime),
        "hat": list(hat),
        "other": list(other),
    }
    return lim, data


def _apply_e5(net: Network, move: E5, anchor) -> Applied:
    if not move.pairs:
        raise EnlargementError("E5 needs at least one reversible reaction")
    old = set(net.species)
    new: list[str] = []
    for a, b in move.pairs:
        for s in a.species + b.species:
            if s not in old and s not in new:
                new.append(s)
    for s in new:
        _new_species(net, s)
    mprime = len(move.pairs)
    alpha = [[move.pairs[i][1].get(s) - move.pairs[i][0].get(s) for i in range(mprime)] for s in net.species]
    beta = [[move.pairs[i][1].get(s) - move.pairs[i][0].get(s) for i in range(mprime)] for s in new]
    if any(all(beta[k][i] == 0 for k in range(len(new))) for i in range(mprime)):
        raise EnlargementError("E5: every added reaction must change some new species (β has a zero column)")
    hat, *_ = _hat_block(beta, new, mprime, "E5")
    reactions = list(net.reactions)
    for a, b in move.pairs:
        fwd = -sum(a.get(new[h]) for h in hat)
        bwd = -sum(b.get(new[h]) for h in hat)
        reactions += [Reaction(a, b, _eps_power(fwd)), Reaction(b, a, _eps_power(bwd))]
    try:
        after = Network(net.species + tuple(new), tuple(reactions))
    except ValueError as exc:
        raise EnlargementError(f"E5: {exc}") from None
    if after.rank != net.rank + mprime:
        raise EnlargementError("E5 must raise the rank by the number of added reactions")
    lim, data = _finish_e56(move, net, after, new, alpha, beta, mprime, "E5")
    return Applied(move, net, after, lim, n_extra=mprime, transverse=True, data=data)


def _apply_e6(net: Network, move: E6, anchor) -> Applied:
    if not move.splits:
        raise EnlargementError("E6 needs at least one reaction to split")
    idx = [j for j, _ in move.splits]
    if len(set(idx)) != len(idx):
        raise EnlargementError("E6: a reaction is split twice")
    old = set(net.species)
    new: list[str] = []
    for j, c in move.splits:
        if not 0 <= j < net.m:
            raise EnlargementError(f"E6: reaction r{j + 1} does not exist")
        for s in c.species:
            if s not in old and s not in new:
                new.append(s)
    for s in new:
        _new_species(net, s)
    if not new:
        raise EnlargementError("E6: the intermediate complexes contain no new species")
    mprime = len(move.splits)
    sm = [[c.get(s) for _, c in move.splits] for s in net.species]
    bm = [[net.reactions[j].product.get(s) for j, _ in move.splits] for s in net.species]
    alpha = [[sm[i][k] - bm[i][k] for k in range(mprime)] for i in range(net.n)]
    beta = [[c.get(s) for _, c in move.splits] for s in new]
    hat, *_ = _hat_block(beta, new, mprime, "E6")
    reactions = list(net.reactions)
    legs = []
    for j, c in move.splits:
        r = net.reactions[j]
        reactions[j] = Reaction(r.reactant, c, r.rate)
        legs.append(Reaction(c, r.product, _eps_power(-sum(c.get(new[h]) for h in hat))))
    try:
        after = Network(net.species + tuple(new), tuple(reactions + legs))
    except ValueError as exc:
        raise EnlargementError(f"E6: {exc}") from None
    if after.rank != net.rank + mprime:
        raise EnlargementError("E6 must raise the rank by the number of split reactions")
    lim, data = _finish_e56(move, net, after, new, alpha, beta, mprime, "E6", extra_gamma=sm)
    data["split_idx"] = idx
    return Applied(move, net, after, lim, n_extra=mprime, transverse=True, data=data)


_BUILDERS = {"E1": _apply_e1, "E2": _apply_e2, "E3": _apply_e3, "E4": _apply_e4, "E5": _apply_e5, "E6": _apply_e6}


# -- composition ------------------------------------------------------------------------


def _full_field_objects(net: Network, z, kappa: Mapping, eps) -> np.ndarray:
    """Γ v(z) with generic arithmetic (floats, Fractions or sympy)."""
    z = _vec(z)
    rates = []
    for r in net.reactions:
        mono = 1
        for s, c in r.reactant.coeffs:
            mono = mono * z[net.index[s]] ** c
        rates.append(r.rate.evaluate(kappa, eps) * mono)
    G = net.stoichiometric_matrix
    return np.array([sum(G[i, j] * rates[j] for j in range(net.m) if G[i, j]) for i in range(net.n)], dtype=object)


@dataclass(frozen=True)
class Enlarged:
    """A base network, a chart at its bifurcation point and a chain of applied steps."""

    base: Network
    chart: Chart | None
    steps: tuple[Applied, ...]

    @property
    def network(self) -> Network:
        return self.steps[-1].after if self.steps else self.base

    @property
    def schedule(self) -> tuple[RateExpr, ...]:
        return tuple(r.rate for r in self.network.reactions)

    @property
    def limit_data(self) -> tuple[LimitData, ...]:
        return tuple(s.limit for s in self.steps)

    @property
    def n_extra(self) -> int:
        return sum(s.n_extra for s in self.steps)

    @property
    def transverse(self) -> bool:
        return any(s.transverse for s in self.steps)

    @property
    def chain(self) -> tuple[str, ...]:
        return tuple(s.move.describe() for s in self.steps)

    def _split(self, e):
        e = _vec(e) if len(np.ravel(e)) else np.zeros(0)
        out, pos = [], 0
        for s in self.steps:
            out.append(e[pos:pos + s.n_extra])
            pos += s.n_extra
        return out

    def lift(self, x, extras, eps) -> np.ndarray:
        z = _vec(x)
        for s, e in zip(self.steps, self._split(extras)):
            z = s.lift(z, e, eps)
        return z

    def project(self, z, eps) -> tuple[np.ndarray, np.ndarray]:
        z = _vec(z)
        parts = []
        for s in reversed(self.steps):
            z, e = s.project(z, eps)
            parts.append(e)
        extras = _concat(*reversed(parts)) if parts else np.zeros(0)
        return z, extras

    def project_velocity(self, dz, eps) -> tuple[np.ndarray, np.ndarray]:
        dz = _vec(dz)
        parts = []
        for s in reversed(self.steps):
            dz, de = s.project_velocity(dz, eps)
            parts.append(de)
        extras = _concat(*reversed(parts)) if parts else np.zeros(0)
        return dz, extras

    def seed(self, x, kappa: Mapping[str, float], eps) -> np.ndarray:
        """Lift x with every added coordinate at its singular-limit value."""
        z = np.asarray(x, dtype=float)
        for s in self.steps:
            z = s.lift(z, s.limit_extra(z, kappa, eps), eps)
        return z

    def limit_extras(self, x, kappa: Mapping[str, float], eps) -> np.ndarray:
        z = np.asarray(x, dtype=float)
        parts = []
        for s in self.steps:
            e = s.limit_extra(z, kappa, eps)
            parts.append(e)
            z = s.lift(z, e, eps)
        return np.concatenate(parts) if parts else np.zeros(0)

    def slow_fast(self, theta, extras, kappa: Mapping, eps):
        """Time derivatives of (θ, extras) for the enlarged system.

        θ are base-chart coordinates; works symbolically when the inputs
        are sympy objects.
        """
        if self.chart is None:
            raise ValueError("a base chart is required")
        g0 = self.chart.gamma0.astype(object)
        th = np.array(list(np.ravel(theta)), dtype=object)
        x = self.chart.base_point.astype(object) + g0.dot(th)
        z = self.lift(x, extras, eps)
        F = _full_field_objects(self.network, z, kappa, eps)
        dx, de = self.project_velocity(F, eps)
        pinv = np.array(exact.matmul(exact.inverse(exact.matmul(exact.transpose(g0.tolist()), g0.tolist())),
                                     exact.transpose(g0.tolist())), dtype=object)
        return pinv.dot(dx), de

    def positive_on(self, eps_values: Sequence[float], kappa: Mapping[str, float]) -> bool:
        for eps in eps_values:
            for r in self.network.reactions:
                if not r.rate.evaluate(kappa, eps) > 0:
                    return False
        return True


def compose(net: Network, chart: Chart | None, steps: Sequence, start: int = 0) -> Enlarged:
    """Apply enlargement steps in order with a shared eps.

    Args:
        net: Base network.
        chart: Chart at the base bifurcation point; needed for E2 and for
            reduced coordinates.
        steps: Specifications (E1 ... E6 instances).

    Raises:
        EnlargementError: first invalid step, with its index.
    """
    applied = []
    running = net
    anchor = None if chart is None else np.asarray(chart.base_point)
    for i, move in enumerate(steps):
        builder = _BUILDERS.get(getattr(move, "kind", None))
        if builder is None:
            raise EnlargementError(f"unknown enlargement {move!r}", start + i)
        try:
            step = builder(running, move, anchor)
        except EnlargementError as exc:
            raise EnlargementError(str(exc), start + i) from None
        applied.append(step)
        running = step.after
        if move.kind == "E4" and anchor is not None:
            anchor = _concat(anchor, [Fraction(1)])
        elif move.kind in ("E3", "E5", "E6"):
            anchor = None
    return Enlarged(net, chart, tuple(applied))


def apply_e1(net: Network, chart: Chart | None, reactant: Complex, product: Complex):
    e = compose(net, chart, [E1(reactant, product)])
    return e.network, e.schedule


def apply_e2(net: Network, chart: Chart):
    e = compose(net, chart, [E2()])
    return e.network, e.schedule


def apply_e3(net: Network, chart: Chart | None, species: str, entries, s=None):
    e = compose(net, chart, [E3(species, tuple(entries), None if s is None else tuple(s))])
    return e.network, e.schedule, e.limit_data[0]


def apply_e4(net: Network, species: str, entries=()):
    e = compose(net, None, [E4(species, tuple(entries))])
    return e.network, e.schedule, e.limit_data[0]


def apply_e5(net: Network, pairs):
    e = compose(net, None, [E5(tuple(pairs))])
    return e.network, e.schedule, e.limit_data[0]


def apply_e6(net: Network, splits):
    e = compose(net, None, [E6(tuple(splits))])
    return e.network, e.schedule, e.limit_data[0]
