"""Reaction network data model, exact stoichiometry and structural predicates."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from . import exact

IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
EPS = "eps"
RESERVED = {EPS, "species", "enlarge"}

Number = Union[int, Fraction, float]


class NetworkError(ValueError):
    """Structurally invalid network."""


def _num_str(value: Number) -> str:
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    if isinstance(value, int):
        return str(value)
    text = repr(float(value))
    if Fraction(text) == Fraction(float(value)):
        return text
    # the shortest decimal is not the exact double; write the exact ratio so text round-trips
    q = Fraction(float(value))
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True, order=True)
class RateTerm:
    """One term ``coef * eps**eps_power * param`` of a rate constant."""

    eps_power: int
    param: str | None
    coef: Number = Fraction(1)

    def __post_init__(self):
        if not self.coef > 0:
            raise NetworkError(f"rate coefficient must be positive, got {self.coef}")
        if self.param is not None and (not IDENTIFIER.match(self.param) or self.param in RESERVED):
            raise NetworkError(f"invalid parameter name {self.param!r}")

    def __str__(self) -> str:
        parts = []
        if self.coef != 1 or (self.eps_power == 0 and self.param is None):
            parts.append(_num_str(self.coef))
        if self.eps_power == 1:
            parts.append(EPS)
        elif self.eps_power != 0:
            parts.append(f"{EPS}^{self.eps_power}")
        if self.param is not None:
            parts.append(self.param)
        return "*".join(parts)


@dataclass(frozen=True)
class RateExpr:
    """Rate constant as a positive sum of ``coef * eps^p * param`` terms.

    A plain DSL rate is a single term; enlargement schedules produce the rest.
    Every term has a positive coefficient, so the rate is positive whenever
    ``eps > 0`` and all parameters are positive.
    """

    terms: tuple[RateTerm, ...]

    def __post_init__(self):
        if not self.terms:
            raise NetworkError("empty rate expression")
        merged: dict[tuple[int, str | None], Number] = {}
        for t in self.terms:
            key = (t.eps_power, t.param)
            merged[key] = merged.get(key, 0) + t.coef
        canon = tuple(sorted((RateTerm(p, q, c) for (p, q), c in merged.items()),
                            key=lambda t: (t.eps_power, t.param is not None, t.param or "")))
        object.__setattr__(self, "terms", canon)

    @classmethod
    def constant(cls, value: Number) -> "RateExpr":
        return cls((RateTerm(0, None, value),))

    @classmethod
    def parameter(cls, name: str) -> "RateExpr":
        return cls((RateTerm(0, name),))

    @property
    def params(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for t in self.terms:
            if t.param is not None:
                seen.setdefault(t.param)
        return tuple(seen)

    @property
    def depends_on_eps(self) -> bool:
        return any(t.eps_power != 0 for t in self.terms)

    def times_eps(self, power: int) -> "RateExpr":
        if power == 0:
            return self
        return RateExpr(tuple(RateTerm(t.eps_power + power, t.param, t.coef) for t in self.terms))

    def __add__(self, other: "RateExpr") -> "RateExpr":
        return RateExpr(self.terms + other.terms)

    def coefficients(self, eps=None) -> tuple[Number, dict[str, Number]]:
        """Split into (constant part, {param: multiplier}) at a given eps."""
        const: Number = 0
        per: dict[str, Number] = {}
        for t in self.terms:
            if t.eps_power != 0:
                if eps is None:
                    raise ValueError("rate depends on eps; supply a value")
                scale = t.coef * eps**t.eps_power
            else:
                scale = t.coef
            if t.param is None:
                const = const + scale
            else:
                per[t.param] = per.get(t.param, 0) + scale
        return const, per

    def evaluate(self, kappa: Mapping[str, Number] | None = None, eps=None) -> Number:
        const, per = self.coefficients(eps)
        kappa = kappa or {}
        return const + sum(c * kappa[p] for p, c in per.items())

    def instantiate(self, eps) -> "RateExpr":
        """Substitute a numeric eps, keeping parameters symbolic."""
        const, per = self.coefficients(eps)
        terms = [RateTerm(0, p, c) for p, c in per.items()]
        if const:
            terms.append(RateTerm(0, None, const))
        return RateExpr(tuple(terms))

    def __str__(self) -> str:
        return " + ".join(str(t) for t in self.terms)


def as_rate(value: "RateExpr | Number | str") -> RateExpr:
    if isinstance(value, RateExpr):
        return value
    if isinstance(value, str):
        return RateExpr.parameter(value)
    if isinstance(value, float):
        return RateExpr.constant(value)
    return RateExpr.constant(Fraction(value))


@dataclass(frozen=True)
class Complex:
    """Nonnegative integer combination of species, keyed by species name."""

    coeffs: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        merged: dict[str, int] = {}
        for name, c in self.coeffs:
            if int(c) != c or c < 0:
                raise NetworkError(f"stoichiometric coefficient must be a nonnegative integer, got {c}")
            merged[name] = merged.get(name, 0) + int(c)
        object.__setattr__(self, "coeffs", tuple(sorted((k, v) for k, v in merged.items() if v)))

    @classmethod
    def of(cls, mapping: Mapping[str, int] | None = None, **kw: int) -> "Complex":
        items = dict(mapping or {})
        items.update(kw)
        return cls(tuple(items.items()))

    def as_dict(self) -> dict[str, int]:
        return dict(self.coeffs)

    def get(self, name: str) -> int:
        return self.as_dict().get(name, 0)

    @property
    def species(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.coeffs)

    @property
    def order(self) -> int:
        return sum(v for _, v in self.coeffs)

    def without(self, names: Iterable[str]) -> "Complex":
        drop = set(names)
        return Complex(tuple((k, v) for k, v in self.coeffs if k not in drop))

    def plus(self, other: "Complex") -> "Complex":
        return Complex(self.coeffs + other.coeffs)

    def format(self, order: Sequence[str] | None = None) -> str:
        if not self.coeffs:
            return "0"
        d = self.as_dict()
        names = [s for s in order if s in d] if order else list(d)
        names += [s for s in d if s not in names]
        return " + ".join(name if d[name] == 1 else f"{d[name]} {name}" for name in names)

    def __str__(self) -> str:
        return self.format()


@dataclass(frozen=True)
class Reaction:
    reactant: Complex
    product: Complex
    rate: RateExpr = field(default_factory=lambda: RateExpr.constant(1))

    def __post_init__(self):
        if self.reactant == self.product:
            raise NetworkError(f"null reaction {self.reactant} -> {self.product}")
        object.__setattr__(self, "rate", as_rate(self.rate))

    def with_rate(self, rate) -> "Reaction":
        return Reaction(self.reactant, self.product, as_rate(rate))

    def format(self, order: Sequence[str] | None = None) -> str:
        return f"{self.reactant.format(order)} -> {self.product.format(order)} @ {self.rate}"


@dataclass(frozen=True)
class Network:
    """A mass action reaction network.

    ``species`` fixes the row order of every matrix; ``reactions`` fixes the
    column order.  Derived matrices are computed lazily and exactly.
    """

    species: tuple[str, ...]
    reactions: tuple[Reaction, ...]

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        object.__setattr__(self, "reactions", tuple(self.reactions))
        if not self.reactions:
            raise NetworkError("empty network: no reactions")
        if len(set(self.species)) != len(self.species):
            raise NetworkError("duplicate species names")
        for s in self.species:
            if not IDENTIFIER.match(s) or s in RESERVED:
                raise NetworkError(f"invalid species name {s!r}")
        known = set(self.species)
        seen = set()
        for r in self.reactions:
            missing = (set(r.reactant.species) | set(r.product.species)) - known
            if missing:
                raise NetworkError(f"undeclared species {sorted(missing)}")
            key = (r.reactant, r.product)
            if key in seen:
                raise NetworkError(f"duplicate reaction {r.reactant} -> {r.product}")
            seen.add(key)
        clash = set(self.param_names) & known
        if clash:
            raise NetworkError(f"names used both as species and parameters: {sorted(clash)}")

    @classmethod
    def from_reactions(cls, reactions: Sequence[Reaction], species: Sequence[str] = ()) -> "Network":
        """Build a network ordering species by first appearance."""
        order: dict[str, None] = dict.fromkeys(species)
        for r in reactions:
            for name, _ in r.reactant.coeffs:
                order.setdefault(name)
            for name, _ in r.product.coeffs:
                order.setdefault(name)
        return cls(tuple(order), tuple(reactions))

    @property
    def n(self) -> int:
        return len(self.species)

    @property
    def m(self) -> int:
        return len(self.reactions)

    @cached_property
    def index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.species)}

    @cached_property
    def param_names(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for r in self.reactions:
            for p in r.rate.params:
                seen.setdefault(p)
        return tuple(seen)

    @property
    def depends_on_eps(self) -> bool:
        return any(r.rate.depends_on_eps for r in self.reactions)

    def _vectors(self, which: str) -> np.ndarray:
        out = np.zeros((self.n, self.m), dtype=np.int64)
        for j, r in enumerate(self.reactions):
            for name, c in getattr(r, which).coeffs:
                out[self.index[name], j] = c
        return out

    @cached_property
    def reactant_matrix(self) -> np.ndarray:
        return self._vectors("reactant")

    @cached_property
    def product_matrix(self) -> np.ndarray:
        return self._vectors("product")

    @cached_property
    def stoichiometric_matrix(self) -> np.ndarray:
        return self.product_matrix - self.reactant_matrix

    @cached_property
    def rank(self) -> int:
        return exact.bareiss_rank(self.stoichiometric_matrix.tolist())

    def instantiate(self, eps) -> "Network":
        """Copy with eps substituted numerically in every rate."""
        return Network(self.species, tuple(r.with_rate(r.rate.instantiate(eps)) for r in self.reactions))

    def with_rates(self, rates: Mapping[int, "RateExpr | Number | str"]) -> "Network":
        rs = list(self.reactions)
        for j, rate in rates.items():
            rs[j] = rs[j].with_rate(rate)
        return Network(self.species, tuple(rs))

    def format(self) -> str:
        return format_network(self)


def stoichiometric_matrices(net: Network) -> tuple[np.ndarray, np.ndarray]:
    """(Gamma, Gamma_l): integer stoichiometric and reactant matrices."""
    return net.stoichiometric_matrix.copy(), net.reactant_matrix.copy()


def conservation_basis(net: Network) -> list[list[Fraction]]:
    """Exact basis of the left null space of Gamma, in reduced echelon form."""
    return exact.left_nullspace_rref(net.stoichiometric_matrix.tolist(), net.n)


def is_fully_open(net: Network) -> bool:
    flows = {(r.reactant, r.product) for r in net.reactions}
    zero = Complex()
    return all(
        (zero, Complex.of({s: 1})) in flows and (Complex.of({s: 1}), zero) in flows for s in net.species
    )


def is_bimolecular(net: Network) -> bool:
    return all(r.reactant.order <= 2 and r.product.order <= 2 for r in net.reactions)


@dataclass(frozen=True)
class SubnetworkWitness:
    deleted_species: tuple[str, ...]
    # reaction j of the subnetwork is the image of reaction reaction_map[j] of the supernetwork
    reaction_map: tuple[int, ...]
    deleted_reactions: tuple[int, ...] = ()


def is_induced_subnetwork(sub: Network, sup: Network) -> tuple[bool, SubnetworkWitness | None]:
    """Test whether ``sub`` arises from ``sup`` by deleting species and reactions.

    Species are matched by name.  Reactions of ``sup`` that become null after
    species deletion count as removed.  Rates are ignored.
    """
    if not set(sub.species) <= set(sup.species):
        return False, None
    dropped = tuple(s for s in sup.species if s not in set(sub.species))
    projected: dict[tuple[Complex, Complex], int] = {}
    for j, r in enumerate(sup.reactions):
        a, b = r.reactant.without(dropped), r.product.without(dropped)
        if a != b:
            projected.setdefault((a, b), j)
    mapping = []
    for r in sub.reactions:
        j = projected.get((r.reactant, r.product))
        if j is None:
            return False, None
        mapping.append(j)
    kept = set(mapping)
    deleted = tuple(j for j in range(sup.m) if j not in kept)
    return True, SubnetworkWitness(dropped, tuple(mapping), deleted)


def format_network(net: Network) -> str:
    lines = ["species " + ", ".join(net.species)]
    lines += [r.format(net.species) for r in net.reactions]
    return "\n".join(lines) + "\n"
