from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from crnbif import exact
from crnbif.gallery import NETWORKS, network
from crnbif.network import (
    Complex,
    Network,
    NetworkError,
    RateExpr,
    RateTerm,
    Reaction,
    conservation_basis,
    is_bimolecular,
    is_fully_open,
    is_induced_subnetwork,
)

int_matrices = st.integers(1, 5).flatmap(
    lambda r: st.integers(1, 5).flatmap(
        lambda c: st.lists(st.lists(st.integers(-3, 3), min_size=c, max_size=c), min_size=r, max_size=r)
    )
)


@given(int_matrices)
@settings(max_examples=200, deadline=None)
def test_rank_matches_sympy(M):
    expected = sp.Matrix(M).rank()
    assert exact.bareiss_rank(M) == expected
    assert exact.rank(M) == expected


@given(int_matrices)
@settings(max_examples=200, deadline=None)
def test_nullspace_is_exact_complement(M):
    ncols = len(M[0])
    N = exact.nullspace(M, ncols)
    assert len(N) + exact.rank(M) == ncols
    for v in N:
        assert all(sum(Fraction(a) * b for a, b in zip(row, v)) == 0 for row in M)


@given(int_matrices)
@settings(max_examples=100, deadline=None)
def test_left_nullspace(M):
    L = exact.left_nullspace_rref(M, len(M))
    assert len(L) == len(M) - exact.rank(M)
    for w in L:
        for j in range(len(M[0])):
            assert sum(w[i] * M[i][j] for i in range(len(M))) == 0


def test_inverse_and_solve():
    A = [[2, 1], [1, 1]]
    inv = exact.inverse(A)
    assert exact.matmul(A, inv) == [[1, 0], [0, 1]]
    assert exact.solve(A, [[3], [2]]) == [[1], [1]]
    with pytest.raises(ValueError):
        exact.inverse([[1, 2], [2, 4]])


def test_primitive_scaling():
    assert exact.primitive([Fraction(2, 3), Fraction(4, 3)]) == [1, 2]
    assert exact.primitive([0, -6, 9]) == [0, -2, 3]


# -- networks -----------------------------------------------------------------------


def test_r0_structure():
    net = network("r0")
    assert net.species == ("X1", "X2")
    assert net.rank == 1
    assert conservation_basis(net) == [[1, 1]]
    assert np.array_equal(net.stoichiometric_matrix, [[-1, 1], [1, -1]])
    assert np.array_equal(net.reactant_matrix, [[1, 0], [2, 1]])


@pytest.mark.parametrize("name", sorted(NETWORKS))
def test_rank_plus_conservation_is_n(name):
    net = network(name)
    G = net.stoichiometric_matrix
    cons = conservation_basis(net)
    assert net.rank == sp.Matrix(G.tolist()).rank()
    assert net.rank + len(cons) == net.n
    for w in cons:
        assert all(sum(w[i] * int(G[i, j]) for i in range(net.n)) == 0 for j in range(net.m))


def test_expected_ranks():
    ranks = {name: network(name).rank for name in NETWORKS}
    assert ranks == {"r0": 1, "rb0": 1, "rb1": 2, "rb2": 2, "rb3": 3, "ra0": 3, "ra1": 4, "ra2": 4,
                     "rc0": 3, "rc1": 3}
    assert conservation_basis(network("rb0")) == [[1, 1]]
    assert conservation_basis(network("rc1")) == [[1, 1, 1, 1]]


def test_rate_expression_canonical_and_positive():
    r = RateExpr((RateTerm(1, "k"), RateTerm(0, None, Fraction(2)), RateTerm(1, "k")))
    assert r.terms == (RateTerm(0, None, 2), RateTerm(1, "k", 2))
    assert r.evaluate({"k": 3}, eps=Fraction(1, 2)) == 5
    assert r.instantiate(Fraction(1, 2)) == RateExpr((RateTerm(0, None, 2), RateTerm(0, "k", 1)))
    with pytest.raises(NetworkError):
        RateTerm(0, "k", Fraction(-1))
    with pytest.raises(ValueError):
        RateExpr.parameter("k").times_eps(-1).coefficients()


def test_network_validation():
    a = Complex.of(X=1)
    with pytest.raises(NetworkError):
        Network(("X",), ())
    with pytest.raises(NetworkError):
        Network(("X",), (Reaction(a, Complex(), RateExpr.parameter("k")),) * 2)
    with pytest.raises(NetworkError):
        Network(("X",), (Reaction(a, Complex.of(Y=1), RateExpr.parameter("k")),))
    with pytest.raises(NetworkError):
        Network(("X", "k"), (Reaction(a, Complex(), RateExpr.parameter("k")),))


def test_openness_and_molecularity():
    assert not is_fully_open(network("r0"))
    assert is_fully_open(network("rb3"))
    assert is_bimolecular(network("rb1")) is False
    assert is_bimolecular(network("ra0"))


@pytest.mark.parametrize("sub,sup", [("rb0", "rb1"), ("rb1", "rb2"), ("rb0", "rb2"), ("ra1", "ra2"), ("rc0", "rc1"), ("rb2", "rb3")])
def test_induced_subnetwork_chain(sub, sup):
    ok, witness = is_induced_subnetwork(network(sub), network(sup))
    assert ok
    assert len(witness.reaction_map) == network(sub).m


def test_split_is_not_an_induced_subnetwork():
    assert not is_induced_subnetwork(network("ra0"), network("ra1"))[0]


def test_induced_subnetwork_reflexive_and_negative():
    net = network("r0")
    ok, w = is_induced_subnetwork(net, net)
    assert ok and w.deleted_species == () and w.reaction_map == (0, 1)
    assert not is_induced_subnetwork(network("rb1"), network("r0"))[0]


def _random_network(draw_reactions):
    species = ["A", "B", "C", "D"]
    reactions = {}
    for lhs, rhs in draw_reactions:
        a = Complex.of({s: c for s, c in zip(species, lhs) if c})
        b = Complex.of({s: c for s, c in zip(species, rhs) if c})
        if a != b:
            reactions.setdefault((a, b), Reaction(a, b, RateExpr.parameter(f"k{len(reactions) + 1}")))
    return Network.from_reactions(list(reactions.values()))


complexes = st.tuples(*[st.integers(0, 2)] * 4)
reaction_lists = st.lists(st.tuples(complexes, complexes), min_size=1, max_size=6)


@given(reaction_lists, st.data())
@settings(max_examples=100, deadline=None)
def test_subnetwork_transitivity(rl, data):
    try:
        big = _random_network(rl)
    except NetworkError:
        return
    keep1 = data.draw(st.lists(st.sampled_from(range(big.m)), min_size=1, unique=True))
    mid = Network.from_reactions([big.reactions[j] for j in sorted(keep1)], big.species)
    keep2 = data.draw(st.lists(st.sampled_from(range(mid.m)), min_size=1, unique=True))
    small = Network.from_reactions([mid.reactions[j] for j in sorted(keep2)], mid.species)
    assert is_induced_subnetwork(small, mid)[0]
    assert is_induced_subnetwork(mid, big)[0]
    assert is_induced_subnetwork(small, big)[0]
