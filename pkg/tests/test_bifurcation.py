import itertools
import json

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from crnbif.bifurcation import (
    BifKind,
    BifPoint,
    BifurcationError,
    adjugate,
    bialternate,
    center_schur_complement,
    choose_unfolding_params,
    continue_equilibrium,
    equilibrate,
    find_equilibrium,
    first_lyapunov,
    locate_bifurcation,
    lyapunov_l1,
    scan_for_bifurcation,
    test_functions,
    transversality_certificate,
)
from crnbif.gallery import network
from crnbif.massaction import ReducedField, make_chart
from symfield import SymbolicField

small_matrices = st.integers(2, 5).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-3, 3, allow_nan=False, allow_subnormal=False))
)


@given(small_matrices)
@settings(max_examples=150, deadline=None)
def test_bialternate_spectrum_is_pairwise_sums(A):
    lam = np.linalg.eigvals(A)
    sums = np.array([lam[i] + lam[j] for i, j in itertools.combinations(range(len(lam)), 2)])
    got = np.linalg.eigvals(bialternate(A))
    # compare as multisets through the characteristic polynomial coefficients
    np.testing.assert_allclose(np.poly(got), np.real_if_close(np.poly(sums)), atol=1e-6 * (1 + np.abs(A).max()) ** 4)


@given(small_matrices)
@settings(max_examples=100, deadline=None)
def test_adjugate_identity(M):
    np.testing.assert_allclose(M @ adjugate(M), np.linalg.det(M) * np.eye(len(M)), atol=1e-8 * (1 + np.abs(M).max()) ** len(M))


@given(arrays(np.float64, (4, 4), elements=st.floats(-2, 2)), st.floats(0.1, 3))
@settings(max_examples=100, deadline=None)
def test_schur_complement_determinant_identity(B, gap):
    # A has a simple eigenvalue near zero and a hyperbolic block
    Q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(3, 3)))
    A = Q @ np.diag([1e-3, -gap, -2 * gap - 0.5]) @ Q.T
    Dh = B.copy()
    Dh[:3, :3] = A
    S, hyp, k = center_schur_complement(A, Dh, "fold")
    assert k == 1 and S.shape == (2, 2)
    np.testing.assert_allclose(abs(np.linalg.det(Dh)), abs(np.prod(hyp).real * np.linalg.det(S)),
                               rtol=1e-6, atol=1e-9)


def test_equilibrate_removes_row_scaling():
    M = np.array([[1e6, 2e6], [1.0, -3.0]])
    Me = equilibrate(M)
    np.testing.assert_allclose(np.max(np.abs(Me), axis=1), 1.0, rtol=1e-2)
    assert np.linalg.matrix_rank(Me) == 2


# -- fold ----------------------------------------------------------------------------------


def r0_field():
    net = network("r0")
    return ReducedField(net, make_chart(net, [1.0, 1.0]))


def test_find_equilibrium_on_r0():
    field = r0_field()
    th = find_equilibrium(field, [0.2], {"k": 0.75})
    # equilibria of (1+θ)(1-k-θ²): θ = ±1/2 at k = 3/4
    assert abs(abs(th[0]) - 0.5) < 1e-12


def test_r0_fold():
    bp = locate_bifurcation(r0_field(), "fold", ([0.1], {"k": 0.9}), ("k",))
    assert abs(bp.theta[0]) <= 1e-10
    assert abs(bp.kappa["k"] - 1) <= 1e-10
    np.testing.assert_allclose(bp.x, [1.0, 1.0], atol=1e-10)
    assert bp.quadratic == pytest.approx(-2.0, abs=1e-9)
    assert bp.f_kappa == [pytest.approx(-1.0, abs=1e-9)]
    assert bp.passed and all(bp.flags.values())
    tr = transversality_certificate(r0_field(), bp)
    assert tr.passed and tr.rank_theta == 1


def test_fold_not_transversal_when_parameter_does_not_unfold():
    t, a = sp.symbols("t a")
    field = SymbolicField([-t**2 + (a - 1) ** 2], [t], [a])
    bp = locate_bifurcation(field, "fold", ([0.01], {"a": 1.01}), ("a",))
    assert abs(bp.theta[0]) < 1e-6
    assert not bp.flags["transversal"]
    assert not bp.passed


def test_choose_unfolding_params_prefers_effective_parameter():
    t, a, b = sp.symbols("t a b")
    field = SymbolicField([1 - a - t**2 + 0 * b], [t], [a, b])
    assert choose_unfolding_params(field, "fold", [0.0], [1.0, 2.0]) == ("a",)


def test_cusp_on_normal_form():
    t, a, b = sp.symbols("t a b")
    field = SymbolicField([(b - 1) + (a - 1) * t - t**3], [t], [a, b])
    bp = locate_bifurcation(field, "cusp", ([0.05], {"a": 1.1, "b": 0.95}), ("a", "b"))
    assert abs(bp.theta[0]) < 1e-10
    assert bp.kappa == pytest.approx({"a": 1.0, "b": 1.0}, abs=1e-10)
    # no chart here, so x = θ = 0 and only the positivity flag is off
    assert {k for k, ok in bp.flags.items() if not ok} == {"positive"}


def test_continuation_brackets_the_fold():
    field = r0_field()
    branch = continue_equilibrium(field, find_equilibrium(field, [0.3], {"k": 0.5}), {"k": 0.5}, "k", (0.1, 2.0))
    folds = [b for b in branch.brackets if b.kind is BifKind.FOLD]
    assert folds
    # the branch turns back at the fold, so the bracket straddles θ = 0 rather than k = 1
    t0, t1 = (float(t[0]) for t in folds[0].theta)
    assert t0 * t1 < 0 and max(folds[0].kappa) < 1.0
    bp, _ = scan_for_bifurcation(field, "fold", {"k": 0.5}, "k", (0.1, 2.0))
    assert bp is not None and abs(bp.kappa["k"] - 1) < 1e-10


def test_newton_failure_raises():
    field = r0_field()
    with pytest.raises(BifurcationError):
        locate_bifurcation(field, "fold", ([1.5], {"k": 1.0}), ("k",))


def test_wrong_number_of_free_parameters():
    with pytest.raises(ValueError):
        locate_bifurcation(r0_field(), "cusp", ([0.0], {"k": 1.0}), ("k",))


# -- Hopf and the first Lyapunov coefficient ------------------------------------------------


def test_l1_of_the_normal_form():
    x, y, m = sp.symbols("x y m")
    field = SymbolicField([(m - 1) * x - y - x * (x**2 + y**2), x + (m - 1) * y - y * (x**2 + y**2)], [x, y], [m])
    bp = locate_bifurcation(field, "hopf", ([0.0, 0.0], {"m": 1.2}), ("m",))
    assert bp.kappa["m"] == pytest.approx(1.0, abs=1e-12)
    assert bp.omega == pytest.approx(1.0)
    assert bp.l1 == pytest.approx(-2.0, rel=1e-12)


def _gh_l1(F, X, point, params):
    """First Lyapunov coefficient via the planar Guckenheimer-Holmes formula, 2a/ω.

    The field is moved to coordinates u with x = x* + P u and linear part
    [[0, -ω], [ω, 0]]; P = √2 [Re q, -Im q] for a unit eigenvector q of iω.
    """
    subs = dict(zip(X, point)) | params
    A = np.array(sp.Matrix(F).jacobian(X).subs(subs), dtype=float)
    lam, V = np.linalg.eig(A)
    i = int(np.argmax(lam.imag))
    omega, q = lam[i].imag, V[:, i] / np.linalg.norm(V[:, i])
    P = np.sqrt(2) * np.column_stack([q.real, -q.imag])
    u, v = sp.symbols("u v")
    shift = {xi: pi + P[j, 0] * u + P[j, 1] * v for j, (xi, pi) in enumerate(zip(X, point))}
    G = sp.Matrix(np.linalg.inv(P)) * sp.Matrix(F).subs(params).subs(shift, simultaneous=True)
    f, g = G

    def d(e, *vs):
        return float(sp.diff(e, *vs).subs({u: 0, v: 0}))

    a16 = (d(f, u, u, u) + d(f, u, v, v) + d(g, u, u, v) + d(g, v, v, v)
           + (d(f, u, v) * (d(f, u, u) + d(f, v, v)) - d(g, u, v) * (d(g, u, u) + d(g, v, v))
              - d(f, u, u) * d(g, u, u) + d(f, v, v) * d(g, v, v)) / omega)
    return 2 * (a16 / 16) / omega


def test_brusselator_hopf_and_l1_against_independent_formula():
    net = network("rb1")
    field = ReducedField(net, make_chart(net, [1.0, 2.0]))
    bp = locate_bifurcation(field, "hopf", ([0.05, 0.0], {"k1": 1, "k2": 1, "k3": 1.8, "k4": 1}), ("k3",))
    assert bp.kappa["k3"] == pytest.approx(2.0, abs=1e-10)
    np.testing.assert_allclose(bp.x, [1.0, 2.0], atol=1e-10)
    assert bp.passed and bp.l1 < 0
    x, y = sp.symbols("x y")
    F = [1 - x - 2 * x + x**2 * y, 2 * x - x**2 * y]
    # l1 depends on the coordinates through the eigenvector scaling, so the
    # oracle works in the chart's θ coordinates as the library does
    g0 = make_chart(net, [1.0, 2.0]).gamma0.astype(float)
    t1, t2 = sp.symbols("t1 t2")
    Xt = sp.Matrix([1, 2]) + sp.Matrix(g0) * sp.Matrix([t1, t2])
    Ft = sp.Matrix(np.linalg.inv(g0)) * sp.Matrix(F).subs({x: Xt[0], y: Xt[1]}, simultaneous=True)
    assert bp.l1 == pytest.approx(_gh_l1(list(Ft), [t1, t2], [0.0, 0.0], {}), rel=1e-9)


def test_l1_invariant_under_orthogonal_change_and_sign_under_linear_change():
    x, y, m = sp.symbols("x y m")
    F = [m * x - y + x**2 - x * y**2, x + m * y + x * y - 2 * y**3]
    base = SymbolicField(F, [x, y], [m])
    l_base = lyapunov_l1(base, [0.0, 0.0], [0.0])
    c, s = np.cos(0.7), np.sin(0.7)
    for M in (np.array([[c, -s], [s, c]]), np.array([[2.0, 0.3], [-0.5, 1.0]])):
        u, v = sp.symbols("u v")
        X = sp.Matrix(M) * sp.Matrix([u, v])
        G = sp.Matrix(np.linalg.inv(M)) * sp.Matrix(F).subs({x: X[0], y: X[1]}, simultaneous=True)
        l_new = lyapunov_l1(SymbolicField(list(G), [u, v], [m]), [0.0, 0.0], [0.0])
        assert np.sign(l_new) == np.sign(l_base)
        if np.allclose(M @ M.T, np.eye(2)):
            assert l_new == pytest.approx(l_base, rel=1e-10)
    assert l_base == pytest.approx(_gh_l1(F, [x, y], [0.0, 0.0], {m: 0}), rel=1e-10)


def test_first_lyapunov_needs_complex_pair():
    with pytest.raises(Exception):
        first_lyapunov(np.diag([-1.0, -2.0]), lambda u, v: 0 * u, lambda u, v, w: 0 * u)


@pytest.mark.parametrize("k2,k3", [(1.0, 1.0), (0.5, 1.5), (2.0, 0.7)])
def test_rc0_hopf_at_k1_equal_k2_plus_k3(k2, k3):
    net = network("rc0")
    field = ReducedField(net, make_chart(net, [0.7, 0.7, 1.4]))
    kappa = {"k1": 0.9 * (k2 + k3), "k2": k2, "k3": k3, "k4": 1.0}
    th = find_equilibrium(field, np.zeros(3), kappa)
    bp = locate_bifurcation(field, "hopf", (th, kappa), ("k1",))
    assert bp.kappa["k1"] == pytest.approx(k2 + k3, abs=1e-8)
    assert bp.passed
    if k2 == k3 == 1.0:
        assert abs(bp.l1) <= 1e-8


def test_neutral_saddle_is_rejected_by_the_guard():
    x, y, m = sp.symbols("x y m")
    field = SymbolicField([y, x + (m - 1) * y + x**2], [x, y], [m])
    tv = test_functions(field, [0.0, 0.0], [1.0], "hopf")
    assert tv.guard != "ok"
    assert tv.hopf == pytest.approx(0.0, abs=1e-14)


def test_bifpoint_json_round_trip():
    bp = locate_bifurcation(r0_field(), "fold", ([0.1], {"k": 0.9}), ("k",))
    again = BifPoint.from_dict(json.loads(json.dumps(bp.to_dict())))
    assert again.to_dict() == bp.to_dict()
    assert again.passed == bp.passed
