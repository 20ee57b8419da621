from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from crnbif import enlarge as E
from crnbif.dsl import parse_file
from crnbif.enlarge import EnlargementError, compose
from crnbif.gallery import CASES, NETWORKS, base_bifurcation, network
from crnbif.massaction import make_chart
from crnbif.network import Complex, is_induced_subnetwork

th, w, k, e = sp.symbols("theta w kappa epsilon")
f0 = (1 + th) * (1 - k - th**2)

R0_STEPS = {
    "E1": "enlarge E1: X1 + X2 -> 2 X2",
    "E2": "enlarge E2",
    "E3": "enlarge E3: Y at r1[0->1], r2[1->0]",
    "E4": "enlarge E4: Y at r2[1->0]",
    "E5": "enlarge E5: Y1 + X1 <-> 2 Y2",
    "E6": "enlarge E6: split r2 with Y1 + Y2",
}

# slow equation, and the fast equation multiplied through by eps (None when there is no extra coordinate)
WORKED = {
    "E1": (f0 + e * (1 - th**2), None),
    "E2": (None, None),
    "E3": (f0 - e * k * (1 + th) ** 2, None),
    "E4": ((1 + th) * (1 - k * w - th**2), -e * k * (1 + th) * w + (1 - w)),
    "E5": ((1 + th) * (1 - k - th**2 + e * w * (1 + th)), 1 - w * (1 - th) - e * (w**2 + 4 * w - 4 * e * w**2)),
    "E6": ((1 + th) * (1 - k - th**2 - e * w * (1 + th)), k * (1 + th) - w - e * w**2),
}


def r0_enlarged(kind):
    pf = parse_file(NETWORKS["r0"] + "\n" + R0_STEPS[kind])
    chart = make_chart(pf.network, [Fraction(1), Fraction(1)])
    return compose(pf.network, chart, pf.enlargements)


@pytest.mark.parametrize("kind", ["E1", "E3", "E4", "E5", "E6"])
def test_worked_equations_are_polynomial_identities(kind):
    enl = r0_enlarged(kind)
    extras = [w] * enl.n_extra
    slow, fast = enl.slow_fast([th], extras, {"k": k}, e)
    want_slow, want_fast = WORKED[kind]
    assert sp.expand(sp.together(slow[0] - want_slow)) == 0
    if want_fast is None:
        assert len(fast) == 0
    else:
        assert sp.expand(sp.together(e * fast[0] - want_fast)) == 0


def test_fully_open_extension_on_the_old_class():
    enl = r0_enlarged("E2")
    assert enl.n_extra == 1
    slow, fast = enl.slow_fast([th], [w], {"k": k}, e)
    assert sp.expand(slow[0].subs(w, 0) - (f0 - e * th)) == 0
    assert sp.expand(fast[0] + e * w) == 0


def test_r1_network_display():
    enl = r0_enlarged("E1")
    net = enl.network.instantiate(Fraction(1, 10))
    assert net.m == 3
    assert net.reactions[2].reactant == Complex.of(X1=1, X2=1)
    assert net.reactions[2].rate.evaluate({}, None) == Fraction(1, 10)


def test_class_selection_constants():
    eps = Fraction(1, 100)
    x = np.array([Fraction(1) - th, Fraction(1) + th], dtype=object)
    z3 = r0_enlarged("E3").lift(x, [], eps)
    assert sp.simplify(z3[2] - z3[1] - 1 / eps) == 0
    z5 = r0_enlarged("E5").lift(x, [w], eps)
    assert sp.expand(2 * z5[2] + z5[3]) == 1
    assert sp.expand(z5[0] - z5[2] - (1 - th)) == 0
    z6 = r0_enlarged("E6").lift(x, [w], eps)
    assert sp.expand(z6[0] + z6[1] + z6[2]) == 2
    assert sp.expand(z6[3] - z6[2]) == 1


@pytest.mark.parametrize("kind,limit", [
    ("E4", lambda t, kk: 1.0),
    ("E5", lambda t, kk: 1.0 / (1.0 - t)),
    # εẇ = κ(1+θ) - w - εw² forces w → κ(1+θ); the two agree at (θ, κ) = (0, 1)
    ("E6", lambda t, kk: kk * (1.0 + t)),
])
def test_singular_limits(kind, limit):
    enl = r0_enlarged(kind)
    for t, kk in [(0.0, 1.0), (0.2, 0.8), (-0.3, 1.5)]:
        x = np.array([1 - t, 1 + t])
        got = enl.limit_extras(x, {"k": kk}, 1e-9)
        assert got[0] == pytest.approx(limit(t, kk), rel=1e-6)


@pytest.mark.parametrize("kind", ["E1", "E2", "E3", "E4", "E5", "E6"])
def test_lift_project_round_trip(kind):
    enl = r0_enlarged(kind)
    eps = 0.05
    x = np.array([0.9, 1.1])
    extras = np.full(enl.n_extra, 1.3)
    z = enl.lift(x, extras, eps)
    assert len(z) == enl.network.n
    x2, e2 = enl.project(z, eps)
    np.testing.assert_allclose(x2, x, atol=1e-12)
    np.testing.assert_allclose(e2, extras, atol=1e-12)


def test_transverse_flags_and_chain():
    flags = {kind: r0_enlarged(kind).transverse for kind in R0_STEPS}
    assert flags == {"E1": False, "E2": True, "E3": False, "E4": True, "E5": True, "E6": True}
    assert r0_enlarged("E6").chain == ("E6: split r2 with Y1 + Y2",)


@pytest.mark.parametrize("kind", ["E3", "E4", "E5", "E6"])
def test_base_is_induced_subnetwork_of_species_enlargements(kind):
    ok, _ = is_induced_subnetwork(network("r0"), r0_enlarged(kind).network)
    assert ok == (kind != "E6")


@pytest.mark.parametrize("step,needle", [
    ("E1: 0 -> X1", "reaction vector not in stoichiometric subspace"),
    ("E1: X2 -> X1", "already present"),
    ("E3: X1 at r1[0->1]", "already exists"),
    ("E3: Y at r7[0->1]", "does not exist"),
    ("E3: Y at r1[0->1]", "rank"),
    ("E5: X1 <-> X2", "new species"),
    ("E6: split r9 with Y", "does not exist"),
])
def test_invalid_enlargements_name_the_condition(step, needle):
    pf = parse_file(NETWORKS["r0"] + "\nenlarge " + step)
    with pytest.raises(EnlargementError) as info:
        compose(pf.network, make_chart(pf.network, [1.0, 1.0]), pf.enlargements)
    assert needle in str(info.value)
    assert info.value.index == 0
    assert str(info.value).startswith("step 1:")


def test_error_index_points_at_failing_step():
    pf = parse_file(NETWORKS["r0"] + "\nenlarge E2\nenlarge E1: 0 -> X1")
    with pytest.raises(EnlargementError) as info:
        compose(pf.network, make_chart(pf.network, [1.0, 1.0]), pf.enlargements)
    assert info.value.index == 1


def test_apply_helpers():
    net = network("r0")
    chart = make_chart(net, [1.0, 1.0])
    new, sched = E.apply_e2(net, chart)
    assert new.m == 6 and len(sched) == 6
    new, _, limit = E.apply_e6(net, [(1, Complex.of(Y1=1, Y2=1))])
    assert new.n == 4 and new.m == 3
    assert limit.kind == "E6" and limit.species == ("Y1", "Y2")


# -- rate-schedule positivity --------------------------------------------------------------


def _case_networks():
    out = []
    for case in CASES:
        if case.grid_search:
            continue
        net, bp, steps = base_bifurcation(case)
        out.append((case.case_id, compose(net, make_chart(net, bp.x), steps), bp.kappa))
    return out


CASE_NETS = _case_networks()


@pytest.mark.parametrize("case_id,enl,kappa", CASE_NETS, ids=[c[0] for c in CASE_NETS])
@given(eps=st.floats(min_value=1e-12, max_value=1.0, exclude_min=False),
       scale=st.floats(min_value=1e-3, max_value=1e3))
@settings(max_examples=60, deadline=None)
def test_schedule_positive_on_unit_interval(case_id, enl, kappa, eps, scale):
    kap = {p: v * scale for p, v in kappa.items()}
    for rate in enl.schedule:
        assert rate.evaluate(kap, eps) > 0
    assert enl.positive_on([eps], kap)


def test_exact_schedule_positivity_at_rational_eps():
    enl = r0_enlarged("E6")
    for q in range(1, 41):
        eps = Fraction(q, 40)
        assert all(r.evaluate({"k": Fraction(1, 3)}, eps) > 0 for r in enl.schedule)
