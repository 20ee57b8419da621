import json

import numpy as np

import pytest

from crnbif.gallery import (
    CASES,
    case_ids,
    get_case,
    l1_sign_change,
    probe_seed,
    ra0_hopf,
    ra0_l1_sign_change,
    rc1_l1_probe,
    verify_paper_gallery,
)
from crnbif.inherit import InheritanceReport, eigen_convergence

TRANSVERSE_CASES = {"r0-e2", "r0-e4", "r0-e5", "r0-e6", "rb0-e5", "rb2-e1e2-fold", "rb2-e1e2-hopf", "ra0-e6e3"}


@pytest.fixture(scope="module")
def suite():
    return verify_paper_gallery()


def test_gallery_enumeration():
    assert len(CASES) == 12
    assert len(set(case_ids())) == 12
    with pytest.raises(KeyError):
        get_case("nope")


def test_every_case_passes(suite):
    assert suite.failures == [], suite.table()
    assert [r.case_id for r in suite.reports] == case_ids()


def test_transverse_flags(suite):
    assert {r.case_id for r in suite.reports if r.transverse} == TRANSVERSE_CASES


@pytest.mark.parametrize("cid", case_ids())
def test_report_invariants(suite, cid):
    rep = next(r for r in suite.reports if r.case_id == cid)
    assert len(rep.points) == 12
    assert rep.monotone()
    assert rep.fit.kappa_slope >= 0.9
    for p in rep.points:
        flags = p.bif["flags"]
        assert all(flags.values()), (p.eps, flags)
        if rep.transverse:
            assert all(re < 0 for re, _ in p.extra_eigs)
    last = [p for p in rep.points if p.located][-1]
    assert eigen_convergence(rep) <= 10 * last.kappa_dev
    again = InheritanceReport.from_dict(json.loads(rep.to_json()))
    assert again.verdict == rep.verdict == "PASS"


def test_hopf_cases_keep_a_genuine_pair(suite):
    for rep in suite.reports:
        if rep.kind != "hopf":
            continue
        for p in rep.points:
            assert p.bif["guard"] == "ok"
            assert p.bif["omega"] > 1e-3


def test_parallel_run_is_identical(suite):
    par = verify_paper_gallery(jobs=3)
    assert [r.to_json() for r in par.reports] == [r.to_json() for r in suite.reports]


def test_only_filter():
    one = verify_paper_gallery(only=["r0-e2"])
    assert [r.case_id for r in one.reports] == ["r0-e2"]
    assert "r0-e2" in one.table()
    assert one.to_dict()["verdicts"] == {"r0-e2": "PASS"}


def test_ra0_hopf_by_grid_search():
    bp = ra0_hopf()
    assert bp.passed and bp.l1 < 0
    assert bp.kappa["d"] == pytest.approx(0.3535, abs=1e-3)


def test_ra0_l1_changes_sign_along_hopf_curve():
    path, best = ra0_l1_sign_change()
    assert path[0][2] < 0
    assert best is not None
    assert abs(best[2]) < 1e-8
    assert any(l1 > 0 for _, _, l1 in path)
    assert l1_sign_change(path) is not None


def test_l1_sign_change_helper():
    assert l1_sign_change([(0, 0, -1.0), (1, 0, -0.5), (2, 0, 0.3)]) == (1, 2)
    assert l1_sign_change([(0, 0, -1.0), (1, 0, -0.5)]) is None


def test_rc1_probe_is_seeded(monkeypatch):
    monkeypatch.setenv("CRN_INHERIT_SEED", "11")
    assert probe_seed() == 11
    a = rc1_l1_probe(n_samples=6)
    b = rc1_l1_probe(n_samples=6, seed=11)
    assert a == b
    monkeypatch.delenv("CRN_INHERIT_SEED")
    assert probe_seed() == 20240501


def _center_amplitude_growth(net, kappa, amp=0.02, periods=30):
    """Mean center-mode amplitude over the first and the last of ``periods`` periods.

    The orbit starts on the center eigenspace of the Hopf equilibrium, at the
    Hopf parameter itself, where the cubic term alone decides growth or decay.
    """
    from scipy.integrate import solve_ivp

    from crnbif.bifurcation import find_equilibrium
    from crnbif.massaction import ReducedField, full_field, make_chart

    field = ReducedField(net, make_chart(net, [0.25] * net.n))
    th = find_equilibrium(field, np.zeros(field.dim), kappa)
    x0 = field.state(th)
    A = field.jac(th, kappa)
    lam, V = np.linalg.eig(A)
    i = int(np.argmax(lam.imag))
    q, omega = V[:, i] / np.linalg.norm(V[:, i]), lam[i].imag
    ew, W = np.linalg.eig(A.T)
    p = W[:, int(np.argmin(np.abs(ew - lam[i])))]
    p = p / (p @ q)
    G = field.chart.gamma0.astype(float)

    def amplitude(x):
        return abs(p @ np.linalg.lstsq(G, x - x0, rcond=None)[0])

    T = 2 * np.pi / omega
    sol = solve_ivp(lambda t, x: full_field(net, x, kappa), (0, periods * T), x0 + G @ (2 * amp * q.real),
                    rtol=1e-11, atol=1e-13, dense_output=True)
    first = np.mean([amplitude(sol.sol(t)) for t in np.linspace(0, T, 50)])
    last = np.mean([amplitude(sol.sol(t)) for t in np.linspace((periods - 1) * T, periods * T, 50)])
    return first, last


def test_rc1_l1_signs_agree_with_simulation():
    from crnbif.gallery import network

    recs = sorted(rc1_l1_probe(), key=lambda r: r["l1"])
    net = network("rc1")
    first, last = _center_amplitude_growth(net, recs[0]["kappa"])
    assert recs[0]["l1"] < 0 and last < first
    first, last = _center_amplitude_growth(net, recs[-1]["kappa"])
    assert recs[-1]["l1"] > 0 and last > first
