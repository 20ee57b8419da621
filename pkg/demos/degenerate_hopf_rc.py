"""A vertical Hopf bifurcation in R_C0 and the spread of l1 in R_C1.

R_C0 has a Hopf point at k1 = k2 + k3 that is vertical: the first Lyapunov
coefficient vanishes identically, and the system has a family of closed
orbits instead of an isolated limit cycle.  Adding a dependent species W
(E3) keeps the Hopf point but breaks the degeneracy.  Sampling the rates of
the enlarged network R_C1 finds both signs of l1, so supercritical and
subcritical Hopf points both occur.

The sign of l1 is cross checked by direct simulation: starting on the
center eigenspace at the Hopf parameter, the orbit shrinks when l1 < 0 and
grows when l1 > 0.
"""

import numpy as np
from scipy.integrate import solve_ivp

from crnbif.bifurcation import find_equilibrium, locate_bifurcation
from crnbif.gallery import network, probe_seed, rc1_l1_probe, run_case
from crnbif.massaction import ReducedField, full_field, make_chart

net = network("rc0")
field = ReducedField(net, make_chart(net, [0.7, 0.7, 1.4]))
kappa = {"k1": 1.8, "k2": 1.0, "k3": 1.0, "k4": 1.0}
th = find_equilibrium(field, np.zeros(3), kappa)
bp = locate_bifurcation(field, "hopf", (th, kappa), ("k1",))
print(f"R_C0 Hopf at k1 = {bp.kappa['k1']:.12f} (k2 + k3 = 2), l1 = {bp.l1:.1e}")

rep = run_case("rc0-e3")
print(f"R_C0 -> R_C1 inheritance: {rep.verdict}, slope {rep.fit.kappa_slope:.3f}")

recs = rc1_l1_probe()
l1 = np.array([r["l1"] for r in recs])
print(f"\nprobe of R_C1 with seed {probe_seed()}: {len(recs)} Hopf points, "
      f"{(l1 < 0).sum()} with l1 < 0 and {(l1 > 0).sum()} with l1 > 0")


def amplitude_change(kappa, amp=0.02, periods=30):
    f1 = ReducedField(network("rc1"), make_chart(network("rc1"), [0.25] * 4))
    th = find_equilibrium(f1, np.zeros(f1.dim), kappa)
    x0 = f1.state(th)
    A = f1.jac(th, kappa)
    lam, V = np.linalg.eig(A)
    i = int(np.argmax(lam.imag))
    q = V[:, i] / np.linalg.norm(V[:, i])
    ew, W = np.linalg.eig(A.T)
    p = W[:, int(np.argmin(np.abs(ew - lam[i])))]
    p = p / (p @ q)
    G = f1.chart.gamma0.astype(float)
    T = 2 * np.pi / lam[i].imag
    sol = solve_ivp(lambda t, x: full_field(f1.net, x, kappa), (0, periods * T), x0 + G @ (2 * amp * q.real),
                    rtol=1e-11, atol=1e-13, dense_output=True)

    def mean_amp(t0):
        return np.mean([abs(p @ np.linalg.lstsq(G, sol.sol(t) - x0, rcond=None)[0])
                        for t in np.linspace(t0, t0 + T, 50)])

    return mean_amp(0.0), mean_amp((periods - 1) * T)


for r in (recs[int(np.argmin(l1))], recs[int(np.argmax(l1))]):
    a0, a1 = amplitude_change(r["kappa"])
    trend = "shrinks" if a1 < a0 else "grows"
    print(f"  l1 = {r['l1']:+.4f}: center amplitude {a0:.5f} -> {a1:.5f} over 30 periods ({trend})")
