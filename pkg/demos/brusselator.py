"""Fold and Hopf in the Brusselator family.

R_B1 is the Brusselator.  With k1 = k2 = k4 = 1 its equilibrium is
x = (1, 2) and a Hopf bifurcation occurs at k3 = 2.  The first Lyapunov
coefficient is negative, so the limit cycle born there is stable.

R_B2 replaces the inflow and outflow by exchange with a third species Z.
It arises from R_B1 by adding a dependent species (E3) and from the two
reaction core R_B0 by adding a reversible reaction (E5).  Both the Hopf
point of R_B1 and the fold of R_B0 persist into R_B2, and R_B2 in turn
passes them on to the fully open R_B3.
"""

from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from crnbif.bifurcation import locate_bifurcation
from crnbif.dsl import parse_network
from crnbif.gallery import BRUSS_KAPPA, run_case
from crnbif.massaction import ReducedField, full_field, make_chart

net = parse_network((Path(__file__).parent / "networks" / "brusselator.crn").read_text())
field = ReducedField(net, make_chart(net, [1.0, 2.0]))

bp = locate_bifurcation(field, "hopf", (np.zeros(2), BRUSS_KAPPA), ("k3",))
print(f"Hopf at k3 = {bp.kappa['k3']:.10f}, x = {np.round(bp.x, 10)}")
print(f"  eigenvalues  {np.round(bp.eigenvalues, 10)}")
print(f"  omega = {bp.omega:.6f}, l1 = {bp.l1:.6f} (supercritical)")

# past the Hopf point the equilibrium is unstable and orbits settle on a cycle
kv = dict(BRUSS_KAPPA, k3=2.2)
sol = solve_ivp(lambda t, x: full_field(net, x, kv), (0, 200), [1.05, 2.0], rtol=1e-9, max_step=0.1)
tail = sol.y[:, sol.t > 150]
print(f"\nat k3 = 2.2 the late orbit spans x in [{tail[0].min():.3f}, {tail[0].max():.3f}]")

print("\ninheritance into the enlarged networks")
for cid in ("rb1-e3", "rb0-e5", "rb2-e1e2-fold", "rb2-e1e2-hopf"):
    rep = run_case(cid)
    slope = rep.fit.kappa_slope
    print(f"  {cid:<15} {rep.kind:<5} {rep.verdict:<6} slope {slope:.3f}" + (
        "" if rep.kind == "fold" else f"  l1 at smallest eps {rep.points[-1].bif['l1']:.4f}"))
