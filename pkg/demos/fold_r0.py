"""Fold in the smallest network with a saddle-node.

R0 has two species and two reactions:

    X1 + 2 X2 -> 3 X2   (rate 1)
    X2 -> X1            (rate k)

x1 + x2 is conserved, so on the class x1 + x2 = 2 the dynamics is one
dimensional.  This script locates the fold, prints its diagnostics and then
follows the equilibrium branch in k to show the turning point.
"""

from pathlib import Path

import numpy as np

from crnbif.bifurcation import continue_equilibrium, find_equilibrium, locate_bifurcation
from crnbif.dsl import parse_network
from crnbif.massaction import ReducedField, make_chart

net = parse_network((Path(__file__).parent / "networks" / "r0.crn").read_text())
print(f"species {net.species}, rank {net.rank}")

# chart anchored at x = (1, 1); theta measures distance along the class
field = ReducedField(net, make_chart(net, [1.0, 1.0]))

kappa = {"k": 0.9}
theta = find_equilibrium(field, np.array([0.3]), kappa)
print(f"at k = 0.9 an equilibrium sits at theta = {theta[0]:.6f}")

bp = locate_bifurcation(field, "fold", (theta, kappa), ("k",))
print("\nlocated fold")
print(f"  x       = {np.round(bp.x, 12)}")
print(f"  k       = {bp.kappa['k']:.12f}")
print(f"  f_tt/2  = {bp.quadratic:.6f}   (nonzero: quadratic tangency)")
print(f"  f_k     = {bp.f_kappa[0]:.6f}   (nonzero: the parameter unfolds it)")
print(f"  flags   = {bp.flags}")

branch = continue_equilibrium(field, theta, kappa, "k", (0.5, 1.5), direction=1)
print(f"\ncontinued {len(branch)} points from k = 0.9")
for i in range(0, len(branch), max(1, len(branch) // 8)):
    print(f"  k = {branch.kappa[i]:.5f}  theta = {branch.theta[i][0]:+.5f}  det J = {branch.fold[i]:+.4f}")
for b in branch.brackets:
    print(f"{b.kind.value} bracketed between k = {b.kappa[0]:.5f} and k = {b.kappa[1]:.5f}")
print("the branch turns back at k = 1, so there is no equilibrium on this class for k > 1")
