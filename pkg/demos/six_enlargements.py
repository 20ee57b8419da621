"""The six enlargement moves applied to R0, and what happens to its fold.

Each move adds a reaction or a species whose rate constants depend on a
small parameter eps.  For eps -> 0 the enlarged network has a fold close to
the one of R0; the sweep below measures how close, on a geometric eps grid,
and fits the exponent of the deviation |kappa(eps) - kappa(0)| ~ eps^p.

A closed form is available for the first move.  Adding X1 + X2 -> 2 X2 with
rate eps moves the fold to k = 1 + eps + eps^2/4, theta = -eps/2; the script
compares against it.
"""

from crnbif.dsl import parse_network, serialize_network
from crnbif.enlarge import compose
from crnbif.gallery import base_bifurcation, get_case, run_case
from crnbif.massaction import make_chart

# "extra modes" is the slowest transverse eigenvalue over the sweep; for E2
# it equals -eps, so it is smallest in size at the bottom of the grid

print(f"{'case':<8} {'move':<40} {'verdict':<8} {'slope':>6} {'extra modes'}")
for cid in ("r0-e1", "r0-e2", "r0-e3", "r0-e4", "r0-e5", "r0-e6"):
    case = get_case(cid)
    rep = run_case(case)
    eigs = [p.min_extra_real for p in rep.points if p.min_extra_real is not None]
    modes = f"max Re = {max(eigs):.2e}" if eigs else "none"
    print(f"{cid:<8} {case.steps:<40} {rep.verdict:<8} {rep.fit.kappa_slope:>6.3f} {modes}")

rep = run_case("r0-e1")
print("\nE1 against the closed form")
print(f"{'eps':>10} {'k located':>16} {'1+e+e^2/4':>16} {'theta':>12}")
for p in rep.points[::3]:
    e = p.eps
    print(f"{e:>10.3e} {p.bif['kappa']['k']:>16.12f} {1 + e + e * e / 4:>16.12f} {p.theta_base[0]:>12.3e}")

# the enlarged networks themselves are ordinary DSL text
net, bp, steps = base_bifurcation(get_case("r0-e6"))
enl = compose(net, make_chart(net, bp.x), steps)
text = serialize_network(enl.network)
print("\nR0 after splitting its second reaction (E6):")
print(text)
assert parse_network(text) == enl.network
