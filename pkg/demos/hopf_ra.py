"""A supercritical Hopf point in R_A0 and its fate under two enlargements.

R_A0 is a three species network with an inflow and a degradation step.
Scanning the rate d from large to small values finds a Hopf point with
l1 < 0.  Following the Hopf curve in the (d, c) plane, l1 changes sign:
there the Hopf point is degenerate (a Bautin point) and the cycle switches
from stable to unstable.

The network is enlarged by splitting X + Y -> 2 Y through an intermediate
W (E6) and then by adding a species V that is conserved together with the
others (E3).  The supercritical Hopf point survives both moves.
"""

from crnbif.gallery import RA0_RATES, ra0_hopf, ra0_l1_sign_change, run_case

print(f"rates {RA0_RATES}, scanning d")
bp = ra0_hopf()
print(f"Hopf at d = {bp.kappa['d']:.8f}, x = {bp.x.round(6)}, omega = {bp.omega:.4f}, l1 = {bp.l1:.5f}")

path, best = ra0_l1_sign_change(bp)
print("\nHopf curve in (d, c), every sixth point")
print(f"{'d':>9} {'c':>9} {'l1':>10}")
for d, c, l1 in path[::6]:
    print(f"{d:>9.5f} {c:>9.5f} {l1:>10.5f}")
if best is None:
    print("l1 keeps its sign along the curve")
else:
    print(f"l1 = 0 at d = {best[0]:.8f}, c = {best[1]:.8f} (residual l1 {best[2]:.1e})")

# only the sign of l1 is independent of coordinates, and the enlarged chart differs
rep = run_case("ra0-e6e3")
print(f"\nR_A0 -> R_A1 -> R_A2: {rep.verdict}, deviation slope {rep.fit.kappa_slope:.3f}")
for p in rep.points[::4]:
    print(f"  eps {p.eps:.2e}: d = {p.bif['kappa']['d']:.8f}, l1 = {p.bif['l1']:.5f}")
