"""
The d-curve and its degenerate point
====================================

Samples d(w) = E(phi_w) - w Q(phi_w) for the cubic NLKG, locates the frequency
where d'' changes sign, and runs the stability classifier on both sides of it
and at the root itself.
"""
import numpy as np

from gsscrit import ModelSpec, ProfileFamily, build_d_curve, classify_stability, find_critical_frequency
from gsscrit.dcurve import analytic_d2_nlkg, critical_frequency_formula, curve_grid

model = ModelSpec.nlkg(3)

# one grid for the whole sweep keeps the frequency differences smooth
family = ProfileFamily(model, curve_grid(model, [0.09, 0.91]), tol=1e-11)
table = build_d_curve(model, (0.1, 0.9), 9, family=family)

print("omega   Q          d''(num)    d''(exact)")
for w, Q, d2 in zip(table.omegas, table.Q, table.d2):
    print(f"{w:.2f}    {Q:.6f}   {d2:+.6f}   {analytic_d2_nlkg(3, 1, w, 4.0):+.6f}")

# Brent refinement of the sign change, with d''' at the root
roots = find_critical_frequency(table, family)
for r in roots:
    print(f"\nd'' = 0 at omega = {r.omega:.6f} (formula {critical_frequency_formula(3, 1):.6f}), "
          f"d''' = {r.d3:.4f} +- {r.d3_band:.1e}")

# slope rule away from the root, third-derivative rule at it
for w in (0.5, roots[0].omega, 0.9):
    v = classify_stability(family, w)
    print(f"omega={w:.4f}: {v.verdict:9s} by rule '{v.rule}' (order {v.order})")
