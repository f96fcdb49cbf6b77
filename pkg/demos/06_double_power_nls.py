"""
Double-power NLS scan
=====================

For the double-power NLS the d-curve has no closed form.  The scan below
looks for sign changes of d'' over a frequency range for a few coefficient
choices and classifies every root it finds.
"""
from gsscrit import ModelSpec, ProfileFamily, build_d_curve, classify_stability, find_critical_frequency
from gsscrit.dcurve import curve_grid
from gsscrit.spectral import check_spectral_assumptions

scan = [((1, 3, 1, 7), (0.05, 2.0)), ((1, 2, 1, 6), (0.05, 2.0)),
        ((-1, 3, 1, 5), (0.05, 2.0)), ((1, 3, -1, 5), (0.02, 0.18))]

for params, rng in scan:
    model = ModelSpec.dpnls(*params)
    family = ProfileFamily(model, curve_grid(model, [rng[0] - 2e-3, rng[1] + 2e-3]), tol=1e-11)
    table = build_d_curve(model, rng, 17, family=family)
    roots = find_critical_frequency(table, family)
    print(f"(a1,p1,a2,p2)={params}  d'' range [{table.d2.min():+.3f}, {table.d2.max():+.3f}]")
    if not roots:
        print("    no sign change of d'' on", rng)
    for r in roots:
        ok = check_spectral_assumptions(family.profile(r.omega), with_k0=False).ok
        v = classify_stability(family, r.omega)
        print(f"    root omega={r.omega:.5f}  d'''={r.d3:+.4f}  spectral ok={ok}  -> {v.verdict} ({v.rule})")
