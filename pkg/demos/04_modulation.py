"""
Modulation coordinates near the degenerate point
================================================

Builds the charge-preserving curve Psi(lam) through the bound state at the
degenerate frequency, decomposes a perturbed and phase-rotated state into
(theta, Lambda, alpha, w), and evaluates the A and P functionals.
"""
import numpy as np

from gsscrit import ModelSpec, ProfileFamily, solve_modulation
from gsscrit.core import apply_symmetry, evaluate_action, evaluate_charge
from gsscrit.dcurve import build_psi, eta_functions
from gsscrit.dynamics import dynamics_grid, even_bump
from gsscrit.modulation import functional_AP, orbital_distance

model = ModelSpec.nlkg(3)
w0 = np.sqrt(0.5)
family = ProfileFamily(model, dynamics_grid(model, w0), tol=1e-11)

# Psi(lam) keeps the charge of phi_w0 while moving along the family
print("lam     Q(Psi)-Q(phi)   (S(Psi)-d)/eta1   P(Psi)/eta2")
for lam in (0.02, 0.05, 0.1):
    psi = build_psi(family, w0, lam)
    eta1, eta2 = eta_functions(family, w0, lam)
    _, P = functional_AP(psi, family, w0)
    print(f"{lam:<7} {evaluate_charge(psi) - family.charge(w0):+.1e}        "
          f"{(evaluate_action(psi, w0) - family.action(w0)) / eta1:.4f}            {P / eta2:.4f}")

# decompose a rotated, perturbed state
u = apply_symmetry(build_psi(family, w0, -0.03) + 1e-3 * even_bump(model, family.grid), "T", 0.8)
c = solve_modulation(u, family, w0)
print(f"\ntheta={c.theta:.6f} Lambda={c.Lambda:.6f} alpha={c.alpha:.2e} |w|={c.norm_w:.2e}")
print(f"orbital distance to phi_w0: {orbital_distance(u, family.state(w0)):.4e}")
