"""A quick self-check of the library's invariants (``gsscrit verify``).

Every check returns ``{"pass": bool, ...values}``; the suite is sized to run
in well under a minute on the default grids.
"""
from __future__ import annotations

import numpy as np

from .config import RunConfig
from .core import (ModelSpec, apply_symmetry, evaluate_action, evaluate_charge, evaluate_energy,
                   inner, random_state)
from .dcurve import build_d_curve, build_psi, curve_grid
from .dynamics import dynamics_grid, evolve
from .grid import RadialGrid
from .modulation import solve_modulation
from .profiles import (ProfileFamily, closed_form_profile_1d, default_grid, solve_profile,
                       validate_profile)
from .spectral import check_spectral_assumptions, verify_SB_identity

__all__ = ["run_invariant_suite"]


def _gauge_and_structure(rng, n_pairs: int = 20) -> dict:
    worst = {"gauge": 0.0, "charge_B": 0.0, "skew": 0.0, "J_Jinv": 0.0, "TJ": 0.0}
    for model in (ModelSpec.nlkg(3), ModelSpec.dpnls(1, 3, 1, 7)):
        g = RadialGrid(1, 256, 20.0)
        for _ in range(n_pairs):
            u, w = random_state(model, g, rng), random_state(model, g, rng)
            s = rng.uniform(0, 2 * np.pi)
            Tu = apply_symmetry(u, "T", s)
            scale = 1 + abs(evaluate_energy(u)) + abs(evaluate_charge(u))
            worst["gauge"] = max(worst["gauge"], abs(evaluate_energy(Tu) - evaluate_energy(u)) / scale,
                                 abs(evaluate_charge(Tu) - evaluate_charge(u)) / scale,
                                 abs(evaluate_action(Tu, 0.3) - evaluate_action(u, 0.3)) / scale)
            worst["charge_B"] = max(worst["charge_B"], abs(evaluate_charge(u) - 0.5 * inner(apply_symmetry(u, "B"), u))
                                    / (1 + inner(u, u)))
            worst["skew"] = max(worst["skew"], abs(inner(apply_symmetry(u, "J"), w) + inner(u, apply_symmetry(w, "J")))
                                / (1 + np.sqrt(inner(u, u) * inner(w, w))))
            back = apply_symmetry(apply_symmetry(u, "J_inv"), "J")
            worst["J_Jinv"] = max(worst["J_Jinv"], max(float(np.max(np.abs(a - b))) for a, b in zip(back.fields, u.fields)))
            d = apply_symmetry(Tu, "J") - apply_symmetry(apply_symmetry(u, "J"), "T", s)
            worst["TJ"] = max(worst["TJ"], max(float(np.max(np.abs(f))) for f in d.fields))
    return {k: {"pass": bool(v < 1e-12), "value": v} for k, v in worst.items()}


def run_invariant_suite(seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    out = _gauge_and_structure(rng)
    m = ModelSpec.nlkg(3)
    g = default_grid(m, 0.5, n=2048)
    prof = solve_profile(m, 0.5, g)
    cf = closed_form_profile_1d(m, 0.5, g)
    err = float(np.max(np.abs(prof.phi - cf.phi)))
    out["closed_form_profile"] = {"pass": bool(err < 1e-3), "value": err}
    out["profile_valid"] = {"pass": bool(validate_profile(prof)["pass"])}
    sb = verify_SB_identity(prof)
    out["SB_identity"] = {"pass": bool(sb < 1e-4), "value": sb}
    rep = check_spectral_assumptions(prof)
    out["spectral_assumptions"] = {"pass": rep.ok, "value": rep.to_dict()}
    grid = curve_grid(m, [0.3, 0.8], n=2048)
    tab = build_d_curve(m, (0.3, 0.8), n_samples=5, grid=grid)
    cons = float(np.max(tab.d1_consistency() - 5 * tab.bands["d1"] - 1e-9))
    out["d1_identity"] = {"pass": bool(cons < 0), "value": float(np.max(tab.d1_consistency()))}
    ws = np.sqrt(0.5)
    fam = ProfileFamily(m, dynamics_grid(m, ws), tol=1e-11)
    psi = build_psi(fam, ws, 0.03)
    q_err = abs(evaluate_charge(psi) - fam.charge(ws)) / abs(fam.charge(ws))
    out["psi_charge"] = {"pass": bool(q_err < 1e-10), "value": q_err}
    c = solve_modulation(apply_symmetry(psi, "T", 0.4), fam, ws)
    mod_err = max(abs(c.theta + 0.4), abs(c.Lambda - 0.03), abs(c.alpha), c.norm_w)
    out["modulation_of_psi"] = {"pass": bool(mod_err < 1e-8), "value": mod_err}
    log = evolve(fam.state(ws), 5.0, 0.01, out_dt=1.0)
    qd = float(np.max(np.abs(log.Q_drift)))
    out["charge_conservation"] = {"pass": bool(qd < 1e-10), "value": qd}
    cfg = RunConfig(model="dpnls", a1=-1.0, p1=3.0, a2=1.0, p2=5.0, omega=0.2, lambdas=(0.01, -0.02))
    out["config_roundtrip"] = {"pass": RunConfig.from_text(cfg.to_text()) == cfg}
    return out
