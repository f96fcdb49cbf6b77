import numpy as np
import pytest

from gsscrit.core import ModelSpec, NoGroundStateError
from gsscrit.grid import RadialGrid
from gsscrit.profiles import (ProfileFamily, closed_form_profile_1d, default_grid,
                              profile_omega_derivative, profile_second_derivative,
                              shoot_amplitude, solve_profile, validate_profile)


def test_matches_closed_form_at_second_order():
    m = ModelSpec.nlkg(3)
    errs = []
    for n in (1024, 2048, 4096):
        g = RadialGrid(1, n, 40.0 / np.sqrt(0.75))
        errs.append(np.max(np.abs(solve_profile(m, 0.5, g).phi - closed_form_profile_1d(m, 0.5, g).phi)))
    assert errs[-1] < 2e-5
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 2) < 0.15)


def test_closed_form_residual_is_small():
    m = ModelSpec.nlkg(3)
    g = default_grid(m, 0.3)
    assert closed_form_profile_1d(m, 0.3, g).residual < 1e-12
    with pytest.raises(ValueError):
        closed_form_profile_1d(ModelSpec.nlkg(3, 2), 0.3, g)


@pytest.mark.parametrize("model,omega", [
    (ModelSpec.nlkg(3), 0.0), (ModelSpec.nlkg(3), 0.9), (ModelSpec.nlkg(3), 0.99),
    (ModelSpec.nlkg(2), 0.5), (ModelSpec.nlkg(3, 2), 0.4), (ModelSpec.nlkg(1.5, 3), 0.5),
    (ModelSpec.nlkg(2.5, 3), 0.2), (ModelSpec.dpnls(1, 3, 1, 7), 1.0),
    (ModelSpec.dpnls(-1, 3, 1, 5), 0.05), (ModelSpec.dpnls(1, 3, -1, 5), 0.1),
    (ModelSpec.dpnls(1, 2, 1, 6), 2.0),
])
def test_profile_invariants(model, omega):
    prof = solve_profile(model, omega)
    checks = validate_profile(prof, tol=1e-9)
    assert checks["pass"], checks


def test_radial_scaling_law():
    """phi_w(0) = (1-w^2)^{1/(p-1)} phi_0(0) for the single-power NLKG in any dimension."""
    for model in (ModelSpec.nlkg(3, 2), ModelSpec.nlkg(2, 3)):
        A0 = shoot_amplitude(model, 0.0)[1]
        for w in (0.3, 0.6):
            Aw = shoot_amplitude(model, w)[1]
            assert Aw == pytest.approx((1 - w * w) ** (1 / (model.p - 1)) * A0, rel=1e-8)


def test_no_ground_state_for_defocusing():
    with pytest.raises(NoGroundStateError):
        solve_profile(ModelSpec.dpnls(-1, 3, -1, 5), 0.5)


def test_omega_outside_range():
    with pytest.raises(ValueError):
        solve_profile(ModelSpec.nlkg(3), 1.0)
    with pytest.raises(ValueError):
        solve_profile(ModelSpec.dpnls(1, 3, 1, 7), -0.1)


def test_frequency_derivatives_agree():
    m = ModelSpec.nlkg(3)
    prof = solve_profile(m, 0.5, tol=1e-11)
    ls = profile_omega_derivative(prof, "linear-solve")
    fd = profile_omega_derivative(prof, "fd")
    assert np.max(np.abs(ls - fd)) < 1e-5 * np.max(np.abs(ls))
    cf = closed_form_profile_1d(m, 0.5, prof.grid).dphi_domega
    assert np.max(np.abs(ls - cf)) < 1e-4 * np.max(np.abs(cf))
    d2ls = profile_second_derivative(prof.with_derivative(), "linear-solve")
    d2fd = profile_second_derivative(prof, "fd")
    assert np.max(np.abs(d2ls - d2fd)) < 1e-3 * np.max(np.abs(d2ls))


def test_derivative_vanishes_at_zero_frequency():
    prof = solve_profile(ModelSpec.nlkg(3), 0.0)
    assert np.all(profile_omega_derivative(prof) == 0)


def test_family_reuses_profiles():
    m = ModelSpec.nlkg(3)
    fam = ProfileFamily(m, default_grid(m, 0.6, n=1024))
    a = fam.profile(0.5)
    assert fam.profile(0.5) is a
    fam.profile(0.51)
    assert fam.n_solves == 2
    Phi, dPhi, d2Phi = fam.states(0.5)
    assert Phi.u.shape == (1024,)


def test_solve_is_bitwise_deterministic():
    m = ModelSpec.dpnls(1, 3, 1, 7)
    a, b = solve_profile(m, 0.7), solve_profile(m, 0.7)
    assert a.phi.tobytes() == b.phi.tobytes() and a.residual == b.residual
