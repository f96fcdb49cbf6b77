import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gsscrit.core import (ModelSpec, State, apply_symmetry, charge_gradient, energy_gradient,
                          evaluate_action, evaluate_charge, evaluate_energy, inner, random_state,
                          xnorm, zero_state)
from gsscrit.grid import RadialGrid
from gsscrit.profiles import bound_state, closed_form_profile_1d, default_grid, solve_profile

MODELS = [ModelSpec.nlkg(3), ModelSpec.nlkg(2, dim=2), ModelSpec.dpnls(1, 3, 1, 7),
          ModelSpec.dpnls(-1, 3, 1, 5)]
GRID1 = RadialGrid(1, 256, 20.0)
GRID2 = RadialGrid(2, 256, 20.0)


def _grid(model):
    return GRID1 if model.dim == 1 else GRID2


def _state(model, seed):
    return random_state(model, _grid(model), np.random.default_rng(seed))


# -- model validation ----------------------------------------------------------

@pytest.mark.parametrize("kw", [
    dict(kind="nlkg", p=1.0), dict(kind="nlkg", p=0.5), dict(kind="nlkg", p=5.0, dim=3),
    dict(kind="nlkg", p=3.0, dim=0), dict(kind="dpnls", p1=3.0, p2=3.0),
    dict(kind="dpnls", p1=1.0, p2=3.0), dict(kind="dpnls", dim=2), dict(kind="kdv"),
])
def test_model_invariants_rejected(kw):
    with pytest.raises(ValueError):
        ModelSpec(**kw)


def test_model_accepts_subcritical_3d():
    assert ModelSpec.nlkg(4.9, 3).dim == 3


def test_state_validation():
    m = ModelSpec.nlkg(3)
    with pytest.raises(ValueError):
        State(m, GRID1, (np.zeros(GRID1.n),))
    with pytest.raises(ValueError):
        State(m, GRID1, (np.zeros(GRID1.n), np.zeros(GRID1.n - 1)))
    bad = np.zeros(GRID1.n)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        State(m, GRID1, (bad, np.zeros(GRID1.n)))


# -- functionals ----------------------------------------------------------------

@pytest.mark.parametrize("model", MODELS)
def test_zero_state_functionals(model):
    z = zero_state(model, _grid(model))
    assert evaluate_energy(z) == 0.0
    assert evaluate_charge(z) == 0.0


def test_energy_of_static_soliton_second_order():
    """E(sqrt2 sech x, 0) = 1/2(4/3) + 1/2(4) - 1/4(16/3) = 4/3, error O(h^2)."""
    m = ModelSpec.nlkg(3)
    errs = []
    for n in (1000, 2000, 4000):
        g = RadialGrid(1, n, 40.0)
        s = bound_state(closed_form_profile_1d(m, 0.0, g))
        errs.append(abs(evaluate_energy(s) - 4.0 / 3.0))
    assert errs[-1] < 1e-5
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 2) < 0.1)


def test_charge_of_bound_state():
    m = ModelSpec.nlkg(3)
    prof = solve_profile(m, 0.5)
    assert evaluate_charge(bound_state(prof)) == pytest.approx(4 * 0.5 * np.sqrt(0.75), abs=1e-4)
    prof0 = solve_profile(m, 0.0)
    assert evaluate_charge(bound_state(prof0)) == 0.0


def test_action_definition_and_shift_identity(rng):
    for model in MODELS:
        u = random_state(model, _grid(model), rng)
        assert evaluate_action(u, 0.0) == evaluate_energy(u)
        w, lam = 0.4, 0.13
        assert evaluate_action(u, w) == evaluate_energy(u) - w * evaluate_charge(u)
        lhs, rhs = evaluate_action(u, w), evaluate_action(u, w + lam) + lam * evaluate_charge(u)
        assert abs(lhs - rhs) < 1e-12 * (1 + abs(lhs))


def test_dpnls_orientation():
    """B = -1 so that d'(w) = -Q = 1/2 ||phi||^2 with w > 0."""
    m = ModelSpec.dpnls(1, 3, 1, 7)
    prof = solve_profile(m, 0.5)
    s = bound_state(prof)
    assert evaluate_charge(s) == pytest.approx(-0.5 * prof.l2sq())
    b = apply_symmetry(s, "B")
    np.testing.assert_array_equal(b.u, -s.u)


def test_bound_state_is_critical_point_of_discrete_action():
    for model, w in [(ModelSpec.nlkg(3), 0.6), (ModelSpec.dpnls(1, 3, 1, 7), 0.4)]:
        prof = solve_profile(model, w)
        s = bound_state(prof)
        gE, gQ = energy_gradient(s), charge_gradient(s)
        r = gE - w * gQ
        assert np.sqrt(inner(r, r)) < 1e-9 * np.sqrt(inner(gE, gE))


def test_unknown_symmetry_rejected():
    with pytest.raises(ValueError):
        apply_symmetry(zero_state(ModelSpec.nlkg(3), GRID1), "K")


# -- properties (hypothesis) ------------------------------------------------------

model_idx = st.integers(0, len(MODELS) - 1)
seeds = st.integers(0, 2**31 - 1)
phases = st.floats(-10.0, 10.0, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(model_idx, seeds, phases)
def test_gauge_invariance(k, seed, s):
    model = MODELS[k]
    u = _state(model, seed)
    Tu = apply_symmetry(u, "T", s)
    for f in (evaluate_energy, evaluate_charge, lambda x: evaluate_action(x, 0.37)):
        a, b = f(u), f(Tu)
        assert abs(a - b) <= 1e-12 * (1 + abs(a))


@settings(max_examples=100, deadline=None)
@given(model_idx, seeds)
def test_charge_is_half_B_pairing(k, seed):
    model = MODELS[k]
    u = _state(model, seed)
    q = evaluate_charge(u)
    assert abs(q - 0.5 * inner(apply_symmetry(u, "B"), u)) <= 1e-12 * (1 + inner(u, u))


@settings(max_examples=100, deadline=None)
@given(model_idx, seeds, seeds)
def test_J_skew_symmetric(k, s1, s2):
    model = MODELS[k]
    u, w = _state(model, s1), _state(model, s2)
    a = inner(apply_symmetry(u, "J"), w)
    b = inner(u, apply_symmetry(w, "J"))
    assert abs(a + b) <= 1e-12 * (1 + xnorm(u) * xnorm(w))


@settings(max_examples=50, deadline=None)
@given(model_idx, seeds, phases)
def test_J_structure(k, seed, s):
    model = MODELS[k]
    u = _state(model, seed)
    back = apply_symmetry(apply_symmetry(u, "J_inv"), "J")
    for a, b in zip(back.fields, u.fields):
        np.testing.assert_allclose(a, b, atol=1e-14)
    lhs = apply_symmetry(apply_symmetry(u, "T", s), "J")
    rhs = apply_symmetry(apply_symmetry(u, "J"), "T", s)
    for a, b in zip(lhs.fields, rhs.fields):
        np.testing.assert_allclose(a, b, atol=1e-13)
    # B = J^{-1} T'(0)
    Bu = apply_symmetry(u, "B")
    Ju = apply_symmetry(apply_symmetry(u, "generator"), "J_inv")
    for a, b in zip(Bu.fields, Ju.fields):
        np.testing.assert_allclose(a, b, atol=1e-14)


def test_grid_weights_and_geometry():
    g = RadialGrid(3, 400, 10.0)
    assert g.geometry == "radial"
    assert np.all(g.weights > 0)
    assert g.integrate(np.ones(g.n)) == pytest.approx(4 / 3 * np.pi * (g.R - g.h / 2) ** 3, rel=1e-12)
    g1 = RadialGrid(1, 400, 10.0)
    assert g1.geometry == "even-line"
    assert g1.n * g1.h == pytest.approx(g1.R)
    with pytest.raises(ValueError):
        g1.weights[0] = 1.0
