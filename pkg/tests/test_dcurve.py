import math

import numpy as np
import pytest

from gsscrit.core import ModelSpec, evaluate_charge
from gsscrit.dcurve import (DerivativeProbe, analytic_d2_nlkg, build_d_curve, build_psi,
                            check_convexity_conditions, classify_from_derivatives, classify_stability,
                            critical_frequency_formula, curve_grid, derivative_probe,
                            eta_functions, fd_weights, find_critical_frequency, solve_sigma,
                            verify_comparability)
from gsscrit.profiles import ProfileFamily

from conftest import OMEGA_STAR


@pytest.fixture(scope="module")
def small_family():
    m = ModelSpec.nlkg(3)
    return ProfileFamily(m, curve_grid(m, [0.25, 0.85], n=2048), tol=1e-11)


def test_fd_weights_exact_on_polynomials():
    offs = [-2, -1, 0, 1, 2]
    x = np.array(offs, float)
    for order in (1, 2, 3, 4):
        w = fd_weights(offs, order)
        for deg in range(5):
            expect = math.factorial(deg) / math.factorial(deg - order) * 0.0 ** (deg - order) if deg >= order else 0.0
            assert w @ x**deg == pytest.approx(expect, abs=1e-12)


@pytest.mark.parametrize("p,dim,expect", [(3, 1, math.sqrt(0.5)), (2, 1, 0.5),
                                          (2, 2, 1 / math.sqrt(3)), (2, 3, math.sqrt(0.5))])
def test_critical_frequency_formula(p, dim, expect):
    assert critical_frequency_formula(p, dim) == pytest.approx(expect, rel=1e-15)


def test_critical_frequency_formula_higher_dim():
    # omega^2 would be >= 1: d'' keeps one sign on (0, 1)
    assert critical_frequency_formula(5, 1) is None
    assert critical_frequency_formula(3, 2) is None
    assert critical_frequency_formula(3, 3) is None


def test_analytic_d2_sign_and_value():
    # L2 norm of sqrt2 sech: ||phi_0||^2 = 4
    assert analytic_d2_nlkg(3, 1, 0.0, 4.0) == pytest.approx(-4.0)
    assert analytic_d2_nlkg(3, 1, math.sqrt(0.5), 4.0) == pytest.approx(0.0, abs=1e-13)
    assert analytic_d2_nlkg(3, 1, 0.9, 4.0) > 0
    # closed form 1D: Q = 4 w sqrt(1-w^2) -> d'' = -dQ/dw
    w = 0.4
    exact = -4 * (math.sqrt(1 - w * w) - w * w / math.sqrt(1 - w * w))
    assert analytic_d2_nlkg(3, 1, w, 4.0) == pytest.approx(exact, rel=1e-12)


def test_probe_d1_identity(small_family):
    pr = derivative_probe(small_family, 0.5, 1e-3)
    assert abs(pr.d1_fd + pr.Q) < 5 * pr.bands["d1"] + 1e-9
    assert pr.d2 == pytest.approx(analytic_d2_nlkg(3, 1, 0.5, 4.0), rel=5e-3)


def test_curve_locates_root(small_family):
    tab = build_d_curve(small_family.model, (0.3, 0.8), n_samples=6, family=small_family)
    assert not tab.gaps
    roots = find_critical_frequency(tab, small_family)
    assert len(roots) == 1
    assert roots[0].omega == pytest.approx(OMEGA_STAR, abs=2e-3)
    assert roots[0].d3 > roots[0].d3_band
    assert len(list(tab.rows())[0]) == len(tab.COLUMNS)


def test_curve_without_root_for_p5():
    m = ModelSpec.nlkg(5)
    tab = build_d_curve(m, (0.2, 0.8), n_samples=5, grid=curve_grid(m, [0.19, 0.81], n=2048))
    assert np.all(tab.d2 < 0)
    assert find_critical_frequency(tab) == []


def test_eta_taylor_behaviour(small_family):
    """At the degenerate point eta1 ~ d3 lam^3/6 and eta2 ~ d3 lam^2/2."""
    w = OMEGA_STAR
    d3 = derivative_probe(small_family, w, 2e-3).d3
    for lam in (0.01, -0.01):
        e1, e2 = eta_functions(small_family, w, lam)
        assert e1 == pytest.approx(d3 * lam**3 / 6, rel=0.05)
        assert e2 == pytest.approx(d3 * lam**2 / 2, rel=0.05)
    assert eta_functions(small_family, w, 0.0) == (0.0, 0.0)


def test_psi_preserves_charge(small_family):
    w = 0.5
    for lam in (0.05, -0.05, 0.1):
        psi = build_psi(small_family, w, lam)
        assert evaluate_charge(psi) == pytest.approx(small_family.charge(w), rel=1e-12)
        assert abs(solve_sigma(small_family, w, lam)) < abs(lam)
    assert build_psi(small_family, w, 0.0) is not None


def test_comparability_on_power_law_and_synthetic():
    d = lambda w: w**4
    dp = lambda w: 4 * w**3
    res = verify_comparability(d, dp, 0.0, np.linspace(0.01, 0.1, 10))
    assert res["pass"] and res["min"] == pytest.approx(0.25)
    syn = lambda w: math.exp(-1 / abs(w)) if w else 0.0
    synp = lambda w: math.exp(-1 / abs(w)) / w**2 * math.copysign(1, w) if w else 0.0
    res = verify_comparability(syn, synp, 0.0, np.linspace(0.01, 0.1, 10))
    assert not res["pass"]


def _probe(d2, d3=0.0, d4=float("nan"), eta1=None):
    bands = {"d2": 1e-6, "d3": 1e-6, "d4": 1e-6}
    return DerivativeProbe(0.5, 0.0, 0.0, 0.0, d2, d3, d4, bands, eta1 or {})


def test_classifier_ladder():
    assert classify_from_derivatives(_probe(0.5)).to_dict()["rule"] == "slope"
    assert classify_from_derivatives(_probe(0.5)).verdict == "stable"
    assert classify_from_derivatives(_probe(-0.5)).verdict == "unstable"
    v = classify_from_derivatives(_probe(0.0, 0.3))
    assert (v.verdict, v.rule, v.order) == ("unstable", "higher-derivative", 3)
    v = classify_from_derivatives(_probe(0.0, 0.0, 2.0))
    assert (v.verdict, v.rule, v.order) == ("stable", "higher-derivative", 4)
    v = classify_from_derivatives(_probe(0.0, 0.0, -2.0))
    assert v.verdict == "unstable"
    v = classify_from_derivatives(_probe(0.0, 0.0, 0.0, {0.01: -1e-9, 0.02: -1e-8, -0.01: 1e-9}))
    assert (v.verdict, v.rule) == ("unstable", "action-deficit")
    v = classify_from_derivatives(_probe(0.0, 0.0, 0.0, {0.01: 1e-9, -0.01: 1e-9}))
    assert (v.verdict, v.rule) == ("undetermined", "none")


def test_convexity_chain(small_family):
    for side in (1, -1):
        res = check_convexity_conditions(small_family, 0.5, [0.02, 0.05], side=side)
        assert res["chain_ok"]
        assert res["A"] and res["B"] and res["C"]


@pytest.mark.parametrize("omega", [0.5, OMEGA_STAR, 0.8])
def test_classifier_verdict_survives_step_halving(small_family, omega):
    coarse = classify_stability(small_family, omega, h=4e-3)
    fine = classify_stability(small_family, omega, h=2e-3)
    assert coarse.verdict != "undetermined"
    assert fine.verdict == coarse.verdict
