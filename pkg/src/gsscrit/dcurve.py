"""The action curve d(w) = S_w(phi_w), its derivatives, and the stability verdicts.

Derivative bookkeeping: ``d'(w) = -Q(phi_w)`` holds exactly for discrete
bound states, so ``d''`` and ``d'''`` are finite differences of ``-Q`` while
``d'`` is also differenced from ``d`` itself as a consistency check.  Every
estimate carries an uncertainty band, the gap between a fine stencil and its
coarse sub-stencil; sign decisions treat anything inside the band as zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .core import GssError, ModelSpec, State, apply_symmetry, evaluate_charge, inner
from .grid import RadialGrid
from .profiles import ProfileFamily, core_stiffness, default_grid, shoot_amplitude

__all__ = [
    "fd_weights", "DCurveTable", "DerivativeProbe", "StabilityVerdict", "CriticalPoint",
    "curve_grid", "derivative_probe", "build_d_curve", "analytic_d2_nlkg", "critical_frequency_formula",
    "find_critical_frequency", "eta_functions", "verify_comparability", "family_d_functions",
    "solve_sigma", "build_psi", "classify_from_derivatives", "classify_stability",
    "check_convexity_conditions",
]


def fd_weights(offsets: Sequence[float], order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative on unit-spaced ``offsets``."""
    x = np.asarray(offsets, float)
    k = len(x)
    V = np.vander(x, k, increasing=True).T
    rhs = np.zeros(k)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


def _stencil_pair(vals: np.ndarray, offs: np.ndarray, order: int, h: float):
    """Derivative from all points and from every other point; returns (fine, band)."""
    fine = fd_weights(offs, order) @ vals / h**order
    sub = offs % 2 == 0
    coarse = fd_weights(offs[sub] / 2, order) @ vals[sub] / (2 * h) ** order
    return float(fine), float(abs(fine - coarse))


def curve_grid(model: ModelSpec, omegas: Sequence[float], n: int = 4096, span: float = 40.0,
               kh_max: float = 0.05, qh_max: float = 0.1) -> RadialGrid:
    """One grid wide enough for the slowest decay and fine enough for the narrowest profile.

    For DPNLS the core scale sqrt|c - N'(A)| is also checked at the ends of
    the range (one shooting solve each).
    """
    kap = [model.decay_rate(w) for w in omegas]
    R = span / min(kap)
    n = max(n, int(math.ceil(R * max(kap) / kh_max)))
    if model.kind == "dpnls":
        for w in (min(omegas), max(omegas)):
            A = shoot_amplitude(model, w)[1]
            n = max(n, int(math.ceil(R * core_stiffness(model, w, A) / qh_max)))
    return RadialGrid(model.dim, n, R)


@dataclass
class DerivativeProbe:
    omega: float
    d: float
    Q: float
    d1_fd: float
    d2: float
    d3: float
    d4: float = float("nan")
    bands: dict = field(default_factory=dict)
    eta1: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"omega": self.omega, "d": self.d, "Q": self.Q, "d1_fd": self.d1_fd, "d2": self.d2,
                "d3": self.d3, "d4": self.d4, "bands": dict(self.bands),
                "eta1": {str(k): v for k, v in self.eta1.items()}}


def derivative_probe(family: ProfileFamily, omega: float, h: float = 1e-3,
                     points: int = 2) -> DerivativeProbe:
    """Stencil of ``2*points+1`` fresh solves around ``omega``.

    ``points=2`` gives the five-point estimates used by the curve builder
    (d4 unavailable); ``points=4`` adds d4 for the classifier.
    """
    offs = np.arange(-points, points + 1)
    ws = omega + h * offs
    d = np.array([family.action(w) for w in ws])
    Q = np.array([family.charge(w) for w in ws])
    d1, b1 = _stencil_pair(d, offs, 1, h)
    d2, b2 = _stencil_pair(-Q, offs, 1, h)
    d3, b3 = _stencil_pair(-Q, offs, 2, h)
    bands = {"d1": b1, "d2": b2, "d3": b3}
    d4 = float("nan")
    if points >= 4:
        d4, bands["d4"] = _stencil_pair(-Q, offs, 3, h)
    return DerivativeProbe(float(omega), float(d[points]), float(Q[points]), d1, d2, d3, d4, bands)


@dataclass
class DCurveTable:
    model: ModelSpec
    grid: RadialGrid
    omegas: np.ndarray
    Q: np.ndarray
    d: np.ndarray
    d1_fd: np.ndarray
    d1_Q: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    bands: dict
    h_omega: float
    gaps: list = field(default_factory=list)

    COLUMNS = ("omega", "Q", "d", "d1_fd", "d1_Q", "d2", "d3")

    def rows(self):
        for i in range(len(self.omegas)):
            yield tuple(float(getattr(self, c if c != "omega" else "omegas")[i]) for c in self.COLUMNS)

    def d1_consistency(self) -> np.ndarray:
        """|d1_fd + Q| per sample."""
        return np.abs(self.d1_fd + self.Q)


def build_d_curve(model: ModelSpec, omega_range, n_samples: int = 17,
                  grid: Optional[RadialGrid] = None, h_omega: float = 1e-3,
                  tol: float = 1e-11, family: Optional[ProfileFamily] = None) -> DCurveTable:
    """Sample d, Q and the derivative estimates over ``omega_range``.

    Failed samples are recorded in ``gaps`` and filled with NaN.
    """
    lo, hi = omega_range
    omegas = np.linspace(lo, hi, n_samples)
    if family is None:
        grid = grid or curve_grid(model, [lo - 2 * h_omega, hi + 2 * h_omega])
        family = ProfileFamily(model, grid, tol)
    cols = {k: np.full(n_samples, np.nan) for k in ("Q", "d", "d1_fd", "d2", "d3")}
    bands = {k: np.full(n_samples, np.nan) for k in ("d1", "d2", "d3")}
    gaps = []
    for i, w in enumerate(omegas):
        try:
            pr = derivative_probe(family, w, h_omega)
        except (GssError, ValueError) as exc:
            gaps.append((float(w), str(exc)))
            continue
        cols["Q"][i], cols["d"][i] = pr.Q, pr.d
        cols["d1_fd"][i], cols["d2"][i], cols["d3"][i] = pr.d1_fd, pr.d2, pr.d3
        for k in bands:
            bands[k][i] = pr.bands[k]
    return DCurveTable(model, family.grid, omegas, cols["Q"], cols["d"], cols["d1_fd"], -cols["Q"],
                       cols["d2"], cols["d3"], bands, h_omega, gaps)


def analytic_d2_nlkg(p: float, dim: int, omega: float, phi0_L2sq: float) -> float:
    """Closed-form d''(w) for the single-power NLKG from the scaling law."""
    c = 1.0 - omega**2
    return -(1.0 - (1.0 + 4.0 / (p - 1) - dim) * omega**2) * c ** (2.0 / (p - 1) - dim / 2.0 - 1.0) * phi0_L2sq


def critical_frequency_formula(p: float, dim: int) -> Optional[float]:
    """Positive root of the closed-form d'', or None when d'' keeps one sign."""
    den = 4.0 - (dim - 1) * (p - 1)
    if den <= 0:
        return None
    w2 = (p - 1) / den
    return math.sqrt(w2) if 0 < w2 < 1 else None


@dataclass
class CriticalPoint:
    omega: float
    d3: float
    d3_band: float
    n_solves: int


def find_critical_frequency(table: DCurveTable, family: Optional[ProfileFamily] = None,
                            xtol: float = 1e-6, max_solves: int = 60) -> list[CriticalPoint]:
    """Brent-refine every sign change of d'' in the table."""
    family = family or ProfileFamily(table.model, table.grid)
    h = table.h_omega
    out = []
    d2 = table.d2
    for i in range(len(d2) - 1):
        a, b = d2[i], d2[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)) or a * b > 0:
            continue
        start = family.n_solves

        def f(w):
            if family.n_solves - start > max_solves:
                raise GssError("root refinement exceeded its profile-solve budget")
            Q = np.array([family.charge(w + k * h) for k in (-2, -1, 1, 2)])
            return float(-fd_weights([-2, -1, 1, 2], 1) @ Q / h)

        if a == 0:
            root = float(table.omegas[i])
        else:
            root = brentq(f, table.omegas[i], table.omegas[i + 1], xtol=xtol, maxiter=14)
        used = family.n_solves - start
        pr = derivative_probe(family, root, h)
        out.append(CriticalPoint(float(root), pr.d3, pr.bands["d3"], used))
    return out


def eta_functions(family: ProfileFamily, omega0: float, lam: float) -> tuple[float, float]:
    """(eta1, eta2) at lam from fresh solves, with d' = -Q."""
    if lam == 0:
        return 0.0, 0.0
    d0, d1 = family.action(omega0), family.action(omega0 + lam)
    Q0, Q1 = family.charge(omega0), family.charge(omega0 + lam)
    eta1 = d1 - d0 + lam * Q0
    eta2 = -Q1 + Q0
    return float(eta1), float(eta2)


def family_d_functions(family: ProfileFamily):
    """(d, d') callables for a profile family."""
    return family.action, (lambda w: -family.charge(w))


def verify_comparability(d_func: Callable, dprime_func: Callable, omega0: float,
                         lambdas: Sequence[float], c: float = 0.2,
                         noise_floor: float = 1e-14) -> dict:
    """Ratio eta1 / (lam * eta2) over a lambda grid; pass iff every ratio lies in [c, 1/c]."""
    d0, dp0 = d_func(omega0), dprime_func(omega0)
    ratios, skipped = {}, []
    for lam in lambdas:
        eta1 = d_func(omega0 + lam) - d0 - lam * dp0
        eta2 = dprime_func(omega0 + lam) - dp0
        den = lam * eta2
        if abs(eta1) < noise_floor and abs(den) < noise_floor:
            skipped.append(float(lam))
            continue
        ratios[float(lam)] = eta1 / den if den != 0 else math.copysign(math.inf, eta1)
    vals = np.array(list(ratios.values()))
    ok = bool(vals.size > 0 and np.all((vals >= c) & (vals <= 1 / c)))
    return {"pass": ok, "min": float(vals.min()) if vals.size else float("nan"),
            "max": float(vals.max()) if vals.size else float("nan"), "ratios": ratios,
            "skipped": skipped, "bounds": [c, 1 / c]}


# -- the charge-preserving curve --------------------------------------------

def solve_sigma(family: ProfileFamily, omega0: float, lam: float, tol: float = 1e-15,
                max_iter: int = 50) -> float:
    """sigma(lam) with Q(Phi_{w+lam} + sigma B Phi_{w+lam}) = Q(Phi_w).

    The charge is quadratic in sigma; Newton from sigma = 0 picks the root
    that vanishes with lam.
    """
    if lam == 0:
        return 0.0
    Q0 = family.charge(omega0)
    Phi = family.state(omega0 + lam)
    BPhi = apply_symmetry(Phi, "B")
    a, b, c0 = evaluate_charge(BPhi), inner(BPhi, BPhi), evaluate_charge(Phi) - Q0
    s = 0.0
    for _ in range(max_iter):
        F = c0 + b * s + a * s * s
        ds = -F / (b + 2 * a * s)
        s += ds
        if abs(ds) <= tol * max(abs(s), 1e-300):
            break
    else:
        raise GssError("sigma Newton did not converge")
    return float(s)


def build_psi(family: ProfileFamily, omega0: float, lam: float) -> State:
    """Psi(lam) = Phi_{w+lam} + sigma(lam) B Phi_{w+lam}."""
    Phi = family.state(omega0 + lam)
    if lam == 0:
        return Phi
    s = solve_sigma(family, omega0, lam)
    return Phi + s * apply_symmetry(Phi, "B")


# -- verdicts ------------------------------------------------------------------

@dataclass
class StabilityVerdict:
    verdict: str
    rule: str
    order: Optional[int]
    witnesses: dict

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "rule": self.rule, "order": self.order,
                "witnesses": self.witnesses}


def classify_from_derivatives(probe: DerivativeProbe, atol: float = 1e-3) -> StabilityVerdict:
    """Decision ladder on d'', then the first nonvanishing higher derivative, then eta1 signs.

    Rules: ``slope`` (d'' != 0), ``higher-derivative`` with the order n of the
    first nonvanishing derivative (n odd: unstable; n even: sign of d^(n)),
    ``action-deficit`` (eta1 < 0 on one whole side), else ``undetermined``.
    """
    b = probe.bands
    w = {"omega": probe.omega, "d2": probe.d2, "d3": probe.d3, "d4": probe.d4,
         "bands": {k: b.get(k, 0.0) + atol for k in ("d2", "d3", "d4")}}
    band = w["bands"]
    if probe.d2 > band["d2"]:
        return StabilityVerdict("stable", "slope", 2, w)
    if probe.d2 < -band["d2"]:
        return StabilityVerdict("unstable", "slope", 2, w)
    if abs(probe.d3) > band["d3"]:
        return StabilityVerdict("unstable", "higher-derivative", 3, w)
    if np.isfinite(probe.d4):
        if probe.d4 > band["d4"]:
            return StabilityVerdict("stable", "higher-derivative", 4, w)
        if probe.d4 < -band["d4"]:
            return StabilityVerdict("unstable", "higher-derivative", 4, w)
    if probe.eta1:
        w["eta1"] = {str(k): v for k, v in probe.eta1.items()}
        for side in (1, -1):
            vals = [v for lam, v in probe.eta1.items() if lam * side > 0]
            if vals and all(v < 0 for v in vals):
                w["eta1_side"] = side
                return StabilityVerdict("unstable", "action-deficit", None, w)
    return StabilityVerdict("undetermined", "none", None, w)


def classify_stability(family: ProfileFamily, omega0: float, h: float = 2e-3,
                       atol: float = 1e-3, grid_check: bool = True,
                       eta_lambdas: Sequence[float] = (1e-2, 2e-2, 5e-2)) -> StabilityVerdict:
    """Probe d around omega0 and run the decision ladder.

    With ``grid_check`` the probe is repeated on a grid with half the points
    and the O(h^2) Richardson estimate of the spatial error is added to each band.
    """
    pr = derivative_probe(family, omega0, h, points=4)
    if grid_check:
        g = family.grid
        coarse = ProfileFamily(family.model, RadialGrid(g.dim, g.n // 2, g.R), family.tol)
        pc = derivative_probe(coarse, omega0, h, points=4)
        for k, attr in (("d2", "d2"), ("d3", "d3"), ("d4", "d4")):
            pr.bands[k] += abs(getattr(pr, attr) - getattr(pc, attr)) / 3
    for lam in eta_lambdas:
        for s in (1, -1):
            try:
                pr.eta1[s * lam] = eta_functions(family, omega0, s * lam)[0]
            except (GssError, ValueError):
                pass
    return classify_from_derivatives(pr, atol)


def check_convexity_conditions(family: ProfileFamily, omega0: float,
                               lambdas: Sequence[float], side: int = 1,
                               h: float = 1e-3) -> dict:
    """Conditions (A) d''<0, (B) eta1<0 on the whole side, (C) d''<0 somewhere, at sample resolution."""
    lams = np.sort(np.abs(np.asarray(lambdas, float))) * side
    d2 = np.array([derivative_probe(family, omega0 + lam, h).d2 for lam in lams])
    eta1 = np.array([eta_functions(family, omega0, lam)[0] for lam in lams])
    A = bool(np.all(d2 < 0))
    B = bool(np.all(eta1 < 0))
    C = bool(np.any(d2 < 0))
    chain_ok = (not A or B) and (not B or C)
    return {"side": side, "lambdas": lams.tolist(), "d2": d2.tolist(), "eta1": eta1.tolist(),
            "A": A, "B": B, "C": C, "chain_ok": chain_ok}
