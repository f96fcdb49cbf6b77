"""Ground-state profiles phi_w and their frequency derivatives.

Profiles are found in two stages: shooting on the central amplitude phi(0)
for the radial ODE (bisection between undershoot and overshoot), then Newton
on the discrete equation ``W^{-1} K phi + c(w) phi - N(phi) = 0`` so that the
result is an exact critical point of the discrete action.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded

from .core import (ModelSpec, NoGroundStateError, NonConvergenceError, SingularSystemError,
                   State, apply_symmetry)
from .grid import RadialGrid

__all__ = [
    "Profile", "ProfileFamily", "default_grid", "shoot_amplitude", "solve_profile",
    "closed_form_profile_1d", "profile_omega_derivative", "profile_second_derivative",
    "validate_profile", "bound_state", "bound_state_derivative", "bound_state_second_derivative",
]

A_MAX = 1e3
A_MIN = 1e-8


@dataclass(frozen=True, eq=False)
class Profile:
    model: ModelSpec
    omega: float
    grid: RadialGrid
    phi: np.ndarray
    residual: float
    dphi_domega: Optional[np.ndarray] = None
    shoot_amplitude: float = float("nan")
    newton_iterations: int = 0

    @property
    def amplitude(self) -> float:
        return float(self.phi[0])

    def l2sq(self) -> float:
        return self.grid.integrate(self.phi**2)

    def with_derivative(self, method: str = "linear-solve") -> "Profile":
        if self.dphi_domega is not None:
            return self
        return replace(self, dphi_domega=profile_omega_derivative(self, method))


def default_grid(model: ModelSpec, omega: float, n: int = 4096, span: float = 40.0,
                 amplitude: Optional[float] = None, qh_max: float = 0.1) -> RadialGrid:
    """R = span / decay rate and at least n points.

    With ``amplitude`` the spacing is also capped by the core scale,
    ``h * sqrt|c - N'(A)| <= qh_max``, for profiles much narrower than
    their decay length.
    """
    if not model.omega_ok(omega):
        raise ValueError(f"omega={omega} outside the existence range of {model.kind}")
    R = span / model.decay_rate(omega)
    if amplitude is not None:
        n = max(n, int(np.ceil(R * core_stiffness(model, omega, amplitude) / qh_max)))
    return RadialGrid(model.dim, n, R)


def core_stiffness(model: ModelSpec, omega: float, amplitude: float) -> float:
    """sqrt|c(w) - N'(A)|, the inverse length scale of the profile core."""
    c = model.linear_coeff(omega)
    return float(np.sqrt(abs(c - model.nonlinearity_real_derivative(np.array([amplitude]))[0])))


def stationary_residual(model: ModelSpec, omega: float, grid: RadialGrid, phi) -> np.ndarray:
    return grid.neg_laplacian(phi) + model.linear_coeff(omega) * phi - model.nonlinearity(phi)


def _lplus_banded(model, omega, grid, phi) -> np.ndarray:
    ab = grid.laplacian_banded()
    ab[1] += model.linear_coeff(omega) - model.nonlinearity_real_derivative(phi)
    return ab


# -- shooting ------------------------------------------------------------

def _shoot(model: ModelSpec, omega: float, A: float, r_end: float, dense: bool = False):
    c = model.linear_coeff(omega)
    d = model.dim
    f0 = c * A - model.nonlinearity(np.array([A]))[0].real
    if f0 >= 0:
        # phi''(0) >= 0: the trajectory rises (or stays) and can never decay
        return "under", None
    r0 = 1e-4 / np.sqrt(c)
    y0 = [A + f0 * r0**2 / (2 * d), f0 * r0 / d]

    def rhs(r, y):
        phi, dphi = y
        n = model.nonlinearity(np.array([phi]))[0].real
        return [dphi, c * phi - n - (d - 1) / r * dphi]

    def cross(r, y):
        return y[0]
    cross.terminal, cross.direction = True, -1

    def turn(r, y):
        return y[1]
    turn.terminal, turn.direction = True, 1

    sol = solve_ivp(rhs, (r0, r_end), y0, method="DOP853", rtol=1e-12, atol=1e-15 * A,
                    events=(cross, turn), dense_output=dense)
    if sol.t_events[0].size:
        return "over", sol
    if sol.t_events[1].size:
        return "under", sol
    return ("over" if sol.y[0, -1] < 0 else "under"), sol


def shoot_amplitude(model: ModelSpec, omega: float, rel_tol: float = 1e-12,
                    a_max: float = A_MAX):
    """Bisect phi(0) between undershoot and overshoot.

    A decaying solution needs ``phi''(0) < 0``, i.e. ``c(w) < N(A)/A``.  The
    admissible amplitudes are located on a log grid (no ODE solves); shots
    then ascend from the smallest admissible amplitude by a factor 1.1 until
    the first overshoot, which also handles saturating nonlinearities where
    large amplitudes undershoot again.  Returns ``(A_lo, A_hi)``.
    Raises NoGroundStateError when no bracket exists in (A_MIN, a_max).
    """
    kappa = model.decay_rate(omega)
    r_end = 400.0 / kappa
    c = model.linear_coeff(omega)
    As = np.logspace(np.log10(A_MIN), np.log10(a_max), 441)
    adm = c - model.nonlinearity_over_u(As) < 0
    if not adm.any():
        raise NoGroundStateError(
            f"phi''(0) >= 0 for every amplitude up to {a_max:g} ({model.params()}, omega={omega})")
    i0 = int(np.argmax(adm))
    lo = As[i0 - 1] if i0 > 0 else A_MIN
    A = As[i0]
    hi = None
    while A <= a_max:
        if _shoot(model, omega, A, r_end)[0] == "over":
            hi = A
            break
        lo = A
        A *= 1.1
    if hi is None:
        raise NoGroundStateError(
            f"no overshoot for amplitudes up to {a_max:g} ({model.params()}, omega={omega})")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _shoot(model, omega, mid, r_end)[0] == "over":
            hi = mid
        else:
            lo = mid
    return lo, hi


def _shooting_guess(model, omega, grid, A_lo, A_hi) -> np.ndarray:
    kappa = model.decay_rate(omega)
    _, slo = _shoot(model, omega, A_lo, 400.0 / kappa, dense=True)
    _, shi = _shoot(model, omega, A_hi, 400.0 / kappa, dense=True)
    r_stop = min(slo.t[-1], shi.t[-1])
    # trust the trajectory until the two bracketing solutions separate
    rr = np.linspace(slo.t[0], r_stop, 4000)
    ylo, yhi = slo.sol(rr)[0], shi.sol(rr)[0]
    bad = np.nonzero((np.abs(yhi - ylo) > 1e-4 * A_lo) | (ylo < 1e-6 * A_lo))[0]
    r_cut = rr[bad[0]] if bad.size else r_stop
    r_cut = max(r_cut, rr[1])
    r = grid.r
    phi = np.empty_like(r)
    inner_ = r <= r_cut
    rin = np.maximum(r[inner_], slo.t[0])
    phi[inner_] = slo.sol(rin)[0]
    phi_cut = float(slo.sol(r_cut)[0])
    ro = r[~inner_]
    phi[~inner_] = phi_cut * np.exp(-kappa * (ro - r_cut)) * (r_cut / ro) ** ((model.dim - 1) / 2)
    return np.maximum(phi, 0.0)


# -- Newton on the discrete equation --------------------------------------

def _newton(model, omega, grid, phi, tol, max_iter=60):
    res = stationary_residual(model, omega, grid, phi)
    rnorm = np.max(np.abs(res))
    for it in range(max_iter):
        if rnorm < tol:
            return phi, rnorm, it
        ab = _lplus_banded(model, omega, grid, phi)
        step = solve_banded((1, 1), ab, -res)
        t = 1.0
        for _ in range(30):
            trial = phi + t * step
            rt = stationary_residual(model, omega, grid, trial)
            rtn = np.max(np.abs(rt))
            if np.isfinite(rtn) and rtn < rnorm:
                break
            t *= 0.5
        else:
            raise NonConvergenceError(f"Newton stagnated at residual {rnorm:.3e} (omega={omega})")
        phi, res, rnorm = trial, rt, rtn
    if rnorm < tol:
        return phi, rnorm, max_iter
    raise NonConvergenceError(f"Newton did not reach tol={tol:g}; residual {rnorm:.3e}")


def _looks_like_ground_state(phi) -> bool:
    return phi[0] > 0 and np.all(phi[:-1] > -1e-12 * phi[0]) and np.argmax(phi) == 0


def solve_profile(model: ModelSpec, omega: float, grid: Optional[RadialGrid] = None,
                  tol: float = 1e-10, guess: Optional[np.ndarray] = None) -> Profile:
    """Solve for the positive radial ground state at frequency ``omega``.

    With ``guess`` (a grid function on ``grid``) the shooting stage is skipped;
    it is used again only if Newton from the guess fails.

    Raises
    ------
    NoGroundStateError
        shooting could not bracket an amplitude in (1e-8, 1e3).
    NonConvergenceError
        Newton on the discrete system stagnated.
    """
    if not model.omega_ok(omega):
        raise ValueError(f"omega={omega} outside the existence range of {model.kind}")
    bracket = None
    if grid is None:
        bracket = shoot_amplitude(model, omega)
        grid = default_grid(model, omega, amplitude=bracket[1])
    if grid.dim != model.dim:
        raise ValueError("grid dimension does not match model")
    if guess is not None:
        try:
            phi, rnorm, it = _newton(model, omega, grid, np.asarray(guess, float).copy(), tol)
            if _looks_like_ground_state(phi):
                return Profile(model, float(omega), grid, phi, float(rnorm), newton_iterations=it)
        except NonConvergenceError:
            pass
    A_lo, A_hi = bracket or shoot_amplitude(model, omega)
    phi0 = _shooting_guess(model, omega, grid, A_lo, A_hi)
    phi, rnorm, it = _newton(model, omega, grid, phi0, tol)
    if not _looks_like_ground_state(phi):
        raise NonConvergenceError("Newton converged to a non-ground-state solution")
    return Profile(model, float(omega), grid, phi, float(rnorm),
                   shoot_amplitude=0.5 * (A_lo + A_hi), newton_iterations=it)


def closed_form_profile_1d(model: ModelSpec, omega: float, grid: RadialGrid) -> Profile:
    """Explicit sech^{2/(p-1)} ground state of the 1D NLKG.

    ``residual`` is that of the continuous ODE evaluated with exact
    derivatives on the grid nodes.
    """
    if model.kind != "nlkg" or model.dim != 1:
        raise ValueError("closed form is available for NLKG with dim=1 only")
    p, c = model.p, model.linear_coeff(omega)
    k = (p - 1) * np.sqrt(c) / 2
    A = (c * (p + 1) / 2) ** (1 / (p - 1))
    x = grid.r
    s = 1 / np.cosh(k * x)
    m = 2 / (p - 1)
    phi = A * s**m
    t = np.tanh(k * x)
    d2 = A * m * k**2 * s**m * (m * t**2 - s**2)
    res = -d2 + c * phi - phi**p
    # d/dw through c = 1 - w^2: d phi/dc = phi [1/((p-1)c) - m x tanh(kx) k/(2c)]
    dphi = -2 * omega * phi * (1 / ((p - 1) * c) - m * x * t * k / (2 * c))
    return Profile(model, float(omega), grid, phi, float(np.max(np.abs(res))),
                   dphi_domega=dphi, shoot_amplitude=float(A))


# -- frequency derivatives -------------------------------------------------

def profile_omega_derivative(prof: Profile, method: str = "linear-solve",
                             step: float = 1e-3) -> np.ndarray:
    """d phi_w / d w, either from ``L+ dphi = -c'(w) phi`` or by central differences."""
    m, w, g = prof.model, prof.omega, prof.grid
    if method == "linear-solve":
        ab = _lplus_banded(m, w, g, prof.phi)
        rhs = -m.linear_coeff_domega(w) * prof.phi
        if not np.any(rhs):
            return np.zeros_like(prof.phi)
        out = solve_banded((1, 1), ab, rhs)
        if not np.all(np.isfinite(out)):
            raise SingularSystemError("L+ is singular in the even/radial sector")
        return out
    if method == "fd":
        tol = max(prof.residual, 1e-12)
        up = solve_profile(m, w + step, g, tol=tol, guess=prof.phi)
        dn = solve_profile(m, w - step, g, tol=tol, guess=prof.phi)
        return (up.phi - dn.phi) / (2 * step)
    raise ValueError(f"unknown method {method!r}")


def profile_second_derivative(prof: Profile, method: str = "linear-solve",
                              step: Optional[float] = None) -> np.ndarray:
    """d^2 phi_w / d w^2.

    ``fd`` uses a second-order central difference with step 1e-2 (1 - |w|)
    (NLKG) or 1e-2 w (DPNLS); ``linear-solve`` differentiates the linear
    equation for d phi once more.
    """
    m, w, g = prof.model, prof.omega, prof.grid
    if method == "fd":
        if step is None:
            step = 1e-2 * (1 - abs(w)) if m.kind == "nlkg" else 1e-2 * w
        tol = max(prof.residual, 1e-12)
        up = solve_profile(m, w + step, g, tol=tol, guess=prof.phi)
        dn = solve_profile(m, w - step, g, tol=tol, guess=prof.phi)
        return (up.phi - 2 * prof.phi + dn.phi) / step**2
    if method != "linear-solve":
        raise ValueError(f"unknown method {method!r}")
    dphi = prof.dphi_domega if prof.dphi_domega is not None else profile_omega_derivative(prof)
    cp = m.linear_coeff_domega(w)
    cpp = -2.0 if m.kind == "nlkg" else 0.0
    # L+ dphi = -c' phi  =>  L+ d2phi = -c'' phi - 2 c' dphi + N''(phi) dphi^2
    rhs = -cpp * prof.phi - 2 * cp * dphi + m.nonlinearity_second_derivative(prof.phi) * dphi**2
    return solve_banded((1, 1), _lplus_banded(m, w, g, prof.phi), rhs)


# -- validation ------------------------------------------------------------

def validate_profile(prof: Profile, tol: float = 1e-9) -> dict:
    """Check positivity, monotonicity, decay, residual and the ODE first integral."""
    phi = prof.phi
    A = float(phi[0]) if phi.size else 0.0
    checks = {}
    interior = phi[:-1]
    checks["positive"] = {"pass": bool(A > 0 and np.all(interior > 0)),
                          "min_interior": float(interior.min())}
    dphi = np.diff(phi)
    checks["monotone"] = {"pass": bool(np.all(dphi <= 1e-14 * max(A, 1e-300))),
                          "max_increase": float(dphi.max())}
    tail = abs(float(phi[-1])) / A if A > 0 else np.inf
    checks["decay"] = {"pass": bool(tail < 1e-8), "tail_ratio": tail}
    checks["residual"] = {"pass": bool(prof.residual < tol), "value": prof.residual}
    if prof.model.kind == "nlkg":
        checks["frequency"] = {"pass": bool(prof.omega**2 < 1), "omega": prof.omega}
    if prof.model.dim == 1 and A > 0:
        # first integral at r=0: 0 = 1/2 c A^2 - G(A)
        m = prof.model
        fi = 0.5 * m.linear_coeff(prof.omega) * A**2 - float(m.potential(np.array([A]))[0])
        scale = 0.5 * abs(m.linear_coeff(prof.omega)) * A**2 + sum(
            abs(a) * A ** (q + 1) / (q + 1) for a, q in m._terms())
        checks["first_integral"] = {"pass": bool(abs(fi) < 1e-3 * scale), "value": fi}
    checks["pass"] = all(v["pass"] for v in checks.values())
    return checks


# -- bound states as states ------------------------------------------------

def bound_state(prof: Profile) -> State:
    """Phi_w: (phi, i w phi) for NLKG, phi for DPNLS."""
    phi = prof.phi.astype(complex)
    if prof.model.kind == "nlkg":
        return State(prof.model, prof.grid, (phi, 1j * prof.omega * phi))
    return State(prof.model, prof.grid, (phi,))


def bound_state_derivative(prof: Profile, dphi: np.ndarray) -> State:
    if prof.model.kind == "nlkg":
        return State(prof.model, prof.grid, (dphi + 0j, 1j * (prof.phi + prof.omega * dphi)))
    return State(prof.model, prof.grid, (dphi + 0j,))


def bound_state_second_derivative(prof: Profile, dphi, d2phi) -> State:
    if prof.model.kind == "nlkg":
        return State(prof.model, prof.grid,
                     (d2phi + 0j, 1j * (2 * dphi + prof.omega * d2phi)))
    return State(prof.model, prof.grid, (d2phi + 0j,))


class ProfileFamily:
    """Memoized profiles w -> phi_w on one fixed grid.

    New solves start Newton from the nearest cached profile, so sweeps and the
    modulation Newton loop never re-run the shooting stage.
    """

    def __init__(self, model: ModelSpec, grid: RadialGrid, tol: float = 1e-10,
                 max_cache: int = 256):
        self.model, self.grid, self.tol = model, grid, tol
        self._cache: dict[float, Profile] = {}
        self._deriv: dict[float, tuple] = {}
        self.max_cache = max_cache
        self.n_solves = 0

    def profile(self, omega: float) -> Profile:
        omega = float(omega)
        hit = self._cache.get(omega)
        if hit is not None:
            return hit
        guess = None
        if self._cache:
            near = min(self._cache, key=lambda w: abs(w - omega))
            guess = self._cache[near].phi
        prof = solve_profile(self.model, omega, self.grid, self.tol, guess=guess)
        self.n_solves += 1
        if len(self._cache) >= self.max_cache:
            oldest = next(iter(self._cache))
            del self._cache[oldest]
            self._deriv.pop(oldest, None)
        self._cache[omega] = prof
        return prof

    def derivatives(self, omega: float):
        """(phi, dphi, d2phi) at omega via linear solves."""
        omega = float(omega)
        hit = self._deriv.get(omega)
        if hit is None:
            prof = self.profile(omega)
            dphi = profile_omega_derivative(prof)
            d2phi = profile_second_derivative(replace(prof, dphi_domega=dphi))
            hit = (prof, dphi, d2phi)
            self._deriv[omega] = hit
        return hit

    def state(self, omega: float) -> State:
        return bound_state(self.profile(omega))

    def states(self, omega: float):
        """(Phi, d_w Phi, d_w^2 Phi) as States."""
        prof, dphi, d2phi = self.derivatives(omega)
        return (bound_state(prof), bound_state_derivative(prof, dphi),
                bound_state_second_derivative(prof, dphi, d2phi))

    def charge(self, omega: float) -> float:
        from .core import evaluate_charge
        return evaluate_charge(self.state(omega))

    def action(self, omega: float) -> float:
        from .core import evaluate_action
        return evaluate_action(self.state(omega), omega)

    def generator_state(self, omega: float) -> State:
        return apply_symmetry(self.state(omega), "generator")
