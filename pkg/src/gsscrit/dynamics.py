"""Time integration with conservation and modulation monitors.

NLKG is split into the linear Klein-Gordon flow ``u_t = v, v_t = Lap u - u``
and the nonlinear kick ``v_t = |u|^{p-1} u``.  The linear part is advanced by
the implicit midpoint rule (Crank-Nicolson), which after eliminating ``v`` is
one symmetric positive tridiagonal solve per step with a Cholesky factor
computed once.  NLS uses the exact pointwise phase rotation
``u -> exp(i dt sum a |u|^{q-1}) u`` and Crank-Nicolson for ``u_t = i Lap u``.

Both substeps conserve the charge exactly (quadratic invariant of a midpoint
rule, or pointwise modulus), so Q drifts only at round-off; E is conserved to
O(dt^2) by Strang splitting (O(dt^4) with ``order=4``, a Yoshida
triple-jump composition).
"""
from __future__ import annotations

import time as _time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solve_banded

from .core import (ModelSpec, OutOfTubeError, State, apply_symmetry, evaluate_charge,
                   evaluate_energy, xnorm)
from .grid import RadialGrid
from .modulation import functional_AP, orbital_distance, solve_modulation
from .profiles import ProfileFamily

__all__ = [
    "TrajectoryLog", "evolve_nlkg", "evolve_nls", "evolve", "sponge_profile", "dynamics_grid",
    "even_bump", "run_stability_experiment", "run_instability_experiment", "monitor_AP_identity",
    "ExperimentRecord",
]

_YOSHIDA = (1.0 / (2 - 2 ** (1 / 3)), -(2 ** (1 / 3)) / (2 - 2 ** (1 / 3)))


def dynamics_grid(model: ModelSpec, omega: float, h: float = 0.05, span: float = 40.0) -> RadialGrid:
    """Grid with R = span / decay rate and spacing about h."""
    R = span / model.decay_rate(omega)
    return RadialGrid.from_spacing(model.dim, h, R)


def sponge_profile(grid: RadialGrid, strength: float = 1.0, start: float = 0.8) -> np.ndarray:
    """Damping rate gamma(r), zero inside start*R, quadratic ramp to ``strength`` at R."""
    s = np.clip((grid.r - start * grid.R) / ((1 - start) * grid.R), 0.0, None)
    return strength * s**2


@dataclass
class TrajectoryLog:
    times: list = field(default_factory=list)
    E: list = field(default_factory=list)
    Q: list = field(default_factory=list)
    distance: list = field(default_factory=list)
    theta: list = field(default_factory=list)
    Lambda: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    norm_w: list = field(default_factory=list)
    A: list = field(default_factory=list)
    P: list = field(default_factory=list)
    exit_time: Optional[float] = None
    exit_reason: Optional[str] = None
    blowup: bool = False
    tube_eps: Optional[float] = None
    final_state: Optional[State] = None
    config: dict = field(default_factory=dict)
    wall_time: float = 0.0

    COLUMNS = ("t", "theta", "Lambda", "alpha", "norm_w", "A", "P", "distance", "E_drift", "Q_drift")

    @property
    def E_drift(self) -> np.ndarray:
        E = np.asarray(self.E)
        return (E - E[0]) / max(abs(E[0]), 1e-300) if E.size else E

    @property
    def Q_drift(self) -> np.ndarray:
        Q = np.asarray(self.Q)
        return (Q - Q[0]) / max(abs(Q[0]), 1e-300) if Q.size else Q

    @property
    def max_distance(self) -> float:
        d = np.asarray(self.distance, float)
        return float(np.nanmax(d)) if d.size and np.isfinite(d).any() else float("nan")

    def rows(self):
        Ed, Qd = self.E_drift, self.Q_drift
        for k, t in enumerate(self.times):
            yield (t, self.theta[k], self.Lambda[k], self.alpha[k], self.norm_w[k], self.A[k],
                   self.P[k], self.distance[k], Ed[k], Qd[k])

    def summary(self) -> dict:
        Ed, Qd = self.E_drift, self.Q_drift
        return {"n_out": len(self.times), "t_end": self.times[-1] if self.times else 0.0,
                "max_abs_E_drift": float(np.max(np.abs(Ed))) if len(Ed) else 0.0,
                "max_abs_Q_drift": float(np.max(np.abs(Qd))) if len(Qd) else 0.0,
                "max_distance": self.max_distance, "exit_time": self.exit_time,
                "exit_reason": self.exit_reason, "blowup": self.blowup, "tube_eps": self.tube_eps}


# -- steppers ------------------------------------------------------------------

class _NLKGStepper:
    def __init__(self, model: ModelSpec, grid: RadialGrid, dt: float, order: int, gamma):
        self.model, self.grid, self.gamma = model, grid, gamma
        self.subs = [dt] if order == 2 else [_YOSHIDA[0] * dt, _YOSHIDA[1] * dt, _YOSHIDA[0] * dt]
        kd, ko = grid.stiffness_bands
        w = grid.weights
        self._K = (kd, ko)
        self._chol = {}
        for h in set(abs(s) for s in self.subs):
            c = 0.25 * h * h
            ab = np.zeros((2, grid.n))
            ab[0, 1:] = c * ko
            ab[1] = w + c * (kd + w)
            self._chol[h] = cholesky_banded(ab, lower=False)
        self.dt = dt

    def _KW(self, u):
        """(K + W) u."""
        kd, ko = self._K
        Ku = kd * u
        Ku[:-1] += ko * u[1:]
        Ku[1:] += ko * u[:-1]
        return Ku + self.grid.weights * u

    def _strang(self, u, v, h):
        N = self.model.nonlinearity
        v = v + 0.5 * h * N(u)
        c = 0.25 * h * h
        w = self.grid.weights
        # solve for the increment du = u^{n+1} - u^n, so that rounding errors
        # scale with |du| ~ h |v| rather than |u| in the velocity update
        rhs = h * w * v - 2.0 * c * self._KW(u)
        b = np.column_stack((rhs.real, rhs.imag))
        x = cho_solve_banded((self._chol[abs(h)], False), b)
        du = x[:, 0] + 1j * x[:, 1]
        # v^{n+1} = 2 (u^{n+1} - u^n)/h - v^n  (midpoint rule)
        v = 2.0 * du / h - v
        u = u + du
        v = v + 0.5 * h * N(u)
        return u, v

    def step(self, u, v):
        for h in self.subs:
            u, v = self._strang(u, v, h)
        if self.gamma is not None:
            v = v * np.exp(-self.gamma * self.dt)
        return u, v


class _NLSStepper:
    def __init__(self, model: ModelSpec, grid: RadialGrid, dt: float, order: int, gamma):
        self.model, self.grid, self.gamma, self.dt = model, grid, gamma, dt
        self.subs = [dt] if order == 2 else [_YOSHIDA[0] * dt, _YOSHIDA[1] * dt, _YOSHIDA[0] * dt]
        kd, ko = grid.stiffness_bands
        self._K = (kd, ko)
        self._lhs = {}
        w = grid.weights
        for h in set(self.subs):
            ab = np.zeros((3, grid.n), complex)
            ab[0, 1:] = 0.5j * h * ko
            ab[1] = w + 0.5j * h * kd
            ab[2, :-1] = 0.5j * h * ko
            self._lhs[h] = ab

    def _phase(self, u, h):
        return u * np.exp(1j * h * self.model.nonlinearity_over_u(np.abs(u)))

    def _strang(self, u, h):
        u = self._phase(u, 0.5 * h)
        kd, ko = self._K
        Ku = kd * u
        Ku[:-1] += ko * u[1:]
        Ku[1:] += ko * u[:-1]
        rhs = self.grid.weights * u - 0.5j * h * Ku
        u = solve_banded((1, 1), self._lhs[h], rhs, check_finite=False)
        return self._phase(u, 0.5 * h)

    def step(self, u):
        for h in self.subs:
            u = self._strang(u, h)
        if self.gamma is not None:
            u = u * np.exp(-self.gamma * self.dt)
        return u


# -- driver --------------------------------------------------------------------

def evolve(initial: State, T: float, dt: float, *, out_dt: Optional[float] = None,
           family: Optional[ProfileFamily] = None, omega0: Optional[float] = None,
           modulate: bool = True, order: int = 2, sponge: Optional[float] = None,
           tube_eps: Optional[float] = None, stop_on_exit: bool = False,
           blowup_threshold: float = 1e6, max_wall: Optional[float] = None) -> TrajectoryLog:
    """Evolve ``initial`` to time T and record monitors every ``out_dt``.

    With ``family`` and ``omega0`` the orbital distance to ``Phi_omega0`` is
    logged, and with ``modulate`` also (theta, Lambda, alpha, ||w||, A, P).
    ``tube_eps`` defaults to 0.3 ||Phi_omega0||_X; the first output time with
    distance above it (or a failed modulation solve) is the exit time.
    ``sponge`` is the damping strength of an absorbing layer beyond 0.8 R
    (None disables it).
    """
    model, grid = initial.model, initial.grid
    if not dt > 0 or not T >= 0:
        raise ValueError("need dt > 0 and T >= 0")
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    out_dt = dt if out_dt is None else out_dt
    every = max(1, int(round(out_dt / dt)))
    nsteps = int(round(T / dt))
    gamma = sponge_profile(grid, sponge) if sponge else None
    stepper = (_NLKGStepper if model.kind == "nlkg" else _NLSStepper)(model, grid, dt, order, gamma)
    ref = None
    log = TrajectoryLog(config={"T": T, "dt": dt, "out_dt": every * dt, "order": order,
                                "sponge": sponge, "omega0": omega0, "grid": grid.to_dict(),
                                "model": model.params()})
    if family is not None and omega0 is not None:
        ref = family.state(omega0)
        log.tube_eps = 0.3 * xnorm(ref) if tube_eps is None else tube_eps
    guess = None
    t0 = _time.perf_counter()
    fields = [f.copy() for f in initial.fields]

    def record(t, s):
        nonlocal guess
        log.times.append(float(t))
        log.E.append(evaluate_energy(s))
        log.Q.append(evaluate_charge(s))
        vals = dict.fromkeys(("distance", "theta", "Lambda", "alpha", "norm_w", "A", "P"), np.nan)
        exited = None
        if ref is not None:
            vals["distance"] = orbital_distance(s, ref)
            if vals["distance"] > log.tube_eps:
                exited = "distance"
            elif modulate:
                try:
                    c = solve_modulation(s, family, omega0, guess=guess)
                    A, P = functional_AP(s, family, omega0, c)
                    guess = (None, c.Lambda)
                    vals.update(theta=c.theta, Lambda=c.Lambda, alpha=c.alpha, norm_w=c.norm_w, A=A, P=P)
                except OutOfTubeError:
                    exited = "modulation"
        for k, val in vals.items():
            getattr(log, k).append(float(val))
        if exited and log.exit_time is None:
            log.exit_time, log.exit_reason = float(t), exited
        return exited

    s = State(model, grid, tuple(fields))
    done = record(0.0, s) and stop_on_exit
    k = 0
    while not done and k < nsteps:
        if model.kind == "nlkg":
            fields = list(stepper.step(*fields))
        else:
            fields = [stepper.step(fields[0])]
        k += 1
        if k % every == 0 or k == nsteps:
            sup = max(float(np.max(np.abs(f))) for f in fields)
            if not np.isfinite(sup) or sup > blowup_threshold:
                log.blowup = True
                if log.exit_time is None:
                    log.exit_time, log.exit_reason = k * dt, "blowup"
                break
            s = State(model, grid, tuple(fields))
            if record(k * dt, s) and stop_on_exit:
                break
            if max_wall is not None and _time.perf_counter() - t0 > max_wall:
                log.config["truncated_wall"] = True
                break
    if not log.blowup:
        log.final_state = State(model, grid, tuple(fields))
    log.wall_time = _time.perf_counter() - t0
    return log


def _check_grid(initial: State, grid: Optional[RadialGrid]):
    if grid is not None and grid != initial.grid:
        raise ValueError("grid does not match the initial state's grid")


def evolve_nlkg(initial: State, T: float, dt: float, grid: Optional[RadialGrid] = None,
                **kw) -> TrajectoryLog:
    """Strang / Crank-Nicolson integration of NLKG; see :func:`evolve`."""
    if initial.model.kind != "nlkg":
        raise ValueError("evolve_nlkg needs an NLKG state")
    _check_grid(initial, grid)
    return evolve(initial, T, dt, **kw)


def evolve_nls(initial: State, T: float, dt: float, grid: Optional[RadialGrid] = None,
               **kw) -> TrajectoryLog:
    """Split-step integration of the double-power NLS; see :func:`evolve`."""
    if initial.model.kind != "dpnls":
        raise ValueError("evolve_nls needs a DPNLS state")
    _check_grid(initial, grid)
    return evolve(initial, T, dt, **kw)


# -- experiments ----------------------------------------------------------------

def even_bump(model: ModelSpec, grid: RadialGrid, width: float = 2.0) -> State:
    """Smooth even perturbation with unit X norm (complex, in every component)."""
    g = np.exp(-(grid.r / width) ** 2) * (1.0 + 0.5j)
    fs = (g,) if model.n_fields == 1 else (g, 0.5 * g)
    s = State(model, grid, fs)
    return s * (1.0 / xnorm(s))


@dataclass
class ExperimentRecord:
    kind: str
    verdict: str
    omega: float
    runs: list
    config: dict

    def to_dict(self) -> dict:
        return {"kind": self.kind, "verdict": self.verdict, "omega": self.omega,
                "runs": self.runs, "config": self.config}


def run_stability_experiment(model: ModelSpec, omega: float, perturbation_sizes: Sequence[float] = (1e-2,),
                             T: float = 200.0, dt: float = 0.01, grid: Optional[RadialGrid] = None,
                             lambdas: Sequence[float] = (), out_dt: float = 0.5, order: int = 2,
                             family: Optional[ProfileFamily] = None, sponge: Optional[float] = None,
                             modulate: bool = False) -> ExperimentRecord:
    """Evolve Phi_w + delta * bump (and Psi(lam)) and record the max orbital distance.

    Verdict ``consistent-with-stable`` iff no run leaves the tube before T.
    """
    from .dcurve import build_psi
    grid = dynamics_grid(model, omega) if grid is None else grid
    family = ProfileFamily(model, grid, tol=1e-11) if family is None else family
    Phi = family.state(omega)
    bump = even_bump(model, grid)
    runs = []
    inits = [("delta", float(d), Phi + d * bump) for d in perturbation_sizes]
    inits += [("lambda", float(l), build_psi(family, omega, l)) for l in lambdas]
    for tag, val, u0 in inits:
        log = evolve(u0, T, dt, out_dt=out_dt, family=family, omega0=omega, modulate=modulate,
                     order=order, sponge=sponge)
        runs.append({tag: val, **log.summary(), "initial_distance": log.distance[0]})
    ok = all(r["exit_time"] is None for r in runs)
    cfg = {"model": model.params(), "omega": omega, "T": T, "dt": dt, "out_dt": out_dt, "order": order,
           "grid": grid.to_dict(), "perturbation_sizes": list(map(float, perturbation_sizes)),
           "lambdas": list(map(float, lambdas)), "sponge": sponge}
    return ExperimentRecord("stability", "consistent-with-stable" if ok else "inconsistent-with-stable",
                            float(omega), runs, cfg)


def run_instability_experiment(model: ModelSpec, omega: float, lambda_seq: Sequence[float],
                               T: float = 200.0, dt: float = 0.01, grid: Optional[RadialGrid] = None,
                               out_dt: float = 0.05, order: int = 2, sponge: Optional[float] = None,
                               family: Optional[ProfileFamily] = None, keep_logs: bool = False,
                               require_negative_eta1: bool = True) -> ExperimentRecord:
    """Evolve Psi(lam_n) and record the tube exit time for each lam_n.

    Each lam must satisfy eta1(lam) < 0 (the action of Psi(lam) below d(w)).
    Verdict ``consistent-with-unstable`` iff every run exits before T,
    otherwise ``undetermined`` (a longer horizon may still show an exit).
    """
    from .dcurve import build_psi, eta_functions
    grid = dynamics_grid(model, omega) if grid is None else grid
    family = ProfileFamily(model, grid, tol=1e-11) if family is None else family
    runs, logs = [], []
    for lam in lambda_seq:
        e1, e2 = eta_functions(family, omega, lam)
        if require_negative_eta1 and not e1 < 0:
            raise ValueError(f"eta1({lam}) = {e1:.3g} is not negative; pick the other side")
        u0 = build_psi(family, omega, lam)
        log = evolve(u0, T, dt, out_dt=out_dt, family=family, omega0=omega, order=order,
                     sponge=sponge, stop_on_exit=True)
        P = np.asarray(log.P, float)
        P = P[np.isfinite(P)]
        sign_const = bool(P.size and (np.all(P[1:] > 0) or np.all(P[1:] < 0)))
        runs.append({"lambda": float(lam), "eta1": e1, "eta2": e2, **log.summary(),
                     "P_sign_constant": sign_const,
                     "P_sign": int(np.sign(np.median(P))) if P.size else 0})
        logs.append(log)
    ok = all(r["exit_time"] is not None for r in runs)
    cfg = {"model": model.params(), "omega": omega, "T": T, "dt": dt, "out_dt": out_dt, "order": order,
           "grid": grid.to_dict(), "lambdas": list(map(float, lambda_seq)), "sponge": sponge}
    rec = ExperimentRecord("instability", "consistent-with-unstable" if ok else "undetermined",
                           float(omega), runs, cfg)
    if keep_logs:
        rec.logs = logs
    return rec


def monitor_AP_identity(log: TrajectoryLog) -> dict:
    """max_k |(A_{k+1} - A_{k-1}) / (t_{k+1} - t_{k-1}) + P_k| over in-tube outputs."""
    t = np.asarray(log.times)
    A = np.asarray(log.A, float)
    P = np.asarray(log.P, float)
    n = len(t) if log.exit_time is None else int(np.searchsorted(t, log.exit_time))
    ok = np.isfinite(A[:n]) & np.isfinite(P[:n])
    # only interior points whose neighbours are also valid
    idx = [k for k in range(1, n - 1) if ok[k - 1] and ok[k] and ok[k + 1]]
    if not idx:
        return {"max_deviation": float("nan"), "max_abs_P": float("nan"), "relative": float("nan"), "n": 0}
    idx = np.array(idx)
    dA = (A[idx + 1] - A[idx - 1]) / (t[idx + 1] - t[idx - 1])
    dev = np.abs(dA + P[idx])
    maxP = float(np.max(np.abs(P[:n][ok[:n]])))
    return {"max_deviation": float(dev.max()), "max_abs_P": maxP,
            "relative": float(dev.max() / maxP) if maxP > 0 else float("inf"), "n": int(idx.size)}
