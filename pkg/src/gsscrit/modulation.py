"""Modulation coordinates around a bound-state orbit and the A / P functionals.

A state ``u`` near the orbit of ``Phi_w`` is written as

    T(theta) u = Psi(Lam) + w + alpha B Phi_{w+Lam}

where ``Psi(lam) = Phi_{w+lam} + sigma(lam) B Phi_{w+lam}`` is the
charge-preserving curve through ``Phi_w`` and ``w`` is orthogonal to
``T'(0) Phi_{w+Lam}``, ``d_w Phi_{w+Lam}`` and ``B Phi_{w+Lam}``.  The two
scalar conditions fix ``(theta, Lam)`` by Newton's method; ``alpha`` and ``w``
then follow by projection.

All pairings are the real weighted L^2 pairing of :func:`gsscrit.core.inner`,
so Frechet derivatives are represented as States in that pairing.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (GssError, ModelSpec, NoGroundStateError, NonConvergenceError, OutOfTubeError,
                   State, action_gradient, apply_symmetry, complex_xinner, inner, xnorm)
from .dcurve import solve_sigma
from .profiles import ProfileFamily, Profile, bound_state, default_grid

__all__ = [
    "ModulationCoords", "solve_modulation", "psi_and_tangent", "functional_A", "functional_P",
    "functional_AP", "orbital_distance", "check_J_orthogonality", "JOrthogonalityReport",
    "initial_phase",
]


@dataclass
class ModulationCoords:
    theta: float
    Lambda: float
    alpha: float
    w: State
    ortho_residuals: tuple
    omega0: float
    iterations: int = 0

    @property
    def norm_w(self) -> float:
        return xnorm(self.w)

    def to_dict(self) -> dict:
        return {"theta": self.theta, "Lambda": self.Lambda, "alpha": self.alpha,
                "norm_w": self.norm_w, "ortho_residuals": list(self.ortho_residuals),
                "omega0": self.omega0, "iterations": self.iterations}


def psi_and_tangent(family: ProfileFamily, omega0: float, lam: float):
    """(Psi(lam), d Psi / d lam, sigma(lam)).

    Differentiating ``Q(Psi(lam)) = Q(Phi_w)`` gives
    ``sigma' = -<B Psi, dPhi + sigma B dPhi> / <B Psi, B Phi>``.
    """
    Phi, dPhi, _ = family.states(omega0 + lam)
    BPhi = apply_symmetry(Phi, "B")
    BdPhi = apply_symmetry(dPhi, "B")
    sigma = solve_sigma(family, omega0, lam)
    Psi = Phi + sigma * BPhi
    BPsi = apply_symmetry(Psi, "B")
    rest = dPhi + sigma * BdPhi
    sigma_p = -inner(BPsi, rest) / inner(BPsi, BPhi)
    return Psi, rest + sigma_p * BPhi, sigma


def initial_phase(u: State, Phi: State) -> float:
    """theta maximizing Re <T(theta) u, Phi>, i.e. -arg of the complex L^2 pairing."""
    w = u.grid.weights
    z = sum(np.dot(w, a * np.conj(b)) for a, b in zip(u.fields, Phi.fields))
    return float(-np.angle(z)) if abs(z) > 0 else 0.0


def _wrap(theta: float) -> float:
    return float((theta + np.pi) % (2 * np.pi) - np.pi)


def solve_modulation(u: State, family: ProfileFamily, omega0: float,
                     guess: Optional[tuple] = None, tol: float = 1e-10,
                     max_iter: int = 40, lam_max: Optional[float] = None,
                     step_tol: float = 1e-9) -> ModulationCoords:
    """Newton solve of G(u, theta, Lam) = 0, then alpha and w by projection.

    ``guess`` is ``(theta, Lam)``; ``theta=None`` (or no guess) uses the
    closed-form phase of :func:`initial_phase`.  Iteration stops when the
    residual drops below ``tol`` (relative) or the step in (theta, Lam) below
    ``step_tol``.  Failure to converge, a singular Jacobian or a frequency
    leaving the admissible range raise :class:`OutOfTubeError`.
    """
    m = family.model
    if lam_max is None:
        lam_max = 0.5 * (1 - abs(omega0)) if m.kind == "nlkg" else 0.5 * omega0
    theta, lam = (None, 0.0) if guess is None else guess
    lam = float(lam)
    if theta is None:
        theta = initial_phase(u, family.state(omega0 + lam))
    scale = max(np.sqrt(inner(u, u)) * np.sqrt(inner(family.state(omega0), family.state(omega0))), 1e-300)
    gen = lambda s: apply_symmetry(s, "generator")  # noqa: E731
    it = 0
    try:
        for it in range(1, max_iter + 1):
            if not abs(lam) < lam_max or not m.omega_ok(omega0 + lam):
                raise OutOfTubeError(f"frequency shift {lam:.3g} left the admissible range")
            Phi, dPhi, d2Phi = family.states(omega0 + lam)
            Psi, dPsi, _ = psi_and_tangent(family, omega0, lam)
            M = apply_symmetry(u, "T", theta)
            D = M - Psi
            TPhi, TdPhi = gen(Phi), gen(dPhi)
            G = np.array([inner(D, TPhi), inner(D, dPhi)])
            TM = gen(M)
            H = np.array([[inner(TM, TPhi), -inner(dPsi, TPhi) + inner(D, TdPhi)],
                          [inner(TM, dPhi), -inner(dPsi, dPhi) + inner(D, d2Phi)]])
            if np.max(np.abs(G)) <= tol * scale:
                break
            det = np.linalg.det(H)
            if not np.isfinite(det) or abs(det) < 1e-12 * np.max(np.abs(H)) ** 2:
                raise OutOfTubeError("modulation Jacobian is singular")
            step = np.linalg.solve(H, -G)
            # damp large frequency steps: Newton on G is only reliable inside the tube
            if abs(step[1]) > 0.25 * lam_max:
                step *= 0.25 * lam_max / abs(step[1])
            theta += step[0]
            lam += step[1]
            # G is only known to the accuracy of the profile solves; a step far
            # below that noise floor means Newton has converged
            if np.max(np.abs(step)) < step_tol:
                break
        else:
            raise OutOfTubeError(f"modulation Newton did not converge in {max_iter} steps")
    except (NoGroundStateError, NonConvergenceError) as exc:
        raise OutOfTubeError(f"profile family failed during modulation: {exc}") from exc
    except GssError as exc:
        if isinstance(exc, OutOfTubeError):
            raise
        raise OutOfTubeError(str(exc)) from exc
    theta = _wrap(theta)
    M = apply_symmetry(u, "T", theta)
    Phi, dPhi, _ = family.states(omega0 + lam)
    Psi, _, _ = psi_and_tangent(family, omega0, lam)
    BPhi = apply_symmetry(Phi, "B")
    D = M - Psi
    alpha = inner(D, BPhi) / inner(BPhi, BPhi)
    w = D - alpha * BPhi
    res = (inner(w, apply_symmetry(Phi, "generator")), inner(w, dPhi), inner(w, BPhi))
    return ModulationCoords(theta, float(lam), float(alpha), w, tuple(float(r) for r in res),
                            float(omega0), it)


def functional_A(u: State, family: ProfileFamily, omega0: float,
                 coords: Optional[ModulationCoords] = None) -> float:
    """A(u) = <M(u), J^{-1} d_w Phi_{w+Lam}> with M(u) = T(theta) u."""
    if coords is None:
        coords = solve_modulation(u, family, omega0)
    M = apply_symmetry(u, "T", coords.theta)
    _, dPhi, _ = family.states(omega0 + coords.Lambda)
    return inner(M, apply_symmetry(dPhi, "J_inv"))


def _modulation_gradients(u: State, family: ProfileFamily, omega0: float, c: ModulationCoords):
    """theta'(u), Lam'(u) from H (theta'; Lam') = -(T(-theta) T'(0) Phi; T(-theta) dPhi)."""
    th, lam = c.theta, c.Lambda
    Phi, dPhi, d2Phi = family.states(omega0 + lam)
    Psi, dPsi, _ = psi_and_tangent(family, omega0, lam)
    M = apply_symmetry(u, "T", th)
    D = M - Psi
    gen = lambda s: apply_symmetry(s, "generator")  # noqa: E731
    TPhi, TdPhi, TM = gen(Phi), gen(dPhi), gen(M)
    H = np.array([[inner(TM, TPhi), -inner(dPsi, TPhi) + inner(D, TdPhi)],
                  [inner(TM, dPhi), -inner(dPsi, dPhi) + inner(D, d2Phi)]])
    if abs(np.linalg.det(H)) < 1e-12 * np.max(np.abs(H)) ** 2:
        raise OutOfTubeError("singular 2x2 system for theta', Lambda'")
    Hinv = np.linalg.inv(H)
    r1 = -apply_symmetry(TPhi, "T", -th)
    r2 = -apply_symmetry(dPhi, "T", -th)
    dtheta = Hinv[0, 0] * r1 + Hinv[0, 1] * r2
    dlam = Hinv[1, 0] * r1 + Hinv[1, 1] * r2
    return M, Phi, dPhi, d2Phi, dtheta, dlam


def functional_AP(u: State, family: ProfileFamily, omega0: float,
                  coords: Optional[ModulationCoords] = None) -> tuple[float, float]:
    """(A(u), P(u)) sharing one modulation solve.

    ``A'(u) = J^{-1} T(-theta) dPhi + <T'(0) M, J^{-1} dPhi> theta'
    + <M, J^{-1} d2Phi> Lam'`` and ``P(u) = <S'_{w+Lam}(u), J A'(u)>``.
    """
    if coords is None:
        coords = solve_modulation(u, family, omega0)
    M, Phi, dPhi, d2Phi, dtheta, dlam = _modulation_gradients(u, family, omega0, coords)
    JidPhi = apply_symmetry(dPhi, "J_inv")
    A = inner(M, JidPhi)
    c1 = inner(apply_symmetry(M, "generator"), JidPhi)
    c2 = inner(M, apply_symmetry(d2Phi, "J_inv"))
    Ap = apply_symmetry(JidPhi, "T", -coords.theta) + c1 * dtheta + c2 * dlam
    P = inner(action_gradient(u, omega0 + coords.Lambda), apply_symmetry(Ap, "J"))
    return float(A), float(P)


def functional_P(u: State, family: ProfileFamily, omega0: float,
                 coords: Optional[ModulationCoords] = None) -> float:
    return functional_AP(u, family, omega0, coords)[1]


def orbital_distance(u: State, prof) -> float:
    """inf_s ||u - T(s) Phi_w||_X.

    ``||u - e^{is} Phi||^2 = ||u||^2 + ||Phi||^2 - 2 Re(e^{-is} z)`` with
    ``z`` the complex X pairing, so the minimizer is ``s = arg z``.  The
    distance is then evaluated directly at that ``s`` (no cancellation).
    ``prof`` may be a Profile or the bound State itself.
    """
    Phi = bound_state(prof) if isinstance(prof, Profile) else prof
    z = complex_xinner(u, Phi)
    s = float(np.angle(z)) if abs(z) > 0 else 0.0
    return xnorm(u - apply_symmetry(Phi, "T", s))


# -- J-orthogonality of the second frequency derivative ------------------------

@dataclass
class JOrthogonalityReport:
    omegas: list
    pairings: list
    scales: list
    tol: float
    twist: float = 0.0

    @property
    def passes(self) -> list:
        return [abs(p) < self.tol * s for p, s in zip(self.pairings, self.scales)]

    @property
    def ok(self) -> bool:
        return all(self.passes)

    def to_dict(self) -> dict:
        return {"omegas": self.omegas, "pairings": self.pairings, "scales": self.scales,
                "tol": self.tol, "twist": self.twist, "passes": self.passes, "ok": self.ok}


def _twisted_state(family: ProfileFamily, omega: float, twist: float) -> State:
    Phi = family.state(omega)
    if twist == 0:
        return Phi
    r = family.grid.r
    ph = np.exp(1j * twist * omega * omega * np.exp(-r**2))
    return Phi._new(f * ph for f in Phi.fields)


def check_J_orthogonality(model: ModelSpec, omegas: Sequence[float], grid=None,
                          tol: float = 1e-8, twist: float = 0.0,
                          family: Optional[ProfileFamily] = None) -> JOrthogonalityReport:
    """<Phi_w, J^{-1} d_w^2 Phi_w> across ``omegas``.

    The second derivative is a central difference over w with step
    1e-2 (1 - |w|) (NLKG) or 1e-2 w (DPNLS).  ``twist`` != 0 multiplies the
    family by the frequency-dependent phase ``exp(i twist w^2 e^{-r^2})``, a
    complex family for which the pairing does not vanish (negative control).
    """
    omegas = [float(w) for w in omegas]
    if family is None:
        if grid is None:
            grid = default_grid(model, max(omegas, key=abs) if model.kind == "nlkg" else min(omegas))
        family = ProfileFamily(model, grid, tol=1e-11)
    pairings, scales = [], []
    for w in omegas:
        h = 1e-2 * (1 - abs(w)) if model.kind == "nlkg" else 1e-2 * w
        P0, Pp, Pm = (_twisted_state(family, w + k * h, twist) for k in (0, 1, -1))
        d2 = (Pp - 2 * P0 + Pm) * (1.0 / h**2)
        pairings.append(float(inner(P0, apply_symmetry(d2, "J_inv"))))
        scales.append(float(np.sqrt(inner(P0, P0) * inner(d2, d2))))
    return JOrthogonalityReport(omegas, pairings, scales, tol, twist)
