"""Model definitions, discrete states and the conserved functionals.

Two Hamiltonian systems ``du/dt = J E'(u)`` are provided.

NLKG
    ``u_tt - Lap u + u - |u|^{p-1} u = 0`` written for ``U = (u, v)``, ``v = u_t``.
    ``J(a, b) = (b, -a)``, ``T(s) = e^{is}``, ``B(u, v) = (-iv, iu)`` and
    ``Q(U) = Im int conj(u) v``.  Bound states ``e^{i w t}(phi, i w phi)`` with
    ``-Lap phi + (1 - w^2) phi - phi^p = 0``.

DPNLS
    ``i u_t + u_xx + a1 |u|^{p1-1} u + a2 |u|^{p2-1} u = 0`` on the even line.

    Frequency orientation: we keep ``T(s) = e^{is}`` and bound states
    ``e^{i w t} phi`` with ``w > 0``, so the profile equation reads
    ``-phi'' + w phi - a1 phi^p1 - a2 phi^p2 = 0``.  For the NLS flow to be
    ``u_t = J E'(u)`` this forces ``J = -i`` and hence ``B = J^{-1} T'(0) = -1``,
    ``Q(u) = -1/2 int |u|^2``.  With that choice ``S_w = E - w Q`` is stationary
    at the profile, ``d'(w) = -Q = 1/2 ||phi||^2`` and ``S_w''(phi) d_w phi = B phi``
    becomes ``L+ d_w phi = -phi``.  This is the only place the orientation is
    decided; every other module uses ``charge`` / ``apply_symmetry`` from here.

All inner products are the real ``L^2`` pairing ``<a, b> = Re int a conj(b)``
summed over components, discretized with the grid's quadrature weights.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import RadialGrid

__all__ = [
    "ModelSpec", "State", "GssError", "NoGroundStateError", "NonConvergenceError",
    "OutOfTubeError", "SingularSystemError",
    "evaluate_energy", "evaluate_charge", "evaluate_action", "apply_symmetry",
    "inner", "xinner", "xnorm", "complex_xinner", "energy_gradient", "charge_gradient",
    "action_gradient", "zero_state", "random_state",
]


class GssError(Exception):
    """Base class for computational failures."""


class NoGroundStateError(GssError):
    pass


class NonConvergenceError(GssError):
    pass


class OutOfTubeError(GssError):
    """Modulation coordinates could not be found (state left the tube)."""


class SingularSystemError(GssError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    p: float = 3.0
    dim: int = 1
    a1: float = 1.0
    p1: float = 3.0
    a2: float = 1.0
    p2: float = 7.0

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind == "nlkg":
            if not self.p > 1:
                raise ValueError("NLKG requires p > 1")
            if self.dim < 1:
                raise ValueError("dim must be >= 1")
            if self.dim >= 3 and not self.p < 1 + 4 / (self.dim - 2):
                raise ValueError("NLKG requires p < 1 + 4/(dim-2) for dim >= 3")
        elif kind == "dpnls":
            if self.dim != 1:
                raise ValueError("DPNLS is one-dimensional")
            if not 1 < self.p1 < self.p2:
                raise ValueError("DPNLS requires 1 < p1 < p2")
            if not (np.isfinite(self.a1) and np.isfinite(self.a2)):
                raise ValueError("a1, a2 must be finite")
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")

    @classmethod
    def nlkg(cls, p: float, dim: int = 1) -> "ModelSpec":
        return cls("nlkg", p=p, dim=dim)

    @classmethod
    def dpnls(cls, a1: float, p1: float, a2: float, p2: float) -> "ModelSpec":
        return cls("dpnls", dim=1, a1=a1, p1=p1, a2=a2, p2=p2)

    @property
    def n_fields(self) -> int:
        return 2 if self.kind == "nlkg" else 1

    def params(self) -> dict:
        if self.kind == "nlkg":
            return {"kind": "nlkg", "p": self.p, "dim": self.dim}
        return {"kind": "dpnls", "a1": self.a1, "p1": self.p1, "a2": self.a2, "p2": self.p2}

    # -- stationary equation -phi'' + c(w) phi - N(phi) = 0 ----------------

    def omega_ok(self, omega: float) -> bool:
        if self.kind == "nlkg":
            return omega * omega < 1.0
        return omega > 0.0

    def linear_coeff(self, omega: float) -> float:
        return 1.0 - omega * omega if self.kind == "nlkg" else float(omega)

    def linear_coeff_domega(self, omega: float) -> float:
        return -2.0 * omega if self.kind == "nlkg" else 1.0

    def decay_rate(self, omega: float) -> float:
        return float(np.sqrt(self.linear_coeff(omega)))

    def _terms(self):
        if self.kind == "nlkg":
            return ((1.0, self.p),)
        return ((self.a1, self.p1), (self.a2, self.p2))

    def nonlinearity(self, u):
        """N(u) = sum a |u|^{q-1} u (complex safe)."""
        m = np.abs(u)
        return sum(a * m ** (q - 1) * u for a, q in self._terms())

    def nonlinearity_real_derivative(self, phi):
        """N'(phi) for real phi: sum a q |phi|^{q-1}."""
        m = np.abs(phi)
        return sum(a * q * m ** (q - 1) for a, q in self._terms())

    def nonlinearity_over_u(self, phi):
        """N(phi)/phi = sum a |phi|^{q-1} (the L- potential)."""
        m = np.abs(phi)
        return sum(a * m ** (q - 1) for a, q in self._terms())

    def nonlinearity_second_derivative(self, phi):
        """N''(phi) for real phi, set to 0 where phi vanishes."""
        m = np.abs(phi)
        out = np.zeros_like(m)
        nz = m > 0
        for a, q in self._terms():
            out[nz] += a * q * (q - 1) * m[nz] ** (q - 2) * np.sign(phi[nz])
        return out

    def potential(self, m):
        """G(|u|) with int G = the nonlinear part of the energy (E = ... - int G)."""
        return sum(a / (q + 1) * m ** (q + 1) for a, q in self._terms())


@dataclass(frozen=True, eq=False)
class State:
    """Complex grid function(s): ``(u, v)`` for NLKG, ``(u,)`` for DPNLS."""

    model: ModelSpec
    grid: RadialGrid
    fields: tuple = field(default=())

    def __post_init__(self):
        fs = tuple(np.asarray(f, dtype=complex) for f in self.fields)
        if len(fs) != self.model.n_fields:
            raise ValueError(f"{self.model.kind} expects {self.model.n_fields} field(s)")
        for f in fs:
            if f.shape != (self.grid.n,):
                raise ValueError("field length does not match grid")
            if not np.all(np.isfinite(f)):
                raise ValueError("non-finite field values")
        object.__setattr__(self, "fields", fs)

    @property
    def u(self) -> np.ndarray:
        return self.fields[0]

    @property
    def v(self) -> np.ndarray:
        return self.fields[1]

    def _new(self, fs) -> "State":
        return State(self.model, self.grid, tuple(fs))

    def __add__(self, other: "State") -> "State":
        return self._new(a + b for a, b in zip(self.fields, other.fields))

    def __sub__(self, other: "State") -> "State":
        return self._new(a - b for a, b in zip(self.fields, other.fields))

    def __mul__(self, c) -> "State":
        return self._new(c * a for a in self.fields)

    __rmul__ = __mul__

    def __neg__(self) -> "State":
        return self * -1.0

    def copy(self) -> "State":
        return self._new(a.copy() for a in self.fields)


def zero_state(model: ModelSpec, grid: RadialGrid) -> State:
    return State(model, grid, tuple(np.zeros(grid.n, complex) for _ in range(model.n_fields)))


def random_state(model: ModelSpec, grid: RadialGrid, rng, scale: float = 1.0,
                 width: float = 3.0) -> State:
    """Smooth-ish random state localized within ``width`` of the origin."""
    env = np.exp(-(grid.r / width) ** 2)
    fs = []
    for _ in range(model.n_fields):
        c = rng.normal(size=4) + 1j * rng.normal(size=4)
        poly = sum(c[k] * (grid.r / width) ** (2 * k) for k in range(4))
        fs.append(scale * env * poly)
    return State(model, grid, tuple(fs))


# -- inner products ------------------------------------------------------

def inner(a: State, b: State) -> float:
    """Real L^2 pairing <a, b> = Re int a conj(b), summed over components."""
    w = a.grid.weights
    return float(sum(np.dot(w, (x * np.conj(y)).real) for x, y in zip(a.fields, b.fields)))


def complex_xinner(a: State, b: State) -> complex:
    """Complex X pairing int a conj(b) (+ gradient term on u)."""
    g = a.grid
    w = g.weights
    z = 0j
    for k, (x, y) in enumerate(zip(a.fields, b.fields)):
        z += np.dot(w, x * np.conj(y))
        if k == 0:
            dx, dy = np.diff(x, append=0.0), np.diff(y, append=0.0)
            z += np.sum(g.faces * dx * np.conj(dy)) / g.h
    return complex(z)


def xinner(a: State, b: State) -> float:
    return complex_xinner(a, b).real


def xnorm(s: State) -> float:
    """Discrete X norm: H^1 on u, plus L^2 on v for NLKG."""
    return float(np.sqrt(max(xinner(s, s), 0.0)))


# -- functionals ---------------------------------------------------------

def evaluate_energy(s: State) -> float:
    g, m = s.grid, s.model
    u = s.u
    e = 0.5 * g.dirichlet_form(u) - g.integrate(m.potential(np.abs(u)))
    if m.kind == "nlkg":
        e += 0.5 * g.integrate(np.abs(s.v) ** 2 + np.abs(u) ** 2)
    return float(e)


def evaluate_charge(s: State) -> float:
    g = s.grid
    if s.model.kind == "nlkg":
        return g.integrate((np.conj(s.u) * s.v).imag)
    return -0.5 * g.integrate(np.abs(s.u) ** 2)


def evaluate_action(s: State, omega: float) -> float:
    return evaluate_energy(s) - omega * evaluate_charge(s)


_OPS = ("T", "J", "J_inv", "B", "generator")


def apply_symmetry(s: State, which: str, param: float = 0.0) -> State:
    """Apply T(param), J, J^{-1}, B or the generator T'(0) = i."""
    if which not in _OPS:
        raise ValueError(f"unknown operator {which!r}; expected one of {_OPS}")
    if which == "T":
        return s * np.exp(1j * param)
    if which == "generator":
        return s * 1j
    if s.model.kind == "nlkg":
        u, v = s.fields
        if which == "J":
            return s._new((v, -u))
        if which == "J_inv":
            return s._new((-v, u))
        return s._new((-1j * v, 1j * u))
    u = s.u
    if which == "J":
        return s._new((-1j * u,))
    if which == "J_inv":
        return s._new((1j * u,))
    return s._new((-u,))


def energy_gradient(s: State) -> State:
    """E'(s) represented in the weighted L^2 pairing."""
    g, m = s.grid, s.model
    u = s.u
    gu = g.neg_laplacian(u) - m.nonlinearity(u)
    if m.kind == "nlkg":
        return s._new((gu + u, s.v.copy()))
    return s._new((gu,))


def charge_gradient(s: State) -> State:
    return apply_symmetry(s, "B")


def action_gradient(s: State, omega: float) -> State:
    return energy_gradient(s) - omega * charge_gradient(s)


def state_from_arrays(model: ModelSpec, grid: RadialGrid, arrays: Sequence) -> State:
    return State(model, grid, tuple(arrays))
