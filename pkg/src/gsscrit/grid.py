"""Radial / even-line discretization.

Nodes sit at ``r_j = j*h`` for ``j = 0..n-1`` with a homogeneous Dirichlet
node at ``r_n = R``.  Everything is written in finite-volume form: each node
owns a control volume ``w_j`` (the quadrature weight) and neighbouring nodes
exchange flux through faces of area ``a_{j+1/2}``.  The discrete Dirichlet form

    sum_j a_{j+1/2} |u_{j+1} - u_j|^2 / h

is ``u^T K u`` with ``K`` symmetric tridiagonal, and ``W^{-1} K`` is the
discrete ``-Laplacian``.  Because the same ``K`` is used for the energy and for
the profile equation, discrete bound states are exact critical points of the
discrete action.

In one dimension the geometry is the even line: the integral over R is twice
the half-line integral, so ``w_0 = h`` and ``w_j = 2h`` (trapezoidal rule).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gamma, pi

import numpy as np

__all__ = ["RadialGrid", "sphere_area"]


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere in R^dim (2 for dim=1)."""
    return 2.0 * pi ** (dim / 2.0) / gamma(dim / 2.0)


@dataclass(frozen=True)
class RadialGrid:
    dim: int
    n: int
    R: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.n < 8:
            raise ValueError("need at least 8 grid points")
        if not self.R > 0:
            raise ValueError("R must be positive")

    @classmethod
    def from_spacing(cls, dim: int, h: float, R: float) -> "RadialGrid":
        return cls(dim, int(round(R / h)), float(R))

    @property
    def h(self) -> float:
        return self.R / self.n

    @property
    def geometry(self) -> str:
        return "even-line" if self.dim == 1 else "radial"

    @cached_property
    def r(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    @cached_property
    def faces(self) -> np.ndarray:
        """Face areas a_{j+1/2}, j = 0..n-1 (the last face touches the Dirichlet node)."""
        rf = (np.arange(self.n) + 0.5) * self.h
        return sphere_area(self.dim) * rf ** (self.dim - 1)

    @cached_property
    def weights(self) -> np.ndarray:
        h, d = self.h, self.dim
        lo = np.maximum(self.r - 0.5 * h, 0.0)
        hi = self.r + 0.5 * h
        w = sphere_area(d) / d * (hi**d - lo**d)
        w.flags.writeable = False
        return w

    @cached_property
    def stiffness_bands(self) -> tuple[np.ndarray, np.ndarray]:
        """(diagonal, superdiagonal) of K."""
        a = self.faces / self.h
        diag = a.copy()
        diag[1:] += a[:-1]
        return diag, -a[:-1]

    # -- quadrature and differential forms -------------------------------

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f))

    def dirichlet_form(self, u, v=None) -> float:
        """Re sum a_{j+1/2} (u_{j+1}-u_j) conj(v_{j+1}-v_j) / h, Dirichlet at R."""
        du = np.diff(u, append=0.0)
        dv = du if v is None else np.diff(v, append=0.0)
        return float(np.sum(self.faces * (du * np.conj(dv)).real) / self.h)

    def neg_laplacian(self, u) -> np.ndarray:
        """W^{-1} K u."""
        diag, off = self.stiffness_bands
        Ku = diag * u
        Ku[:-1] += off * u[1:]
        Ku[1:] += off * u[:-1]
        return Ku / self.weights

    def laplacian_banded(self) -> np.ndarray:
        """W^{-1} K in LAPACK (1, 1) banded storage."""
        diag, off = self.stiffness_bands
        w = self.weights
        ab = np.zeros((3, self.n))
        ab[0, 1:] = off / w[:-1]
        ab[1] = diag / w
        ab[2, :-1] = off / w[1:]
        return ab

    def symmetric_laplacian(self) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and off-diagonal of W^{-1/2} K W^{-1/2}."""
        diag, off = self.stiffness_bands
        w = self.weights
        return diag / w, off / np.sqrt(w[:-1] * w[1:])

    def refined(self, factor: int = 2) -> "RadialGrid":
        return RadialGrid(self.dim, self.n * factor, self.R)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "n": self.n, "R": self.R, "h": self.h, "geometry": self.geometry}
