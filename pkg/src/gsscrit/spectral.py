"""Linearized operators at a bound state and their low spectrum.

The Hessian of the action at ``Phi_w`` splits into two real scalar operators
acting on the real and imaginary parts of the ``u`` perturbation,

    L+ = -Lap + c(w) - N'(phi),      L- = -Lap + c(w) - N(phi)/phi.

For NLKG the momentum part is absorbed by completing the square,
``|dv - i w du|^2``, so the negative count and kernel of the full Hessian are
those of ``L+`` and ``L-`` (see docs/derivations.md).  Both are symmetrized
with the quadrature weights, ``W^{-1/2} (K + W V) W^{-1/2}``, giving symmetric
tridiagonal matrices.  Eigenvalues come from Sturm-sequence bisection and
eigenvectors from inverse iteration.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh, solve_banded

from .core import ModelSpec
from .grid import RadialGrid
from .profiles import Profile, profile_omega_derivative, solve_profile

__all__ = [
    "LinearizedOperators", "SpectralReport", "assemble_linearized", "sturm_count",
    "bisect_eigenvalues", "inverse_iteration", "lowest_eigenpairs", "check_spectral_assumptions",
    "verify_SB_identity", "estimate_coercivity",
]


@dataclass
class LinearizedOperators:
    model: ModelSpec
    omega: float
    grid: RadialGrid
    lplus: tuple  # (diag, offdiag) of the symmetrized L+
    lminus: tuple
    potential_plus: np.ndarray
    potential_minus: np.ndarray

    @property
    def sqrt_w(self) -> np.ndarray:
        return np.sqrt(self.grid.weights)

    def apply(self, which: str, u) -> np.ndarray:
        """Physical-space action, W^{-1} K u + V u."""
        V = self.potential_plus if which == "plus" else self.potential_minus
        return self.grid.neg_laplacian(u) + V * u


def assemble_linearized(prof: Profile) -> LinearizedOperators:
    m, w, g = prof.model, prof.omega, prof.grid
    c = m.linear_coeff(w)
    Vp = c - m.nonlinearity_real_derivative(prof.phi)
    Vm = c - m.nonlinearity_over_u(prof.phi)
    d0, off = g.symmetric_laplacian()
    return LinearizedOperators(m, w, g, (d0 + Vp, off.copy()), (d0 + Vm, off.copy()), Vp, Vm)


# -- symmetric tridiagonal eigen-machinery ------------------------------------

def sturm_count(diag, off, x: float) -> int:
    """Number of eigenvalues strictly below x (LDL^T pivots)."""
    b2 = (np.asarray(off) ** 2).tolist()
    a = np.asarray(diag).tolist()
    count = 0
    q = a[0] - x
    tiny = 1e-300
    if q < 0:
        count += 1
    for i in range(1, len(a)):
        if q == 0.0:
            q = tiny
        q = a[i] - x - b2[i - 1] / q
        if q < 0:
            count += 1
    return count


def _gershgorin(diag, off):
    r = np.zeros_like(diag)
    r[:-1] += np.abs(off)
    r[1:] += np.abs(off)
    return float(np.min(diag - r)), float(np.max(diag + r))


def bisect_eigenvalues(diag, off, k: int, tol: float = 1e-11) -> np.ndarray:
    """The k smallest eigenvalues by bisection on the Sturm count."""
    lo0, hi0 = _gershgorin(np.asarray(diag, float), np.asarray(off, float))
    out = np.empty(k)
    lo_prev = lo0
    for i in range(k):
        lo, hi = lo_prev, hi0
        while hi - lo > tol * max(1.0, abs(lo), abs(hi)) and hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if sturm_count(diag, off, mid) > i:
                hi = mid
            else:
                lo = mid
        out[i] = 0.5 * (lo + hi)
        lo_prev = lo
    return out


def inverse_iteration(diag, off, lam: float, iters: int = 4, seed: int = 0) -> np.ndarray:
    n = len(diag)
    shift = lam + 1e-13 * max(1.0, abs(lam))
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1] = np.asarray(diag) - shift
    ab[2, :-1] = off
    y = np.random.default_rng(seed).normal(size=n)
    y /= np.linalg.norm(y)
    for _ in range(iters):
        try:
            y = solve_banded((1, 1), ab, y)
        except np.linalg.LinAlgError:
            ab[1] -= 1e-12 * max(1.0, abs(lam))
            y = solve_banded((1, 1), ab, y)
        y /= np.linalg.norm(y)
    return y if y[np.argmax(np.abs(y))] > 0 else -y


def lowest_eigenpairs(ops: LinearizedOperators, which: str = "plus", k: int = 3,
                      tol: float = 1e-11):
    """k smallest eigenvalues and physical-space eigenvectors (unit weighted L^2 norm)."""
    diag, off = ops.lplus if which == "plus" else ops.lminus
    vals = bisect_eigenvalues(diag, off, k, tol)
    vecs = np.array([inverse_iteration(diag, off, v) / ops.sqrt_w for v in vals])
    return vals, vecs


@dataclass
class SpectralReport:
    omega: float
    n_negative: int
    n_negative_pairs: int
    min_eigenvalues: list
    kernel_candidates: dict
    kernel_dim: int
    gap: float
    k0_estimate: Optional[float]
    passes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.passes.values())

    def to_dict(self) -> dict:
        return {"omega": self.omega, "n_negative": self.n_negative,
                "n_negative_pairs": self.n_negative_pairs,
                "min_eigenvalues": [[float(v), t] for v, t in self.min_eigenvalues],
                "kernel_candidates": self.kernel_candidates, "kernel_dim": self.kernel_dim,
                "gap": self.gap, "k0_estimate": self.k0_estimate, "passes": self.passes}


def check_spectral_assumptions(prof: Profile, k: int = 4, kernel_tol: float = 1e-6,
                               with_k0: bool = True) -> SpectralReport:
    """Negative count, kernel and gap of the Hessian at phi_w (even/radial sector)."""
    ops = assemble_linearized(prof)
    vp, _ = lowest_eigenpairs(ops, "plus", k)
    vm, _ = lowest_eigenpairs(ops, "minus", k)
    n_neg = (sturm_count(*ops.lplus, -kernel_tol) + sturm_count(*ops.lminus, -kernel_tol))
    n_neg_pairs = int(np.sum(vp < -kernel_tol) + np.sum(vm < -kernel_tol))
    n_small = (sturm_count(*ops.lplus, kernel_tol) + sturm_count(*ops.lminus, kernel_tol)) - n_neg
    phi = prof.phi
    g = prof.grid
    nrm = g.integrate(phi**2)
    kern = {"phase_Lminus": g.integrate(phi * ops.apply("minus", phi)) / nrm}
    pos = np.concatenate([vp[vp > kernel_tol], vm[vm > kernel_tol]])
    gap = float(pos.min()) if pos.size else float("nan")
    mins = [(v, f"L+[{i}]") for i, v in enumerate(vp)] + [(v, f"L-[{i}]") for i, v in enumerate(vm)]
    mins.sort(key=lambda t: t[0])
    k0 = estimate_coercivity(prof) if with_k0 else None
    passes = {"one_negative": n_neg == 1, "kernel_is_phase": n_small == 1 and abs(kern["phase_Lminus"]) < kernel_tol,
              "gap_positive": bool(np.isfinite(gap) and gap > 0), "sturm_matches_pairs": n_neg == n_neg_pairs}
    if with_k0:
        passes["coercive"] = bool(k0 is not None and k0 > 0)
    return SpectralReport(prof.omega, n_neg, n_neg_pairs, [(float(v), t) for v, t in mins[:k]],
                          kern, n_small, gap, k0, passes)


def verify_SB_identity(prof: Profile, dphi: Optional[np.ndarray] = None,
                       method: str = "fd") -> float:
    """Relative weighted-L^2 residual of L+ d_w phi = -c'(w) phi.

    The derivative defaults to central differences over w (``fd``), which is
    independent of the linear solve that defines it on the other side.  At
    w where the right side vanishes the absolute residual is returned.
    """
    if dphi is None:
        dphi = prof.dphi_domega if prof.dphi_domega is not None else profile_omega_derivative(prof, method)
    ops = assemble_linearized(prof)
    g = prof.grid
    rhs = -prof.model.linear_coeff_domega(prof.omega) * prof.phi
    res = ops.apply("plus", dphi) - rhs
    num = np.sqrt(g.integrate(res**2))
    den = np.sqrt(g.integrate(rhs**2))
    return float(num / den) if den > 0 else float(num)


# -- coercivity on the constrained subspace ------------------------------------

def _sector_problems(prof: Profile, dphi: np.ndarray, constraints: Sequence[str]):
    """Yield (A, B, G) for each real sector; G are constraint vectors in symmetric coordinates."""
    ops = assemble_linearized(prof)
    g = prof.grid
    n = g.n
    s = ops.sqrt_w
    w = prof.omega
    phi = prof.phi
    d0, off = g.symmetric_laplacian()
    T0 = sp.diags([off, d0, off], [-1, 0, 1], format="csr")
    Tp = sp.diags([ops.lplus[1], ops.lplus[0], ops.lplus[1]], [-1, 0, 1], format="csr")
    Tm = sp.diags([ops.lminus[1], ops.lminus[0], ops.lminus[1]], [-1, 0, 1], format="csr")
    I = sp.identity(n, format="csr")
    Xu = T0 + I
    if prof.model.kind == "nlkg":
        # sector a: (Re u, Im v); form <L+ x, x> + |y - w x|^2
        Aa = sp.bmat([[Tp + w * w * I, -w * I], [-w * I, I]], format="csc")
        Ba = sp.bmat([[Xu, None], [None, I]], format="csc")
        Ga = []
        if "domega" in constraints:
            Ga.append(np.concatenate([s * dphi, s * (phi + w * dphi)]))
        if "B" in constraints:
            Ga.append(np.concatenate([s * w * phi, s * phi]))
        # sector b: (Im u, Re v); form <L- x, x> + |y + w x|^2
        Ab = sp.bmat([[Tm + w * w * I, w * I], [w * I, I]], format="csc")
        Bb = Ba
        Gb = [np.concatenate([s * phi, -w * s * phi])] if "generator" in constraints else []
    else:
        Aa, Ba = Tp.tocsc(), Xu.tocsc()
        Ga = []
        if "domega" in constraints:
            Ga.append(s * dphi)
        if "B" in constraints:
            Ga.append(s * phi)
        Ab, Bb = Tm.tocsc(), Xu.tocsc()
        Gb = [s * phi] if "generator" in constraints else []
    return [(Aa, Ba, Ga), (Ab, Bb, Gb)]


def _constrained_min(A, B, G) -> float:
    """Smallest eigenvalue of the pencil (A, B) on the Euclidean complement of G (dense)."""
    A = A.toarray()
    B = B.toarray()
    n = A.shape[0]
    if G:
        Gm = np.column_stack(G)
        q, _ = np.linalg.qr(Gm, mode="complete")
        Z = q[:, Gm.shape[1]:]
        A = Z.T @ A @ Z
        B = Z.T @ B @ Z
    return float(eigh(A, B, subset_by_index=[0, 0], eigvals_only=True)[0])


def estimate_coercivity(prof: Profile, constraints: Sequence[str] = ("generator", "domega", "B"),
                        n_max: int = 768) -> float:
    """min <H w, w> / ||w||_X^2 over w orthogonal (in L^2) to the chosen directions.

    ``constraints`` is any subset of {"generator", "domega", "B"}: the phase
    direction T'(0) Phi, the frequency derivative d_w Phi and B Phi.  The
    projected pencil is solved densely; profiles on grids finer than
    ``n_max`` points are first re-solved on an ``n_max``-point grid with the
    same radius, so the result is a discrete estimate on that grid.
    """
    g = prof.grid
    if g.n > n_max:
        g2 = RadialGrid(g.dim, n_max, g.R)
        prof = solve_profile(prof.model, prof.omega, g2, tol=max(prof.residual, 1e-11),
                             guess=np.interp(g2.r, g.r, prof.phi))
    dphi = profile_omega_derivative(prof)
    mins = [_constrained_min(A, B, G) for A, B, G in _sector_problems(prof, dphi, constraints)]
    return float(min(mins))
