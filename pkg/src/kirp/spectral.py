"""Eigen- and singular-value analysis of the truncated propagator.

Dense full spectra at small r, restarted-Arnoldi leading eigenvalues through
the matrix-free kernel at large r, the exact singular-value check, the
single-ring annulus radii, and the conjectured lower bound on isolated
resonances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .model import ModelParams
from .pauli import Sector
from .propagator import DENSE_GUARD, PropagatorHandle


class ConjectureViolation(Exception):
    """Raised when a conjectured exact property fails beyond tolerance."""


@dataclass
class SpectrumResult:
    params: ModelParams
    sector: Sector
    r: int
    eigenvalues: np.ndarray  # sorted: modulus descending, argument ascending
    method: str  # "dense" | "krylov"
    residuals: np.ndarray | None = None
    converged: np.ndarray | None = None
    leading_vector: np.ndarray | None = field(default=None, repr=False)

    @property
    def lambda1(self) -> complex:
        return complex(self.eigenvalues[0])


def _sort_eigs(vals: np.ndarray, *arrays: np.ndarray | None):
    order = np.lexsort((np.angle(vals), -np.abs(vals)))
    sorted_arrays = tuple(a[order] if a is not None else None for a in arrays)
    return vals[order], sorted_arrays


def full_spectrum(h: PropagatorHandle, want_vector: bool = False,
                  size_guard: int = DENSE_GUARD) -> SpectrumResult:
    """All eigenvalues of the dense materialized matrix."""
    m = h.materialize_dense(size_guard=size_guard)
    if want_vector:
        vals, vecs = scipy.linalg.eig(m)
        vals, (vecs_t,) = _sort_eigs(vals, vecs.T)
        x1 = vecs_t[0]
        res = np.abs(m @ x1 - vals[0] * x1)
        residuals = np.full(vals.shape, np.nan)
        residuals[0] = np.linalg.norm(res) / np.linalg.norm(x1)
        x1 = _fix_phase(x1)
    else:
        vals = scipy.linalg.eigvals(m)
        vals, _ = _sort_eigs(vals)
        x1 = None
        residuals = None
    return SpectrumResult(params=h.params, sector=h.sector, r=h.r, eigenvalues=vals,
                          method="dense", residuals=residuals, leading_vector=x1)


def _fix_phase(x: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(x)))
    ph = x[i] / abs(x[i])
    x = x / ph
    if np.abs(x.imag).max() < 1e-9 * max(1.0, np.abs(x.real).max()):
        x = x.real.astype(np.float64)
    return x / np.linalg.norm(x)


def leading_eigenvalues(h: PropagatorHandle, n: int = 4, tol: float = 1e-9,
                        max_iter: int = 2000, seed: int = 7,
                        ncv: int | None = None,
                        want_vector: bool = False) -> SpectrumResult:
    """n largest-modulus eigenvalues via implicitly restarted Arnoldi.

    Deterministic for a fixed seed; residuals ||Mx - lx||/||x|| are computed
    explicitly and eigenpairs above ``tol`` are flagged as non-converged.
    """
    if n > 20:
        raise ValueError("leading_eigenvalues is meant for small n (<= 20)")
    size = h.size
    op = spla.LinearOperator((size, size), matvec=h.apply, dtype=h.dtype)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(size)
    if ncv is None:
        ncv = min(size, max(4 * n + 4, 24))
    try:
        vals, vecs = spla.eigs(op, k=n, which="LM", v0=v0, ncv=ncv,
                               tol=tol, maxiter=max_iter)
    except spla.ArpackNoConvergence as exc:
        vals, vecs = exc.eigenvalues, exc.eigenvectors
        if vals.size == 0:
            raise
    residuals = np.empty(vals.size)
    for i in range(vals.size):
        x = vecs[:, i]
        residuals[i] = np.linalg.norm(h.apply(x) - vals[i] * x) / np.linalg.norm(x)
    vals, (residuals, vecs_t) = _sort_eigs(vals, residuals, vecs.T)
    x1 = _fix_phase(vecs_t[0]) if want_vector else None
    return SpectrumResult(params=h.params, sector=h.sector, r=h.r, eigenvalues=vals,
                          method="krylov", residuals=residuals,
                          converged=residuals < max(tol, 1e-12) * 100,
                          leading_vector=x1)


def predicted_singular_values(tau: float, r: int) -> tuple[np.ndarray, np.ndarray]:
    """The three exact levels (1, |cos 2tau|, cos^2 2tau) and their multiplicities.

    The (5, 2, 5) * 4**(r-2) multiplicity pattern holds for r >= 3; at r = 2
    the observed multiplicities are (6, 0, 6) (the middle level is absent),
    verified against an independent construction of the propagator.
    """
    if r < 2:
        raise ValueError("the singular-value prediction needs r >= 2")
    c = math.cos(2 * tau)
    levels = np.array([1.0, abs(c), c * c])
    mult = np.array([6, 0, 6]) if r == 2 else np.array([5, 2, 5]) * 4 ** (r - 2)
    return levels, mult


@dataclass
class SingularCheck:
    levels: np.ndarray
    multiplicities: np.ndarray
    max_deviation: float
    ok: bool
    tolerance: float
    values: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]


def singular_values(h: PropagatorHandle, interaction_only: bool = False,
                    tol: float = 1e-8, size_guard: int = DENSE_GUARD) -> SingularCheck:
    """Dense singular values clustered against the exact three-level prediction.

    A deviation beyond ``tol`` is reported as a conjecture violation in the
    returned verdict, never silently absorbed.
    """
    if h.sector.is_parity:
        raise ValueError("the multiplicity prediction applies to full momentum sectors")
    m = h.materialize_dense(interaction_only=interaction_only, size_guard=size_guard)
    sv = np.sort(np.linalg.svd(m, compute_uv=False))[::-1]
    levels, mult = predicted_singular_values(h.params.tau, h.r)
    expected = np.repeat(levels, mult)
    dev = float(np.abs(sv - expected).max())
    return SingularCheck(levels=levels, multiplicities=mult, max_deviation=dev,
                         ok=dev < tol, tolerance=tol, values=sv)


@dataclass(frozen=True)
class RingPrediction:
    """Annulus radii of the eigenvalue cloud and the resonance lower bound."""

    tau: float
    r_in: float
    r_out: float

    @property
    def bound(self) -> float:
        """Conjectured lower bound on the modulus of isolated resonances."""
        return self.r_out


def ring_prediction(tau: float) -> RingPrediction:
    """Single-ring radii from the second moments of the singular values."""
    c2 = math.cos(2 * tau) ** 2
    r_out = math.sqrt((5 + 2 * c2 + 5 * c2 * c2) / 12)
    if c2 < 1e-300:
        r_in = 0.0
    else:
        r_in = math.sqrt(12 / (5 + 2 / c2 + 5 / (c2 * c2)))
    return RingPrediction(tau=tau, r_in=r_in, r_out=r_out)


MIN_R_OUT = math.sqrt(5.0 / 12.0)


def condition_number(tau: float) -> float:
    """s_max / s_min = 1 / cos^2(2 tau); infinite at odd multiples of pi/4."""
    c2 = math.cos(2 * tau) ** 2
    if c2 < 1e-24:
        return math.inf
    return 1.0 / c2


def nonzero_eigenvalue_count(h: PropagatorHandle, power: int = 8,
                             tol: float = 1e-8,
                             size_guard: int = DENSE_GUARD) -> int:
    """Number of nonzero eigenvalues, counted with algebraic multiplicity.

    Defective zero eigenvalues make direct dense eigensolves scatter spurious
    moduli up to ~1e-6; the rank of M**power is robust once ``power`` exceeds
    the nilpotency index of the zero block (the light cone keeps it small).
    """
    m = h.materialize_dense(size_guard=size_guard)
    mp = np.linalg.matrix_power(m, power)
    sv = np.linalg.svd(mp, compute_uv=False)
    return int((sv > tol).sum())


def extrapolate_lambda1(rs, lambdas) -> tuple[float, float, float]:
    """Least-squares fit |lambda1|(r) = lam_inf + c / r^2.

    Returns (lam_inf, c, rms residual).
    """
    rs = np.asarray(rs, dtype=float)
    lam = np.abs(np.asarray(lambdas))
    if rs.size < 2:
        raise ValueError("need at least two r values to extrapolate")
    a = np.column_stack([np.ones_like(rs), rs**-2.0])
    coef, *_ = np.linalg.lstsq(a, lam, rcond=None)
    resid = float(np.sqrt(np.mean((a @ coef - lam) ** 2)))
    return float(coef[0]), float(coef[1]), resid


def bound_verdict(spec: SpectrumResult, margin: float = 1e-9) -> dict:
    """Count eigenvalues outside the predicted outer radius and check the bound."""
    ring = ring_prediction(spec.params.tau)
    mods = np.abs(spec.eigenvalues)
    outside = int(np.sum(mods > ring.r_out + margin))
    lam1 = float(mods[0])
    return {
        "r_in": ring.r_in,
        "r_out": ring.r_out,
        "lambda1_abs": lam1,
        "n_outside": outside,
        "bound_ok": bool(lam1 > ring.r_out - margin) if outside else True,
    }
