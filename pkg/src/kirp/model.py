"""Kicked Ising model parameters, gate superoperators and the observable catalog.

One Floquet period applies the interaction kick exp(i tau sum_j z_j z_{j+1}),
the longitudinal kick exp(i tau h_z sum_j z_j) and the transverse kick
exp(i tau h_x sum_j x_j).  On Pauli coefficient columns (digit order: identity,
x, y, z) each gate acts as a real orthogonal matrix built from 2x2 rotation
blocks; the Heisenberg step applies the two-site interaction blocks first,
then the z rotations, then the x rotations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pauli import PauliString, Sector

# digit order used throughout: 0=identity, 1=x, 2=y, 3=z
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_MATRICES = (np.eye(2, dtype=complex), _SX, _SY, _SZ)


@dataclass(frozen=True)
class ModelParams:
    """Kick period tau, transverse field h_x, longitudinal field h_z."""

    tau: float
    hx: float
    hz: float

    @property
    def is_singular_tau(self) -> bool:
        """tau an odd multiple of pi/4: the truncated propagator is singular."""
        return abs(math.cos(2 * self.tau)) < 1e-12


@dataclass(frozen=True)
class GateSet:
    """Superoperator matrices of the three gate layers, digit-ordered.

    ``ozz`` is indexed by 4*d_left + d_right (left site varies slowest,
    matching the site ordering of the propagation window).  ``one_site``
    is the fused ox @ oz applied after the interaction layer.
    """

    ox: np.ndarray
    oz: np.ndarray
    ozz: np.ndarray
    one_site: np.ndarray


def _rotation(theta: float) -> tuple[float, float]:
    return math.cos(2 * theta), math.sin(2 * theta)


def _one_site_gate(theta: float, block: tuple[int, int]) -> np.ndarray:
    c, s = _rotation(theta)
    m = np.eye(4)
    i, j = block
    m[i, i] = c
    m[j, j] = c
    m[j, i] = s
    m[i, j] = -s
    return m


def build_gates(p: ModelParams) -> GateSet:
    """Exact gate superoperators for one Floquet step."""
    ox = _one_site_gate(p.tau * p.hx, (2, 3))  # rotates (y, z)
    oz = _one_site_gate(p.tau * p.hz, (1, 2))  # rotates (x, y)
    c, s = _rotation(p.tau)
    ozz = np.eye(16)
    # rotated pairs, each (a, b) meaning a -> c*a + s*b, b -> -s*a + c*b
    pairs = [("ZX", "1Y"), ("XZ", "Y1"), ("1X", "ZY"), ("X1", "YZ")]
    for la, lb in pairs:
        da, db = PauliString.from_label(la).digits, PauliString.from_label(lb).digits
        i = 4 * da[0] + da[1]
        j = 4 * db[0] + db[1]
        ozz[i, i] = c
        ozz[j, j] = c
        ozz[j, i] = s
        ozz[i, j] = -s
    return GateSet(ox=ox, oz=oz, ozz=ozz, one_site=ox @ oz)


def dense_window_unitary(p: ModelParams, n_sites: int) -> np.ndarray:
    """Dense unitary whose Heisenberg conjugation the gate layers reproduce.

    Interaction on all nearest-neighbour pairs of the open window, then z and
    x rotations on every site, composed in the same order as the
    superoperator layers: U = U_zz U_z U_x, a -> U^dag a U.
    """
    dim = 2**n_sites
    u = np.eye(dim, dtype=complex)
    for s in range(n_sites):
        u = _one_site_embed(_rot_gate(p.tau * p.hx, _SX), s, n_sites) @ u
    for s in range(n_sites):
        u = _one_site_embed(_rot_gate(p.tau * p.hz, _SZ), s, n_sites) @ u
    for s in range(n_sites - 1):
        u = _two_site_embed(_zz_gate(p.tau), s, n_sites) @ u
    return u


def _rot_gate(theta: float, sigma: np.ndarray) -> np.ndarray:
    return math.cos(theta) * np.eye(2) + 1j * math.sin(theta) * sigma


def _zz_gate(tau: float) -> np.ndarray:
    zz = np.kron(_SZ, _SZ)
    return math.cos(tau) * np.eye(4) + 1j * math.sin(tau) * zz


def _one_site_embed(g: np.ndarray, site: int, n: int) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for s in range(n):
        out = np.kron(out, g if s == site else np.eye(2))
    return out


def _two_site_embed(g: np.ndarray, site: int, n: int) -> np.ndarray:
    out = np.eye(2**site, dtype=complex)
    out = np.kron(out, g)
    return np.kron(out, np.eye(2 ** (n - site - 2)))


def pauli_matrix(digits: tuple[int, ...]) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for d in digits:
        out = np.kron(out, PAULI_MATRICES[d])
    return out


@dataclass(frozen=True)
class ConvertedParams:
    """Single-kick parametrization equivalent to (tau, h_x, h_z).

    The composed one-site rotation exp(i a sx) exp(i b sz) equals
    exp(i gamma n.sigma); rotating the axis into the x-z plane gives field
    components hx_alt = gamma sin(theta), hz_alt = gamma cos(theta) with the
    coupling J = tau unchanged.
    """

    gamma: float
    theta: float
    J: float
    hx_alt: float
    hz_alt: float
    degenerate: bool = False


def convert_params(p: ModelParams) -> ConvertedParams:
    alpha = p.tau * p.hx
    beta = p.tau * p.hz
    cos_gamma = math.cos(alpha) * math.cos(beta)
    gamma = math.acos(np.clip(cos_gamma, -1.0, 1.0))
    sin_gamma = math.sin(gamma)
    if abs(sin_gamma) < 1e-14:
        return ConvertedParams(gamma=0.0 if cos_gamma > 0 else math.pi, theta=float("nan"),
                               J=p.tau, hx_alt=0.0, hz_alt=0.0, degenerate=True)
    theta = math.atan2(math.sin(alpha), math.cos(alpha) * math.sin(beta))
    return ConvertedParams(gamma=gamma, theta=theta, J=p.tau,
                           hx_alt=gamma * math.sin(theta), hz_alt=gamma * math.cos(theta))


def invert_params(J: float, hx_alt: float, hz_alt: float) -> ModelParams:
    """Native (tau, h_x, h_z) for a single-kick parametrization."""
    gamma = math.hypot(hx_alt, hz_alt)
    if gamma < 1e-14:
        return ModelParams(tau=J, hx=0.0, hz=0.0)
    theta = math.atan2(hx_alt, hz_alt)
    # sin(gamma) sin(theta) = sin(alpha); cos(gamma) = cos(alpha) cos(beta)
    alpha = math.asin(np.clip(math.sin(gamma) * math.sin(theta), -1.0, 1.0))
    beta = math.atan2(math.sin(gamma) * math.cos(theta), math.cos(gamma))
    return ModelParams(tau=J, hx=alpha / J, hz=beta / J)


def rotation_axis(p: ModelParams) -> tuple[float, np.ndarray]:
    """Angle gamma and unit axis n with exp(i a sx) exp(i b sz) = exp(i gamma n.sigma)."""
    alpha = p.tau * p.hx
    beta = p.tau * p.hz
    gamma = math.acos(np.clip(math.cos(alpha) * math.cos(beta), -1.0, 1.0))
    sg = math.sin(gamma)
    if abs(sg) < 1e-14:
        return gamma, np.array([0.0, 0.0, 1.0])
    n = np.array([
        math.sin(alpha) * math.cos(beta),
        math.sin(alpha) * math.sin(beta),
        math.cos(alpha) * math.sin(beta),
    ]) / sg
    return gamma, n


@dataclass(frozen=True)
class Observable:
    """Extensive observable sum_j e^{-ikj} T^j(density), or a strictly local one.

    ``density`` lists canonical strings with real coefficients; ``sector``
    is the momentum/parity sector the translational sum belongs to.
    """

    name: str
    sector: Sector
    density: tuple[tuple[PauliString, float], ...]
    local: bool = False

    @property
    def support(self) -> int:
        return max(a.last_nonidentity() for a, _ in self.density)

    @property
    def squared_norm(self) -> float:
        """C(0) under the orthonormal Pauli inner product."""
        return float(sum(c * c for _, c in self.density))


OBSERVABLE_NAMES = ("Z", "X", "E", "J", "sZ", "local-x")


def observable(name: str, params: ModelParams | None = None) -> Observable:
    """Catalog of the observables used throughout; E needs the model's h_z."""
    if name == "Z":
        return Observable("Z", Sector.even(), ((PauliString.from_label("Z"), 1.0),))
    if name == "X":
        return Observable("X", Sector.even(), ((PauliString.from_label("X"), 1.0),))
    if name == "E":
        if params is None:
            raise ValueError("observable E needs model parameters (h_z)")
        return Observable(
            "E",
            Sector.even(),
            (
                (PauliString.from_label("ZZ"), -1.0),
                (PauliString.from_label("Z"), -params.hz),
            ),
        )
    if name == "J":
        return Observable(
            "J",
            Sector.odd(),
            (
                (PauliString.from_label("XY"), 1.0),
                (PauliString.from_label("YX"), -1.0),
            ),
        )
    if name == "sZ":
        return Observable("sZ", Sector.momentum(math.pi), ((PauliString.from_label("Z"), 1.0),))
    if name == "local-x":
        return Observable("local-x", Sector.even(), ((PauliString.from_label("X"), 1.0),), local=True)
    raise ValueError(f"unknown observable {name!r}; choose from {OBSERVABLE_NAMES}")
