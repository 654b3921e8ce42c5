"""Autocorrelation functions: exact finite-ring, truncated-propagator, asymptotic.

The exact route evolves random states on a periodic ring of L qubits with the
same gate layers as the propagator (diagonal zz+z phases fused into one
table, then the transverse rotation on every site).  The truncated route
iterates the matrix-free propagator on the observable's density vector.  The
asymptotic route is c * |lambda1|^t from a spectral result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kernels import apply_gate_inplace
from .model import ModelParams, Observable
from .pauli import string_index
from .propagator import PropagatorHandle
from .spectral import SpectrumResult

MAX_RING_QUBITS = 26
CHECKPOINT_EVERY = 1000


@dataclass
class CorrelationSeries:
    times: np.ndarray
    values: np.ndarray
    method: str  # "exact" | "truncated" | "asymptotic"
    meta: dict = field(default_factory=dict)

    def real_values(self, tol: float = 1e-8) -> np.ndarray:
        if np.iscomplexobj(self.values):
            return self.values.real
        return self.values


class _Ring:
    """Precomputed tables for one (params, L) evolution."""

    def __init__(self, params: ModelParams, L: int):
        if L > MAX_RING_QUBITS:
            raise ValueError(f"L={L} exceeds the L<={MAX_RING_QUBITS} memory guard")
        self.params = params
        self.L = L
        dim = 1 << L
        idx = np.arange(dim, dtype=np.uint32 if L <= 31 else np.uint64)
        self.idx = idx
        rot = ((idx << np.uint32(1)) | (idx >> np.uint32(L - 1))) & np.uint32(dim - 1)
        nzz = L - 2 * np.bitwise_count(idx ^ rot).astype(np.int64)
        nz = L - 2 * np.bitwise_count(idx).astype(np.int64)
        self.diag_phase = np.exp(1j * params.tau * (nzz + params.hz * nz))
        th = params.tau * params.hx
        u2 = np.array([[math.cos(th), 1j * math.sin(th)],
                       [1j * math.sin(th), math.cos(th)]])
        self.u4 = np.kron(u2, u2)
        self.u2 = u2

    def step(self, psi: np.ndarray) -> None:
        """One Floquet period in place: diagonal kick, then x rotations."""
        psi *= self.diag_phase
        L = self.L
        s = 0
        while s + 1 < L:
            apply_gate_inplace(psi, self.u4, 1 << (L - 2 - s), 1 << s)
            s += 2
        if s < L:
            apply_gate_inplace(psi, self.u2, 1 << (L - 1 - s), 1 << s)

    def random_state(self, rng: np.random.Generator) -> np.ndarray:
        psi = rng.standard_normal(1 << self.L) + 1j * rng.standard_normal(1 << self.L)
        psi /= np.linalg.norm(psi)
        return psi


def _site_bit(site: int, L: int) -> int:
    return site % L


def _diagonal_of(obs: Observable, L: int) -> np.ndarray | None:
    """Diagonal of A when every density string is made of identity/z only."""
    if any(d in (1, 2) for a, _ in obs.density for d in a.digits):
        return None
    idx = np.arange(1 << L, dtype=np.uint32)
    k = obs.sector.k
    diag = np.zeros(1 << L, dtype=complex)
    shifts = [L // 2] if obs.local else range(L)
    for a, coeff in obs.density:
        zsites = [t for t, d in enumerate(a.digits) if d == 3]
        for j in shifts:
            sign = np.ones(1 << L, dtype=np.float64)
            for t in zsites:
                b = _site_bit(j + t, L)
                sign *= 1.0 - 2.0 * ((idx >> np.uint32(b)) & np.uint32(1)).astype(np.float64)
            diag += coeff * np.exp(-1j * k * j) * sign
    if np.abs(diag.imag).max() < 1e-12 * max(1.0, np.abs(diag.real).max()):
        return diag.real
    return diag


def apply_observable(obs: Observable, L: int, psi: np.ndarray,
                     dagger: bool = False) -> np.ndarray:
    """A |psi> (or A^dag |psi>) on the ring, one XOR gather per flip mask."""
    diag = _diagonal_cache(obs, L)
    if diag is not None:
        d = np.conj(diag) if dagger and np.iscomplexobj(diag) else diag
        return d * psi
    idx = np.arange(1 << L, dtype=np.uint32)
    k = obs.sector.k if not dagger else -obs.sector.k
    out = np.zeros_like(psi, dtype=complex)
    shifts = [L // 2] if obs.local else range(L)
    for j in shifts:
        # terms sharing a flip mask at this shift merge into a single gather
        groups: dict[int, np.ndarray] = {}
        for a, coeff in obs.density:
            mask = 0
            ny = 0
            zy_bits = []
            for t, d in enumerate(a.digits):
                b = _site_bit(j + t, L)
                if d in (1, 2):
                    mask |= 1 << b
                if d in (2, 3):
                    zy_bits.append(b)
                if d == 2:
                    ny += 1
            c = coeff * (1j**ny) * np.exp(-1j * k * j)
            v = psi * c
            for b in zy_bits:
                v *= 1.0 - 2.0 * ((idx >> np.uint32(b)) & np.uint32(1)).astype(np.float64)
            acc = groups.get(mask)
            groups[mask] = v if acc is None else acc + v
        for mask, v in groups.items():
            if mask == 0:
                out += v
            else:
                out += v[idx ^ np.uint32(mask)]
    return out


_DIAG_CACHE: dict[tuple, np.ndarray | None] = {}


def _diagonal_cache(obs: Observable, L: int) -> np.ndarray | None:
    key = (obs.name, obs.sector.kind, obs.sector.k, obs.density, obs.local, L)
    if key not in _DIAG_CACHE:
        if len(_DIAG_CACHE) > 8:
            _DIAG_CACHE.clear()
        _DIAG_CACHE[key] = _diagonal_of(obs, L)
    return _DIAG_CACHE[key]


def exact_correlation(obs: Observable, params: ModelParams, L: int, t_max: int,
                      n_states: int = 1, seed: int = 0,
                      checkpoint_dir: str | Path | None = None) -> CorrelationSeries:
    """C(t) = (<A(t) A^dag> - <A(t)><A^dag>) / L from random-state evolution.

    The infinite-temperature trace is estimated in ``n_states`` random states
    (fluctuations ~ 2**(-L/2) per state).  Strictly local observables skip
    the 1/L prefactor.
    """
    if not obs.local and L < 2 * obs.support:
        raise ValueError(f"L={L} too small for observable support {obs.support}")
    k = obs.sector.k
    if abs((k * L) % (2 * math.pi)) > 1e-9 and abs((k * L) % (2 * math.pi) - 2 * math.pi) > 1e-9:
        raise ValueError(f"momentum k={k} incompatible with ring length L={L}")
    ring = _Ring(params, L)
    rng = np.random.default_rng(seed)
    acc = np.zeros(t_max + 1, dtype=complex)
    norm = 1.0 if obs.local else float(L)
    for _ in range(n_states):
        psi = ring.random_state(rng)
        phi = apply_observable(obs, L, psi, dagger=True)
        a0 = np.vdot(psi, phi)  # <A^dag> at t=0
        for t in range(t_max + 1):
            u = apply_observable(obs, L, psi, dagger=True) if t else phi
            acc[t] += (np.vdot(u, phi) - np.vdot(u, psi) * a0) / norm
            if t < t_max:
                ring.step(psi)
                ring.step(phi)
                if checkpoint_dir is not None and (t + 1) % CHECKPOINT_EVERY == 0:
                    p = Path(checkpoint_dir)
                    p.mkdir(parents=True, exist_ok=True)
                    np.savez(p / f"state_t{t + 1}.npz", psi=psi, phi=phi, t=t + 1)
    values = acc / n_states
    if obs.sector.is_real and np.abs(values.imag).max() < 1e-7:
        values = values.real
    return CorrelationSeries(
        times=np.arange(t_max + 1), values=values, method="exact",
        meta={"observable": obs.name, "L": L, "n_states": n_states, "seed": seed,
              "tau": params.tau, "hx": params.hx, "hz": params.hz})


def density_vector(obs: Observable, h: PropagatorHandle) -> np.ndarray:
    """Coefficients of the observable's density in the handle's sector basis."""
    full = np.zeros(h.basis.full_size, dtype=np.float64)
    for a, coeff in obs.density:
        if a.last_nonidentity() > h.r:
            raise ValueError(f"density support {a.last_nonidentity()} exceeds r={h.r}")
        full[string_index(a, h.r)] += coeff
    return h.basis.extract(full)


def truncated_correlation(obs: Observable, h: PropagatorHandle, t_max: int) -> CorrelationSeries:
    """C(t) ~ y^T M(k)^t y with y the density's sector-basis coefficients."""
    if obs.sector.is_parity != h.sector.is_parity or \
            (not obs.sector.is_parity and abs(obs.sector.k - h.sector.k) > 1e-12) or \
            (obs.sector.is_parity and obs.sector.kind != h.sector.kind):
        if not (h.sector.kind == "momentum" and abs(h.sector.k) < 1e-12 and obs.sector.is_parity):
            raise ValueError(f"observable sector {obs.sector.label} does not match handle "
                             f"sector {h.sector.label}")
    y = density_vector(obs, h)
    values = np.empty(t_max + 1, dtype=h.dtype)
    v = y.astype(h.dtype, copy=True)
    values[0] = np.vdot(y, v)
    for t in range(1, t_max + 1):
        v = h.apply(v)
        values[t] = np.vdot(y, v)
    return CorrelationSeries(
        times=np.arange(t_max + 1), values=values, method="truncated",
        meta={"observable": obs.name, "r": h.r, "sector": h.sector.label,
              "tau": h.params.tau, "hx": h.params.hx, "hz": h.params.hz})


def asymptotic_decay(spec: SpectrumResult, times, reference: CorrelationSeries | None = None,
                     tail: int = 20) -> CorrelationSeries:
    """c * |lambda1|^t, with c fitted to the tail of a reference series."""
    times = np.asarray(times)
    lam = abs(spec.lambda1)
    c = 1.0
    if reference is not None:
        vals = np.abs(reference.values)
        ts = reference.times
        sel = (vals > 0) & (ts >= ts[-1] - tail)
        if lam > 0 and sel.any():
            logc = np.log(vals[sel]) - ts[sel] * math.log(lam) if lam != 1.0 else np.log(vals[sel])
            c = float(np.exp(np.mean(logc)))
    values = c * lam ** times.astype(float)
    return CorrelationSeries(times=times, values=values, method="asymptotic",
                             meta={"lambda1_abs": lam, "prefactor": c,
                                   "sector": spec.sector.label, "r": spec.r})


@dataclass(frozen=True)
class FitReport:
    model: str  # "exponential" | "power_law"
    rate: float | None  # per-step decay factor (exponential)
    exponent: float | None  # alpha of 1/t^alpha (power law)
    prefactor: float
    residual: float  # rms misfit of log|C|
    window: tuple[int, int]


def fit_decay(series: CorrelationSeries, model: str, window: tuple[int, int]) -> FitReport:
    """Least-squares fit of log|C(t)| over ``window`` (inclusive time bounds)."""
    t0, t1 = window
    ts = series.times
    vals = np.abs(series.values)
    sel = (ts >= t0) & (ts <= t1) & (vals > 0)
    if model == "power_law":
        sel &= ts > 0
    ts, vals = ts[sel].astype(float), vals[sel]
    if ts.size < 3:
        raise ValueError(f"degenerate fit window {window}: {ts.size} usable points")
    y = np.log(vals)
    if model == "exponential":
        a = np.column_stack([np.ones_like(ts), ts])
    elif model == "power_law":
        a = np.column_stack([np.ones_like(ts), -np.log(ts)])
    else:
        raise ValueError(f"unknown fit model {model!r}")
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = float(np.sqrt(np.mean((a @ coef - y) ** 2)))
    if model == "exponential":
        return FitReport("exponential", rate=float(np.exp(coef[1])), exponent=None,
                         prefactor=float(np.exp(coef[0])), residual=resid, window=window)
    return FitReport("power_law", rate=None, exponent=float(coef[1]),
                     prefactor=float(np.exp(coef[0])), residual=resid, window=window)
