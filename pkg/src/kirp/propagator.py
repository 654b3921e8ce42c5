"""Matrix-free application of the truncated momentum-resolved propagator.

A seed string supported on sites 1..r is embedded into an r+2-site window
(one identity pad on each side), the gate layers are applied to the 4**(r+2)
coefficient array, and the three window positions a string can canonically
occupy afterwards (leftmost non-identity at site 0, 1 or 2) are gathered back
with momentum phases e^{ik(j-1)}.  Everything else is the truncation.

For k in {0, pi} and parity sectors the matrix is real and the kernel runs in
float64; generic k uses complex128.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import apply_pair_gate, apply_site_gate
from .model import GateSet, ModelParams, build_gates
from .pauli import PauliString, Sector, SectorBasis, build_sector_basis, sector_size

#: hard cap on the support bound; 4**(r+2) coefficients must fit in memory
MAX_SUPPORT = 13
DENSE_GUARD = 13000


class SectorMismatch(ValueError):
    pass


def _gate_layers(buf: np.ndarray, w: int, gates: GateSet, interaction_only: bool) -> None:
    for s in range(w - 1):
        apply_pair_gate(buf, gates.ozz, s, w)
    if interaction_only:
        return
    for s in range(w):
        apply_site_gate(buf, gates.one_site, s, w)


@dataclass
class PropagatorHandle:
    """Reusable context for applying M(k) (or M_zz(k)) in one sector."""

    params: ModelParams
    basis: SectorBasis
    gates: GateSet = field(default=None)  # type: ignore[assignment]
    _buf: np.ndarray | None = field(default=None, repr=False)
    _idx: tuple[np.ndarray, np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.r > MAX_SUPPORT:
            raise ValueError(f"support bound {self.r} exceeds the r<={MAX_SUPPORT} memory cap")
        if self.gates is None:
            self.gates = build_gates(self.params)

    @property
    def r(self) -> int:
        return self.basis.r

    @property
    def sector(self) -> Sector:
        return self.basis.sector

    @property
    def size(self) -> int:
        return self.basis.size

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float64 if self.sector.is_real else np.complex128)

    def _indices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._idx is None:
            n = sector_size(self.r)
            # canonical index i placed at sites 1..r of the window equals
            # flat window index 4*(i + 4**(r-1)); shifting the string left or
            # right by one site multiplies or divides by 4.
            idx1 = 4 * (np.arange(n, dtype=np.int64) + 4 ** (self.r - 1))
            self._idx = (idx1 * 4, idx1, idx1 // 4)
        return self._idx

    def _window(self) -> np.ndarray:
        w = self.r + 2
        if self._buf is None or self._buf.dtype != self.dtype:
            self._buf = np.zeros(4**w, dtype=self.dtype)
        return self._buf

    def _apply_window(self, full: np.ndarray, interaction_only: bool) -> np.ndarray:
        idx0, idx1, idx2 = self._indices()
        buf = self._window()
        buf[:] = 0
        buf[idx1] = full
        _gate_layers(buf, self.r + 2, self.gates, interaction_only)
        k = self.sector.k
        if self.sector.is_real:
            ph = 1.0 if abs(np.cos(k) - 1.0) < 1e-15 or self.sector.is_parity else -1.0
            return buf[idx1] + ph * (buf[idx0] + buf[idx2])
        return buf[idx1] + np.exp(-1j * k) * buf[idx0] + np.exp(1j * k) * buf[idx2]

    def apply(self, v: np.ndarray, interaction_only: bool = False) -> np.ndarray:
        """One application of M(k) (or of M_zz when ``interaction_only``)."""
        v = np.asarray(v)
        if v.shape != (self.size,):
            raise SectorMismatch(f"vector length {v.shape} does not match sector size {self.size}")
        if self.sector.is_real and np.iscomplexobj(v):
            re = self.basis.extract(self._apply_window(
                self.basis.embed(np.ascontiguousarray(v.real)), interaction_only))
            im = self.basis.extract(self._apply_window(
                self.basis.embed(np.ascontiguousarray(v.imag)), interaction_only))
            return re + 1j * im
        full = self.basis.embed(v.astype(self.dtype, copy=False))
        return self.basis.extract(self._apply_window(full, interaction_only))

    def apply_zz(self, v: np.ndarray) -> np.ndarray:
        """Interaction layer only (Eq. M = O M_zz factorization, M_zz part)."""
        return self.apply(v, interaction_only=True)

    def materialize_dense(self, interaction_only: bool = False,
                          size_guard: int = DENSE_GUARD) -> np.ndarray:
        """Column-by-column dense matrix; small-r oracle for the matrix-free path."""
        n = self.size
        if n > size_guard:
            raise ValueError(f"sector size {n} exceeds dense guard {size_guard}")
        m = np.zeros((n, n), dtype=self.dtype)
        e = np.zeros(n, dtype=self.dtype)
        for j in range(n):
            e[:] = 0
            e[j] = 1
            m[:, j] = self.apply(e, interaction_only=interaction_only)
        return m


def make_handle(params: ModelParams, r: int, sector: Sector) -> PropagatorHandle:
    if r > MAX_SUPPORT:
        raise ValueError(f"support bound {r} exceeds the r<={MAX_SUPPORT} memory cap")
    return PropagatorHandle(params=params, basis=build_sector_basis(r, sector))


def propagate_window(a: PauliString, gates: GateSet) -> list[tuple[PauliString, float]]:
    """Expand one Floquet step of the padded seed over the r+2-site window.

    The seed must be canonical on sites 1..r; returns every output string
    (sites 0..r+1) with a coefficient above 1e-14.  The coefficient vector of
    a single normalized seed keeps unit 2-norm (the untruncated step is
    orthogonal).
    """
    if not a.is_canonical:
        raise ValueError(f"seed {a} is not canonical")
    r = len(a.digits)
    w = r + 2
    buf = np.zeros(4**w, dtype=np.float64)
    idx = 0
    for j, d in enumerate(a.digits):
        idx += d * 4 ** (w - 2 - j)
    buf[idx] = 1.0
    _gate_layers(buf, w, gates, interaction_only=False)
    out: list[tuple[PauliString, float]] = []
    for flat in np.nonzero(np.abs(buf) > 1e-14)[0]:
        digits = []
        rest = int(flat)
        for s in range(w - 1, -1, -1):
            q, rest_mod = divmod(rest, 4**s)
            digits.append(q)
            rest = rest_mod
        out.append((PauliString(tuple(digits), offset=0), float(buf[flat])))
    return out
