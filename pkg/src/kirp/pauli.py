"""Pauli strings, their canonical enumeration, and momentum/parity sector bases.

Local operators are products of {identity, sigma_x, sigma_y, sigma_z} encoded
as base-4 digits (0=identity, 1=x, 2=y, 3=z).  The canonical set for support
bound r contains every string whose first digit is non-identity and whose last
non-identity digit sits at site <= r; there are 3 * 4**(r-1) of them.

Canonical strings are indexed by

    index = (d_1 - 1) * 4**(r-1) + sum_{j=2..r} d_j * 4**(r-j)

i.e. the first digit (in {1,2,3}) is the most significant, the remaining
digits follow in plain base 4.  The layout is fixed: exported spectra and
vectors reference these indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

DIGIT_CHARS = "1XYZ"  # identity rendered as "1"


def _digits_from_label(label: str) -> tuple[int, ...]:
    return tuple(DIGIT_CHARS.index(c) for c in label.upper())


@dataclass(frozen=True)
class PauliString:
    """A windowed product of single-site Paulis.

    ``digits`` are base-4 symbols for consecutive sites starting at site
    ``offset``.  A string is canonical when ``offset == 1`` and the first
    digit is non-identity (trailing identities are allowed).
    """

    digits: tuple[int, ...]
    offset: int = 1

    @classmethod
    def from_label(cls, label: str, offset: int = 1) -> "PauliString":
        return cls(_digits_from_label(label), offset)

    @property
    def label(self) -> str:
        return "".join(DIGIT_CHARS[d] for d in self.digits)

    @property
    def is_canonical(self) -> bool:
        return self.offset == 1 and len(self.digits) > 0 and self.digits[0] != 0

    def last_nonidentity(self) -> int:
        """Position (1-based within the window) of the last non-identity digit."""
        for p in range(len(self.digits), 0, -1):
            if self.digits[p - 1] != 0:
                return p
        return 0

    @property
    def support(self) -> int:
        """Length of the minimal window containing all non-identity digits."""
        first = next((i for i, d in enumerate(self.digits) if d != 0), None)
        if first is None:
            return 0
        return self.last_nonidentity() - first

    def translate(self, m: int) -> "PauliString":
        return PauliString(self.digits, self.offset + m)

    def reflect(self) -> "PauliString":
        """Reverse digits 1..p where p is the last non-identity position."""
        p = self.last_nonidentity()
        if p == 0:
            return self
        digits = self.digits[:p][::-1] + self.digits[p:]
        return PauliString(digits, self.offset)

    def canonicalize(self) -> "PauliString":
        """Shift and pad so the leftmost non-identity digit sits at site 1."""
        first = next((i for i, d in enumerate(self.digits) if d != 0), None)
        if first is None:
            raise ValueError("cannot canonicalize the identity string")
        p = self.last_nonidentity()
        return PauliString(self.digits[first:p], 1)

    def __str__(self) -> str:  # pragma: no cover - debug aid
        return f"{self.label}@{self.offset}"


def sector_size(r: int) -> int:
    """Number of canonical strings with support bound r: 3 * 4**(r-1)."""
    return 3 * 4 ** (r - 1)


def string_index(a: PauliString, r: int) -> int:
    """Canonical index of ``a`` in the support-r enumeration."""
    if not a.is_canonical:
        raise ValueError(f"non-canonical string {a}")
    if a.last_nonidentity() > r:
        raise ValueError(f"string {a} does not fit support bound r={r}")
    digits = a.digits[:r] + (0,) * (r - len(a.digits))
    idx = (digits[0] - 1) * 4 ** (r - 1)
    for j in range(1, r):
        idx += digits[j] * 4 ** (r - 1 - j)
    return idx


def index_to_string(idx: int, r: int) -> PauliString:
    """Inverse of :func:`string_index`."""
    n = sector_size(r)
    if not 0 <= idx < n:
        raise ValueError(f"index {idx} out of range for r={r}")
    d1, rest = divmod(idx, 4 ** (r - 1))
    digits = [d1 + 1]
    for j in range(r - 2, -1, -1):
        q, rest = divmod(rest, 4**j)
        digits.append(q)
    return PauliString(tuple(digits), 1)


def enumerate_strings(r: int) -> Iterator[PauliString]:
    for idx in range(sector_size(r)):
        yield index_to_string(idx, r)


def _digit_matrix(r: int) -> np.ndarray:
    """(N, r) int8 matrix of digits for every canonical index, vectorized."""
    n = sector_size(r)
    idx = np.arange(n, dtype=np.int64)
    digits = np.empty((n, r), dtype=np.int8)
    digits[:, 0] = idx // 4 ** (r - 1) + 1
    rest = idx % 4 ** (r - 1)
    for j in range(1, r):
        digits[:, j] = (rest // 4 ** (r - 1 - j)) % 4
    return digits


def reflection_permutation(r: int) -> np.ndarray:
    """Index permutation realizing the reflection R on the canonical basis."""
    digits = _digit_matrix(r)
    n, _ = digits.shape
    # last non-identity position per row (>=1 because digit 1 is non-identity)
    nz = digits != 0
    p = r - 1 - np.argmax(nz[:, ::-1], axis=1)  # 0-based position
    refl = digits.copy()
    for pos in range(r):
        # site pos of the reflected string takes digit (p - pos) of the original
        src = p - pos
        valid = src >= 0
        refl[valid, pos] = digits[valid, src[valid]]
        refl[~valid, pos] = 0
    perm = (refl[:, 0].astype(np.int64) - 1) * 4 ** (r - 1)
    weights = 4 ** np.arange(r - 2, -1, -1, dtype=np.int64)
    perm += refl[:, 1:].astype(np.int64) @ weights
    return perm


@dataclass(frozen=True)
class Sector:
    """Momentum sector label: full momentum k, or a k=0 reflection-parity half."""

    kind: str  # "momentum" | "even" | "odd"
    k: float = 0.0

    @classmethod
    def momentum(cls, k: float) -> "Sector":
        return cls("momentum", float(k))

    @classmethod
    def even(cls) -> "Sector":
        return cls("even", 0.0)

    @classmethod
    def odd(cls) -> "Sector":
        return cls("odd", 0.0)

    @classmethod
    def parse(cls, text: str) -> "Sector":
        t = text.strip().lower()
        if t in ("0+", "even"):
            return cls.even()
        if t in ("0-", "odd"):
            return cls.odd()
        if t == "pi":
            return cls.momentum(np.pi)
        try:
            return cls.momentum(float(t))
        except ValueError:
            raise ValueError(f"unknown sector {text!r}") from None

    @property
    def is_parity(self) -> bool:
        return self.kind in ("even", "odd")

    @property
    def is_real(self) -> bool:
        """True when the propagator matrix is real (k = 0 or pi)."""
        if self.is_parity:
            return True
        return abs(np.sin(self.k)) < 1e-15

    @property
    def label(self) -> str:
        if self.kind == "even":
            return "0+"
        if self.kind == "odd":
            return "0-"
        if abs(self.k - np.pi) < 1e-15:
            return "pi"
        return f"k={self.k:g}"


@dataclass
class SectorBasis:
    """Enumerated basis of one momentum or parity sector at support bound r.

    For parity sectors the element table is stored as three aligned arrays:
    ``rep`` (canonical index of the representative string), ``partner``
    (index of its reflection; equal to ``rep`` for palindromes, even sector
    only) and ``weight`` (1 for singles, 1/sqrt(2) for pair combinations).
    Element i of the even sector is weight*(a + Ra), of the odd sector
    weight*(a - Ra).
    """

    r: int
    sector: Sector
    size: int
    rep: np.ndarray | None = field(default=None, repr=False)
    partner: np.ndarray | None = field(default=None, repr=False)
    weight: np.ndarray | None = field(default=None, repr=False)

    @property
    def full_size(self) -> int:
        return sector_size(self.r)

    def embed(self, v: np.ndarray) -> np.ndarray:
        """Map sector coefficients to coefficients over the full canonical basis."""
        if not self.sector.is_parity:
            return v
        sign = 1.0 if self.sector.kind == "even" else -1.0
        full = np.zeros(self.full_size, dtype=v.dtype)
        full[self.rep] = self.weight * v
        pair = self.partner != self.rep
        full[self.partner[pair]] = sign * self.weight[pair] * v[pair]
        return full

    def extract(self, full: np.ndarray) -> np.ndarray:
        """Adjoint of :meth:`embed`: project full-basis coefficients to the sector."""
        if not self.sector.is_parity:
            return full
        sign = 1.0 if self.sector.kind == "even" else -1.0
        v = self.weight * full[self.rep]
        pair = self.partner != self.rep
        v[pair] += sign * self.weight[pair] * full[self.partner[pair]]
        return v

    def element_string(self, i: int) -> PauliString:
        """Representative canonical string of basis element i."""
        if self.sector.is_parity:
            return index_to_string(int(self.rep[i]), self.r)
        return index_to_string(i, self.r)


def build_sector_basis(r: int, sector: Sector) -> SectorBasis:
    """Enumerate the basis of ``sector`` at support bound ``r``."""
    if r < 1:
        raise ValueError("support bound r must be >= 1")
    n = sector_size(r)
    if not sector.is_parity:
        return SectorBasis(r=r, sector=sector, size=n)
    perm = reflection_permutation(r)
    idx = np.arange(n, dtype=np.int64)
    if sector.kind == "even":
        keep = perm >= idx  # singles (perm == idx) and pair representatives
    else:
        keep = perm > idx  # pairs only
    rep = idx[keep]
    partner = perm[keep]
    weight = np.where(partner == rep, 1.0, 1.0 / np.sqrt(2.0))
    return SectorBasis(r=r, sector=sector, size=rep.size, rep=rep, partner=partner, weight=weight)
