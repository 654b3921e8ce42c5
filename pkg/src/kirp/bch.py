"""Baker-Campbell-Hausdorff expansion of the Floquet generator.

Translationally invariant extensive operators at k=0 are stored as densities:
maps from canonical Pauli strings to coefficients, one term per translation
orbit.  The expansion log(e^A e^B) with A, B the two kick generators is
graded by total order in the kick period and evaluated through the Bernoulli
recursion for F(t) = log(e^{tA} e^{tB}),

    F'(t) = sum_n (B_n / n!) ad_F^n ( A + e^{t ad_A} B ),

which involves commutators only and therefore closes on densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import bernoulli

from .model import ModelParams, pauli_matrix
from .pauli import PauliString

#: density: canonical digit tuple (first and last digit non-identity) -> coefficient
TIDensity = dict[tuple[int, ...], complex]

PRUNE_THRESHOLD = 1e-14

# sitewise products sigma_a sigma_b = phase * sigma_c for digits 0..3
_PROD_DIGIT = np.zeros((4, 4), dtype=np.int8)
_PROD_PHASE = np.ones((4, 4), dtype=complex)
for _a in range(4):
    _PROD_DIGIT[_a, 0] = _PROD_DIGIT[0, _a] = _a
for _a, _b, _c in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
    _PROD_DIGIT[_a, _b] = _c
    _PROD_PHASE[_a, _b] = 1j
    _PROD_DIGIT[_b, _a] = _c
    _PROD_PHASE[_b, _a] = -1j


def _canonical(digits: list[int]) -> tuple[int, ...] | None:
    """Strip identity padding; None for the all-identity string."""
    first = next((i for i, d in enumerate(digits) if d), None)
    if first is None:
        return None
    last = max(i for i, d in enumerate(digits) if d)
    return tuple(digits[first:last + 1])


def _accumulate(dest: TIDensity, key: tuple[int, ...], coeff: complex) -> None:
    c = dest.get(key, 0.0) + coeff
    if abs(c) < PRUNE_THRESHOLD:
        dest.pop(key, None)
    else:
        dest[key] = c


def ti_add(*pairs: tuple[complex, TIDensity]) -> TIDensity:
    out: TIDensity = {}
    for scale, dens in pairs:
        for key, c in dens.items():
            _accumulate(out, key, scale * c)
    return out


def ti_scale(scale: complex, dens: TIDensity) -> TIDensity:
    return {k: scale * c for k, c in dens.items()}


def ti_norm_sq(dens: TIDensity) -> float:
    """tr(H^dag H) per site under the orthonormal Pauli inner product."""
    return float(sum(abs(c) ** 2 for c in dens.values()))


def ti_support(dens: TIDensity) -> int:
    return max((len(k) for k in dens.keys()), default=0)


def _string_commutator(da: tuple[int, ...], db: tuple[int, ...], shift: int):
    """[a, T^shift b] for single placed strings: (digits, coefficient) or None."""
    lo = min(0, shift)
    hi = max(len(da), shift + len(db))
    phase = 1.0 + 0j
    anti = 0
    digits = []
    for s in range(lo, hi):
        x = da[s] if 0 <= s < len(da) else 0
        y = db[s - shift] if 0 <= s - shift < len(db) else 0
        digits.append(int(_PROD_DIGIT[x, y]))
        if x and y and x != y:
            anti += 1
            phase *= _PROD_PHASE[x, y]
    if anti % 2 == 0:
        return None  # commuting strings: [a, b] = 0
    key = _canonical(digits)
    return key, 2.0 * phase


def ti_commutator(a: TIDensity, b: TIDensity) -> TIDensity:
    """Commutator of two translational sums, reduced back to a density."""
    out: TIDensity = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            for shift in range(-(len(kb) - 1), len(ka)):
                res = _string_commutator(ka, kb, shift)
                if res is None:
                    continue
                key, phase = res
                _accumulate(out, key, phase * ca * cb)
    return out


def kick_generators(p: ModelParams) -> tuple[TIDensity, TIDensity]:
    """A = -i tau H_x and B = -i tau H_z as densities."""
    a: TIDensity = {(1,): 1j * p.tau * p.hx}
    b: TIDensity = {(3, 3): 1j * p.tau, (3,): 1j * p.tau * p.hz}
    if abs(p.hx) < PRUNE_THRESHOLD:
        a = {}
    if abs(p.hz) < PRUNE_THRESHOLD:
        b.pop((3,), None)
    return a, b


@dataclass
class BCHSeries:
    params: ModelParams
    terms: list[TIDensity]  # terms[p-1] = H_p
    p_max: int

    @property
    def norms_sq(self) -> list[float]:
        return [ti_norm_sq(h) for h in self.terms]

    @property
    def supports(self) -> list[int]:
        return [ti_support(h) for h in self.terms]

    def partial_sum(self, p: int) -> TIDensity:
        """H_eff = log(e^A e^B) truncated after order p."""
        return ti_add(*((1.0, h) for h in self.terms[:p]))

    def conserved_sum(self, p: int) -> TIDensity:
        """log(e^B e^A) truncated after order p: the generator conserved by
        the propagator, whose layers apply the interaction before the kicks.

        Swapping the factors is the inverse with A, B negated, which flips
        the sign of every even-order term.
        """
        return ti_add(*((1.0 if q % 2 == 0 else -1.0, h)
                        for q, h in enumerate(self.terms[:p])))


def bch_series(p_max: int, params: ModelParams) -> BCHSeries:
    """Graded terms H_1..H_{p_max} of log(U) = log(e^A e^B)."""
    if p_max > 24:
        raise ValueError("p_max beyond 24 is not supported (term growth)")
    a, b = kick_generators(params)
    bern = bernoulli(p_max)  # B_1 = -1/2 convention
    bcoef = [bern[n] / math.factorial(n) for n in range(p_max)]
    # g0[m] = ad_A^m B / m!,   g0[0] = A + B
    g0: list[TIDensity] = [ti_add((1.0, a), (1.0, b))]
    cur = b
    for m in range(1, p_max):
        cur = ti_scale(1.0 / m, ti_commutator(a, cur))
        g0.append(cur)
    f: list[TIDensity] = []  # f[p-1] = H_p
    memo: dict[tuple[int, int], TIDensity] = {}

    def g(n: int, j: int) -> TIDensity:
        # order-j coefficient of ad_F^n (A + e^{t ad_A} B); needs f up to j-n+1
        if n == 0:
            return g0[j]
        key = (n, j)
        if key not in memo:
            acc: TIDensity = {}
            for q in range(1, j - n + 2):
                inner = g(n - 1, j - q)
                if inner:
                    acc = ti_add((1.0, acc), (1.0, ti_commutator(f[q - 1], inner)))
            memo[key] = acc
        return memo[key]

    for p in range(1, p_max + 1):
        rhs: TIDensity = {}
        for n in range(p):
            if abs(bcoef[n]) < 1e-300:
                continue
            rhs = ti_add((1.0, rhs), (bcoef[n], g(n, p - 1)))
        f.append(ti_scale(1.0 / p, rhs))
    return BCHSeries(params=params, terms=f, p_max=p_max)


def divergence_order(norms: Iterable[float]) -> int | None:
    """First order after which the term norms increase persistently.

    ``norms`` are |H_p| (or |H_p|^2) for p = 1, 2, ...; returns the first p
    with two consecutive increases |H_{p+1}| > |H_p|, |H_{p+2}| > |H_{p+1}|,
    or None when the sequence keeps decreasing in range.
    """
    ns = list(norms)
    for p in range(1, len(ns) - 1):
        if ns[p] > ns[p - 1] and ns[p + 1] > ns[p]:
            return p
    return None


def density_to_sector_vector(dens: TIDensity, basis) -> np.ndarray:
    """Coefficients of a density over a sector basis; terms beyond r are dropped."""
    from .pauli import string_index

    full = np.zeros(basis.full_size, dtype=complex)
    for key, c in dens.items():
        if len(key) <= basis.r:
            full[string_index(PauliString(key), basis.r)] += c
    v = basis.extract(full)
    if np.abs(v.imag).max(initial=0.0) < 1e-12 * max(1.0, np.abs(v.real).max(initial=0.0)):
        return v.real
    return v


@dataclass(frozen=True)
class OverlapReport:
    p: int
    overlap: float
    error: float  # 1 - overlap
    heff_norm_sq: float


def eff_overlap(x1: np.ndarray, heff: TIDensity, basis) -> OverlapReport:
    """Normalized squared overlap of an eigenvector with i * H_eff in a sector.

    ``heff`` is truncated to strings fitting the basis support bound before
    projecting.  The i factor makes the antihermitian sum real-coefficient.
    """
    v = density_to_sector_vector(ti_scale(1j, heff), basis)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ValueError("H_eff truncation has zero norm in this sector")
    ov = abs(np.vdot(x1, v)) ** 2 / (np.linalg.norm(x1) ** 2 * nv**2)
    return OverlapReport(p=0, overlap=float(ov), error=float(1.0 - ov),
                         heff_norm_sq=float(nv**2))


def density_to_ring_operator(dens: TIDensity, L: int) -> np.ndarray:
    """Dense sum_j T^j(density) on a periodic ring of L qubits (test oracle)."""
    dim = 2**L
    out = np.zeros((dim, dim), dtype=complex)
    for key, c in dens.items():
        if len(key) > L:
            raise ValueError(f"term support {len(key)} exceeds ring size {L}")
        for j in range(L):
            digits = [0] * L
            for t, d in enumerate(key):
                digits[(j + t) % L] = d
            out += c * pauli_matrix(tuple(digits))
    return out
