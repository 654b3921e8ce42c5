"""In-place application of small gate matrices to axes of huge flat arrays.

The arrays involved (4**(r+2) operator-coefficient windows, 2**L state
vectors) can reach a few GB, so gates are applied chunk by chunk through a
reusable scratch buffer instead of materializing a transformed copy.
"""

from __future__ import annotations

import numpy as np

# elements per chunk; ~64 MB of float64
_CHUNK_ELEMS = 1 << 23


def apply_gate_inplace(buf: np.ndarray, gate: np.ndarray, a: int, b: int,
                       scratch: np.ndarray | None = None) -> None:
    """In-place ``view[x, :, y] <- gate @ view[x, :, y]`` on buf viewed as (a, d, b).

    ``gate`` is d x d with d a power of the base dimension.  When b is
    smaller than d the contraction runs through a transposed copy so the
    inner matmul still hits BLAS.
    """
    d = gate.shape[0]
    view = buf.reshape(a, d, b)
    rows = max(1, _CHUNK_ELEMS // (d * b))
    gate = np.ascontiguousarray(gate, dtype=buf.dtype)
    for start in range(0, a, rows):
        blk = view[start:start + rows]
        if b >= d:
            out = np.matmul(gate, blk)
        else:
            tmp = np.ascontiguousarray(blk.swapaxes(1, 2))
            out = np.matmul(tmp, gate.T).swapaxes(1, 2)
        blk[...] = out


def apply_site_gate(buf: np.ndarray, gate: np.ndarray, site: int, n_sites: int,
                    base: int = 4) -> None:
    """Apply a one-site gate (base x base) at ``site``; site 0 varies slowest."""
    apply_gate_inplace(buf, gate, base**site, base ** (n_sites - site - 1))


def apply_pair_gate(buf: np.ndarray, gate: np.ndarray, site: int, n_sites: int,
                    base: int = 4) -> None:
    """Apply a two-site gate (base^2 x base^2) at sites (site, site+1)."""
    apply_gate_inplace(buf, gate, base**site, base ** (n_sites - site - 2))
