import math

import numpy as np
import pytest

from kirp.model import ModelParams, build_gates, dense_window_unitary, pauli_matrix
from kirp.pauli import PauliString, Sector, sector_size
from kirp.propagator import (MAX_SUPPORT, PropagatorHandle, SectorMismatch,
                             make_handle, propagate_window)


def test_window_conjugation_oracle(params045):
    """The gate-layer expansion equals dense Heisenberg conjugation."""
    g = build_gates(params045)
    for seed in (PauliString((3,)), PauliString((1, 2)), PauliString((3, 0, 2))):
        r = len(seed.digits)
        w = r + 2
        u = dense_window_unitary(params045, w)
        a = pauli_matrix((0,) + seed.digits + (0,))
        heis = u.conj().T @ a @ u
        recon = np.zeros_like(heis)
        total = 0.0
        for s, c in propagate_window(seed, g):
            recon += c * pauli_matrix(s.digits)
            total += c * c
        assert np.abs(heis - recon).max() < 1e-12
        # one step of the untruncated dynamics is norm preserving
        assert total == pytest.approx(1.0, abs=1e-12)


def test_tau_zero_is_identity():
    h = make_handle(ModelParams(0.0, 0.9, 0.8), 3, Sector.momentum(0.7))
    assert np.allclose(h.materialize_dense(), np.eye(h.size), atol=1e-14)


def test_apply_matches_dense(params045):
    rng = np.random.default_rng(5)
    for sector in (Sector.momentum(0.0), Sector.momentum(math.pi),
                   Sector.momentum(1.1), Sector.even(), Sector.odd()):
        h = make_handle(params045, 3, sector)
        m = h.materialize_dense()
        v = rng.standard_normal(h.size)
        if not sector.is_real:
            v = v + 1j * rng.standard_normal(h.size)
        assert np.allclose(h.apply(v), m @ v, atol=1e-12)


def test_real_sector_accepts_complex_input(params045):
    h = make_handle(params045, 3, Sector.even())
    rng = np.random.default_rng(6)
    v = rng.standard_normal(h.size) + 1j * rng.standard_normal(h.size)
    got = h.apply(v)
    want = h.apply(v.real.copy()) + 1j * h.apply(v.imag.copy())
    assert np.allclose(got, want, atol=1e-12)


def test_parity_split_consistent(params045):
    """Spectrum of full k=0 equals the union of even and odd spectra."""
    full = make_handle(params045, 3, Sector.momentum(0.0)).materialize_dense()
    even = make_handle(params045, 3, Sector.even()).materialize_dense()
    odd = make_handle(params045, 3, Sector.odd()).materialize_dense()
    ev_full = np.sort_complex(np.linalg.eigvals(full))
    ev_split = np.sort_complex(np.concatenate([np.linalg.eigvals(even),
                                               np.linalg.eigvals(odd)]))
    assert np.allclose(ev_full, ev_split, atol=1e-9)


def test_momentum_reversal_conjugates_spectrum(params045):
    mp = make_handle(params045, 3, Sector.momentum(0.9)).materialize_dense()
    mm = make_handle(params045, 3, Sector.momentum(-0.9)).materialize_dense()
    ep = np.sort_complex(np.linalg.eigvals(mp))
    em = np.sort_complex(np.conj(np.linalg.eigvals(mm)))
    assert np.allclose(ep, em, atol=1e-9)


def test_interaction_only_norm_preserving_before_truncation(params045):
    # M and M_zz share singular values; both truncate the same way
    h = make_handle(params045, 3, Sector.momentum(0.4))
    m = h.materialize_dense()
    mzz = h.materialize_dense(interaction_only=True)
    sv = np.sort(np.linalg.svd(m, compute_uv=False))
    svzz = np.sort(np.linalg.svd(mzz, compute_uv=False))
    assert np.allclose(sv, svzz, atol=1e-10)


def test_sector_mismatch_and_caps(params045):
    h = make_handle(params045, 3, Sector.even())
    with pytest.raises(SectorMismatch):
        h.apply(np.zeros(h.size + 1))
    with pytest.raises(ValueError):
        make_handle(params045, MAX_SUPPORT + 1, Sector.even())
    with pytest.raises(ValueError):
        make_handle(params045, 7, Sector.odd()).materialize_dense(size_guard=100)


def test_dtype_by_sector(params045):
    assert make_handle(params045, 2, Sector.even()).dtype == np.float64
    assert make_handle(params045, 2, Sector.momentum(math.pi)).dtype == np.float64
    assert make_handle(params045, 2, Sector.momentum(0.3)).dtype == np.complex128


def test_size_matches_basis(params045):
    h = make_handle(params045, 4, Sector.momentum(0.2))
    assert h.size == sector_size(4)
