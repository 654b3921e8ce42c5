import math

import numpy as np
import pytest

from conftest import dense_floquet_ring
from kirp.bch import density_to_ring_operator
from kirp.correlations import (CorrelationSeries, apply_observable,
                               asymptotic_decay, density_vector,
                               exact_correlation, fit_decay,
                               truncated_correlation)
from kirp.model import ModelParams, observable
from kirp.pauli import Sector
from kirp.propagator import make_handle
from kirp.spectral import full_spectrum


def test_c0_values(params045):
    for name, c0 in (("Z", 1.0), ("X", 1.0), ("E", 1 + params045.hz**2),
                     ("J", 2.0), ("sZ", 1.0)):
        obs = observable(name, params045)
        h = make_handle(params045, 4, obs.sector)
        series = truncated_correlation(obs, h, 3)
        assert series.values[0] == pytest.approx(c0, abs=1e-12)


def _dense_summed_operator(obs, L):
    """sum_j e^{-ikj} T^j(term) as a dense matrix, site s on bit s (LSB)."""
    from kirp.model import pauli_matrix

    k = obs.sector.k
    dense = np.zeros((2**L, 2**L), dtype=complex)
    for a, coeff in obs.density:
        for j in range(L):
            digits = [0] * L
            for t, d in enumerate(a.digits):
                digits[(j + t) % L] = d
            # pauli_matrix puts site 0 on the most significant bit; reverse
            dense += coeff * np.exp(-1j * k * j) * pauli_matrix(tuple(reversed(digits)))
    return dense


def test_apply_observable_matches_dense(params045):
    """XOR-gather application equals the dense momentum-summed operator."""
    L = 8
    rng = np.random.default_rng(2)
    psi = rng.standard_normal(2**L) + 1j * rng.standard_normal(2**L)
    for name in ("Z", "E", "J", "sZ"):
        obs = observable(name, params045)
        dense = _dense_summed_operator(obs, L)
        got = apply_observable(obs, L, psi)
        assert np.abs(got - dense @ psi).max() < 1e-10, name
        gotd = apply_observable(obs, L, psi, dagger=True)
        assert np.abs(gotd - dense.conj().T @ psi).max() < 1e-10, name


def test_exact_correlation_matches_dense_trace(params045):
    """Random-state estimate converges to the exact trace formula at small L."""
    L, t_max = 8, 4
    obs = observable("Z", params045)
    from kirp.model import pauli_matrix

    dense = np.zeros((2**L, 2**L), dtype=complex)
    for a, coeff in obs.density:
        for j in range(L):
            digits = [0] * L
            for t, d in enumerate(a.digits):
                digits[(j + t) % L] = d
            dense += coeff * pauli_matrix(tuple(digits))
    u = dense_floquet_ring(params045, L)
    want = []
    at = dense.copy()
    for t in range(t_max + 1):
        want.append(np.trace(at @ dense.conj().T).real / (2**L * L))
        at = u.conj().T @ at @ u
    series = exact_correlation(obs, params045, L=L, t_max=t_max, n_states=64, seed=1)
    vals = np.real(series.values)
    assert np.abs(vals - np.array(want)).max() < 3 * 2 ** (-L / 2)


def test_light_cone_exactness_small(params045):
    """Truncated series is exact before the light cone reaches the cut."""
    r, L = 6, 12
    for name in ("E", "J"):
        obs = observable(name, params045)
        h = make_handle(params045, r, obs.sector)
        tr = truncated_correlation(obs, h, 3)
        ex = exact_correlation(obs, params045, L=L, t_max=3, n_states=24, seed=3)
        t_ok = (r - obs.support) // 2
        band = 3 * 2 ** (-L / 2)
        diff = np.abs(np.asarray(tr.values) - np.asarray(ex.values))
        assert (diff[:t_ok + 1] < band).all(), (name, diff)


def test_density_vector_norm(params045):
    obs = observable("J", params045)
    h = make_handle(params045, 4, obs.sector)
    y = density_vector(obs, h)
    assert np.linalg.norm(y) ** 2 == pytest.approx(obs.squared_norm)


def test_truncated_sector_guard(params045):
    obs = observable("J", params045)
    h = make_handle(params045, 4, Sector.even())
    with pytest.raises(ValueError):
        truncated_correlation(obs, h, 3)


def test_exact_guards(params045):
    with pytest.raises(ValueError):
        exact_correlation(observable("Z", params045), params045, L=30, t_max=2)
    with pytest.raises(ValueError):
        # support-2 density needs L >= 4
        exact_correlation(observable("E", params045), params045, L=3, t_max=2)


def test_fit_decay_synthetic():
    ts = np.arange(0, 60)
    series = CorrelationSeries(times=ts, values=0.7 * 0.9**ts, method="synthetic")
    fit = fit_decay(series, "exponential", (5, 50))
    assert fit.rate == pytest.approx(0.9, abs=1e-12)
    assert fit.prefactor == pytest.approx(0.7, abs=1e-12)
    assert fit.residual < 1e-12

    vals = np.zeros_like(ts, dtype=float)
    vals[1:] = 2.0 * ts[1:] ** -3.0
    series = CorrelationSeries(times=ts, values=vals, method="synthetic")
    fit = fit_decay(series, "power_law", (5, 50))
    assert fit.exponent == pytest.approx(3.0, abs=1e-12)
    assert fit.prefactor == pytest.approx(2.0, abs=1e-10)
    with pytest.raises(ValueError):
        fit_decay(series, "exponential", (100, 120))
    with pytest.raises(ValueError):
        fit_decay(series, "weibull", (5, 50))


def test_asymptotic_decay_prefactor(params045):
    obs = observable("J", params045)
    h = make_handle(params045, 4, obs.sector)
    spec = full_spectrum(h)
    ref = truncated_correlation(obs, h, 30)
    asym = asymptotic_decay(spec, np.arange(31), reference=ref)
    lam = abs(spec.lambda1)
    assert np.allclose(np.abs(asym.values), asym.meta["prefactor"] * lam ** np.arange(31))


def test_local_observable_matches_dense_trace(params045):
    """Single-site insertion: no momentum sum and no 1/L normalization."""
    L, t_max = 8, 3
    obs = observable("local-x", params045)
    from kirp.model import pauli_matrix

    digits = [0] * L
    digits[L - 1 - L // 2] = 1  # site L//2 on bit L//2 (LSB order)
    a = pauli_matrix(tuple(digits))
    u = dense_floquet_ring(params045, L)
    # bit-reversed conventions cancel in the trace (global similarity)
    want = []
    at = a.copy()
    for _ in range(t_max + 1):
        want.append(np.trace(at @ a.conj().T).real / 2**L)
        at = u.conj().T @ at @ u
    series = exact_correlation(obs, params045, L=L, t_max=t_max, n_states=64, seed=9)
    band = 3 * 2 ** (-L / 2)
    assert np.abs(np.real(series.values) - np.array(want)).max() < band
