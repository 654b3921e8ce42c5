import math

import numpy as np
import pytest

from kirp.model import ModelParams
from kirp.pauli import Sector
from kirp.propagator import make_handle
from kirp.spectral import (MIN_R_OUT, bound_verdict, condition_number,
                           extrapolate_lambda1, full_spectrum,
                           leading_eigenvalues, predicted_singular_values,
                           ring_prediction, singular_values)


def test_singular_values_random_small():
    rng = np.random.default_rng(11)
    for _ in range(4):
        tau, hx, hz = rng.uniform(0.1, 1.3, size=3)
        k = rng.uniform(-math.pi, math.pi)
        h = make_handle(ModelParams(tau, hx, hz), 3, Sector.momentum(k))
        chk = singular_values(h)
        assert chk.ok, chk.max_deviation


def test_singular_values_parity_rejected(params045):
    with pytest.raises(ValueError):
        singular_values(make_handle(params045, 3, Sector.even()))


def test_predicted_levels():
    levels, mult = predicted_singular_values(0.45, 4)
    assert np.allclose(levels, [1.0, abs(math.cos(0.9)), math.cos(0.9) ** 2])
    assert list(mult) == [5 * 16, 2 * 16, 5 * 16]
    with pytest.raises(ValueError):
        predicted_singular_values(0.45, 1)


def test_ring_radii_from_moments():
    """Radii follow from the second moments of the exact singular values."""
    for tau in (0.45, 0.65, 0.75, 1.1):
        levels, mult = predicted_singular_values(tau, 5)
        s2 = np.repeat(levels, mult) ** 2
        ring = ring_prediction(tau)
        assert ring.r_out == pytest.approx(math.sqrt(s2.mean()), abs=1e-12)
        assert ring.r_in == pytest.approx(1.0 / math.sqrt((1.0 / s2).mean()), abs=1e-12)
    assert ring_prediction(math.pi / 4).r_in < 1e-16
    assert MIN_R_OUT == pytest.approx(math.sqrt(5 / 12), abs=1e-15)


def test_condition_number():
    assert condition_number(0.75) == pytest.approx(1 / math.cos(1.5) ** 2)
    assert math.isinf(condition_number(math.pi / 4))


def test_dense_vs_krylov(params045):
    h = make_handle(params045, 4, Sector.odd())
    dense = full_spectrum(h)
    kry = leading_eigenvalues(h, n=4, tol=1e-11)
    assert kry.converged.all()
    assert np.allclose(kry.eigenvalues, dense.eigenvalues[:4], atol=1e-8)
    assert (kry.residuals < 1e-8).all()


def test_leading_vector_is_eigenvector(params045):
    h = make_handle(params045, 3, Sector.even())
    spec = full_spectrum(h, want_vector=True)
    x1 = spec.leading_vector
    assert np.linalg.norm(h.apply(x1) - spec.lambda1 * x1) < 1e-9
    # phase fixing: largest-modulus coefficient real positive
    i = int(np.argmax(np.abs(x1)))
    assert x1[i].real > 0


def test_eigenvalue_sort_order(params045):
    spec = full_spectrum(make_handle(params045, 3, Sector.momentum(0.5)))
    mods = np.abs(spec.eigenvalues)
    assert (np.diff(mods) <= 1e-12).all()


def test_extrapolate_lambda1():
    rs = np.array([6, 8, 10])
    lam_inf, c = 0.82, 0.7
    lams = lam_inf + c / rs**2
    got_inf, got_c, resid = extrapolate_lambda1(rs, lams)
    assert got_inf == pytest.approx(lam_inf, abs=1e-12)
    assert got_c == pytest.approx(c, abs=1e-10)
    assert resid < 1e-12
    with pytest.raises(ValueError):
        extrapolate_lambda1([5], [0.8])


def test_bound_verdict(params045):
    spec = full_spectrum(make_handle(params045, 4, Sector.odd()))
    verdict = bound_verdict(spec)
    assert verdict["r_out"] == pytest.approx(ring_prediction(0.45).r_out)
    if verdict["n_outside"]:
        assert verdict["bound_ok"]


def test_dual_unitary_counts_small():
    # tau = pi/4, hx = 1: exactly 2**(r-1) nonzero eigenvalues
    p = ModelParams(math.pi / 4, 1.0, 0.8)
    for r in (2, 3):
        spec = full_spectrum(make_handle(p, r, Sector.momentum(0.6)))
        nnz = int((np.abs(spec.eigenvalues) > 1e-8).sum())
        assert nnz == 2 ** (r - 1)
