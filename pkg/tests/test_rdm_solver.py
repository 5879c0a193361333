import math

import numpy as np
import pytest

from quasipin.harmonic_model import ModelParams, ground_state_amplitude, params_from_delta
from quasipin.perturbation_series import eval_spectrum_series
from quasipin.rdm_solver import (
    HermiteBasis,
    RdmGram,
    SolverConfig,
    build_hermite_basis,
    gauss_hermite_rule,
    natural_occupations,
    occupation_numbers,
    rdm_gram,
)


def nystrom_occupations(delta, n, points=161, half_width=8.0):
    """Independent oracle: trapezoid discretization of the kernel
    rho(x, x') = N int Psi(x, y) Psi(x', y) dy, no basis functions involved."""
    x = np.linspace(-half_width, half_width, points)
    h = x[1] - x[0]
    grid = np.stack(np.meshgrid(*([x] * n), indexing="ij"), axis=-1)
    psi = ground_state_amplitude(params_from_delta(delta, n), grid).reshape(points, -1)
    kernel = n * h ** (n - 1) * psi @ psi.T
    ev = np.sort(np.linalg.eigvalsh(h * kernel))[::-1]
    return ev * n / ev.sum()


def test_ground_mode_value():
    for b in (1.0, 0.7, 1.9):
        phi = HermiteBasis(1, b)(np.array([0.0]))
        assert phi[0, 0] == pytest.approx((math.pi * b * b) ** -0.25, rel=1e-15)


@pytest.mark.parametrize("b", [1.0, 0.83])
def test_quadrature_orthonormality(b):
    config = SolverConfig(basis_size=24, quadrature_order=96, basis_length_scale=b)
    basis = build_hermite_basis(config)
    x, w = gauss_hermite_rule(96, b)
    phi = basis(x)
    gram = (phi * w) @ phi.T
    assert np.abs(gram - np.eye(24)).max() <= 1e-12


def test_quadrature_weights_match_numpy():
    t, w = np.polynomial.hermite.hermgauss(96)
    _, stripped = gauss_hermite_rule(96)
    assert np.allclose(stripped, w * np.exp(t * t), rtol=1e-11)


def test_parity():
    rng = np.random.default_rng(3)
    x = rng.normal(size=50)
    basis = HermiteBasis(24, 0.9)
    signs = (-1.0) ** np.arange(24)
    assert np.allclose(basis(-x), signs[:, None] * basis(x), atol=1e-14)


def test_hermite_against_polynomial_definition():
    x = np.linspace(-3, 3, 13)
    basis = HermiteBasis(8)
    for k in range(8):
        coeffs = np.zeros(k + 1)
        coeffs[k] = 1.0
        expected = (np.polynomial.hermite.hermval(x, coeffs) * np.exp(-x * x / 2)
                    / math.sqrt(2**k * math.factorial(k) * math.sqrt(math.pi)))
        assert np.allclose(basis(x)[k], expected, atol=1e-13)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(basis_size=30, quadrature_order=40)
    with pytest.raises(ValueError):
        SolverConfig(basis_length_scale=-1.0)
    with pytest.raises(ValueError):
        rdm_gram(ModelParams(4), SolverConfig())


def test_non_interacting_spectrum():
    for n in (2, 3):
        spec = natural_occupations(rdm_gram(ModelParams(n)))
        expected = np.zeros(len(spec))
        expected[:n] = 1.0
        assert np.abs(spec.values - expected).max() <= 1e-10


def test_diagonal_gram_normalization():
    gram = RdmGram(np.diag([0.3, 0.5, 0.2]), SolverConfig(), ModelParams(3), trace_raw=1.0)
    assert np.allclose(natural_occupations(gram).values, [1.5, 0.9, 0.6], atol=1e-15)


def test_rejects_negative_eigenvalues():
    gram = RdmGram(np.diag([1.0, 0.5, -0.01]), SolverConfig(), ModelParams(3), trace_raw=1.49)
    with pytest.raises(ValueError):
        natural_occupations(gram)
    zero = RdmGram(np.zeros((2, 2)), SolverConfig(), ModelParams(3), trace_raw=0.0)
    with pytest.raises(ValueError):
        natural_occupations(zero)


def test_clips_round_off_negatives():
    gram = RdmGram(np.diag([1.0, 0.5, -1e-14]), SolverConfig(), ModelParams(3), trace_raw=1.5)
    spec = natural_occupations(gram)
    assert spec.values[-1] == 0.0
    assert spec.values.sum() == pytest.approx(3.0, abs=1e-15)


def test_gram_symmetry_enforced():
    with pytest.raises(ValueError):
        RdmGram(np.array([[1.0, 0.1], [0.2, 1.0]]), SolverConfig(), ModelParams(3), trace_raw=2.0)


@pytest.mark.parametrize("n,delta", [(2, 0.3), (3, 0.3), (3, -0.2), (2, 0.45)])
def test_against_nystrom_oracle(n, delta):
    spec = occupation_numbers(delta, n)
    oracle = nystrom_occupations(delta, n)
    assert np.abs(spec.head(8) - oracle[:8]).max() <= 1e-10


def test_series_value_small_coupling():
    spec = occupation_numbers(0.1)
    assert spec.lam(4) == pytest.approx(2.19613e-5, abs=1e-8)
    assert np.abs(spec.head(7) - eval_spectrum_series(0.1).head(7)).max() <= 1e-8


@pytest.mark.parametrize("delta", [0.1, 0.2, 0.3, 0.4])
def test_duality(delta):
    plus, minus = occupation_numbers(delta), occupation_numbers(-delta)
    assert np.abs(plus.values - minus.values).max() <= 1e-9


@pytest.mark.parametrize("delta", [0.1, 0.3, 0.5])
def test_trace_and_pauli_bounds(delta):
    gram = rdm_gram(params_from_delta(delta))
    eigenvalues = np.linalg.eigvalsh(gram.matrix)
    assert abs(eigenvalues.sum() / gram.trace_raw - 1) <= 1e-12
    assert eigenvalues.min() >= -1e-10 * gram.trace_raw
    spec = natural_occupations(gram)
    assert spec.values.sum() == pytest.approx(3.0, abs=1e-13)
    assert spec.values.min() >= 0
    assert spec.values.max() <= 1 + 1e-10
    assert np.all(np.diff(spec.values) <= 0)
    assert gram.converged and gram.trace_drift <= gram.config.trace_tolerance


@pytest.mark.parametrize("delta", [0.1, 0.3])
def test_discretization_convergence(delta):
    coarse = occupation_numbers(delta, config=SolverConfig(24, 96))
    refined = occupation_numbers(delta, config=SolverConfig(28, 128))
    assert np.abs(coarse.head(7) - refined.head(7)).max() <= 1e-9


def test_basis_scale_independence():
    a = occupation_numbers(0.3, config=SolverConfig(basis_length_scale=1.0))
    b = occupation_numbers(0.3, config=SolverConfig(basis_length_scale=math.exp(-0.15)))
    assert np.abs(a.head(7) - b.head(7)).max() <= 1e-9


def test_underresolved_probe_flags():
    gram = rdm_gram(params_from_delta(0.5), SolverConfig(basis_size=4, quadrature_order=8,
                                                        trace_tolerance=1e-14))
    assert not gram.converged


def test_deterministic():
    a = rdm_gram(params_from_delta(0.25), probe=False)
    b = rdm_gram(params_from_delta(0.25), probe=False)
    assert np.array_equal(a.matrix, b.matrix)


def test_two_particle_pairs():
    # Two-fermion occupation numbers come in degenerate pairs.
    spec = occupation_numbers(0.3, 2)
    assert np.abs(spec.values[0:8:2] - spec.values[1:8:2]).max() <= 1e-12
