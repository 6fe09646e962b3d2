"""Tests for the trigonometric basis, coefficients and smoothness classes."""

import math

import numpy as np
import pytest

from pppconc.basis import (
    CoeffVector,
    GammaFamily,
    GammaSequence,
    SmoothnessClass,
    complex_coeffs,
    gamma_norm_sq,
    gamma_value,
    l2_norm_sq,
    phi,
    synthesize,
    synthesize_grid,
    trig_design,
    trig_sums,
    true_coeffs,
)
from pppconc.pointprocess import ConstantIntensity, FourierIntensity, GridIntensity
from pppconc.quadrature import integrate, integrate_values, simpson_grid
from shared.errors import DomainError

SQRT2 = math.sqrt(2.0)


def test_phi_values():
    """Test basis values at simple points."""
    assert phi(0, 0.37) == 1.0
    assert phi(1, 0.0) == pytest.approx(SQRT2)
    assert phi(-1, 0.25) == pytest.approx(SQRT2)


def test_phi_orthonormal():
    """Test orthonormality for |i|, |j| <= 8 by quadrature."""
    t = simpson_grid(2**12)
    basis = np.stack([phi(j, t) for j in range(-8, 9)])
    gram = integrate_values(basis[:, None, :] * basis[None, :, :])

    np.testing.assert_allclose(gram, np.eye(17), atol=1e-10)


def test_trig_design_matches_phi():
    """Test that design columns are phi_j for j = -J..J."""
    x = np.array([0.0, 0.1, 0.73])
    design = trig_design(x, 3)
    expected = np.stack([phi(j, x) for j in range(-3, 4)], axis=1)

    np.testing.assert_allclose(design, expected, atol=1e-12)


def test_trig_sums_single_point():
    """Test the sums for one point at 1/4."""
    sums = trig_sums([0.25], 1)
    np.testing.assert_allclose(sums, [SQRT2, 0.0, 1.0], atol=1e-12)


def test_coeff_vector_indexing():
    """Test offset indexing and range checks."""
    vec = CoeffVector.from_terms({0: 3.0, 1: 0.5, -2: 0.25})

    assert vec.J == 2
    assert vec[1] == 0.5
    assert vec[-2] == 0.25
    assert vec.coeff(7) == 0.0
    with pytest.raises(DomainError):
        vec[3]
    with pytest.raises(DomainError):
        CoeffVector(np.zeros(4))


def test_coeff_vector_truncate_pad():
    """Test that pad and truncate are inverse on the kept range."""
    vec = CoeffVector.from_terms({0: 3.0, 1: 0.5})

    assert vec.pad(4).truncate(1) == vec
    assert vec.truncate(0).values.tolist() == [3.0]
    assert CoeffVector.from_dict(vec.to_dict()) == vec


def test_true_coeffs_constant():
    """Test lambda = 2 at J = 2."""
    beta = true_coeffs(ConstantIntensity(2.0), 2)
    assert beta.values.tolist() == [0.0, 0.0, 2.0, 0.0, 0.0]


def test_true_coeffs_exact_readout():
    """Test that finite-fourier coefficients are returned exactly."""
    beta = true_coeffs(FourierIntensity.from_terms({0: 3.0, 1: 0.5}), 3)

    assert beta[0] == 3.0
    assert beta[1] == 0.5
    assert sum(abs(v) for v in beta.values) == 3.5


def test_true_coeffs_quadrature_matches_exact(cosine_model):
    """Test the quadrature path against beta_1 = 1/sqrt2."""
    beta = true_coeffs(cosine_model, 4, method="quadrature")

    assert beta[1] == pytest.approx(1.0 / SQRT2, abs=1e-10)
    assert beta[0] == pytest.approx(2.0, abs=1e-10)
    assert abs(beta[-1]) < 1e-10


def test_true_coeffs_grid_model():
    """Test the tent coefficients against their closed form."""
    model = GridIntensity([0.0, 2.0, 0.0])
    beta = true_coeffs(model, 3)
    # odd harmonics only: -2 sqrt2 (1 - (-1)^j) / (pi j)^2
    for j in range(1, 4):
        expected = -2.0 * SQRT2 * (1 - (-1) ** j) / (math.pi * j) ** 2
        assert beta[j] == pytest.approx(expected, abs=1e-8)
        assert abs(beta[-j]) < 1e-8


def test_synthesize_constant():
    """Test that a constant series synthesizes to c."""
    vec = CoeffVector.from_terms({0: 2.5}, 3)
    np.testing.assert_allclose(synthesize(vec, np.linspace(0, 1, 7)), 2.5)
    assert synthesize(vec, 0.3) == pytest.approx(2.5)


def test_synthesize_reconstructs_finite_fourier():
    """Test exact reconstruction for degree <= J."""
    model = FourierIntensity.from_terms({0: 3.0, 1: 0.5, -2: 0.4, 3: -0.2})
    t = np.linspace(0.0, 1.0, 33)

    np.testing.assert_allclose(synthesize(true_coeffs(model, 5), t), model.eval(t), atol=1e-12)


def test_synthesize_roundtrip_sobolev(sobolev_small):
    """Test the J = 64 truncation error of the Sobolev-decay model."""
    t = np.linspace(0.0, 1.0, 2001)
    error = np.max(np.abs(synthesize(true_coeffs(sobolev_small, 64), t) - sobolev_small.eval(t)))

    assert error <= 1e-3


def test_synthesize_grid_matches_direct():
    """Test the FFT grid against direct summation."""
    vec = CoeffVector.from_terms({0: 1.0, 1: 0.3, -1: -0.2, 5: 0.1})
    m = 8
    t = np.arange(m + 1) / m

    np.testing.assert_allclose(synthesize_grid(vec, m), synthesize(vec, t), atol=1e-12)


def test_l2_norm_sq():
    """Test Parseval against quadrature."""
    assert l2_norm_sq(CoeffVector.zeros(3)) == 0.0
    assert l2_norm_sq(CoeffVector.from_terms({0: 3.0, 1: 0.5})) == pytest.approx(9.25)

    rng = np.random.default_rng(0)
    vec = CoeffVector(rng.normal(size=9))
    quad = integrate(lambda t: synthesize(vec, t) ** 2)
    assert l2_norm_sq(vec) == pytest.approx(quad, abs=1e-10)


def test_complex_coeffs_conjugate_symmetric():
    """Test <f, e_m> for a real series."""
    vec = CoeffVector.from_terms({0: 1.0, 1: SQRT2, -1: SQRT2})
    c = complex_coeffs(vec)

    assert c[2] == pytest.approx(1.0 - 1.0j)
    assert c[0] == pytest.approx(np.conj(c[2]))
    assert c[1] == 1.0


def test_gamma_values():
    """Test the three weight families."""
    poly = GammaSequence(family=GammaFamily.POLYNOMIAL, p=2.0)
    analytic = GammaSequence(family="analytic", rho=0.5)
    general = GammaSequence(family="generalized", rho=0.5, p=1.0)

    assert gamma_value(poly, 3) == 9.0
    assert gamma_value(poly, 0) == 1.0
    assert gamma_value(analytic, -2) == pytest.approx(math.e)
    assert gamma_value(general, 0) == 1.0
    assert gamma_value(general, 1) == pytest.approx(math.e)


def test_gamma_nondecreasing():
    """Test monotone weights in |j|."""
    for seq in (
        GammaSequence(family="polynomial", p=0.5),
        GammaSequence(family="analytic", rho=1.0),
        GammaSequence(family="generalized", rho=1.0, p=0.5),
    ):
        values = gamma_value(seq, np.arange(0, 50))
        assert np.all(np.diff(values) >= 0)


def test_gamma_sequence_needs_parameters():
    """Test that missing family parameters are refused."""
    with pytest.raises(ValueError):
        GammaSequence(family="polynomial")
    with pytest.raises(ValueError):
        GammaSequence(family="generalized", p=1.0)


def test_gamma_norm_sq():
    """Test weighted norms on simple vectors."""
    poly1 = GammaSequence(family="polynomial", p=1.0)

    assert gamma_norm_sq(CoeffVector.zeros(2), poly1) == 0.0
    assert gamma_norm_sq(CoeffVector.from_terms({0: 1.0}), poly1) == 1.0
    assert gamma_norm_sq(CoeffVector.from_terms({1: 0.5, -1: 0.5}), poly1) == pytest.approx(0.5)


def test_gamma_norm_sq_huge_weights():
    """Test that overflowing weights with zero coefficients contribute nothing."""
    seq = GammaSequence(family="analytic", rho=50.0)
    vec = CoeffVector.from_terms({0: 1.0}, 20)

    assert gamma_norm_sq(vec, seq) == 1.0


def test_smoothness_class_membership(cosine_model):
    """Test membership by weighted norm and nonnegativity."""
    ball = SmoothnessClass(gamma=GammaSequence(family="polynomial", p=1.0), L=2.5)

    assert ball.contains(cosine_model)
    assert not SmoothnessClass(gamma=ball.gamma, L=1.0).contains(cosine_model)
    assert not ball.contains(CoeffVector.from_terms({0: 0.5, 1: 1.0}))
