import numpy as np
import pytest
from hypothesis import given, settings

from lgks_rcac.quantum_core import (
    InvalidDensityError,
    NotHermitianError,
    NotPositiveError,
    anticommutator,
    as_density,
    commutator,
    conjugate_transpose,
    hermitian_eig,
    hermitian_residual,
    sqrt_psd,
)

from .conftest import complex_matrices, hermitian_matrices


def test_conjugate_transpose_examples():
    assert np.array_equal(conjugate_transpose(np.eye(2, dtype=complex)), np.eye(2))
    a = np.array([[0, 1j], [0, 0]])
    assert np.array_equal(conjugate_transpose(a), np.array([[0, 0], [-1j, 0]]))
    h = np.array([[1.0, 2 - 1j], [2 + 1j, -3.0]])
    assert np.array_equal(conjugate_transpose(h), h)


def test_commutator_examples():
    a = np.diag([1.0, -1.0]).astype(complex)
    b = np.array([[0, 1], [1, 0]], dtype=complex)
    assert np.array_equal(commutator(a, a), np.zeros((2, 2)))
    assert np.array_equal(commutator(a, b), np.array([[0, 2], [-2, 0]]))


def test_anticommutator_examples():
    a = np.array([[1, 2j], [3, 4]], dtype=complex)
    assert np.array_equal(anticommutator(a, np.zeros((2, 2))), np.zeros((2, 2)))
    d = np.diag([0.0, 1.0]).astype(complex)
    assert np.array_equal(anticommutator(d, d), np.diag([0.0, 2.0]))
    b = np.array([[0.5, -1j], [2, 1]], dtype=complex)
    assert np.allclose(anticommutator(a, b), anticommutator(b, a), atol=0)


@given(hermitian_matrices(), hermitian_matrices())
def test_minus_i_commutator_is_hermitian(a, b):
    assert hermitian_residual(-1j * commutator(a, b)) <= 1e-14 * max(1.0, np.abs(a).max() * np.abs(b).max())


@given(complex_matrices())
def test_gram_products_hermitian(u):
    scale = max(1.0, np.abs(u).max() ** 2)
    uh = conjugate_transpose(u)
    assert hermitian_residual(uh @ u) <= 1e-14 * scale
    assert hermitian_residual(u @ uh) <= 1e-14 * scale


@given(hermitian_matrices(), complex_matrices())
def test_congruence_preserves_hermiticity(a, u):
    scale = max(1.0, np.abs(a).max() * np.abs(u).max() ** 2)
    assert hermitian_residual(u @ a @ conjugate_transpose(u)) <= 1e-14 * scale


def test_eig_diagonal_and_degenerate():
    w, v = hermitian_eig(np.diag([0.3, 0.7]))
    assert np.allclose(w, [0.3, 0.7], atol=1e-15)
    w, v = hermitian_eig(0.5 * np.eye(2))
    assert np.allclose(w, [0.5, 0.5])
    assert np.array_equal(v, np.eye(2))


def test_eig_low_entropy_target(rho_le):
    # quadratic formula: trace 1, det from the published entries
    det = 0.8571 * 0.1429 - (0.2857**2 + 0.1429**2)
    disc = np.sqrt(1.0 - 4.0 * det)
    expected = [(1.0 - disc) / 2.0, (1.0 + disc) / 2.0]
    w, _ = hermitian_eig(rho_le)
    assert np.allclose(w, expected, atol=1e-14)
    assert w == pytest.approx([0.0209, 0.9791], abs=1e-4)


@settings(max_examples=300)
@given(hermitian_matrices())
def test_eig_reconstruction_and_eigenpairs(a):
    w, v = hermitian_eig(a)
    scale = max(1.0, np.abs(a).max())
    assert w[0] <= w[1]
    assert np.allclose(v.conj().T @ v, np.eye(2), atol=1e-12)
    assert np.linalg.norm(v @ np.diag(w) @ v.conj().T - a) <= 1e-12 * scale
    for k in range(2):
        assert np.linalg.norm(a @ v[:, k] - w[k] * v[:, k]) <= 1e-12 * scale


def test_eig_matches_numpy(rng):
    for _ in range(200):
        g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        a = g + g.conj().T
        assert np.allclose(hermitian_eig(a)[0], np.linalg.eigvalsh(a), atol=1e-13)


def test_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))


def test_sqrt_examples():
    assert np.allclose(sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-15)
    assert np.allclose(sqrt_psd(np.eye(2)), np.eye(2), atol=1e-15)


def test_sqrt_reconstructs_random_psd(rng):
    for _ in range(1000):
        g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        a = g @ g.conj().T
        a = 0.5 * (a + a.conj().T)
        r = sqrt_psd(a)
        assert hermitian_residual(r) == 0.0
        assert np.linalg.eigvalsh(r).min() >= -1e-12
        assert np.linalg.norm(r @ r - a) <= 1e-10


def test_sqrt_clamps_tiny_negative_and_rejects_large():
    pure = np.array([[1.0, 0.0], [0.0, -5e-10]])
    assert np.allclose(sqrt_psd(pure), np.diag([1.0, 0.0]))
    with pytest.raises(NotPositiveError):
        sqrt_psd(np.diag([1.0, -1e-6]))


def test_as_density_validation(rho0):
    as_density(rho0)
    with pytest.raises(InvalidDensityError):
        as_density(np.diag([0.6, 0.6]))
    with pytest.raises(InvalidDensityError):
        as_density(np.array([[0.5, 1.0], [0.0, 0.5]]))
    with pytest.raises(InvalidDensityError):
        as_density(np.diag([1.2, -0.2]))
    with pytest.raises(ValueError):
        as_density(np.eye(3) / 3)
