"""
Tests for two-qubit density matrices.

These tests verify:
- Validation of Hermiticity, trace and positivity
- Immutability of the stored matrix
- Bell states, Werner states and the parity-measurement input
"""

import numpy as np
import pytest

from qfb.parity.states import (
    PHI_PLUS,
    PSI_PLUS,
    BellTarget,
    InvalidDensityMatrixError,
    TwoQubitDensityMatrix,
    as_density,
    bell_state,
    product_state,
    psi0,
    random_density,
    werner,
)


def test_psi0_is_uniform():
    """Test that every element of the input superposition is 1/4."""
    rho = psi0()

    np.testing.assert_allclose(rho.matrix, np.full((4, 4), 0.25), atol=1e-12)
    assert rho.purity() == pytest.approx(1.0)


@pytest.mark.parametrize(
    "matrix",
    [
        np.diag([2.0, 0.0, 0.0, 0.0]),
        np.diag([1.5, -0.5, 0.0, 0.0]),
        np.array([[0.5, 0.5, 0, 0], [0, 0.5, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]),
        np.eye(3) / 3,
        np.full((4, 4), np.nan),
    ],
    ids=["trace", "negative", "non-hermitian", "shape", "nan"],
)
def test_invalid_matrices_rejected(matrix):
    with pytest.raises(InvalidDensityMatrixError):
        TwoQubitDensityMatrix(matrix)


def test_matrix_is_read_only():
    rho = TwoQubitDensityMatrix.maximally_mixed()

    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1.0


def test_round_off_tolerated():
    """Test that eigenvalues down to -1e-9 are accepted."""
    m = np.diag([0.5 + 5e-10, 0.5, 0.0, -5e-10]).astype(complex)

    rho = TwoQubitDensityMatrix(m)

    assert rho.eigenvalues().min() == pytest.approx(-5e-10)


def test_bell_states():
    """Test that Phi+ is the odd and Psi+ the even combination."""
    phi = bell_state(PHI_PLUS)
    psi = bell_state(PSI_PLUS)

    assert phi[1, 2] == pytest.approx(0.5)
    assert phi.populations()[[0, 3]].sum() == pytest.approx(0.0)
    assert psi[0, 3] == pytest.approx(0.5)
    assert PHI_PLUS.odd and not PSI_PLUS.odd


def test_bell_target_phase():
    target = BellTarget(label="phi+", phase=np.pi / 2)

    assert bell_state(target)[1, 2] == pytest.approx(-0.5j)


def test_parity_expectations():
    """Test <Z x Z> on the Bell states and <X x X> on the parity-measurement input."""
    z = np.diag([1.0, -1.0])
    x = np.array([[0.0, 1.0], [1.0, 0.0]])

    assert bell_state(PHI_PLUS).expectation(np.kron(z, z)) == pytest.approx(1.0)
    assert bell_state(PSI_PLUS).expectation(np.kron(z, z)) == pytest.approx(-1.0)
    assert psi0().expectation(np.kron(z, z)) == pytest.approx(0.0, abs=1e-12)
    assert psi0().expectation(np.kron(x, x)) == pytest.approx(1.0)


def test_werner_weights():
    rho = werner(0.6)

    assert rho[1, 2] == pytest.approx(0.3)
    assert rho.populations()[0] == pytest.approx(0.1)
    with pytest.raises(ValueError):
        werner(1.2)


def test_product_state_populations():
    """Test |1>_B |0>_A lands on index 2 (left index is qubit B)."""
    rho = product_state(np.pi, 0.0)

    assert rho.populations()[2] == pytest.approx(1.0)


def test_transform_by_unitary():
    swap = np.eye(4)[[0, 2, 1, 3]]
    rho = product_state(np.pi, 0.0).transform(swap)

    assert rho.populations()[1] == pytest.approx(1.0)


def test_as_density_validates_arrays():
    with pytest.raises(InvalidDensityMatrixError):
        as_density(np.eye(4))


def test_random_density_is_reproducible():
    a = random_density(np.random.default_rng(5))
    b = random_density(np.random.default_rng(5))

    np.testing.assert_array_equal(a.matrix, b.matrix)
    assert a.eigenvalues().min() >= 0.0


def test_random_density_rank():
    rho = random_density(np.random.default_rng(6), rank=1)

    assert rho.purity() == pytest.approx(1.0)
