import numpy as np
import pytest
from hypothesis import given

from lgks_rcac.lindblad import PlantConfig, equilibrium_residual, hamiltonian, lgks_rhs
from lgks_rcac.quantum_core import hermitian_residual

from .conftest import hermitian_matrices


def test_hamiltonian_examples(plant):
    assert np.array_equal(hamiltonian(plant, 0.0), plant.h0)
    assert np.allclose(hamiltonian(plant, 1.0), 0.5 * np.array([[1, 1], [1, -1]]), atol=0)
    assert np.allclose(hamiltonian(plant, -1.0), 0.5 * np.array([[1, -1], [-1, -1]]), atol=0)
    assert hermitian_residual(hamiltonian(plant, 3.7)) <= 1e-14
    with pytest.raises(ValueError):
        hamiltonian(plant, float("nan"))


def test_rhs_excited_state_decays(plant):
    # diagonal rho commutes with diagonal H0; L rho L^H = diag(1,0), {L^H L, rho} = diag(0,2)
    out = lgks_rhs(plant, np.diag([0.0, 1.0]).astype(complex), 0.0)
    assert np.allclose(out, np.diag([1.0, -1.0]), atol=1e-15)


def test_low_entropy_target_is_near_equilibrium(plant, rho_le):
    assert np.linalg.norm(lgks_rhs(plant, rho_le, 1.0)) <= 1e-3
    assert equilibrium_residual(plant, rho_le, 1.0) <= 1e-3


def test_high_entropy_target_residual(plant, rho_he):
    # The published 4-decimal matrix is not a fixed point at u = 10; the
    # residual is pinned here so a plant change would show up.
    assert equilibrium_residual(plant, rho_he, 10.0) == pytest.approx(0.07535, abs=1e-4)


def test_maximally_mixed_is_not_equilibrium(plant):
    assert equilibrium_residual(plant, 0.5 * np.eye(2), 0.0) > 0.0


@pytest.fixture(scope="module")
def plant_default():
    return PlantConfig()


@given(hermitian_matrices(), hermitian_matrices())
def test_rhs_trace_hermitian_and_linear(plant_default, r1, r2):
    plant = plant_default
    for u in (0.0, 1.0, -7.5):
        d = lgks_rhs(plant, r1, u)
        scale = max(1.0, np.abs(r1).max()) * max(1.0, abs(u))
        assert abs(np.trace(d)) <= 1e-14 * scale
        assert hermitian_residual(d) <= 1e-14 * scale
        lhs = lgks_rhs(plant, 0.3 * r1 - 2.0 * r2, u)
        rhs = 0.3 * d - 2.0 * lgks_rhs(plant, r2, u)
        assert np.linalg.norm(lhs - rhs) <= 1e-13 * max(scale, np.abs(r2).max() * max(1.0, abs(u)))


def test_plant_config_validation(rho0):
    with pytest.raises(ValueError):
        PlantConfig(h0=np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        PlantConfig(jumps=())
    with pytest.raises(ValueError):
        PlantConfig(rho0=2 * rho0)
    p = PlantConfig()
    with pytest.raises(ValueError):
        p.h0[0, 0] = 3.0


def test_multiple_jumps_add(rho0):
    lz = np.diag([1.0, -1.0]).astype(complex)
    two = PlantConfig(jumps=(np.array([[0, 1], [0, 0]]), lz))
    one = PlantConfig()
    deph = PlantConfig(h0=np.zeros((2, 2)), h1=np.zeros((2, 2)), jumps=(lz,))
    assert np.allclose(lgks_rhs(two, rho0, 0.4), lgks_rhs(one, rho0, 0.4) + lgks_rhs(deph, rho0, 0.0), atol=1e-15)
