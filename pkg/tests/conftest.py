import numpy as np
import pytest
from hypothesis import strategies as st

from lgks_rcac.config import RHO_D_HIGH_ENTROPY, RHO_D_LOW_ENTROPY
from lgks_rcac.lindblad import RHO0, PlantConfig


@pytest.fixture
def plant():
    return PlantConfig()


@pytest.fixture
def rho_le():
    return RHO_D_LOW_ENTROPY.copy()


@pytest.fixture
def rho_he():
    return RHO_D_HIGH_ENTROPY.copy()


@pytest.fixture
def rho0():
    return RHO0.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_reals = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)


@st.composite
def complex_matrices(draw):
    v = [draw(_reals) for _ in range(8)]
    return np.array(v[0::2]).reshape(2, 2) + 1j * np.array(v[1::2]).reshape(2, 2)


@st.composite
def hermitian_matrices(draw):
    g = draw(complex_matrices())
    return 0.5 * (g + g.conj().T)


@st.composite
def density_matrices(draw):
    g = draw(complex_matrices())
    m = g @ g.conj().T
    tr = np.trace(m).real
    if tr < 1e-6:
        m = np.eye(2) + 0j
        tr = 2.0
    m = m / tr
    return 0.5 * (m + m.conj().T)
