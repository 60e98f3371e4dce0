"""Controlled two-level LGKS master equation (hbar = 1)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quantum_core import anticommutator, as_density, as_matrix, check_hermitian, commutator

# Plant instance used throughout: sigma_z / 2 drift, sigma_x / 2 control,
# a single lowering-type jump operator.
H0 = 0.5 * np.array([[1, 0], [0, -1]], dtype=np.complex128)
H1 = 0.5 * np.array([[0, 1], [1, 0]], dtype=np.complex128)
L1 = np.array([[0, 1], [0, 0]], dtype=np.complex128)
RHO0 = np.array([[0.4, 0.1 + 0.3j], [0.1 - 0.3j, 0.6]], dtype=np.complex128)


@dataclass(frozen=True)
class PlantConfig:
    h0: np.ndarray = field(default_factory=lambda: H0.copy())
    h1: np.ndarray = field(default_factory=lambda: H1.copy())
    jumps: tuple[np.ndarray, ...] = field(default_factory=lambda: (L1.copy(),))
    rho0: np.ndarray = field(default_factory=lambda: RHO0.copy())

    def __post_init__(self):
        h0 = as_matrix(self.h0)
        h1 = as_matrix(self.h1)
        check_hermitian(h0)
        check_hermitian(h1)
        jumps = tuple(as_matrix(j) for j in self.jumps)
        if not jumps:
            raise ValueError("at least one jump operator is required")
        rho0 = as_density(self.rho0)
        for name, value in (("h0", h0), ("h1", h1), ("jumps", jumps), ("rho0", rho0)):
            object.__setattr__(self, name, value)
        for m in (h0, h1, rho0, *jumps):
            m.setflags(write=False)


def hamiltonian(cfg: PlantConfig, u: float) -> np.ndarray:
    """``H0 + H1 * u`` for a real control ``u``."""
    if not np.isfinite(u):
        raise ValueError(f"control must be finite, got {u}")
    return cfg.h0 + cfg.h1 * float(u)


def lgks_rhs(cfg: PlantConfig, rho: np.ndarray, u: float) -> np.ndarray:
    """Right-hand side of the controlled LGKS equation.

    ``rho`` only needs to be Hermitian; RK4 stage values are not unit trace,
    and the map is linear in ``rho`` so that is fine.
    """
    h = hamiltonian(cfg, u)
    out = -1j * commutator(h, rho)
    for lj in cfg.jumps:
        ljh = np.conj(lj).T
        out = out + lj @ rho @ ljh - 0.5 * anticommutator(ljh @ lj, rho)
    return out


def equilibrium_residual(cfg: PlantConfig, rho: np.ndarray, u: float) -> float:
    """Frobenius norm of the LGKS right-hand side at ``(rho, u)``."""
    rho = as_density(rho)
    return float(np.linalg.norm(lgks_rhs(cfg, rho, u)))

