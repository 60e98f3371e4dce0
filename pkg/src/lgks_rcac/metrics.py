"""Scalar observables of a two-level density matrix."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .quantum_core import TOL_PSD, NotPositiveError, clamp_eigenvalues, det, eigvalsh, hermitize, sqrt_psd

DEFAULT_TAU_D = 0.01


class BlochPoint(NamedTuple):
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


def _clip_unit(f: float) -> float:
    return min(1.0, max(0.0, f))


def fidelity_general(rho1: np.ndarray, rho2: np.ndarray, clamp: bool = True) -> float:
    """Uhlmann-Jozsa fidelity through two principal square roots.

    Slow path; the controller uses :func:`fidelity_2x2`.  This one is kept
    as the independent reference.
    """
    s1 = sqrt_psd(rho1)
    inner = hermitize(s1 @ rho2 @ s1)
    f = float(np.trace(sqrt_psd(inner)).real) ** 2
    return _clip_unit(f) if clamp else f


def fidelity_2x2(rho1: np.ndarray, rho2: np.ndarray, tol_psd: float = TOL_PSD, clamp: bool = True) -> float:
    """Closed-form fidelity ``tr(rho1 rho2) + 2 sqrt(det rho1 det rho2)``."""
    d1 = det(rho1).real
    d2 = det(rho2).real
    if d1 < -tol_psd or d2 < -tol_psd:
        raise NotPositiveError(f"negative determinant ({d1:.3e}, {d2:.3e})")
    f = float(np.trace(rho1 @ rho2).real) + 2.0 * math.sqrt(max(d1, 0.0) * max(d2, 0.0))
    return _clip_unit(f) if clamp else f


def density_error(rho: np.ndarray, rho_d: np.ndarray) -> float:
    return 1.0 - fidelity_2x2(rho, rho_d)


def von_neumann_entropy(rho: np.ndarray, tol_psd: float = TOL_PSD) -> float:
    """``-tr(rho ln rho)`` in nats, with ``0 ln 0 = 0``."""
    w = clamp_eigenvalues(eigvalsh(rho), tol_psd)
    return float(-sum(lam * math.log(lam) for lam in w if lam > 0.0))


def bloch(rho: np.ndarray) -> BlochPoint:
    return BlochPoint(
        2.0 * float(rho[0, 1].real),
        2.0 * float(rho[0, 1].imag),
        float((rho[0, 0] - rho[1, 1]).real),
    )


def error_derivative(e_now: float, filter_state: float, tau_d: float) -> tuple[float, float]:
    """Dirty derivative of the density error.

    The filter state follows ``e`` through a first-order lag with time
    constant ``tau_d``; its rate is the derivative estimate.  Returns
    ``(edot, filter_state_dot)``, which are equal by construction.
    """
    if not tau_d > 0.0:
        raise ValueError(f"tau_d must be positive, got {tau_d}")
    edot = (e_now - filter_state) / tau_d
    return edot, edot
