"""Closed-form algebra for 2x2 complex matrices.

Matrices are plain ``numpy`` arrays of shape ``(2, 2)`` and dtype
``complex128``.  Nothing here is general-n: every routine is written for the
two-level case so that its output can be checked exactly by hand.
"""

from __future__ import annotations

import numpy as np

TOL_HERM = 1e-9
TOL_TRACE = 1e-9
TOL_PSD = 1e-9

# Below this eigenvalue gap the matrix is treated as a multiple of identity.
DEGENERATE_GAP = 1e-14


class NotHermitianError(ValueError):
    pass


class NotPositiveError(ValueError):
    pass


class InvalidDensityError(ValueError):
    pass


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def conjugate_transpose(a: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(a)).T.copy()


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def hermitian_residual(a: np.ndarray) -> float:
    """Frobenius norm of ``a - a^H``."""
    return float(np.linalg.norm(a - np.conj(a).T))


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.conj(a).T)


def check_hermitian(a: np.ndarray, tol: float = TOL_HERM) -> None:
    r = hermitian_residual(a)
    if not r <= tol:
        raise NotHermitianError(f"Hermitian residual {r:.3e} exceeds {tol:.1e}")


def hermitian_eig(a: np.ndarray, tol: float = TOL_HERM) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian 2x2 matrix.

    Returns ``(w, v)`` with ``w`` the two real eigenvalues in ascending order
    and ``v`` a unitary matrix whose columns are the matching eigenvectors,
    so that ``v @ diag(w) @ v^H`` reconstructs ``a``.

    The eigenvector formulas are picked by the sign of the diagonal split so
    that neither suffers cancellation.  A numerically scalar matrix gets the
    standard basis.
    """
    a = np.asarray(a, dtype=np.complex128)
    check_hermitian(a, tol)
    p = a[0, 0].real
    r = a[1, 1].real
    q = 0.5 * (a[0, 1] + np.conj(a[1, 0]))

    mean = 0.5 * (p + r)
    half_diff = 0.5 * (p - r)
    disc = np.hypot(half_diff, abs(q))
    w = np.array([mean - disc, mean + disc])

    if disc < DEGENERATE_GAP:
        return w, np.eye(2, dtype=np.complex128)

    if half_diff >= 0.0:
        upper = np.array([half_diff + disc, np.conj(q)])
        lower = np.array([-q, half_diff + disc])
    else:
        upper = np.array([q, disc - half_diff])
        lower = np.array([disc - half_diff, -np.conj(q)])
    upper = upper / np.linalg.norm(upper)
    lower = lower / np.linalg.norm(lower)
    v = np.column_stack([lower, upper]).astype(np.complex128)
    return w, v


def eigvalsh(a: np.ndarray, tol: float = TOL_HERM) -> np.ndarray:
    """Ascending eigenvalues only (same closed form as :func:`hermitian_eig`)."""
    a = np.asarray(a, dtype=np.complex128)
    check_hermitian(a, tol)
    p = a[0, 0].real
    r = a[1, 1].real
    q = 0.5 * (a[0, 1] + np.conj(a[1, 0]))
    mean = 0.5 * (p + r)
    disc = np.hypot(0.5 * (p - r), abs(q))
    return np.array([mean - disc, mean + disc])


def clamp_eigenvalues(w: np.ndarray, tol_psd: float = TOL_PSD) -> np.ndarray:
    if w[0] < -tol_psd:
        raise NotPositiveError(f"eigenvalue {w[0]:.3e} below -{tol_psd:.1e}")
    return np.where(w < 0.0, 0.0, w)


def sqrt_psd(a: np.ndarray, tol_psd: float = TOL_PSD, tol: float = TOL_HERM) -> np.ndarray:
    """Principal square root of a Hermitian positive semidefinite 2x2 matrix.

    Eigenvalues in ``[-tol_psd, 0)`` are set to zero first; anything more
    negative raises :class:`NotPositiveError`.
    """
    w, v = hermitian_eig(a, tol)
    s = np.sqrt(clamp_eigenvalues(w, tol_psd))
    root = (v * s) @ np.conj(v).T
    return hermitize(root)


def det(a: np.ndarray) -> complex:
    return a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]


def as_density(
    a,
    tol_herm: float = TOL_HERM,
    tol_trace: float = TOL_TRACE,
    tol_psd: float = TOL_PSD,
) -> np.ndarray:
    """Validate ``a`` as a density matrix and return it as a complex array.

    Raises :class:`InvalidDensityError` if it is not Hermitian, not unit
    trace, or has an eigenvalue below ``-tol_psd``.
    """
    m = as_matrix(a)
    r = hermitian_residual(m)
    if r > tol_herm:
        raise InvalidDensityError(f"not Hermitian (residual {r:.3e})")
    tr = np.trace(m)
    if abs(tr - 1.0) > tol_trace:
        raise InvalidDensityError(f"trace {tr} differs from 1")
    lo = eigvalsh(m, tol_herm)[0]
    if lo < -tol_psd:
        raise InvalidDensityError(f"negative eigenvalue {lo:.3e}")
    return m
