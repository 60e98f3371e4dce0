"""Continuous-time retrospective cost adaptive control of PID gains.

The controller is ``u = phi @ theta`` with regressor ``phi = [e, gamma, edot]``
and gains ``theta = [kp, ki, kd]``.  The gains minimise an exponentially
forgotten retrospective cost; its minimiser obeys the coupled ODEs in
:func:`rcac_derivatives`.  :func:`rcac_oracle` integrates the normal-equation
form ``A theta = -b`` of the same cost instead and is used to cross-check.

Filters use the realization ``(A_f, B_f, C_f, D_f) = (-beta, 1, 1, 0)`` of
``1 / (s + beta)``, so the filtered signals are just the filter states.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

DIVERGENCE_LIMIT = 1e12
ORACLE_COND_LIMIT = 1e14


class DivergenceError(RuntimeError):
    """Controller state left the region where the integration is meaningful."""


class GainVector(NamedTuple):
    kp: float
    ki: float
    kd: float


@dataclass(frozen=True)
class RcacConfig:
    rz: float = 1.0
    ru: float = 1.0
    p0: np.ndarray = field(default_factory=lambda: 1e-3 * np.eye(3))
    lam: float = 0.01
    beta: float = 2000.0

    def __post_init__(self):
        p0 = np.array(self.p0, dtype=float)
        if p0.shape != (3, 3):
            raise ValueError(f"p0 must be 3x3, got {p0.shape}")
        if not np.allclose(p0, p0.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(p0).max())):
            raise ValueError("p0 must be symmetric")
        if np.linalg.eigvalsh(p0).min() <= 0.0:
            raise ValueError("p0 must be positive definite")
        if not self.rz > 0.0:
            raise ValueError("rz must be positive")
        if self.ru < 0.0:
            raise ValueError("ru must be nonnegative")
        if self.beta < 0.0:
            raise ValueError("beta must be nonnegative")
        p0.setflags(write=False)
        object.__setattr__(self, "p0", p0)

    @classmethod
    def scalar(cls, p0_scalar: float, beta: float, rz: float = 1.0, ru: float = 1.0, lam: float = 0.01):
        return cls(rz=rz, ru=ru, p0=p0_scalar * np.eye(3), lam=lam, beta=beta)


@dataclass
class ControllerState:
    theta: np.ndarray
    p: np.ndarray
    gamma: float = 0.0
    x_phi: np.ndarray = field(default_factory=lambda: np.zeros(3))
    x_u: float = 0.0
    x_d: float = 0.0

    @classmethod
    def initial(cls, cfg: RcacConfig, e0: float = 0.0) -> "ControllerState":
        # x_d starts at e(0) so the derivative estimate, and hence u(0), is zero.
        return cls(theta=np.zeros(3), p=np.array(cfg.p0, dtype=float), x_d=float(e0))

    @property
    def gains(self) -> GainVector:
        return GainVector(*map(float, self.theta))


class RcacDerivatives(NamedTuple):
    theta_dot: np.ndarray
    p_dot: np.ndarray
    x_phi_dot: np.ndarray
    x_u_dot: float
    gamma_dot: float


def regressor(e: float, gamma: float, edot: float) -> np.ndarray:
    return np.array([e, gamma, edot], dtype=float)


def control(phi: np.ndarray, theta: np.ndarray) -> float:
    return float(np.dot(phi, theta))


def filter_dynamics(beta: float, state, inp):
    """State derivative of ``1 / (s + beta)``, entrywise for vector signals."""
    if beta < 0.0:
        raise ValueError("beta must be nonnegative")
    return -beta * np.asarray(state, dtype=float) + np.asarray(inp, dtype=float)


def retrospective_performance(z: float, phi_f: np.ndarray, theta: np.ndarray, u_f: float) -> float:
    return float(z + np.dot(phi_f, theta) - u_f)


def check_divergence(theta: np.ndarray, p: np.ndarray, limit: float = DIVERGENCE_LIMIT) -> None:
    nt = np.linalg.norm(theta)
    npn = np.linalg.norm(p)
    if not (nt <= limit and npn <= limit):
        raise DivergenceError(f"controller diverged: |theta| = {nt:.3e}, |P| = {npn:.3e}")


def rcac_derivatives(cfg: RcacConfig, st: ControllerState, z: float, phi: np.ndarray, u: float) -> RcacDerivatives:
    """Time derivatives of the RCAC gains, ``P`` and the filter/integral states.

    ``u`` is the control actually applied (``phi @ theta``); it drives the
    control filter.
    """
    check_divergence(st.theta, st.p)
    phi = np.asarray(phi, dtype=float)
    phi_f = np.asarray(st.x_phi, dtype=float)
    u_f = st.x_u
    p = st.p
    theta = st.theta

    zhat = retrospective_performance(z, phi_f, theta, u_f)
    p_phi_f = p @ phi_f
    p_phi = p @ phi
    theta_dot = -p_phi_f * cfg.rz * zhat - p_phi * cfg.ru * float(phi @ theta)
    p_dot = cfg.lam * p - cfg.rz * np.outer(p_phi_f, phi_f @ p) - cfg.ru * np.outer(p_phi, phi @ p)
    return RcacDerivatives(
        theta_dot=theta_dot,
        p_dot=p_dot,
        x_phi_dot=filter_dynamics(cfg.beta, phi_f, phi),
        x_u_dot=float(filter_dynamics(cfg.beta, u_f, u)),
        gamma_dot=float(z),
    )


@dataclass
class OracleState:
    a: np.ndarray
    b: np.ndarray

    def theta(self) -> np.ndarray:
        c = np.linalg.cond(self.a)
        if not c <= ORACLE_COND_LIMIT:
            raise np.linalg.LinAlgError(f"oracle information matrix is singular (cond {c:.3e})")
        return -np.linalg.solve(self.a, self.b)


class StageHistory(NamedTuple):
    """Signals seen at each RK4 stage of a run.

    Arrays are indexed ``[step, stage]`` with the four classical stages in
    order.  ``phi`` and ``phi_f`` carry a trailing axis of length 3.
    """

    dt: float
    z: np.ndarray
    phi: np.ndarray
    phi_f: np.ndarray
    u_f: np.ndarray


class OracleTrace(NamedTuple):
    theta: np.ndarray  # (n_steps + 1, 3)
    a: np.ndarray  # (n_steps + 1, 3, 3)
    b: np.ndarray  # (n_steps + 1, 3)


def _oracle_rates(cfg: RcacConfig, a, b, z, phi, phi_f, u_f):
    a_dot = -cfg.lam * a + cfg.rz * np.outer(phi_f, phi_f) + cfg.ru * np.outer(phi, phi)
    b_dot = -cfg.lam * b + phi_f * cfg.rz * (z - u_f)
    return a_dot, b_dot


def rcac_oracle(cfg: RcacConfig, history: StageHistory) -> OracleTrace:
    """Gains from the normal equations of the retrospective cost.

    Integrates ``A`` (information matrix, starts at ``inv(p0)``) and ``b``
    (starts at zero) with classical RK4, feeding each stage the signals the
    main run saw at that stage, and returns ``theta = -inv(A) b`` after
    every step.
    """
    dt = history.dt
    n = len(history.z)
    st = OracleState(a=np.linalg.inv(cfg.p0), b=np.zeros(3))
    thetas = np.empty((n + 1, 3))
    a_tr = np.empty((n + 1, 3, 3))
    b_tr = np.empty((n + 1, 3))
    thetas[0], a_tr[0], b_tr[0] = st.theta(), st.a, st.b
    offsets = (0.0, 0.5, 0.5, 1.0)
    for k in range(n):
        ka, kb = [], []
        for s in range(4):
            if s == 0:
                a_s, b_s = st.a, st.b
            else:
                a_s = st.a + offsets[s] * dt * ka[-1]
                b_s = st.b + offsets[s] * dt * kb[-1]
            da, db = _oracle_rates(
                cfg, a_s, b_s, history.z[k, s], history.phi[k, s], history.phi_f[k, s], history.u_f[k, s]
            )
            ka.append(da)
            kb.append(db)
        a_new = st.a + dt / 6.0 * (ka[0] + 2.0 * ka[1] + 2.0 * ka[2] + ka[3])
        b_new = st.b + dt / 6.0 * (kb[0] + 2.0 * kb[1] + 2.0 * kb[2] + kb[3])
        st = OracleState(a=0.5 * (a_new + a_new.T), b=b_new)
        thetas[k + 1], a_tr[k + 1], b_tr[k + 1] = st.theta(), st.a, st.b
    return OracleTrace(thetas, a_tr, b_tr)
