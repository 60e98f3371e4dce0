"""Closed-loop simulation: LGKS plant + fidelity error + RCAC-tuned PID.

The coupled state is one real vector of length 26::

    [0:8]    rho, row-major, (re, im) interleaved
    [8]      gamma, integral of e
    [9]      x_d, dirty-derivative filter state
    [10:13]  x_phi, filtered regressor
    [13]     x_u, filtered control
    [14:17]  theta = (kp, ki, kd)
    [17:26]  P, row-major

:func:`coupled_rhs` and :func:`rk4_step` are the readable reference path.
:func:`simulate` runs the same equations through the compiled kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernel
from .lindblad import PlantConfig, lgks_rhs
from .metrics import DEFAULT_TAU_D, bloch, density_error, error_derivative, von_neumann_entropy
from .quantum_core import TOL_HERM, TOL_PSD, TOL_TRACE, as_density, eigvalsh, hermitian_residual
from .rcac import DIVERGENCE_LIMIT, ControllerState, RcacConfig, StageHistory, control, rcac_derivatives, regressor

N_STATE = _kernel.N_STATE
RHO = slice(0, 8)
GAMMA = 8
X_D = 9
X_PHI = slice(10, 13)
X_U = 13
THETA = slice(14, 17)
P = slice(17, 26)

# Real-axis stability limit of classical RK4 is about 2.785; keep a margin.
RK4_STABILITY = 2.5

RECORD_FIELDS = (
    "t",
    "e",
    "kp",
    "ki",
    "kd",
    "u",
    "re_rho11",
    "re_rho12",
    "im_rho12",
    "re_rho22",
    "entropy",
    "bloch_x",
    "bloch_y",
    "bloch_z",
    "trace_residual",
    "herm_residual",
    "min_eig_rho",
)


class SimulationError(RuntimeError):
    """Integration aborted; ``last_record`` is the last valid sample."""

    def __init__(self, msg: str, last_record: Optional["TrajectoryRecord"] = None, t_fail: float = math.nan):
        super().__init__(msg)
        self.last_record = last_record
        self.t_fail = t_fail


@dataclass(frozen=True)
class SimConfig:
    rho_d: np.ndarray
    dt: float = 1e-4
    t_final: float = 200.0
    record_every: int = 100
    tau_d: float = DEFAULT_TAU_D
    tol_herm: float = TOL_HERM
    tol_trace: float = TOL_TRACE
    tol_psd: float = TOL_PSD
    open_loop_u: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "rho_d", as_density(self.rho_d))
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.t_final >= self.dt:
            raise ValueError("t_final must be at least dt")
        if self.record_every < 1:
            raise ValueError("record_every must be a positive integer")
        if not self.tau_d > 0.0:
            raise ValueError("tau_d must be positive")
        n = self.t_final / self.dt
        if abs(n - round(n)) > 1e-6:
            raise ValueError(f"t_final {self.t_final} is not a whole number of steps of {self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass(frozen=True)
class TrajectoryRecord:
    t: float
    e: float
    kp: float
    ki: float
    kd: float
    u: float
    re_rho11: float
    re_rho12: float
    im_rho12: float
    re_rho22: float
    entropy: float
    bloch_x: float
    bloch_y: float
    bloch_z: float
    trace_residual: float
    herm_residual: float
    min_eig_rho: float

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, f) for f in RECORD_FIELDS)


# -- state packing ---------------------------------------------------------


def pack_rho(rho: np.ndarray) -> np.ndarray:
    flat = np.asarray(rho, dtype=np.complex128).reshape(4)
    return np.column_stack([flat.real, flat.imag]).reshape(8)


def unpack_rho(s: np.ndarray) -> np.ndarray:
    return (s[0:8:2] + 1j * s[1:8:2]).reshape(2, 2)


def pack_state(rho: np.ndarray, ctrl: ControllerState) -> np.ndarray:
    s = np.zeros(N_STATE)
    s[RHO] = pack_rho(rho)
    s[GAMMA] = ctrl.gamma
    s[X_D] = ctrl.x_d
    s[X_PHI] = ctrl.x_phi
    s[X_U] = ctrl.x_u
    s[THETA] = ctrl.theta
    s[P] = np.asarray(ctrl.p).reshape(9)
    return s


def unpack_state(s: np.ndarray) -> tuple[np.ndarray, ControllerState]:
    ctrl = ControllerState(
        theta=s[THETA].copy(),
        p=s[P].reshape(3, 3).copy(),
        gamma=float(s[GAMMA]),
        x_phi=s[X_PHI].copy(),
        x_u=float(s[X_U]),
        x_d=float(s[X_D]),
    )
    return unpack_rho(s), ctrl


def initial_state(plant: PlantConfig, cfg: RcacConfig, scfg: SimConfig) -> np.ndarray:
    e0 = density_error(plant.rho0, scfg.rho_d)
    return pack_state(plant.rho0, ControllerState.initial(cfg, e0))


# -- reference path --------------------------------------------------------


def coupled_rhs(plant: PlantConfig, cfg: RcacConfig, scfg: SimConfig, s: np.ndarray) -> np.ndarray:
    """Derivative of the flattened closed-loop state."""
    if not np.all(np.isfinite(s)):
        raise SimulationError("non-finite state")
    rho, ctrl = unpack_state(s)
    e = density_error(rho, scfg.rho_d)
    edot, x_d_dot = error_derivative(e, ctrl.x_d, scfg.tau_d)
    phi = regressor(e, ctrl.gamma, edot)
    u = scfg.open_loop_u if scfg.open_loop_u is not None else control(phi, ctrl.theta)
    z = e

    d = rcac_derivatives(cfg, ctrl, z, phi, u)
    out = np.empty(N_STATE)
    out[RHO] = pack_rho(lgks_rhs(plant, rho, u))
    out[GAMMA] = d.gamma_dot
    out[X_D] = x_d_dot
    out[X_PHI] = d.x_phi_dot
    out[X_U] = d.x_u_dot
    out[THETA] = d.theta_dot
    out[P] = d.p_dot.reshape(9)
    return out


def project(s: np.ndarray) -> np.ndarray:
    """Hermitian part of rho and symmetric part of P; other entries untouched."""
    s = s.copy()
    rho = unpack_rho(s)
    s[RHO] = pack_rho(0.5 * (rho + rho.conj().T))
    p = s[P].reshape(3, 3)
    s[P] = (0.5 * (p + p.T)).reshape(9)
    return s


def rk4_step(rhs: Callable[[np.ndarray], np.ndarray], s: np.ndarray, dt: float, post=None) -> np.ndarray:
    """One classical Runge-Kutta step; ``post`` (e.g. :func:`project`) is applied to the result."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    k1 = rhs(s)
    k2 = rhs(s + 0.5 * dt * k1)
    k3 = rhs(s + 0.5 * dt * k2)
    k4 = rhs(s + dt * k3)
    out = s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise SimulationError("non-finite state after RK4 step")
    return post(out) if post is not None else out


# -- compiled path ---------------------------------------------------------


@dataclass
class RawRun:
    """Arrays straight out of the kernel."""

    t: np.ndarray
    states: np.ndarray
    e: np.ndarray
    edot: np.ndarray
    u: np.ndarray
    status: int
    steps_done: int
    max_pre_herm: float
    stage_sig: np.ndarray = field(repr=False)
    dt: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == _kernel.STATUS_OK

    def stage_history(self) -> StageHistory:
        """Per-stage signals for :func:`lgks_rcac.rcac.rcac_oracle`."""
        sg = self.stage_sig
        phi = np.stack([sg[..., 0], sg[..., 7], sg[..., 1]], axis=-1)
        return StageHistory(dt=self.dt, z=sg[..., 0].copy(), phi=phi, phi_f=sg[..., 3:6].copy(), u_f=sg[..., 6].copy())


def kernel_params(cfg: RcacConfig, scfg: SimConfig) -> np.ndarray:
    return np.array(
        [
            cfg.rz,
            cfg.ru,
            cfg.lam,
            cfg.beta,
            scfg.tau_d,
            0.0 if scfg.open_loop_u is None else 1.0,
            0.0 if scfg.open_loop_u is None else float(scfg.open_loop_u),
            DIVERGENCE_LIMIT,
        ]
    )


def integrate(
    plant: PlantConfig,
    cfg: RcacConfig,
    scfg: SimConfig,
    s0: Optional[np.ndarray] = None,
    n_steps: Optional[int] = None,
    stage_log_steps: int = 0,
) -> RawRun:
    """Run the compiled RK4 loop and return raw arrays (no records built)."""
    if cfg.beta * scfg.dt > RK4_STABILITY:
        raise ValueError(f"beta*dt = {cfg.beta * scfg.dt:g} exceeds the RK4 stability margin {RK4_STABILITY}")
    if s0 is None:
        s0 = initial_state(plant, cfg, scfg)
    if n_steps is None:
        n_steps = scfg.n_steps
    jumps = np.array([j.reshape(4) for j in plant.jumps], dtype=np.complex128)
    steps, states, sig, n_rec, status, done, max_pre, stage_sig = _kernel.integrate(
        np.asarray(s0, dtype=float),
        plant.h0.reshape(4).copy(),
        plant.h1.reshape(4).copy(),
        jumps,
        scfg.rho_d.reshape(4).copy(),
        kernel_params(cfg, scfg),
        float(scfg.dt),
        int(n_steps),
        int(scfg.record_every),
        int(min(stage_log_steps, n_steps)),
    )
    t = steps * scfg.dt
    if status == _kernel.STATUS_OK and n_rec and steps[-1] == scfg.n_steps:
        t[-1] = scfg.t_final
    raw = RawRun(
        t=t,
        states=states,
        e=sig[:, 0].copy(),
        edot=sig[:, 1].copy(),
        u=sig[:, 2].copy(),
        status=int(status),
        steps_done=int(done),
        max_pre_herm=float(max_pre),
        stage_sig=stage_sig,
        dt=float(scfg.dt),
    )
    return raw


def make_record(t: float, s: np.ndarray, e: float, u: float) -> TrajectoryRecord:
    rho = unpack_rho(s)
    b = bloch(rho)
    theta = s[THETA]
    return TrajectoryRecord(
        t=float(t),
        e=float(e),
        kp=float(theta[0]),
        ki=float(theta[1]),
        kd=float(theta[2]),
        u=float(u),
        re_rho11=float(rho[0, 0].real),
        re_rho12=float(rho[0, 1].real),
        im_rho12=float(rho[0, 1].imag),
        re_rho22=float(rho[1, 1].real),
        entropy=von_neumann_entropy(rho, tol_psd=1e-7),
        bloch_x=b.x,
        bloch_y=b.y,
        bloch_z=b.z,
        trace_residual=float(abs(np.trace(rho) - 1.0)),
        herm_residual=hermitian_residual(rho),
        min_eig_rho=float(eigvalsh(rho)[0]),
    )


def records_from_raw(raw: RawRun) -> list[TrajectoryRecord]:
    return [make_record(t, s, e, u) for t, s, e, u in zip(raw.t, raw.states, raw.e, raw.u)]


def simulate(plant: PlantConfig, cfg: RcacConfig, scfg: SimConfig) -> list[TrajectoryRecord]:
    """Integrate the closed loop from ``plant.rho0`` to ``scfg.t_final``.

    Raises :class:`SimulationError` (carrying the last valid record) if the
    state goes non-finite or the controller diverges.
    """
    raw = integrate(plant, cfg, scfg)
    records = records_from_raw(raw)
    if not raw.ok:
        why = "non-finite state" if raw.status == _kernel.STATUS_NONFINITE else "controller divergence"
        t_fail = (raw.steps_done + 1) * scfg.dt
        raise SimulationError(f"{why} at t = {t_fail:.6g} s", records[-1] if records else None, t_fail)
    return records
