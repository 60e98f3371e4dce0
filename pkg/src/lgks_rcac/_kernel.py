"""Compiled closed-loop integrator.

Scalar-unrolled version of :func:`lgks_rcac.sim.coupled_rhs` plus the RK4
loop, compiled with numba.  The state layout is the one documented in
:mod:`lgks_rcac.sim`; the tests pin this kernel to the pure-numpy path.
"""

from __future__ import annotations

import math

import numba
import numpy as np

N_STATE = 26
N_SIG = 8
# params layout
P_RZ, P_RU, P_LAM, P_BETA, P_TAU_D, P_OPEN_LOOP, P_U_OL, P_LIMIT = range(8)

STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_DIVERGED = 2


@numba.njit(cache=True)
def rhs(s, out, h0, h1, jumps, rho_d, params, sig):
    """Evaluate the coupled derivative into ``out``.

    ``sig`` receives ``[e, edot, u, phi_f0, phi_f1, phi_f2, u_f, gamma]`` for
    logging and for the oracle history.
    """
    rz = params[P_RZ]
    ru = params[P_RU]
    lam = params[P_LAM]
    beta = params[P_BETA]
    tau_d = params[P_TAU_D]

    a = complex(s[0], s[1])
    b = complex(s[2], s[3])
    c = complex(s[4], s[5])
    d = complex(s[6], s[7])
    da = rho_d[0]
    db = rho_d[1]
    dc = rho_d[2]
    dd = rho_d[3]

    # density error from the closed-form fidelity
    tr = (a * da + b * dc + c * db + d * dd).real
    det1 = (a * d - b * c).real
    det2 = (da * dd - db * dc).real
    if det1 < 0.0:
        det1 = 0.0
    if det2 < 0.0:
        det2 = 0.0
    f = tr + 2.0 * math.sqrt(det1 * det2)
    if f > 1.0:
        f = 1.0
    elif f < 0.0:
        f = 0.0
    e = 1.0 - f

    gamma = s[8]
    edot = (e - s[9]) / tau_d
    t0 = s[14]
    t1 = s[15]
    t2 = s[16]
    if params[P_OPEN_LOOP] != 0.0:
        u = params[P_U_OL]
    else:
        u = e * t0 + gamma * t1 + edot * t2

    h00 = h0[0] + u * h1[0]
    h01 = h0[1] + u * h1[1]
    h10 = h0[2] + u * h1[2]
    h11 = h0[3] + u * h1[3]
    # -i [H, rho]
    r00 = -1j * ((h00 * a + h01 * c) - (a * h00 + b * h10))
    r01 = -1j * ((h00 * b + h01 * d) - (a * h01 + b * h11))
    r10 = -1j * ((h10 * a + h11 * c) - (c * h00 + d * h10))
    r11 = -1j * ((h10 * b + h11 * d) - (c * h01 + d * h11))
    for k in range(jumps.shape[0]):
        l00 = jumps[k, 0]
        l01 = jumps[k, 1]
        l10 = jumps[k, 2]
        l11 = jumps[k, 3]
        # L rho
        m00 = l00 * a + l01 * c
        m01 = l00 * b + l01 * d
        m10 = l10 * a + l11 * c
        m11 = l10 * b + l11 * d
        # L^H L
        k00 = l00.conjugate() * l00 + l10.conjugate() * l10
        k01 = l00.conjugate() * l01 + l10.conjugate() * l11
        k10 = l01.conjugate() * l00 + l11.conjugate() * l10
        k11 = l01.conjugate() * l01 + l11.conjugate() * l11
        r00 += (m00 * l00.conjugate() + m01 * l01.conjugate()) - 0.5 * (k00 * a + k01 * c + a * k00 + b * k10)
        r01 += (m00 * l10.conjugate() + m01 * l11.conjugate()) - 0.5 * (k00 * b + k01 * d + a * k01 + b * k11)
        r10 += (m10 * l00.conjugate() + m11 * l01.conjugate()) - 0.5 * (k10 * a + k11 * c + c * k00 + d * k10)
        r11 += (m10 * l10.conjugate() + m11 * l11.conjugate()) - 0.5 * (k10 * b + k11 * d + c * k01 + d * k11)

    out[0] = r00.real
    out[1] = r00.imag
    out[2] = r01.real
    out[3] = r01.imag
    out[4] = r10.real
    out[5] = r10.imag
    out[6] = r11.real
    out[7] = r11.imag
    out[8] = e
    out[9] = edot

    f0 = s[10]
    f1 = s[11]
    f2 = s[12]
    uf = s[13]
    out[10] = -beta * f0 + e
    out[11] = -beta * f1 + gamma
    out[12] = -beta * f2 + edot
    out[13] = -beta * uf + u

    zhat = e + f0 * t0 + f1 * t1 + f2 * t2 - uf
    phi_theta = e * t0 + gamma * t1 + edot * t2
    # P @ phi_f, P @ phi and their transposed counterparts
    pf0 = s[17] * f0 + s[18] * f1 + s[19] * f2
    pf1 = s[20] * f0 + s[21] * f1 + s[22] * f2
    pf2 = s[23] * f0 + s[24] * f1 + s[25] * f2
    pp0 = s[17] * e + s[18] * gamma + s[19] * edot
    pp1 = s[20] * e + s[21] * gamma + s[22] * edot
    pp2 = s[23] * e + s[24] * gamma + s[25] * edot
    fp0 = f0 * s[17] + f1 * s[20] + f2 * s[23]
    fp1 = f0 * s[18] + f1 * s[21] + f2 * s[24]
    fp2 = f0 * s[19] + f1 * s[22] + f2 * s[25]
    qp0 = e * s[17] + gamma * s[20] + edot * s[23]
    qp1 = e * s[18] + gamma * s[21] + edot * s[24]
    qp2 = e * s[19] + gamma * s[22] + edot * s[25]

    out[14] = -pf0 * rz * zhat - pp0 * ru * phi_theta
    out[15] = -pf1 * rz * zhat - pp1 * ru * phi_theta
    out[16] = -pf2 * rz * zhat - pp2 * ru * phi_theta

    out[17] = lam * s[17] - rz * pf0 * fp0 - ru * pp0 * qp0
    out[18] = lam * s[18] - rz * pf0 * fp1 - ru * pp0 * qp1
    out[19] = lam * s[19] - rz * pf0 * fp2 - ru * pp0 * qp2
    out[20] = lam * s[20] - rz * pf1 * fp0 - ru * pp1 * qp0
    out[21] = lam * s[21] - rz * pf1 * fp1 - ru * pp1 * qp1
    out[22] = lam * s[22] - rz * pf1 * fp2 - ru * pp1 * qp2
    out[23] = lam * s[23] - rz * pf2 * fp0 - ru * pp2 * qp0
    out[24] = lam * s[24] - rz * pf2 * fp1 - ru * pp2 * qp1
    out[25] = lam * s[25] - rz * pf2 * fp2 - ru * pp2 * qp2

    sig[0] = e
    sig[1] = edot
    sig[2] = u
    sig[3] = f0
    sig[4] = f1
    sig[5] = f2
    sig[6] = uf
    sig[7] = gamma


@numba.njit(cache=True)
def _herm_residual(s):
    # Frobenius norm of rho - rho^H from the flat layout
    d01r = s[2] - s[4]
    d01i = s[3] + s[5]
    return math.sqrt(2.0 * (d01r * d01r + d01i * d01i) + 4.0 * (s[1] * s[1] + s[7] * s[7]))


@numba.njit(cache=True)
def _project(s):
    # rho <- (rho + rho^H) / 2
    s[1] = 0.0
    s[7] = 0.0
    re = 0.5 * (s[2] + s[4])
    im = 0.5 * (s[3] - s[5])
    s[2] = re
    s[3] = im
    s[4] = re
    s[5] = -im
    # P <- (P + P^T) / 2
    for i in range(3):
        for j in range(i + 1, 3):
            m = 0.5 * (s[17 + 3 * i + j] + s[17 + 3 * j + i])
            s[17 + 3 * i + j] = m
            s[17 + 3 * j + i] = m


@numba.njit(cache=True)
def _state_ok(s, limit):
    nt = 0.0
    npp = 0.0
    for j in range(N_STATE):
        if not math.isfinite(s[j]):
            return STATUS_NONFINITE
    for j in range(14, 17):
        nt += s[j] * s[j]
    for j in range(17, 26):
        npp += s[j] * s[j]
    if math.sqrt(nt) > limit or math.sqrt(npp) > limit:
        return STATUS_DIVERGED
    return STATUS_OK


@numba.njit(cache=True)
def integrate(s0, h0, h1, jumps, rho_d, params, dt, n_steps, record_every, n_stage_log):
    """Fixed-step RK4 over ``n_steps`` steps.

    Returns ``(rec_step, rec_state, rec_sig, n_rec, status, steps_done,
    max_pre_herm, stage_sig)``.  Records are taken every ``record_every``
    steps and at the last step.  ``stage_sig[k, j]`` holds the signals seen
    by stage ``j`` of step ``k`` for the first ``n_stage_log`` steps.
    """
    n_rec_max = n_steps // record_every + 2
    rec_step = np.empty(n_rec_max, dtype=np.int64)
    rec_state = np.empty((n_rec_max, N_STATE))
    rec_sig = np.empty((n_rec_max, N_SIG))
    stage_sig = np.empty((n_stage_log, 4, N_SIG))
    limit = params[P_LIMIT]

    s = s0.copy()
    k1 = np.empty(N_STATE)
    k2 = np.empty(N_STATE)
    k3 = np.empty(N_STATE)
    k4 = np.empty(N_STATE)
    tmp = np.empty(N_STATE)
    sig = np.empty(N_SIG)
    n_rec = 0
    max_pre_herm = 0.0
    status = _state_ok(s, limit)
    if status != STATUS_OK:
        return rec_step[:0], rec_state[:0], rec_sig[:0], 0, status, 0, 0.0, stage_sig

    for i in range(n_steps + 1):
        rhs(s, k1, h0, h1, jumps, rho_d, params, sig)
        if i % record_every == 0 or i == n_steps:
            rec_step[n_rec] = i
            rec_state[n_rec, :] = s
            rec_sig[n_rec, :] = sig
            n_rec += 1
        if i == n_steps:
            break
        log = i < n_stage_log
        if log:
            stage_sig[i, 0, :] = sig
        for j in range(N_STATE):
            tmp[j] = s[j] + 0.5 * dt * k1[j]
        rhs(tmp, k2, h0, h1, jumps, rho_d, params, sig)
        if log:
            stage_sig[i, 1, :] = sig
        for j in range(N_STATE):
            tmp[j] = s[j] + 0.5 * dt * k2[j]
        rhs(tmp, k3, h0, h1, jumps, rho_d, params, sig)
        if log:
            stage_sig[i, 2, :] = sig
        for j in range(N_STATE):
            tmp[j] = s[j] + dt * k3[j]
        rhs(tmp, k4, h0, h1, jumps, rho_d, params, sig)
        if log:
            stage_sig[i, 3, :] = sig
        for j in range(N_STATE):
            tmp[j] = s[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        status = _state_ok(tmp, limit)
        if status != STATUS_OK:
            return rec_step[:n_rec], rec_state[:n_rec], rec_sig[:n_rec], n_rec, status, i, max_pre_herm, stage_sig
        r = _herm_residual(tmp)
        if r > max_pre_herm:
            max_pre_herm = r
        _project(tmp)
        for j in range(N_STATE):
            s[j] = tmp[j]

    return rec_step[:n_rec], rec_state[:n_rec], rec_sig[:n_rec], n_rec, STATUS_OK, n_steps, max_pre_herm, stage_sig
