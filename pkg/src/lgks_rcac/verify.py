"""Invariant suites and the RCAC oracle check, as run by ``lgks-rcac verify``.

Each suite returns :class:`Check` rows; a check passes when its measured
value is within its tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .config import SCENARIOS, preset_config
from .lindblad import PlantConfig, equilibrium_residual, lgks_rhs
from .metrics import fidelity_2x2, fidelity_general, von_neumann_entropy
from .quantum_core import commutator, conjugate_transpose, hermitian_eig, hermitian_residual, sqrt_psd
from .rcac import RcacConfig, rcac_oracle
from .sim import N_STATE, P, THETA, coupled_rhs, initial_state, integrate, kernel_params, pack_rho

REFERENCE_ENTROPY = {"low_entropy": 0.1013, "high_entropy": 0.6693}


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    upper: bool = True  # value must be <= tol; otherwise >= tol

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.value):
            return False
        return self.value <= self.tol if self.upper else self.value >= self.tol

    def line(self) -> str:
        op = "<=" if self.upper else ">="
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.value:.3e} {op} {self.tol:.1e}"


# -- random draws ------------------------------------------------------------


def random_complex(rng: np.random.Generator, size=()) -> np.ndarray:
    shape = tuple(np.atleast_1d(size)) + (2, 2) if size != () else (2, 2)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_hermitian(rng: np.random.Generator) -> np.ndarray:
    g = random_complex(rng)
    return 0.5 * (g + g.conj().T)


def random_density(rng: np.random.Generator) -> np.ndarray:
    g = random_complex(rng)
    m = g @ g.conj().T
    m = m / np.trace(m).real
    return 0.5 * (m + m.conj().T)


def random_psd(rng: np.random.Generator) -> np.ndarray:
    g = random_complex(rng)
    return 0.5 * ((g @ g.conj().T) + (g @ g.conj().T).conj().T)


# -- suites ------------------------------------------------------------------


def appendix_facts(n: int = 10_000, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    f1 = f2 = f3 = 0.0
    for _ in range(n):
        a = random_hermitian(rng)
        b = random_hermitian(rng)
        u = random_complex(rng)
        f1 = max(f1, hermitian_residual(-1j * commutator(a, b)))
        uh = conjugate_transpose(u)
        f2 = max(f2, hermitian_residual(uh @ u), hermitian_residual(u @ uh))
        f3 = max(f3, hermitian_residual(u @ a @ uh))
    return [
        Check("-i[A,B] Hermitian", f1, 1e-14),
        Check("U^H U and U U^H Hermitian", f2, 1e-14),
        Check("U A U^H Hermitian", f3, 1e-14),
    ]


def core_reconstruction(n: int = 1000, seed: int = 1) -> list[Check]:
    rng = np.random.default_rng(seed)
    eig_err = sqrt_err = 0.0
    for _ in range(n):
        a = random_hermitian(rng)
        w, v = hermitian_eig(a)
        eig_err = max(eig_err, float(np.linalg.norm(v @ np.diag(w) @ v.conj().T - a)))
        p = random_psd(rng)
        r = sqrt_psd(p)
        sqrt_err = max(sqrt_err, float(np.linalg.norm(r @ r - p)))
    return [
        Check("eig reconstruction V diag(w) V^H = A", eig_err, 1e-12),
        Check("sqrt_psd(A)^2 = A", sqrt_err, 1e-10),
    ]


def fidelity_suite(n: int = 1000, seed: int = 2) -> list[Check]:
    rng = np.random.default_rng(seed)
    diff = sym = 0.0
    lo, hi = math.inf, -math.inf
    for _ in range(n):
        r1 = random_density(rng)
        r2 = random_density(rng)
        fc = fidelity_2x2(r1, r2, clamp=False)
        fg = fidelity_general(r1, r2, clamp=False)
        diff = max(diff, abs(fc - fg))
        sym = max(sym, abs(fc - fidelity_2x2(r2, r1, clamp=False)))
        lo = min(lo, fc, fg)
        hi = max(hi, fc, fg)
    return [
        Check("closed-form vs general fidelity", diff, 1e-10),
        Check("fidelity symmetry", sym, 1e-10),
        Check("fidelity lower bound (min F)", lo, -1e-9, upper=False),
        Check("fidelity upper bound (max F - 1)", hi - 1.0, 1e-9),
    ]


def lindblad_suite(n: int = 1000, seed: int = 3) -> list[Check]:
    rng = np.random.default_rng(seed)
    plant = PlantConfig()
    tr = herm = lin = 0.0
    for _ in range(n):
        rho = random_hermitian(rng)
        u = float(rng.normal(scale=5.0))
        d = lgks_rhs(plant, rho, u)
        tr = max(tr, abs(np.trace(d)))
        herm = max(herm, hermitian_residual(d))
        r2 = random_hermitian(rng)
        al, be = rng.normal(size=2)
        lhs = lgks_rhs(plant, al * rho + be * r2, u)
        rhs = al * d + be * lgks_rhs(plant, r2, u)
        lin = max(lin, float(np.linalg.norm(lhs - rhs)))
    return [
        Check("LGKS trace preservation", tr, 1e-14),
        Check("LGKS Hermiticity preservation", herm, 1e-14),
        Check("LGKS linearity in rho", lin, 1e-13),
    ]


def reference_values() -> list[Check]:
    plant = PlantConfig()
    out = []
    for name, preset in SCENARIOS.items():
        out.append(
            Check(
                f"entropy of {name} target vs {REFERENCE_ENTROPY[name]}",
                abs(von_neumann_entropy(preset.rho_d) - REFERENCE_ENTROPY[name]),
                1e-3,
            )
        )
        out.append(
            Check(
                f"equilibrium residual of {name} target at u = {preset.equilibrium_u:g}",
                equilibrium_residual(plant, preset.rho_d, preset.equilibrium_u),
                1e-3,
            )
        )
    return out


def kernel_agreement(n: int = 200, seed: int = 4) -> list[Check]:
    """Compiled right-hand side against the composition of library calls."""
    rng = np.random.default_rng(seed)
    cfg = preset_config("low_entropy")
    jumps = np.array([j.reshape(4) for j in cfg.plant.jumps])
    worst = 0.0
    for _ in range(n):
        rcac = RcacConfig.scalar(10.0 ** rng.uniform(-4, 3), float(rng.choice([0.0, 1.0, 5.0, 2000.0])))
        scfg = cfg.sim
        s = initial_state(cfg.plant, rcac, scfg)
        s[0:8] = pack_rho(random_density(rng))
        s[8:17] = rng.normal(size=9)
        a = rng.normal(size=(3, 3))
        s[P] = (a @ a.T + 0.1 * np.eye(3)).reshape(9)
        ref = coupled_rhs(cfg.plant, rcac, scfg, s)
        out = np.empty(N_STATE)
        sig = np.empty(_kernel.N_SIG)
        _kernel.rhs(s, out, cfg.plant.h0.reshape(4), cfg.plant.h1.reshape(4), jumps, scfg.rho_d.reshape(4),
                    kernel_params(rcac, scfg), sig)
        worst = max(worst, float(np.max(np.abs(out - ref) / (1.0 + np.abs(ref)))))
    return [Check("compiled RHS vs reference RHS (relative)", worst, 1e-12)]


def oracle_equivalence(horizon: float = 10.0, scenario: str = "low_entropy", rcac: RcacConfig | None = None) -> list[Check]:
    """Gains from the theta/P ODEs against ``-inv(A) b`` from the oracle."""
    cfg = preset_config(scenario, t_final=horizon, record_every=1)
    rcac = rcac or cfg.rcac
    n = cfg.sim.n_steps
    raw = integrate(cfg.plant, rcac, cfg.sim, stage_log_steps=n)
    if not raw.ok:
        return [Check(f"oracle run ({scenario}) completed", math.inf, 0.0)]
    trace = rcac_oracle(rcac, raw.stage_history())
    theta = raw.states[:, THETA]
    p = raw.states[:, P].reshape(-1, 3, 3)
    rel = np.linalg.norm(theta - trace.theta, axis=1) / (1.0 + np.linalg.norm(trace.theta, axis=1))
    eye_err = np.linalg.norm(p @ trace.a - np.eye(3), axis=(1, 2))
    sym = np.linalg.norm(p - np.transpose(p, (0, 2, 1)), axis=(1, 2))
    min_eig = min(np.linalg.eigvalsh(pk).min() for pk in p[:: max(1, len(p) // 1000)])
    return [
        Check(f"theta vs oracle over {horizon:g} s ({scenario})", float(rel.max()), 1e-6),
        Check(f"P A = I over {horizon:g} s ({scenario})", float(eye_err.max()), 1e-6),
        Check(f"P symmetry over {horizon:g} s ({scenario})", float(sym.max()), 1e-12),
        Check(f"P positive definite over {horizon:g} s ({scenario})", float(min_eig), np.finfo(float).tiny, upper=False),
    ]


def richardson_ratio(scenario: str = "low_entropy", dt: float = 2e-4, horizon: float = 1.0) -> float:
    """||x(dt) - x(dt/2)|| / ||x(dt/2) - x(dt/4)|| at ``horizon``; 16 for a 4th-order method."""
    finals = []
    for h in (dt, dt / 2.0, dt / 4.0):
        cfg = preset_config(scenario, dt=h, t_final=horizon, record_every=10**9)
        raw = integrate(cfg.plant, cfg.rcac, cfg.sim)
        if not raw.ok:
            return math.nan
        finals.append(raw.states[-1])
    return float(np.linalg.norm(finals[0] - finals[1]) / np.linalg.norm(finals[1] - finals[2]))


def integrator_order() -> list[Check]:
    out = []
    for name in SCENARIOS:
        r = richardson_ratio(name)
        out.append(Check(f"Richardson ratio >= 12 ({name})", r, 12.0, upper=False))
        out.append(Check(f"Richardson ratio <= 20 ({name})", r, 20.0))
    return out


def run_all(fast: bool = False) -> list[Check]:
    n_facts = 2000 if fast else 10_000
    horizon = 2.0 if fast else 10.0
    checks = []
    checks += appendix_facts(n_facts)
    checks += core_reconstruction()
    checks += fidelity_suite()
    checks += lindblad_suite()
    checks += reference_values()
    checks += kernel_agreement()
    checks += integrator_order()
    checks += oracle_equivalence(horizon, "low_entropy")
    checks += oracle_equivalence(horizon, "high_entropy")
    return checks
