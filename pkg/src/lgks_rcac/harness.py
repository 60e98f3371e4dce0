"""Hyperparameter sweep over (P0, beta), the J_h cost, and CSV output."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import SweepConfig
from .lindblad import PlantConfig
from .rcac import RcacConfig
from .sim import RECORD_FIELDS, SimConfig, TrajectoryRecord, integrate

SWEEP_FIELDS = ("p0", "beta", "jh", "converged")


class AllDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepResult:
    p0_scalar: float
    beta: float
    jh: float
    converged: bool


def _window_mask(t: np.ndarray, lo: float, hi: float) -> np.ndarray:
    slack = 1e-9 * max(1.0, abs(hi))
    return (t >= lo - slack) & (t <= hi + slack)


def jh_cost_arrays(t: np.ndarray, e: np.ndarray, window: tuple[float, float]) -> float:
    lo, hi = window
    t = np.asarray(t, dtype=float)
    if t.size == 0 or t[-1] < hi - 1e-9 * max(1.0, abs(hi)):
        raise ValueError(f"trajectory ends at t = {t[-1] if t.size else 0.0:g}, before the window end {hi:g}")
    m = _window_mask(t, lo, hi)
    if m.sum() < 2:
        raise ValueError("fewer than two samples inside the J_h window")
    y = np.abs(np.asarray(e, dtype=float)[m])
    x = t[m]
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def jh_cost(records: Sequence[TrajectoryRecord], window: tuple[float, float]) -> float:
    """Trapezoidal integral of ``|e|`` over the recorded samples in ``window``."""
    t = np.array([r.t for r in records])
    e = np.array([r.e for r in records])
    return jh_cost_arrays(t, e, window)


def run_cell(plant: PlantConfig, cfg: RcacConfig, scfg: SimConfig, window: tuple[float, float]) -> SweepResult:
    p0_scalar = float(cfg.p0[0, 0])
    try:
        raw = integrate(plant, cfg, scfg)
    except ValueError:
        return SweepResult(p0_scalar, cfg.beta, math.inf, False)
    if not raw.ok:
        return SweepResult(p0_scalar, cfg.beta, math.inf, False)
    return SweepResult(p0_scalar, cfg.beta, jh_cost_arrays(raw.t, raw.e, window), True)


def _run_cell_args(args):
    return run_cell(*args)


def grid_configs(base: RcacConfig, sweep: SweepConfig) -> list[RcacConfig]:
    """Row-major over (p0 index, beta index)."""
    return [
        RcacConfig.scalar(p0, beta, rz=base.rz, ru=base.ru, lam=base.lam)
        for p0 in sweep.p0_scalars
        for beta in sweep.betas
    ]


def run_sweep(
    plant: PlantConfig,
    base_cfg: RcacConfig,
    scfg: SimConfig,
    sweep: SweepConfig,
    workers: int = 1,
    progress=None,
) -> list[SweepResult]:
    """One closed-loop run per grid cell; output is in grid order.

    Cells that diverge (or violate the RK4 stability margin) get ``jh = inf``
    and ``converged = False``.  ``workers > 1`` uses a process pool; results
    do not depend on it.
    """
    if sweep.jh_window[1] > scfg.t_final + 1e-9:
        raise ValueError(f"J_h window {sweep.jh_window} extends past t_final = {scfg.t_final}")
    jobs = [(plant, cfg, scfg, sweep.jh_window) for cfg in grid_configs(base_cfg, sweep)]
    results: list[SweepResult] = []
    if workers <= 1:
        for job in jobs:
            res = run_cell(*job)
            results.append(res)
            if progress is not None:
                progress(res)
        return results
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for res in pool.map(_run_cell_args, jobs):
            results.append(res)
            if progress is not None:
                progress(res)
    return results


def select_best(results: Iterable[SweepResult]) -> tuple[float, float]:
    """Arg-min of J_h; ties go to the smaller P0 scalar, then the smaller beta."""
    ok = [r for r in results if r.converged and math.isfinite(r.jh)]
    if not ok:
        raise AllDivergedError("every sweep cell diverged")
    best = min(ok, key=lambda r: (r.jh, r.p0_scalar, r.beta))
    return best.p0_scalar, best.beta


# -- CSV -------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(records: Iterable[TrajectoryRecord], fh) -> int:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    n = 0
    for r in records:
        w.writerow([_fmt(v) for v in r.as_tuple()])
        n += 1
    return n


def read_trajectory_csv(fh) -> list[TrajectoryRecord]:
    rows = csv.reader(fh)
    header = next(rows)
    if tuple(header) != RECORD_FIELDS:
        raise ValueError(f"unexpected trajectory header {header}")
    return [TrajectoryRecord(*map(float, row)) for row in rows if row]


def write_sweep_csv(results: Iterable[SweepResult], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_FIELDS)
    for r in results:
        w.writerow([_fmt(r.p0_scalar), _fmt(r.beta), "inf" if math.isinf(r.jh) else _fmt(r.jh), int(r.converged)])


def read_sweep_csv(fh) -> list[SweepResult]:
    rows = csv.reader(fh)
    header = next(rows)
    if tuple(header) != SWEEP_FIELDS:
        raise ValueError(f"unexpected sweep header {header}")
    return [SweepResult(float(p), float(b), float(j), bool(int(c))) for p, b, j, c in rows]


def summarize(records: Sequence[TrajectoryRecord], rho_d_bloch: Optional[tuple] = None) -> dict:
    first, last = records[0], records[-1]
    out = {
        "t_final": last.t,
        "e0": first.e,
        "e_final": last.e,
        "gains_final": (last.kp, last.ki, last.kd),
        "u_final": last.u,
        "entropy_final": last.entropy,
        "bloch_final": (last.bloch_x, last.bloch_y, last.bloch_z),
        "max_trace_residual": max(r.trace_residual for r in records),
        "max_herm_residual": max(r.herm_residual for r in records),
        "min_eig_rho": min(r.min_eig_rho for r in records),
    }
    if rho_d_bloch is not None:
        out["bloch_distance"] = math.dist(out["bloch_final"], tuple(rho_d_bloch))
    return out
