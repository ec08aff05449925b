"""Config-driven full and reduced runs: trajectory rows plus a drift report."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .body import FullState, InertiaTensor, potential_from_dict, simulate_body
from .charts import curvature_along, simulate_reduced
from .config import RunConfig
from .errors import ConfigError
from .output import FULL_COLUMNS, REDUCED_COLUMNS, DriftReport, csv_text, relative_drift
from .reduction import ReducedState, ReducedSystemSpec


@dataclass
class RunResult:
    csv: str
    report: DriftReport
    nu: np.ndarray


def run_full(cfg: RunConfig) -> RunResult:
    if cfg.initial["kind"] != "full":
        raise ConfigError("initial.kind: simulate-full needs a full initial state")
    I = InertiaTensor(*cfg.inertia)
    V = potential_from_dict(cfg.potential)
    start = time.perf_counter()
    try:
        initial = FullState(np.array(cfg.initial["q"]), np.array(cfg.initial["omega"]))
    except ValueError as exc:
        raise ConfigError(f"initial.q: {exc}") from exc
    traj = simulate_body(initial, I, V, cfg.settings)
    wall = time.perf_counter() - start
    nu, om = traj.nu, traj.omega
    unit, ortho = traj.residuals["unit"], traj.residuals["ortho"]
    rows = (
        (t, *n, *w, e, j, u, o)
        for t, n, w, e, j, u, o in zip(traj.t, nu, om, traj.energy, traj.momentum, unit, ortho)
    )
    emax, emean = relative_drift(traj.energy)
    report = DriftReport(
        max_rel_energy_drift=emax,
        mean_rel_energy_drift=emean,
        max_momentum_drift=float(np.abs(traj.momentum - traj.momentum[0]).max()),
        max_unit_residual=float(unit.max()),
        max_ortho_residual=float(ortho.max()),
        chart_switches=0,
        wall_time=wall,
        samples=len(traj.t),
        closure_error=float(np.linalg.norm(nu[-1] - nu[0])),
    )
    return RunResult(csv_text(FULL_COLUMNS, rows), report, nu)


def run_reduced(cfg: RunConfig) -> RunResult:
    if cfg.initial["kind"] != "reduced":
        raise ConfigError("initial.kind: simulate-reduced needs a reduced initial state")
    I = InertiaTensor(*cfg.inertia)
    V = potential_from_dict(cfg.potential)
    spec = ReducedSystemSpec(I, V, cfg.initial["k"], cfg.curvature_scale)
    try:
        initial = ReducedState(np.array(cfg.initial["nu"]), np.array(cfg.initial["nudot"]))
    except ValueError as exc:
        raise ConfigError(f"initial: {exc}") from exc
    start = time.perf_counter()
    traj = simulate_reduced(spec, initial, cfg.settings)
    kg: Optional[np.ndarray] = curvature_along(traj) if cfg.curvature else None
    wall = time.perf_counter() - start
    nu = traj.nu
    kcol = kg if kg is not None else [""] * len(traj.t)
    rows = ((t, *n, e, c, "" if isinstance(k, str) or np.isnan(k) else k)
            for t, n, e, c, k in zip(traj.t, nu, traj.energy, traj.chart_id, kcol))
    emax, emean = relative_drift(traj.energy)
    finite = kg[np.isfinite(kg)] if kg is not None else np.empty(0)
    report = DriftReport(
        max_rel_energy_drift=emax,
        mean_rel_energy_drift=emean,
        max_momentum_drift=0.0,
        max_unit_residual=float(np.abs(np.linalg.norm(nu, axis=1) - 1.0).max()),
        max_ortho_residual=0.0,
        chart_switches=traj.switches,
        wall_time=wall,
        samples=len(traj.t),
        closure_error=float(np.linalg.norm(nu[-1] - nu[0])),
        min_kg=float(finite.min()) if len(finite) else None,
        max_kg=float(finite.max()) if len(finite) else None,
    )
    return RunResult(csv_text(REDUCED_COLUMNS, rows), report, nu)
