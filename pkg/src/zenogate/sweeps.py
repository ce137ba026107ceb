"""Declarative parameter sweeps with deterministic tabular output.

A sweep varies one parameter over a grid, optionally recalibrating the
transfer window per point, runs the gate and emits one flat row per grid
point.  Rows are deterministic functions of the configuration: there is
no randomness anywhere in the pipeline, points are gathered in grid
order regardless of the worker pool, and floats are printed with 12
significant digits, so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import hilbert
from .calibrate import (
    CalibrationCache,
    CalibrationResult,
    SearchConfig,
    calibration_fingerprint,
    tune_transfer,
)
from .errors import CalibrationError, ZenoGateError
from .evolve import IntegratorConfig
from .gate import compute_metrics, run_gate
from .hamiltonian import PhysicsParams

__all__ = [
    "AXIS_FIELDS",
    "SweepConfig",
    "SweepRow",
    "run_sweep",
    "emit",
    "preset",
    "PRESET_NAMES",
]

# sweep axis name -> PhysicsParams field
AXIS_FIELDS = {
    "m_max": "M_max",
    "mprime_max": "Mprime_max",
    "tau_m": "tau_M",
    "delta": "delta",
    "c_max": "C_max",
    "t_c": "T_C",
}


@dataclass(frozen=True)
class SweepConfig:
    params: PhysicsParams
    axis: str
    grid: tuple[float, ...]
    integrator: IntegratorConfig = IntegratorConfig()
    herald: str = "paths"
    recalibrate: bool = False
    calibration: SearchConfig = SearchConfig()
    output: Optional[Path] = None
    cache_path: Optional[Path] = None
    jobs: int = 1
    label: str = "sweep"
    log_axis: bool = False

    def __post_init__(self):
        if self.axis not in AXIS_FIELDS:
            raise ValueError(
                f"axis must be one of {sorted(AXIS_FIELDS)}, got {self.axis!r}"
            )
        if not self.grid:
            raise ValueError("grid must be non-empty")


@dataclass
class SweepRow:
    """One grid point: parameters, calibrated timings, phases, fidelities,
    success probabilities and the norm drift of the underlying runs."""

    axis: str
    axis_value: float
    omega: float
    omega_s: float
    delta: float
    c_max: float
    m_max: float
    mprime_max: float
    tau_c: float
    tau_m: float
    tau_m_off: Optional[float]
    shape: str
    frame: str
    herald: str
    t_c: float
    t_m: float
    phi_a: float
    phi_b: float
    phi_ab: float
    delta_phi_n: float
    f_basis_unher: float
    f_basis_her: float
    f_phase_unher: float
    f_phase_her: float
    p_00: float
    p_01: float
    p_10: float
    p_11: float
    p_mean: float
    norm_drift: float
    status: str = "ok"


CSV_COLUMNS = tuple(f.name for f in fields(SweepRow))

_NAN = float("nan")


def _point_params(cfg: SweepConfig, value: float) -> PhysicsParams:
    return cfg.params.with_(**{AXIS_FIELDS[cfg.axis]: float(value)})


def _calibration_key_params(cfg: SweepConfig, value: float) -> PhysicsParams:
    base = _point_params(cfg, value) if cfg.recalibrate else cfg.params
    if cfg.calibration.overrides:
        base = base.with_(**cfg.calibration.overrides)
    return base


def _nan_row(cfg: SweepConfig, value: float, t_c: float, t_m: float, status: str) -> SweepRow:
    p = _point_params(cfg, value)
    return SweepRow(
        axis=cfg.axis,
        axis_value=float(value),
        omega=p.omega,
        omega_s=p.omega_s,
        delta=p.delta,
        c_max=p.C_max,
        m_max=p.M_max,
        mprime_max=p.Mprime_max,
        tau_c=p.tau_C,
        tau_m=p.tau_M,
        tau_m_off=p.tau_M_off,
        shape=p.shape,
        frame=p.frame,
        herald=cfg.herald,
        t_c=t_c,
        t_m=t_m,
        phi_a=_NAN,
        phi_b=_NAN,
        phi_ab=_NAN,
        delta_phi_n=_NAN,
        f_basis_unher=_NAN,
        f_basis_her=_NAN,
        f_phase_unher=_NAN,
        f_phase_her=_NAN,
        p_00=_NAN,
        p_01=_NAN,
        p_10=_NAN,
        p_11=_NAN,
        p_mean=_NAN,
        norm_drift=_NAN,
        status=status,
    )


def _evaluate_point(
    cfg: SweepConfig, value: float, t_c: float, t_m: float, status: str
) -> SweepRow:
    params = _point_params(cfg, value).with_(T_C=t_c, T_M=t_m)
    try:
        run = run_gate(params, cfg.integrator)
        metrics = compute_metrics(run, cfg.herald)
    except ZenoGateError as exc:
        msg = f"{type(exc).__name__}: {exc}"
        if status != "ok":
            msg = f"{status}; {msg}"
        return _nan_row(cfg, value, t_c, t_m, msg)
    row = _nan_row(cfg, value, t_c, t_m, status)
    row.phi_a = metrics.phi_a
    row.phi_b = metrics.phi_b
    row.phi_ab = metrics.phi_ab
    row.delta_phi_n = metrics.delta_phi_n
    row.f_basis_unher = metrics.f_basis_unheralded
    row.f_basis_her = metrics.f_basis_heralded
    row.f_phase_unher = metrics.f_phase_unheralded
    row.f_phase_her = metrics.f_phase_heralded
    row.p_00 = metrics.p_00
    row.p_01 = metrics.p_01
    row.p_10 = metrics.p_10
    row.p_11 = metrics.p_11
    row.p_mean = metrics.p_mean
    row.norm_drift = run.norm_drift
    if metrics.heralded_excluded:
        note = "heralded average excludes " + "/".join(metrics.heralded_excluded)
        row.status = note if status == "ok" else f"{status}; {note}"
    return row


def _calibrate_points(cfg: SweepConfig) -> list[tuple[float, float, str]]:
    """Per-point calibrated (T_C, T_M, status), deduplicated by fingerprint."""
    cache = CalibrationCache(cfg.cache_path) if cfg.cache_path else None
    plans: list[tuple[float, float, str]] = []
    seen: dict[str, tuple[float, float, str]] = {}
    for value in cfg.grid:
        if cfg.axis == "t_c":
            t_c = float(value)
            t_m = 2.0 * cfg.params.tau_C + t_c + cfg.calibration.margin
            plans.append((t_c, t_m, "ok"))
            continue
        cal_params = _calibration_key_params(cfg, value)
        key = calibration_fingerprint(cal_params, cfg.calibration, cfg.integrator)
        if key in seen:
            plans.append(seen[key])
            continue
        result: Optional[CalibrationResult] = cache.get(key) if cache else None
        status = "ok"
        if result is None:
            try:
                result = tune_transfer(cal_params, cfg.calibration, cfg.integrator)
            except CalibrationError as exc:
                # keep the best point found and record the floor violation
                result = CalibrationResult(
                    t_c=exc.best_t_c,
                    t_m=2.0 * cal_params.tau_C + exc.best_t_c + cfg.calibration.margin,
                    transfer_probability=exc.best_p,
                    evaluations=0,
                    warning=str(exc),
                )
                status = f"CalibrationError: {exc}"
            else:
                if cache:
                    cache.put(key, result)
        if result.warning and status == "ok":
            status = f"calibration warning: {result.warning}"
        plan = (result.t_c, result.t_m, status)
        seen[key] = plan
        plans.append(plan)
    return plans


def _point_job(args):
    return _evaluate_point(*args)


def run_sweep(cfg: SweepConfig) -> list[SweepRow]:
    """Calibrate (with dedup/caching), run every grid point, return rows.

    Per-point failures are recorded in the row's status field and never
    abort the sweep.  With jobs > 1 the points run in a process pool;
    results are gathered in grid order either way.
    """
    plans = _calibrate_points(cfg)
    jobs = [
        (cfg, float(v), t_c, t_m, status)
        for v, (t_c, t_m, status) in zip(cfg.grid, plans)
    ]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_point_job, jobs))
    else:
        rows = [_point_job(j) for j in jobs]
    return rows


def _format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def emit(rows: list[SweepRow], path: Path | str, fmt: str = "csv") -> Path:
    """Write rows to ``path`` as CSV or JSON with a fixed column set.

    Output is byte-identical for identical rows: fixed header, fixed
    column order, floats at 12 significant digits, LF newlines.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow(
                    [_format_value(getattr(row, c)) for c in CSV_COLUMNS]
                )
    elif fmt == "json":
        payload = []
        for row in rows:
            rec = {}
            for c in CSV_COLUMNS:
                v = getattr(row, c)
                if isinstance(v, float) and math.isnan(v):
                    v = None
                rec[c] = v
            payload.append(rec)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


PRESET_NAMES = ("fig4", "fig5", "fig7", "fig8")

_BASE = PhysicsParams(
    omega=1.0,
    delta=0.25,
    C_max=0.00012,
    tau_C=1000.0,
    tau_M=1000.0,
)


def preset(name: str, out_dir: Path | str = ".", jobs: int = 1) -> SweepConfig:
    """Built-in sweep configurations for the standard experiments.

    The grids are reconstructions chosen to cover the interesting ranges;
    point counts are a compromise between resolution and runtime.

    - fig4: coupling strength sweep, no scattering, adiabatic ramps.
    - fig5: scattering strength sweep at fixed coupling.
    - fig7: coupling strength sweep with a sudden (tau_M = 1) ramp.
    - fig8: ramp duration sweep at fixed coupling.

    fig7/fig8 calibrate the transfer window on the adiabatic (tau_M =
    1000) counterpart of each point: the window is a device property
    tuned under ideal conditions, and the sudden ramp is the error source
    under study.
    """
    out = Path(out_dir)
    common = dict(
        integrator=IntegratorConfig(),
        output=out / f"{name}.csv",
        cache_path=out / "calibration_cache.json",
        jobs=jobs,
        label=name,
    )
    if name == "fig4":
        return SweepConfig(
            params=_BASE,
            axis="m_max",
            grid=tuple(np.geomspace(0.01, 0.5, 16)),
            herald="atoms_ground",
            recalibrate=True,
            log_axis=True,
            **common,
        )
    if name == "fig5":
        return SweepConfig(
            params=_BASE.with_(M_max=0.25),
            axis="mprime_max",
            grid=tuple(np.linspace(0.0, 0.2, 16)),
            herald="paths",
            recalibrate=False,
            **common,
        )
    if name == "fig7":
        return SweepConfig(
            params=_BASE.with_(tau_M=1.0),
            axis="m_max",
            grid=tuple(np.geomspace(0.01, 0.5, 16)),
            herald="paths",
            recalibrate=True,
            calibration=SearchConfig(overrides={"tau_M": 1000.0}),
            log_axis=True,
            **common,
        )
    if name == "fig8":
        return SweepConfig(
            params=_BASE.with_(M_max=0.25),
            axis="tau_m",
            grid=tuple(np.geomspace(1.0, 1000.0, 12)),
            herald="paths",
            recalibrate=False,
            calibration=SearchConfig(overrides={"tau_M": 1000.0}),
            log_axis=True,
            **common,
        )
    raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
