"""Tune the coupling window for complete single-photon transfer.

Before a gate is characterized, the plateau duration T_C is adjusted so
that a single photon entering one waveguide leaves entirely through the
other; the photon-atom dressing renormalizes the effective waveguide
coupling, so the optimum shifts with M_max.  T_M is then set to the
minimal duration containing the C window plus an optional margin.

The search is a coarse uniform scan followed by golden-section refinement
on the best bracket.  Results are cached on a fingerprint of every
calibration-relevant parameter so sweeps can reuse them.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from filelock import FileLock

from . import hilbert
from .errors import CalibrationError
from .evolve import IntegratorConfig, StateVector, integrate
from .gate import _ground_config_index
from .hamiltonian import HamiltonianModel, PhysicsParams
from .pulses import make_schedule

__all__ = ["SearchConfig", "CalibrationResult", "tune_transfer", "CalibrationCache"]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchConfig:
    """Search range and stopping rules for the T_C scan.

    With no explicit range, T_C is scanned over [0.25, 2.0] times the
    area-theorem estimate pi/(2*C_max) for the total window.
    """

    t_c_min: Optional[float] = None
    t_c_max: Optional[float] = None
    tolerance: float = 0.5
    floor: float = 0.999
    coarse_points: int = 32
    margin: float = 0.0
    overrides: dict = field(default_factory=dict)

    def resolved_range(self, params: PhysicsParams) -> tuple[float, float]:
        estimate = math.pi / (2.0 * params.C_max)
        lo = 0.25 * estimate if self.t_c_min is None else self.t_c_min
        hi = 2.0 * estimate if self.t_c_max is None else self.t_c_max
        if not lo < hi:
            raise ValueError(f"empty T_C range [{lo:g}, {hi:g}]")
        return lo, hi

    def as_dict(self) -> dict:
        return {
            "t_c_min": self.t_c_min,
            "t_c_max": self.t_c_max,
            "tolerance": self.tolerance,
            "floor": self.floor,
            "coarse_points": self.coarse_points,
            "margin": self.margin,
            "overrides": dict(sorted(self.overrides.items())),
        }


@dataclass
class CalibrationResult:
    t_c: float
    t_m: float
    transfer_probability: float
    evaluations: int
    warning: Optional[str] = None

    def as_dict(self) -> dict:
        return {
            "t_c": self.t_c,
            "t_m": self.t_m,
            "transfer_probability": self.transfer_probability,
            "evaluations": self.evaluations,
            "warning": self.warning,
        }


class _TransferObjective:
    """Single-photon transfer probability as a function of T_C.

    Evaluated on the |1,0> input with the full model restricted to the
    N = 1 sector (exact: H is block diagonal in N).  The A<->B symmetry
    makes the |0,1> input redundant.
    """

    def __init__(self, params: PhysicsParams, margin: float, cfg: IntegratorConfig):
        self.params = params
        self.margin = margin
        self.cfg = cfg
        basis = hilbert.build_basis(2)
        base = HamiltonianModel(basis, params)
        self.model = base.restricted(1)
        src = _ground_config_index(basis, 1, 0)
        dst = _ground_config_index(basis, 0, 1)
        self.loc_src = int(np.flatnonzero(self.model.global_indices == src)[0])
        self.loc_dst = int(np.flatnonzero(self.model.global_indices == dst)[0])
        self.evaluations = 0

    def t_m_for(self, t_c: float) -> float:
        return 2.0 * self.params.tau_C + t_c + self.margin

    def __call__(self, t_c: float) -> float:
        p = self.params.with_(T_C=t_c, T_M=self.t_m_for(t_c))
        model = self.model.with_schedule(make_schedule(p))
        psi0 = np.zeros(model.dim, dtype=np.complex128)
        psi0[self.loc_src] = 1.0
        res = integrate(model, StateVector(psi0, 0.0), 0.0, model.schedule.total_time, self.cfg)
        self.evaluations += 1
        return float(abs(res.state.amplitudes[self.loc_dst]) ** 2)


def _golden_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def tune_transfer(
    params: PhysicsParams,
    search: SearchConfig = SearchConfig(),
    cfg: IntegratorConfig = IntegratorConfig(),
) -> CalibrationResult:
    """Find the T_C maximizing single-photon transfer; set T_M to match.

    Raises CalibrationError when the best probability in range stays
    below ``search.floor`` (the best point found is attached).  A warning
    is recorded when the coarse scan shows several comparable peaks; the
    first one is refined.
    """
    cal_params = params.with_(**search.overrides) if search.overrides else params
    lo, hi = search.resolved_range(cal_params)
    objective = _TransferObjective(cal_params, search.margin, cfg)

    grid = np.linspace(lo, hi, search.coarse_points)
    values = [objective(t) for t in grid]

    peaks = [
        i
        for i in range(len(grid))
        if (i == 0 or values[i] >= values[i - 1])
        and (i == len(grid) - 1 or values[i] > values[i + 1])
    ]
    best_value = max(values)
    comparable = [i for i in peaks if values[i] >= best_value - 0.02]
    warning = None
    if len(comparable) > 1:
        warning = (
            f"non-unimodal transfer profile: {len(comparable)} comparable "
            "peaks in the coarse scan; refining the first"
        )
    i = comparable[0]

    blo = grid[max(i - 1, 0)]
    bhi = grid[min(i + 1, len(grid) - 1)]
    t_best, p_best = _golden_max(objective, blo, bhi, search.tolerance)
    if values[i] > p_best:
        t_best, p_best = float(grid[i]), values[i]

    if p_best < search.floor:
        raise CalibrationError(
            f"best transfer probability {p_best:.6f} at T_C = {t_best:.6g} "
            f"is below the floor {search.floor}",
            best_t_c=t_best,
            best_p=p_best,
        )
    return CalibrationResult(
        t_c=float(t_best),
        t_m=objective.t_m_for(float(t_best)),
        transfer_probability=p_best,
        evaluations=objective.evaluations,
        warning=warning,
    )


def calibration_fingerprint(
    params: PhysicsParams, search: SearchConfig, cfg: IntegratorConfig
) -> str:
    """Stable key over everything that can change the calibration result."""
    payload = {
        "params": {
            k: v
            for k, v in params.as_dict().items()
            # T_C/T_M are outputs of the calibration, not inputs
            if k not in ("t_c", "t_m")
        },
        "search": search.as_dict(),
        "integrator": {"rtol": cfg.rtol, "atol": cfg.atol, "method": cfg.method},
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


class CalibrationCache:
    """Small on-disk table of calibration results keyed by fingerprint."""

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self._lock = FileLock(str(self.path) + ".lock")

    def get(self, key: str) -> Optional[CalibrationResult]:
        if not self.path.exists():
            return None
        with self._lock:
            table = json.loads(self.path.read_text())
        entry = table.get(key)
        if entry is None:
            return None
        return CalibrationResult(**entry)

    def put(self, key: str, result: CalibrationResult) -> None:
        with self._lock:
            table = {}
            if self.path.exists():
                table = json.loads(self.path.read_text())
            table[key] = result.as_dict()
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(json.dumps(table, indent=1, sort_keys=True))
