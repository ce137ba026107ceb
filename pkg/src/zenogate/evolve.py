"""Schrodinger integration over a gate schedule.

The production path is an adaptive Dormand-Prince 5(4) integrator with PI
step control, restarted at every pulse breakpoint so the envelope stays
smooth within each segment.  An independent piecewise-constant matrix
exponential propagator (midpoint sampling, exact per-interval unitary via
Hermitian eigendecomposition) serves as a cross-check oracle.

The norm is never renormalized; its drift is tracked as a diagnostic and
integration aborts if the configured bound is exceeded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kernels import dp54_segment
from .errors import NormDriftError, StiffnessError
from .hamiltonian import HamiltonianModel

__all__ = [
    "StateVector",
    "IntegratorConfig",
    "IntegrationResult",
    "integrate",
    "expm_oracle",
]


@dataclass
class StateVector:
    """Complex amplitudes over a basis, plus the time they refer to."""

    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.time)


@dataclass(frozen=True)
class IntegratorConfig:
    # defaults keep the norm drift of a full gate schedule below 1e-8
    rtol: float = 3e-12
    atol: float = 1e-14
    max_step: float = math.inf
    method: str = "adaptive_rk"
    norm_drift_bound: float = 1e-6
    expm_steps: Optional[int] = None
    max_steps: int = 200_000_000

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be > 0")
        if self.method not in ("adaptive_rk", "expm_oracle"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class IntegrationResult:
    state: StateVector
    norm_drift: float
    steps_accepted: int
    steps_rejected: int
    rhs_evaluations: int


def _initial_step(model: HamiltonianModel, seg_len: float) -> float:
    # crude scale from the plateau Hamiltonian; the controller adapts fast
    sched = model.schedule
    scale = float(np.abs(model.diag).max(initial=0.0))
    scale += abs(sched.profile_C.amplitude) * 2.0
    scale += abs(sched.profile_M.amplitude) * 2.0
    scale += abs(sched.profile_Mprime.amplitude) * 2.0
    if scale <= 0.0:
        return seg_len
    return min(seg_len, 0.1 / scale)


def integrate(
    model: HamiltonianModel,
    psi0: StateVector,
    t0: float,
    t1: float,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> IntegrationResult:
    """Evolve psi0 from t0 to t1 under the model's schedule.

    Raises StiffnessError on step-size underflow and NormDriftError when
    the norm drifts beyond ``cfg.norm_drift_bound``; both signal a
    configuration problem or a bug, never a condition to ignore.
    """
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    if cfg.method == "expm_oracle":
        n = cfg.expm_steps
        if n is None:
            if not math.isfinite(cfg.max_step):
                raise ValueError("expm_oracle needs expm_steps or a finite max_step")
            n = max(1, math.ceil((t1 - t0) / cfg.max_step))
        out = expm_oracle(model, psi0, t0, t1, n)
        drift = abs(out.norm() - psi0.norm())
        return IntegrationResult(out, drift, n, 0, 0)

    y = psi0.amplitudes.copy()
    if t1 == t0:
        return IntegrationResult(StateVector(y, t1), 0.0, 0, 0, 0)

    sched = model.schedule
    cuts = [t for t in sched.breakpoints() if t0 < t < t1]
    edges = [t0] + cuts + [t1]
    k = model.kernel
    pc = np.array(sched.profile_C.kernel_params())
    pm = np.array(sched.profile_M.kernel_params())
    pmp = np.array(sched.profile_Mprime.kernel_params())

    norm0 = float(np.linalg.norm(y))
    h = _initial_step(model, edges[1] - edges[0])
    facold = 1e-4
    drift = 0.0
    n_acc = n_rej = n_rhs = 0
    budget = cfg.max_steps

    for a, b in zip(edges[:-1], edges[1:]):
        status, h, facold, seg_drift, acc, rej, rhs, t_reach = dp54_segment(
            model.diag,
            k.indptr,
            k.indices,
            k.data_c,
            k.data_m,
            k.data_mp,
            pc,
            pm,
            pmp,
            a,
            b,
            y,
            cfg.rtol,
            cfg.atol,
            cfg.max_step,
            min(h, b - a),
            facold,
            norm0,
            cfg.norm_drift_bound,
            budget,
        )
        drift = max(drift, seg_drift)
        n_acc += acc
        n_rej += rej
        n_rhs += rhs
        budget -= acc + rej
        if status == 1:
            raise StiffnessError(
                f"step size underflow at t = {t_reach:g} (h = {h:.3e})"
            )
        if status == 2:
            raise NormDriftError(
                f"norm drift {drift:.3e} exceeded bound "
                f"{cfg.norm_drift_bound:.3e} at t = {t_reach:g}"
            )
        if status == 3:
            raise StiffnessError(
                f"exceeded {cfg.max_steps} steps at t = {t_reach:g}"
            )

    return IntegrationResult(StateVector(y, t1), drift, n_acc, n_rej, n_rhs)


def expm_oracle(
    model: HamiltonianModel,
    psi0: StateVector,
    t0: float,
    t1: float,
    n_steps: int,
) -> StateVector:
    """Independent verification propagator.

    Splits [t0, t1] into n_steps equal intervals, freezes H at each
    interval midpoint and applies the exact matrix exponential through a
    Hermitian eigendecomposition.  Each factor is unitary, so the norm is
    preserved to floating-point accuracy regardless of n_steps.

    Propagators are memoized on the (C, M, M') values; on plateaus the
    envelope values repeat bit-for-bit, so this changes nothing
    mathematically.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    h = (t1 - t0) / n_steps
    y = psi0.amplitudes.copy()
    sched = model.schedule
    cache: dict[tuple[float, float, float], tuple[np.ndarray, np.ndarray]] = {}
    for j in range(n_steps):
        tm = t0 + (j + 0.5) * h
        key = sched.values_at(tm)
        vw = cache.get(key)
        if vw is None:
            hmat = model.dense_hamiltonian(*key)
            w, v = np.linalg.eigh(hmat)
            vw = (v, w)
            if len(cache) < 65536:
                cache[key] = vw
        v, w = vw
        y = v @ (np.exp(-1j * w * h) * (v.conj().T @ y))
    return StateVector(y, t1)
