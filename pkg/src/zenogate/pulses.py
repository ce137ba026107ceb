"""Time-dependent coupling envelopes for the gate schedule.

Each coupling is switched on over a ramp, held at a plateau value and
switched off again.  The waveguide coupling C(t) is only nonzero while the
photon-atom coupling M(t) sits at its plateau, so the Zeno suppression is
fully established before any transfer takes place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ScheduleInfeasibleError

__all__ = ["PulseProfile", "Schedule", "value_at", "make_schedule", "pulse_area"]

SHAPES = ("raised_cosine", "linear", "step")

# numeric codes consumed by the compiled integrator kernels
SHAPE_CODES = {"raised_cosine": 0, "linear": 1, "step": 2}


@dataclass(frozen=True)
class PulseProfile:
    """One on-plateau-off envelope.

    The value is 0 outside [t_start, t_start + ramp_on + plateau + ramp_off]
    and equals ``amplitude`` exactly on the plateau.  Ramp-up and ramp-down
    durations may differ (sudden switch-off studies keep a slow turn-on).
    """

    t_start: float
    ramp_on: float
    plateau: float
    ramp_off: float
    amplitude: float
    shape: str = "raised_cosine"

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown pulse shape {self.shape!r}")
        if self.ramp_on < 0 or self.ramp_off < 0 or self.plateau < 0:
            raise ValueError("pulse durations must be >= 0")
        if self.shape == "step" and (self.ramp_on > 0 or self.ramp_off > 0):
            raise ValueError("step pulses take zero ramp time")

    @property
    def t_end(self) -> float:
        return self.t_start + self.ramp_on + self.plateau + self.ramp_off

    @property
    def plateau_start(self) -> float:
        return self.t_start + self.ramp_on

    @property
    def plateau_end(self) -> float:
        return self.t_start + self.ramp_on + self.plateau

    def breakpoints(self) -> list[float]:
        """Times where the envelope is not smooth (integration restarts)."""
        return [self.t_start, self.plateau_start, self.plateau_end, self.t_end]

    def kernel_params(self) -> tuple[float, float, float, float, float, float]:
        """Flat parameter tuple for the compiled evaluator."""
        return (
            self.t_start,
            self.ramp_on,
            self.plateau,
            self.ramp_off,
            self.amplitude,
            float(SHAPE_CODES[self.shape]),
        )


def value_at(profile: PulseProfile, t: float) -> float:
    """Evaluate the envelope at time ``t``.

    Raised-cosine ramps follow amplitude * sin^2(pi*(t - t_start)/(2*ramp)),
    which is C^1 at both ends and the standard choice for adiabatic
    switching.
    """
    if t <= profile.t_start or t >= profile.t_end:
        return 0.0
    if t >= profile.plateau_start and t <= profile.plateau_end:
        return profile.amplitude
    if t < profile.plateau_start:
        s = (t - profile.t_start) / profile.ramp_on
    else:
        s = (profile.t_end - t) / profile.ramp_off
    if profile.shape == "raised_cosine":
        return profile.amplitude * math.sin(0.5 * math.pi * s) ** 2
    if profile.shape == "linear":
        return profile.amplitude * s
    return 0.0  # step: no ramp region exists


def pulse_area(profile: PulseProfile) -> float:
    """Closed-form integral of the envelope over its full support.

    Both raised-cosine and linear ramps contribute half the ramp duration,
    so the area is amplitude * (plateau + (ramp_on + ramp_off)/2); a step
    pulse is just the rectangle amplitude * plateau.
    """
    if profile.shape == "step":
        return profile.amplitude * profile.plateau
    return profile.amplitude * (
        profile.plateau + 0.5 * (profile.ramp_on + profile.ramp_off)
    )


@dataclass(frozen=True)
class Schedule:
    """The three envelopes of one gate run plus the total evolution time."""

    profile_C: PulseProfile
    profile_M: PulseProfile
    profile_Mprime: PulseProfile
    total_time: float

    def breakpoints(self) -> list[float]:
        """Sorted unique non-smooth times across all three envelopes."""
        pts = set()
        for p in (self.profile_C, self.profile_M, self.profile_Mprime):
            for t in p.breakpoints():
                if 0.0 < t < self.total_time:
                    pts.add(t)
        return sorted(pts)

    def values_at(self, t: float) -> tuple[float, float, float]:
        return (
            value_at(self.profile_C, t),
            value_at(self.profile_M, t),
            value_at(self.profile_Mprime, t),
        )


def make_schedule(params) -> Schedule:
    """Build the gate schedule from physical parameters.

    M(t) starts at t = 0; the C window is centered inside M's plateau; the
    scattering coupling M'(t) shares M's envelope scaled to its own
    amplitude (zero when M_max = 0).  Requires T_M >= 2*tau_C + T_C so the
    C window fits inside the plateau.
    """
    c_support = 2.0 * params.tau_C + params.T_C
    if params.T_M < c_support:
        raise ScheduleInfeasibleError(
            f"T_M = {params.T_M:g} cannot contain the C window "
            f"2*tau_C + T_C = {c_support:g} (deficit {c_support - params.T_M:g})"
        )
    shape = params.shape
    tau_m_on = params.tau_M
    tau_m_off = params.tau_M if params.tau_M_off is None else params.tau_M_off
    profile_m = PulseProfile(
        t_start=0.0,
        ramp_on=tau_m_on,
        plateau=params.T_M,
        ramp_off=tau_m_off,
        amplitude=params.M_max,
        shape=shape,
    )
    mprime_amp = params.Mprime_max if params.M_max > 0 else 0.0
    profile_mp = PulseProfile(
        t_start=0.0,
        ramp_on=tau_m_on,
        plateau=params.T_M,
        ramp_off=tau_m_off,
        amplitude=mprime_amp,
        shape=shape,
    )
    c_start = profile_m.plateau_start + 0.5 * (params.T_M - c_support)
    profile_c = PulseProfile(
        t_start=c_start,
        ramp_on=params.tau_C,
        plateau=params.T_C,
        ramp_off=params.tau_C,
        amplitude=params.C_max,
        shape=shape,
    )
    return Schedule(
        profile_C=profile_c,
        profile_M=profile_m,
        profile_Mprime=profile_mp,
        total_time=profile_m.t_end,
    )
