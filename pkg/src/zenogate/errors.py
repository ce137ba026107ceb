"""Exception types raised by the simulator."""


class ZenoGateError(Exception):
    """Base class for all package errors."""


class ScheduleInfeasibleError(ZenoGateError):
    """The C window does not fit inside M's plateau."""


class HermiticityError(ZenoGateError):
    """Assembled Hamiltonian failed the Hermiticity self-check."""


class StiffnessError(ZenoGateError):
    """Adaptive step size underflowed; the problem looks stiff or misconfigured."""


class NormDriftError(ZenoGateError):
    """State norm drifted beyond the configured bound during integration."""


class DegeneratePhaseError(ZenoGateError):
    """Target amplitude too small to define a phase."""


class CalibrationError(ZenoGateError):
    """Transfer calibration found no acceptable maximum."""

    def __init__(self, message, best_t_c=None, best_p=None):
        super().__init__(message)
        self.best_t_c = best_t_c
        self.best_p = best_p


class ConfigError(ZenoGateError):
    """Invalid run configuration file."""
