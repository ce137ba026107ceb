"""Run the four logical inputs through the device and extract gate metrics.

Logical encoding is single rail: qubit value 1 means a photon is present,
qubit 1 enters waveguide A and qubit 2 enters waveguide B.  Under ideal
transfer each photon exits in the opposite waveguide, so the output modes
are relabeled (a<->b swap) before any amplitude is read.  The measured
single-photon phases phi_a and phi_b are then subtracted, leaving the
nonlinear phase

    dphi_N = phi_ab - (phi_a + phi_b)

as the only net phase of the two-photon input; an ideal controlled-sign
gate has dphi_N = pi.

Heralding is modeled at the projector level.  Mode "paths" keeps only the
single correct output configuration per input; mode "atoms_ground" keeps
everything with both atoms in the ground state and the scattering modes
empty (which admits double occupation of one waveguide for the two-photon
input).  Projection rescales magnitudes and never changes an argument, so
the nonlinear phase is unaffected by heralding.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import hilbert
from .errors import DegeneratePhaseError
from .evolve import IntegratorConfig, StateVector, integrate
from .hamiltonian import HamiltonianModel, PhysicsParams

__all__ = [
    "GateRun",
    "GateMetrics",
    "HeraldResult",
    "HERALD_MODES",
    "INPUT_LABELS",
    "run_gate",
    "extract_phases",
    "herald",
    "transfer_matrix",
    "fidelity_basis_avg",
    "fidelity_phase_sensitive",
    "compute_metrics",
    "reduce_phase",
]

INPUT_LABELS = ("00", "01", "10", "11")
HERALD_MODES = ("paths", "atoms_ground")

# computational configuration (n_a, n_b) per logical label, post-relabel
_CONFIGS = {"00": (0, 0), "01": (0, 1), "10": (1, 0), "11": (1, 1)}

_PROBABILITY_FLOOR = 1e-12


def reduce_phase(x: float) -> float:
    """Reduce an angle to the interval (-pi, pi]."""
    r = math.remainder(x, 2.0 * math.pi)
    if r <= -math.pi:
        r += 2.0 * math.pi
    return r


def _ground_config_index(basis: hilbert.BasisSet, n_a: int, n_b: int) -> int:
    g = hilbert.AtomLevel.GROUND
    return basis.index_of(hilbert.BasisState(n_a, n_b, 0, 0, g, g))


@dataclass
class GateRun:
    """Final states of the four logical basis inputs plus run diagnostics."""

    params: PhysicsParams
    basis: hilbert.BasisSet
    finals: dict[str, StateVector]
    total_time: float
    norm_drift: float = 0.0
    excitation_drift: float = 0.0
    steps_accepted: int = 0
    rhs_evaluations: int = 0


@dataclass
class GateMetrics:
    """Flat record of every phase, fidelity and success probability."""

    phi_a: float
    phi_b: float
    phi_ab: float
    delta_phi_n: float
    f_basis_unheralded: float
    f_basis_heralded: float
    f_phase_unheralded: float
    f_phase_heralded: float
    p_00: float
    p_01: float
    p_10: float
    p_11: float
    p_mean: float
    herald_mode: str
    heralded_excluded: tuple[str, ...] = ()


@dataclass
class HeraldResult:
    mode: str
    probabilities: dict[str, float]
    # projected but *not* renormalized states: the normalization is a
    # positive real scale, so arguments read from these are exactly the
    # heralded-state arguments
    projected: dict[str, StateVector]
    excluded: tuple[str, ...]

    @property
    def p_mean(self) -> float:
        return sum(self.probabilities[k] for k in INPUT_LABELS) / 4.0

    def heralded_state(self, label: str) -> StateVector:
        p = self.probabilities[label]
        if p < _PROBABILITY_FLOOR:
            raise ZeroDivisionError(f"herald probability for {label} is ~0")
        st = self.projected[label]
        return StateVector(st.amplitudes / math.sqrt(p), st.time)


def _input_state(basis: hilbert.BasisSet, label: str) -> int:
    q1, q2 = int(label[0]), int(label[1])
    return _ground_config_index(basis, q1, q2)


def run_gate(
    params: PhysicsParams,
    cfg: IntegratorConfig = IntegratorConfig(),
    basis: hilbert.BasisSet | None = None,
    model: HamiltonianModel | None = None,
) -> GateRun:
    """Evolve all four logical basis inputs over the full schedule.

    The vacuum input is short-circuited (the N = 0 block is 1x1 with zero
    diagonal in both frames); each photon-bearing input is evolved inside
    its exact total-excitation sector, which is equivalent to the full
    28-state evolution because H is block diagonal in N.
    """
    if basis is None:
        basis = model.basis if model is not None else hilbert.build_basis(2)
    if model is None:
        model = HamiltonianModel(basis, params)
    total_time = model.schedule.total_time

    finals: dict[str, StateVector] = {}
    norm_drift = 0.0
    steps = 0
    rhs = 0

    vac = np.zeros(basis.dim, dtype=np.complex128)
    vac[_input_state(basis, "00")] = 1.0
    finals["00"] = StateVector(vac, total_time)

    sector_models = {1: model.restricted(1), 2: model.restricted(2)}
    for label in ("01", "10", "11"):
        n = 1 if label in ("01", "10") else 2
        sub = sector_models[n]
        local0 = np.zeros(sub.dim, dtype=np.complex128)
        local0[int(np.flatnonzero(sub.global_indices == _input_state(basis, label))[0])] = 1.0
        res = integrate(sub, StateVector(local0, 0.0), 0.0, total_time, cfg)
        full = np.zeros(basis.dim, dtype=np.complex128)
        full[sub.global_indices] = res.state.amplitudes
        finals[label] = StateVector(full, total_time)
        norm_drift = max(norm_drift, res.norm_drift)
        steps += res.steps_accepted
        rhs += res.rhs_evaluations

    exc_drift = 0.0
    for label, st in finals.items():
        n0 = sum(int(c) for c in label)
        w = np.abs(st.amplitudes) ** 2
        tot = w.sum()
        if tot > 0:
            exc_drift = max(
                exc_drift, abs(float((w * basis.excitations).sum() / tot) - n0)
            )

    return GateRun(
        params=params,
        basis=basis,
        finals=finals,
        total_time=total_time,
        norm_drift=norm_drift,
        excitation_drift=exc_drift,
        steps_accepted=steps,
        rhs_evaluations=rhs,
    )


def _relabeled(run: GateRun, label: str) -> np.ndarray:
    """Final amplitudes with the output waveguides exchanged."""
    perm = run.basis.swap_permutation()
    return run.finals[label].amplitudes[perm]


def extract_phases(run: GateRun) -> tuple[float, float, float]:
    """Linear and two-photon phases read off the relabeled final states.

    phi_a comes from the |1,0> input, phi_b from |0,1> and phi_ab from
    |1,1>, each as the argument of the amplitude on the ideal output
    configuration (correct photon placement, atoms ground, scattering
    empty).  All phases are reduced to (-pi, pi].
    """
    basis = run.basis
    out = {}
    for label in ("10", "01", "11"):
        n_a, n_b = _CONFIGS[label]
        amp = _relabeled(run, label)[_ground_config_index(basis, n_a, n_b)]
        if abs(amp) < _PROBABILITY_FLOOR:
            raise DegeneratePhaseError(
                f"target amplitude for input |{label[0]},{label[1]}> has "
                f"magnitude {abs(amp):.3e}; phase undefined"
            )
        out[label] = reduce_phase(cmath.phase(amp))
    return out["10"], out["01"], out["11"]


def nonlinear_phase(phi_a: float, phi_b: float, phi_ab: float) -> float:
    return reduce_phase(phi_ab - phi_a - phi_b)


def _herald_projector_indices(
    basis: hilbert.BasisSet, mode: str, label: str | None
) -> np.ndarray:
    """Basis indices kept by the herald projector.

    ``label`` selects the per-input ideal configuration for mode "paths";
    label None gives the input-independent subspace used for superposition
    states (the full computational span for "paths").
    """
    g = hilbert.AtomLevel.GROUND
    if mode == "atoms_ground":
        keep = [
            i
            for i, s in enumerate(basis.states)
            if s.level_A == g and s.level_B == g and s.n_c == 0 and s.n_d == 0
        ]
    elif mode == "paths":
        if label is None:
            keep = [
                i
                for i, s in enumerate(basis.states)
                if s.level_A == g
                and s.level_B == g
                and s.n_c == 0
                and s.n_d == 0
                and s.n_a <= 1
                and s.n_b <= 1
            ]
        else:
            n_a, n_b = _CONFIGS[label]
            keep = [_ground_config_index(basis, n_a, n_b)]
    else:
        raise ValueError(f"unknown herald mode {mode!r}")
    return np.asarray(keep, dtype=np.int64)


def herald(run: GateRun, mode: str) -> HeraldResult:
    """Project each relabeled final state onto the herald-accepted subspace.

    Mode "paths" accepts the single ideal output configuration (for basis
    inputs, excitation conservation already forces the atoms to the ground
    state and the scattering modes empty).  Mode "atoms_ground" accepts
    any photon arrangement as long as the atoms end in their ground states
    and nothing was scattered.  Probabilities are squared norms; the
    vacuum input always succeeds.
    """
    probabilities: dict[str, float] = {}
    projected: dict[str, StateVector] = {}
    excluded = []
    for label in INPUT_LABELS:
        amps = _relabeled(run, label)
        keep = _herald_projector_indices(run.basis, mode, label)
        proj = np.zeros_like(amps)
        proj[keep] = amps[keep]
        p = float(np.vdot(proj, proj).real)
        probabilities[label] = p
        projected[label] = StateVector(proj, run.total_time)
        if p < _PROBABILITY_FLOOR:
            excluded.append(label)
    return HeraldResult(mode, probabilities, projected, tuple(excluded))


def _correction_phases(basis: hilbert.BasisSet, phi_a: float, phi_b: float) -> np.ndarray:
    """Per-basis-state phase e^{-i(n_a phi_a + n_b phi_b)} applied at output."""
    return np.exp(
        -1j
        * np.array([s.n_a * phi_a + s.n_b * phi_b for s in basis.states])
    )


def transfer_matrix(run: GateRun) -> np.ndarray:
    """4x4 matrix of corrected computational output amplitudes per input.

    Entry [j, i] is the amplitude of computational configuration j given
    basis input i, after relabeling and after the -phi_a/-phi_b phase
    corrections; the ideal result is diag(1, 1, 1, e^{i dphi_N}).
    """
    phi_a, phi_b, _ = extract_phases(run)
    corr = _correction_phases(run.basis, phi_a, phi_b)
    out = np.zeros((4, 4), dtype=np.complex128)
    for i, label_in in enumerate(INPUT_LABELS):
        amps = _relabeled(run, label_in) * corr
        for j, label_out in enumerate(INPUT_LABELS):
            n_a, n_b = _CONFIGS[label_out]
            out[j, i] = amps[_ground_config_index(run.basis, n_a, n_b)]
    return out


def _reduced_density(basis: hilbert.BasisSet, amps: np.ndarray) -> np.ndarray:
    """Partial trace over (c, d, atom A, atom B), restricted to the
    computational span (n_a, n_b in {0,1}) without renormalization."""
    blocks: dict[tuple, np.ndarray] = {}
    for i, s in enumerate(basis.states):
        if s.n_a > 1 or s.n_b > 1:
            continue
        a = amps[i]
        if a == 0:
            continue
        env = (s.n_c, s.n_d, s.level_A, s.level_B)
        vec = blocks.get(env)
        if vec is None:
            vec = np.zeros(4, dtype=np.complex128)
            blocks[env] = vec
        vec[INPUT_LABELS.index(f"{s.n_a}{s.n_b}")] += a
    rho = np.zeros((4, 4), dtype=np.complex128)
    for vec in blocks.values():
        rho += np.outer(vec, vec.conj())
    return rho


def _ideal_unitary(delta_phi_n: float = math.pi) -> np.ndarray:
    return np.diag([1.0, 1.0, 1.0, np.exp(1j * delta_phi_n)]).astype(np.complex128)


def fidelity_basis_avg(run: GateRun, herald_mode: str = "paths") -> tuple[float, float]:
    """Average output fidelity over the four logical basis inputs.

    For each input the final pure state is relabeled, reduced over the
    scattering modes and atoms, restricted to the computational span and
    compared against the ideal controlled-sign action on that input.  The
    unheralded variant keeps the lost norm (no renormalization); the
    heralded variant projects per ``herald_mode`` and renormalizes by the
    success probability.  Inputs whose herald probability is below 1e-12
    are excluded from the heralded average.
    """
    her = herald(run, herald_mode)
    f_unher = 0.0
    f_her = []
    for label in INPUT_LABELS:
        k = INPUT_LABELS.index(label)
        amps = _relabeled(run, label)
        rho = _reduced_density(run.basis, amps)
        f_unher += rho[k, k].real
        p = her.probabilities[label]
        if p >= _PROBABILITY_FLOOR:
            rho_h = _reduced_density(run.basis, her.projected[label].amplitudes)
            f_her.append(rho_h[k, k].real / p)
    f_unher /= 4.0
    f_heralded = sum(f_her) / len(f_her) if f_her else float("nan")
    return f_unher, f_heralded


def fidelity_phase_sensitive(
    run: GateRun, herald_mode: str = "paths", target_phase: float = math.pi
) -> tuple[float, float]:
    """Fidelity of the evolved uniform superposition input.

    The basis-state average is insensitive to the phase of the two-photon
    output; this metric is not.  By linearity the final state for the
    input (|00> + |01> + |10> + |11>)/2 is the superposition of the four
    final basis states.  It is relabeled, phase corrected and compared
    with the ideal target of the controlled-sign gate at ``target_phase``.
    """
    phi_a, phi_b, _ = extract_phases(run)
    corr = _correction_phases(run.basis, phi_a, phi_b)
    psi = sum(_relabeled(run, label) for label in INPUT_LABELS) * 0.5 * corr

    ideal = _ideal_unitary(target_phase) @ (np.ones(4, dtype=np.complex128) * 0.5)

    rho = _reduced_density(run.basis, psi)
    f_unher = float((ideal.conj() @ rho @ ideal).real)

    keep = _herald_projector_indices(run.basis, herald_mode, None)
    proj = np.zeros_like(psi)
    proj[keep] = psi[keep]
    p = float(np.vdot(proj, proj).real)
    if p < _PROBABILITY_FLOOR:
        return f_unher, float("nan")
    rho_h = _reduced_density(run.basis, proj)
    f_her = float((ideal.conj() @ rho_h @ ideal).real) / p
    return f_unher, f_her


def compute_metrics(run: GateRun, herald_mode: str = "paths") -> GateMetrics:
    """Assemble the full flat metrics record for one gate run."""
    phi_a, phi_b, phi_ab = extract_phases(run)
    her = herald(run, herald_mode)
    f_basis_u, f_basis_h = fidelity_basis_avg(run, herald_mode)
    f_phase_u, f_phase_h = fidelity_phase_sensitive(run, herald_mode)
    return GateMetrics(
        phi_a=phi_a,
        phi_b=phi_b,
        phi_ab=phi_ab,
        delta_phi_n=nonlinear_phase(phi_a, phi_b, phi_ab),
        f_basis_unheralded=f_basis_u,
        f_basis_heralded=f_basis_h,
        f_phase_unheralded=f_phase_u,
        f_phase_heralded=f_phase_h,
        p_00=her.probabilities["00"],
        p_01=her.probabilities["01"],
        p_10=her.probabilities["10"],
        p_11=her.probabilities["11"],
        p_mean=her.p_mean,
        herald_mode=herald_mode,
        heralded_excluded=her.excluded,
    )
