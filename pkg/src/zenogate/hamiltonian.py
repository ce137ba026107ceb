"""Total Hamiltonian of the coupled waveguide/atom system.

H(t) = H0 + C(t)(a'b + b'a)
          + M(t)(a'A- + aA+ + b'B- + bB+)
          + M'(t)(c'A- + cA+ + d'B- + dB+)

with primes denoting adjoints.  H0 is diagonal in the occupation basis;
in the rotating (excitation) frame the fast omega*N rotation is removed,
leaving delta per atom in its intermediate level and (omega_s - omega) per
scattered photon.  Every term conserves the total excitation N, so H(t) is
block-diagonal in N.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import hilbert
from .errors import HermiticityError
from .pulses import SHAPES, Schedule, make_schedule

__all__ = ["PhysicsParams", "HamiltonianModel", "frame_shift_phase"]

FRAMES = ("rotating", "lab")


@dataclass(frozen=True)
class PhysicsParams:
    """Every physical symbol of one gate run (hbar = c = 1 units).

    The photon frequency sets the unit scale (omega = 1 by convention).
    The intermediate atomic level sits at omega + delta and the upper level
    at 2*omega (two-photon resonance).  T_M defaults to the minimal value
    that contains the C window; omega_s defaults to omega.
    """

    omega: float = 1.0
    delta: float = 0.25
    C_max: float = 0.00012
    M_max: float = 0.0
    Mprime_max: float = 0.0
    tau_C: float = 1000.0
    T_C: float = 12090.0
    tau_M: float = 1000.0
    T_M: Optional[float] = None
    tau_M_off: Optional[float] = None
    omega_s: Optional[float] = None
    frame: str = "rotating"
    shape: str = "raised_cosine"

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("omega must be > 0")
        for name in ("C_max", "M_max", "Mprime_max"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("tau_C", "T_C", "tau_M"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.tau_M_off is not None and self.tau_M_off < 0:
            raise ValueError("tau_M_off must be >= 0")
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}")
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}")
        if self.T_M is None:
            object.__setattr__(self, "T_M", 2.0 * self.tau_C + self.T_C)
        if self.omega_s is None:
            object.__setattr__(self, "omega_s", self.omega)

    def with_(self, **changes) -> "PhysicsParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "omega": self.omega,
            "omega_s": self.omega_s,
            "delta": self.delta,
            "c_max": self.C_max,
            "m_max": self.M_max,
            "mprime_max": self.Mprime_max,
            "tau_c": self.tau_C,
            "t_c": self.T_C,
            "tau_m": self.tau_M,
            "t_m": self.T_M,
            "tau_m_off": self.tau_M_off,
            "frame": self.frame,
            "shape": self.shape,
        }


def _atom_energy(level: hilbert.AtomLevel, omega: float, delta: float) -> float:
    # ground at 0, intermediate detuned by delta, upper on two-photon resonance
    if level == hilbert.AtomLevel.GROUND:
        return 0.0
    if level == hilbert.AtomLevel.INTERMEDIATE:
        return omega + delta
    return 2.0 * omega


def _lab_diagonal(basis: hilbert.BasisSet, p: PhysicsParams) -> np.ndarray:
    diag = np.empty(basis.dim, dtype=np.float64)
    for i, s in enumerate(basis.states):
        diag[i] = (
            p.omega * (s.n_a + s.n_b)
            + p.omega_s * (s.n_c + s.n_d)
            + _atom_energy(s.level_A, p.omega, p.delta)
            + _atom_energy(s.level_B, p.omega, p.delta)
        )
    return diag


def _coupling_terms(basis: hilbert.BasisSet):
    """The three Hermitian coupling operators multiplying C(t), M(t), M'(t).

    Each term is built as X + X' with the excitation-lowering factor of X
    applied first, so intermediate states never leave the N-truncated
    space and the operators conserve N exactly.
    """
    ops = {m: hilbert.annihilation(m, basis) for m in hilbert.MODES}
    low = {a: hilbert.atom_lowering(a, basis) for a in hilbert.ATOMS}

    def hermitian_pair(x: hilbert.SparseOperator) -> hilbert.SparseOperator:
        return x + x.adjoint()

    term_c = hermitian_pair(ops["a"].adjoint() @ ops["b"])
    term_m = hermitian_pair(ops["a"].adjoint() @ low["A"]) + hermitian_pair(
        ops["b"].adjoint() @ low["B"]
    )
    term_mp = hermitian_pair(ops["c"].adjoint() @ low["A"]) + hermitian_pair(
        ops["d"].adjoint() @ low["B"]
    )
    return term_c, term_m, term_mp


@dataclass
class _KernelArrays:
    """Shared-pattern CSR layout of the three coupling terms (real data)."""

    indptr: np.ndarray
    indices: np.ndarray
    data_c: np.ndarray
    data_m: np.ndarray
    data_mp: np.ndarray


def _build_kernel_arrays(term_c, term_m, term_mp, dim: int) -> _KernelArrays:
    dense = [t.to_dense() for t in (term_c, term_m, term_mp)]
    for d in dense:
        if np.abs(d.imag).max(initial=0.0) > 0:
            raise HermiticityError("coupling terms expected real-valued")
    pattern = (np.abs(dense[0]) + np.abs(dense[1]) + np.abs(dense[2])) > 0
    indptr = np.zeros(dim + 1, dtype=np.int64)
    indices, dc, dm, dmp = [], [], [], []
    for r in range(dim):
        cols = np.flatnonzero(pattern[r])
        indptr[r + 1] = indptr[r] + len(cols)
        for c in cols:
            indices.append(c)
            dc.append(dense[0][r, c].real)
            dm.append(dense[1][r, c].real)
            dmp.append(dense[2][r, c].real)
    return _KernelArrays(
        indptr=indptr,
        indices=np.asarray(indices, dtype=np.int64),
        data_c=np.asarray(dc, dtype=np.float64),
        data_m=np.asarray(dm, dtype=np.float64),
        data_mp=np.asarray(dmp, dtype=np.float64),
    )


class HamiltonianModel:
    """Immutable bundle of basis, schedule and cached operator terms.

    ``assemble`` produces the dense Hermitian matrix at a given time; the
    compiled integrator consumes the cached sparse arrays directly.  A model
    can be restricted to a single total-excitation sector (H is block
    diagonal in N), which is exact and much cheaper for one-photon runs.
    """

    def __init__(
        self,
        basis: hilbert.BasisSet,
        params: PhysicsParams,
        schedule: Schedule | None = None,
    ):
        self.basis = basis
        self.params = params
        self.schedule = schedule if schedule is not None else make_schedule(params)
        self.frame = params.frame

        term_c, term_m, term_mp = _coupling_terms(basis)
        self.term_C = term_c
        self.term_M = term_m
        self.term_Mprime = term_mp

        lab = _lab_diagonal(basis, params)
        if params.frame == "rotating":
            self.diag = lab - params.omega * basis.excitations.astype(np.float64)
        else:
            self.diag = lab
        self.kernel = _build_kernel_arrays(term_c, term_m, term_mp, basis.dim)
        self._dense_terms = tuple(
            t.to_dense() for t in (term_c, term_m, term_mp)
        )

        # identity mapping for the unrestricted model
        self.sector: Optional[int] = None
        self.global_indices = np.arange(basis.dim, dtype=np.int64)

    @property
    def dim(self) -> int:
        return len(self.diag)

    def dense_hamiltonian(self, c: float, m: float, mp: float) -> np.ndarray:
        tc, tm, tmp = self._dense_terms
        return np.diag(self.diag.astype(np.complex128)) + c * tc + m * tm + mp * tmp

    def assemble(self, t: float) -> np.ndarray:
        """Dense H(t); raises HermiticityError if the self-check fails."""
        h = self.dense_hamiltonian(*self.schedule.values_at(t))
        dev = np.abs(h - h.conj().T).max()
        if dev > 1e-12:
            raise HermiticityError(f"assembled H(t={t:g}) deviates by {dev:.3e}")
        return h

    def restricted(self, n: int) -> "HamiltonianModel":
        """Sub-model acting on the total-excitation-N sector only."""
        idx = self.basis.sector_indices(n)
        sub = object.__new__(HamiltonianModel)
        sub.basis = self.basis
        sub.params = self.params
        sub.schedule = self.schedule
        sub.frame = self.frame
        sub.diag = self.diag[idx]
        pos = {g: l for l, g in enumerate(idx)}

        def _slice(term):
            entries = [
                (pos[r], pos[c], v)
                for r, c, v in term.entries
                if r in pos and c in pos
            ]
            return hilbert.SparseOperator.from_entries(len(idx), entries)

        sub.term_C = _slice(self.term_C)
        sub.term_M = _slice(self.term_M)
        sub.term_Mprime = _slice(self.term_Mprime)
        sub.kernel = _build_kernel_arrays(
            sub.term_C, sub.term_M, sub.term_Mprime, len(idx)
        )
        sub._dense_terms = tuple(
            t.to_dense() for t in (sub.term_C, sub.term_M, sub.term_Mprime)
        )
        sub.sector = n
        sub.global_indices = idx
        return sub

    def with_schedule(self, schedule: Schedule) -> "HamiltonianModel":
        """Shallow copy sharing all cached operators but a new schedule.

        Used by the transfer calibration, which varies only the pulse
        timing while the operators stay fixed.
        """
        sub = object.__new__(HamiltonianModel)
        sub.__dict__.update(self.__dict__)
        sub.schedule = schedule
        return sub


def frame_shift_phase(params: PhysicsParams, n: int, total_time: float) -> float:
    """Phase omega*N*T relating lab- and rotating-frame output amplitudes.

    Diagnostic only: the nonlinear phase is frame invariant because the
    N = 2 shift cancels the two N = 1 shifts.
    """
    return params.omega * n * total_time
