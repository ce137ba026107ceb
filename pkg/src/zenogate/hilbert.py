"""Occupation-number basis and second-quantized operators.

The model consists of two waveguide photon modes (``a``, ``b``), two
scattering photon modes (``c``, ``d``) and two three-level atoms (``A``,
``B``).  The interaction conserves the total excitation number

    N = n_a + n_b + n_c + n_d + exc(A) + exc(B),

so the state space is truncated at a maximum N.  For at most one photon
incident in each waveguide (N <= 2) the basis has exactly 28 states.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp

__all__ = [
    "AtomLevel",
    "BasisState",
    "BasisSet",
    "SparseOperator",
    "build_basis",
    "annihilation",
    "creation",
    "atom_lowering",
    "atom_raising",
    "number_operator",
    "projector",
    "total_excitation",
]

MODES = ("a", "b", "c", "d")
ATOMS = ("A", "B")


class AtomLevel(IntEnum):
    """Three-level atomic ladder; the numeric value is the excitation count."""

    GROUND = 0
    INTERMEDIATE = 1
    UPPER = 2

    @property
    def excitation(self) -> int:
        return int(self)

    @property
    def label(self) -> str:
        return {0: "g", 1: "i", 2: "e"}[int(self)]


class BasisState(NamedTuple):
    """Occupation numbers for the four photon modes and two atoms."""

    n_a: int
    n_b: int
    n_c: int
    n_d: int
    level_A: AtomLevel
    level_B: AtomLevel

    @property
    def excitation(self) -> int:
        return (
            self.n_a
            + self.n_b
            + self.n_c
            + self.n_d
            + self.level_A.excitation
            + self.level_B.excitation
        )

    def mode_count(self, mode: str) -> int:
        return getattr(self, f"n_{mode}")

    def atom_level(self, atom: str) -> AtomLevel:
        return getattr(self, f"level_{atom}")

    def swapped(self) -> "BasisState":
        """Exchange the two waveguides (a<->b, c<->d, atom A<->B)."""
        return BasisState(
            self.n_b, self.n_a, self.n_d, self.n_c, self.level_B, self.level_A
        )

    def label(self) -> str:
        return (
            f"|{self.n_a}{self.n_b}{self.n_c}{self.n_d};"
            f"{self.level_A.label}{self.level_B.label}>"
        )


def _sort_key(state: BasisState):
    return (state.excitation, tuple(int(x) for x in state))


class BasisSet:
    """Deterministically ordered basis of all states with N <= n_max.

    States are sorted by total excitation first and lexicographically on
    (n_a, n_b, n_c, n_d, level_A, level_B) second, so indices are stable
    across runs and golden files remain valid.
    """

    def __init__(self, states: Iterable[BasisState], n_max: int):
        self.states: tuple[BasisState, ...] = tuple(sorted(states, key=_sort_key))
        self.n_max = n_max
        self._index = {s: i for i, s in enumerate(self.states)}
        if len(self._index) != len(self.states):
            raise ValueError("duplicate basis states")
        self.excitations = np.array([s.excitation for s in self.states], dtype=np.int64)

    @property
    def dim(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return self.dim

    def index_of(self, state: BasisState) -> int:
        return self._index[state]

    def contains(self, state: BasisState) -> bool:
        return state in self._index

    def state_at(self, index: int) -> BasisState:
        return self.states[index]

    def sector_indices(self, n: int) -> np.ndarray:
        """Indices of all basis states with total excitation exactly n."""
        return np.flatnonzero(self.excitations == n)

    def swap_permutation(self) -> np.ndarray:
        """Index permutation induced by the waveguide exchange a<->b."""
        return np.array(
            [self.index_of(s.swapped()) for s in self.states], dtype=np.int64
        )

    def dump(self) -> str:
        """Plain-text enumeration (index, occupations, N) for debugging/goldens."""
        lines = ["index n_a n_b n_c n_d atom_A atom_B N"]
        for i, s in enumerate(self.states):
            lines.append(
                f"{i:5d} {s.n_a:3d} {s.n_b:3d} {s.n_c:3d} {s.n_d:3d} "
                f"{s.level_A.label:>6s} {s.level_B.label:>6s} {s.excitation:1d}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SparseOperator:
    """Sparse matrix on a BasisSet, stored as CSR with explicit entries."""

    dim: int
    matrix: sp.csr_matrix

    @classmethod
    def from_entries(
        cls, dim: int, entries: Iterable[tuple[int, int, complex]]
    ) -> "SparseOperator":
        rows, cols, vals = [], [], []
        for r, c, v in entries:
            if not (0 <= r < dim and 0 <= c < dim):
                raise ValueError(f"entry ({r}, {c}) outside dimension {dim}")
            rows.append(r)
            cols.append(c)
            vals.append(v)
        mat = sp.csr_matrix(
            (np.asarray(vals, dtype=np.complex128), (rows, cols)), shape=(dim, dim)
        )
        mat.sum_duplicates()
        return cls(dim, mat)

    @property
    def entries(self) -> list[tuple[int, int, complex]]:
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.dim, self.matrix.conj().T.tocsr())

    def __matmul__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(self.dim, (self.matrix @ other.matrix).tocsr())

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(self.dim, (self.matrix + other.matrix).tocsr())

    def __mul__(self, scalar: complex) -> "SparseOperator":
        return SparseOperator(self.dim, (self.matrix * scalar).tocsr())

    __rmul__ = __mul__

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        diff = self.matrix - self.matrix.conj().T
        return abs(diff).max() <= tol if diff.nnz else True


def build_basis(n_max_excitations: int) -> BasisSet:
    """Enumerate every occupation state with total excitation <= n_max.

    For n_max = 0, 1, 2 the dimensions are 1, 7 and 28.
    """
    if n_max_excitations < 0:
        raise ValueError("n_max_excitations must be >= 0")
    n = n_max_excitations
    states = []
    for n_a in range(n + 1):
        for n_b in range(n + 1 - n_a):
            for n_c in range(n + 1 - n_a - n_b):
                for n_d in range(n + 1 - n_a - n_b - n_c):
                    rem = n - n_a - n_b - n_c - n_d
                    for lev_a in AtomLevel:
                        if lev_a.excitation > rem:
                            continue
                        for lev_b in AtomLevel:
                            if lev_a.excitation + lev_b.excitation > rem:
                                continue
                            states.append(
                                BasisState(n_a, n_b, n_c, n_d, lev_a, lev_b)
                            )
    return BasisSet(states, n_max_excitations)


def annihilation(mode: str, basis: BasisSet) -> SparseOperator:
    """Bosonic annihilation operator for one photon mode.

    Matrix elements follow the standard convention <n-1|op|n> = sqrt(n),
    including the sqrt(2) enhancement for doubly occupied modes.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    entries = []
    for col, s in enumerate(basis.states):
        n = s.mode_count(mode)
        if n == 0:
            continue
        target = s._replace(**{f"n_{mode}": n - 1})
        entries.append((basis.index_of(target), col, complex(np.sqrt(n))))
    return SparseOperator.from_entries(basis.dim, entries)


def creation(mode: str, basis: BasisSet) -> SparseOperator:
    """Adjoint of :func:`annihilation`.

    Transitions that would leave the truncated space are dropped; products
    appearing in the interaction conserve N, so they are unaffected.
    """
    return annihilation(mode, basis).adjoint()


def atom_lowering(atom: str, basis: BasisSet) -> SparseOperator:
    """Atomic lowering operator: upper->intermediate->ground, unit elements.

    Both rungs carry the same matrix element; the physical coupling
    strengths enter through the time-dependent prefactors M(t), M'(t).
    """
    if atom not in ATOMS:
        raise ValueError(f"unknown atom {atom!r}")
    entries = []
    for col, s in enumerate(basis.states):
        lev = s.atom_level(atom)
        if lev == AtomLevel.GROUND:
            continue
        target = s._replace(**{f"level_{atom}": AtomLevel(lev - 1)})
        entries.append((basis.index_of(target), col, 1.0 + 0.0j))
    return SparseOperator.from_entries(basis.dim, entries)


def atom_raising(atom: str, basis: BasisSet) -> SparseOperator:
    return atom_lowering(atom, basis).adjoint()


def number_operator(which: str, basis: BasisSet) -> SparseOperator:
    """Diagonal occupation operator for a mode (a..d) or excitation count
    for an atom (A, B)."""
    if which in MODES:
        diag = [s.mode_count(which) for s in basis.states]
    elif which in ATOMS:
        diag = [s.atom_level(which).excitation for s in basis.states]
    else:
        raise ValueError(f"unknown mode or atom {which!r}")
    entries = [(i, i, complex(v)) for i, v in enumerate(diag) if v]
    return SparseOperator.from_entries(basis.dim, entries)


def projector(predicate: Callable[[BasisState], bool], basis: BasisSet) -> SparseOperator:
    """Diagonal projector onto the basis states satisfying ``predicate``."""
    entries = [
        (i, i, 1.0 + 0.0j) for i, s in enumerate(basis.states) if predicate(s)
    ]
    return SparseOperator.from_entries(basis.dim, entries)


def total_excitation(basis: BasisSet) -> SparseOperator:
    """Diagonal operator with eigenvalue N on every basis state."""
    entries = [
        (i, i, complex(n)) for i, n in enumerate(basis.excitations) if n
    ]
    return SparseOperator.from_entries(basis.dim, entries)
