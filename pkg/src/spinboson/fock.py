"""Truncated bosonic Fock spaces over finite mode sets.

A mode set is a finite family of positive oscillator frequencies with
quadrature weights, obtained by discretizing the radial one-particle space.
The Fock basis enumerates occupation multi-indices (n_1, ..., n_M) with a
total-number cutoff sum(n_j) <= n_max; creation, annihilation and field
energy operators are assembled as explicit matrices in that basis.

Conventions fixed here and used everywhere downstream:

* a(h) is antilinear in h: its matrix is sum_j conj(h_j) A_j, where A_j is
  the elementary lowering matrix with <n - e_j| A_j |n> = sqrt(n_j).
* a(h)* is linear in h and equals the conjugate transpose of a(h) on the
  truncated space (compression preserves adjointness; it is the canonical
  commutation relation that truncation breaks, and only on the top shell).
* Quadrature weights are absorbed into mode amplitudes as sqrt(w_j), so the
  discrete l2 norm of an amplitude vector approximates the continuum L2 norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Iterator

import numpy as np

from .errors import AssemblyError, BasisSizeError

DEFAULT_STATE_CAP = 500_000


@dataclass(frozen=True)
class ModeSet:
    """Discretized one-particle modes: frequencies, weights, shell labels.

    ``labels[j]`` records which panel of the radial grid mode j came from:
    label k >= 1 means the k-th infrared shell [rho_k, rho_{k-1}), label 0
    means the ultraviolet segment [rho_0, r_max].  ``shell_bounds`` maps each
    label to its half-open interval (closed at r_max) so the labelling can be
    validated.
    """

    frequencies: np.ndarray
    weights: np.ndarray
    labels: np.ndarray
    shell_bounds: dict[int, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "labels", labels)
        if freqs.ndim != 1 or len(freqs) == 0:
            raise AssemblyError("mode set needs at least one frequency")
        if len(weights) != len(freqs) or len(labels) != len(freqs):
            raise AssemblyError("frequencies, weights and labels must align")
        if not np.all(freqs > 0.0):
            raise AssemblyError("all mode frequencies must be positive")
        if not np.all(np.diff(freqs) > 0.0):
            raise AssemblyError("mode frequencies must be strictly increasing")
        if not np.all(weights > 0.0):
            raise AssemblyError("quadrature weights must be positive")
        for j, lab in enumerate(labels):
            if int(lab) in self.shell_bounds:
                lo, hi = self.shell_bounds[int(lab)]
                if not (lo <= freqs[j] <= hi):
                    raise AssemblyError(
                        f"mode {j} at frequency {freqs[j]:.6g} lies outside "
                        f"its labelled shell [{lo:.6g}, {hi:.6g}]"
                    )

    @property
    def n_modes(self) -> int:
        return len(self.frequencies)

    def restrict(self, keep: np.ndarray) -> "ModeSet":
        """Sub-mode-set at the given sorted index mask/array."""
        keep = np.asarray(keep)
        return ModeSet(
            self.frequencies[keep],
            self.weights[keep],
            self.labels[keep],
            self.shell_bounds,
        )

    def scaled(self, factor: float) -> "ModeSet":
        """Dilated copy: frequencies and weights multiplied by ``factor``.

        Realizes the one-particle dilation r -> factor * r at the quadrature
        level (weights transform like dr).
        """
        if factor <= 0:
            raise AssemblyError("scaling factor must be positive")
        bounds = {
            k: (factor * lo, factor * hi) for k, (lo, hi) in self.shell_bounds.items()
        }
        return ModeSet(
            factor * self.frequencies, factor * self.weights, self.labels, bounds
        )


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def basis_dimension(n_modes: int, n_max: int) -> int:
    """Stars-and-bars count: sum over totals n of multisets of size n."""
    return sum(comb(n + n_modes - 1, n) for n in range(n_max + 1))


class FockBasis:
    """Occupation basis with total-number cutoff, plus both index maps.

    State 0 is the vacuum.  States are ordered by (total number, occupation
    tuple) with ascending lexicographic order inside each total sector.
    """

    def __init__(self, modes: ModeSet, n_max: int, state_cap: int = DEFAULT_STATE_CAP):
        if n_max < 0:
            raise AssemblyError("n_max must be nonnegative")
        dim = basis_dimension(modes.n_modes, n_max)
        if dim > state_cap:
            raise BasisSizeError(dim, state_cap, modes.n_modes, n_max)
        self.modes = modes
        self.n_max = n_max
        states: list[tuple[int, ...]] = []
        for total in range(n_max + 1):
            states.extend(_compositions(total, modes.n_modes))
        self.states = np.array(states, dtype=np.int32)
        self.index = {s: i for i, s in enumerate(states)}
        self.dim = dim
        self._lowering = None

    def state(self, i: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.states[i])

    def index_of(self, occupations) -> int:
        return self.index[tuple(int(x) for x in occupations)]

    @property
    def totals(self) -> np.ndarray:
        return self.states.sum(axis=1)

    @property
    def total_parity(self) -> np.ndarray:
        """(-1)^N per state; used for the interaction parity sector split."""
        return 1 - 2 * (self.totals % 2)

    def lowering_triples(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """All elementary lowering matrix elements as flat arrays.

        Returns (rows, cols, mode, amp) with <row| A_mode |col> = amp,
        amp = sqrt(occupation of mode in state col).
        """
        if self._lowering is None:
            rows, cols, mode_ix, amps = [], [], [], []
            for col, occ in enumerate(self.states):
                occupied = np.nonzero(occ)[0]
                for j in occupied:
                    lowered = occ.copy()
                    lowered[j] -= 1
                    rows.append(self.index[tuple(int(x) for x in lowered)])
                    cols.append(col)
                    mode_ix.append(j)
                    amps.append(np.sqrt(float(occ[j])))
            self._lowering = (
                np.array(rows, dtype=np.int64),
                np.array(cols, dtype=np.int64),
                np.array(mode_ix, dtype=np.int64),
                np.array(amps, dtype=float),
            )
        return self._lowering


@dataclass
class OperatorMatrix:
    """Complex matrix of an operator, dense or permuted-block-diagonal.

    ``blocks`` holds (indices, dense block) pairs whose index sets partition
    range(dim); entries between different blocks are structurally zero.  This
    is the storage used when a symmetry makes the matrix block diagonal after
    a permutation.  Exactly one of ``matrix``/``blocks`` is set.
    """

    dim: int
    matrix: np.ndarray | None = None
    blocks: list[tuple[np.ndarray, np.ndarray]] | None = None
    hermitian: bool = False

    @classmethod
    def dense(cls, matrix: np.ndarray, hermitian: bool = False) -> "OperatorMatrix":
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise AssemblyError("operator matrix must be square")
        return cls(dim=matrix.shape[0], matrix=matrix, hermitian=hermitian)

    @classmethod
    def from_blocks(
        cls,
        dim: int,
        blocks: list[tuple[np.ndarray, np.ndarray]],
        hermitian: bool = False,
    ) -> "OperatorMatrix":
        seen = np.concatenate([np.asarray(ix) for ix, _ in blocks])
        if len(seen) != dim or len(np.unique(seen)) != dim:
            raise AssemblyError("block index sets must partition the dimension")
        for ix, block in blocks:
            if block.shape != (len(ix), len(ix)):
                raise AssemblyError("block shape does not match its index set")
        return cls(dim=dim, blocks=blocks, hermitian=hermitian)

    def to_dense(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for ix, block in self.blocks:
            out[np.ix_(ix, ix)] = block
        return out

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix @ x
        out = np.zeros_like(x, dtype=complex)
        for ix, block in self.blocks:
            out[ix] = block @ x[ix]
        return out

    def hermiticity_defect(self) -> float:
        if self.matrix is not None:
            return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))
        return max(float(np.max(np.abs(b - b.conj().T))) for _, b in self.blocks)


def enumerate_basis(
    modes: ModeSet, n_max: int, state_cap: int = DEFAULT_STATE_CAP
) -> FockBasis:
    """Enumerate the truncated occupation basis over the given modes."""
    return FockBasis(modes, n_max, state_cap=state_cap)


def build_field_energy(basis: FockBasis) -> OperatorMatrix:
    """Diagonal field energy: entry sum_j n_j omega_j per occupation state."""
    diag = basis.states @ basis.modes.frequencies
    return OperatorMatrix.dense(np.diag(diag.astype(complex)), hermitian=True)


def field_energy_diagonal(basis: FockBasis) -> np.ndarray:
    """The diagonal of the field energy as a real vector (no matrix)."""
    return basis.states @ basis.modes.frequencies


def build_annihilation(basis: FockBasis, coeffs: np.ndarray) -> OperatorMatrix:
    """Matrix of a(h) for amplitude vector h over the modes (antilinear)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (basis.modes.n_modes,):
        raise AssemblyError("coefficient vector length must equal mode count")
    rows, cols, mode_ix, amps = basis.lowering_triples()
    mat = np.zeros((basis.dim, basis.dim), dtype=complex)
    np.add.at(mat, (rows, cols), np.conj(coeffs[mode_ix]) * amps)
    return OperatorMatrix.dense(mat)


def build_creation(basis: FockBasis, coeffs: np.ndarray) -> OperatorMatrix:
    """Matrix of a(h)*, the adjoint of a(h) on the truncated space."""
    return OperatorMatrix.dense(build_annihilation(basis, coeffs).matrix.conj().T)


def build_field_operator(basis: FockBasis, coeffs: np.ndarray) -> OperatorMatrix:
    """a(conj(h)) + a(h)* for amplitudes h: the interaction combination.

    Complex symmetric for any h (both ladder directions carry h itself);
    Hermitian exactly when h is real.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (basis.modes.n_modes,):
        raise AssemblyError("coefficient vector length must equal mode count")
    rows, cols, mode_ix, amps = basis.lowering_triples()
    mat = np.zeros((basis.dim, basis.dim), dtype=complex)
    vals = coeffs[mode_ix] * amps
    np.add.at(mat, (rows, cols), vals)
    np.add.at(mat, (cols, rows), vals)
    return OperatorMatrix.dense(mat)


def verify_ccr(basis: FockBasis, h: np.ndarray, l: np.ndarray) -> float:
    """Max-entry residual of [a(h), a*(l)] - <h,l> restricted below the cutoff.

    The commutator is exact on states with total number <= n_max - 1; the
    top shell is where truncation necessarily breaks it, so that sector is
    excluded from the residual.
    """
    if basis.n_max < 1:
        raise ValueError("canonical commutator needs n_max >= 1")
    a_h = build_annihilation(basis, h).matrix
    c_l = build_annihilation(basis, l).matrix.conj().T
    comm = a_h @ c_l - c_l @ a_h
    inner = complex(np.vdot(np.asarray(h, dtype=complex), np.asarray(l, dtype=complex)))
    resid = comm - inner * np.eye(basis.dim)
    keep = np.nonzero(basis.totals <= basis.n_max - 1)[0]
    return float(np.max(np.abs(resid[np.ix_(keep, keep)])))


def verify_standard_estimates(basis: FockBasis, h: np.ndarray) -> dict:
    """Check the annihilation/creation relative bounds against (H_f + 1)^(1/2).

    Computes the truncated-space operator norms of a(h)(H_f+1)^(-1/2) and
    a(h)*(H_f+1)^(-1/2) and compares with the closed-form l2 bounds
    |h/sqrt(omega)| and |h| + |h/sqrt(omega)|.  Compression can only shrink
    operator norms, so both inequalities must hold on any truncation.
    """
    h = np.asarray(h, dtype=complex)
    a_mat = build_annihilation(basis, h).matrix
    scale = 1.0 / np.sqrt(field_energy_diagonal(basis) + 1.0)
    lhs_a = _spectral_norm(a_mat * scale[None, :])
    lhs_astar = _spectral_norm(a_mat.conj().T * scale[None, :])
    rhs_a = float(np.linalg.norm(h / np.sqrt(basis.modes.frequencies)))
    rhs_astar = float(np.linalg.norm(h)) + rhs_a
    slack = 1e-12 * (1.0 + rhs_astar)
    return {
        "lhs_a": lhs_a,
        "lhs_astar": lhs_astar,
        "rhs_a": rhs_a,
        "rhs_astar": rhs_astar,
        "pass": bool(lhs_a <= rhs_a + slack and lhs_astar <= rhs_astar + slack),
    }


def _spectral_norm(mat: np.ndarray) -> float:
    if mat.size == 0:
        return 0.0
    return float(np.linalg.svd(mat, compute_uv=False)[0])
