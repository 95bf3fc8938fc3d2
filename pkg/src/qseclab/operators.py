"""Dense complex Hermitian-operator algebra on desk-scale state spaces.

Operators are immutable wrappers around 2-D ``complex128`` numpy arrays.
All spectral work goes through LAPACK's Hermitian eigensolver, which is
deterministic for identical input bits, so every derived quantity is
bit-reproducible.  Dimensions are capped at 64 (six qubits); nothing here
is sparse or structured.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DimensionCapError,
    DimensionMismatchError,
    NotHermitianError,
    NotPositiveError,
    ParseError,
    TraceNotOneError,
)

MAX_DIM = 64
HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = 1e-10
TRACE_TOL = 1e-10


def _as_square(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[0] > MAX_DIM:
        raise DimensionCapError(
            f"dimension {m.shape[0]} outside supported range [1, {MAX_DIM}]"
        )
    if not np.all(np.isfinite(m)):
        raise NotHermitianError("matrix contains non-finite entries")
    return m


def _freeze(m: np.ndarray) -> np.ndarray:
    out = np.array(m, dtype=np.complex128)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A square complex matrix equal to its conjugate transpose within 1e-12."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_square(self.matrix)
        dev = np.abs(m - m.conj().T).max()
        if dev > HERMITIAN_TOL:
            raise NotHermitianError(f"max deviation from conjugate transpose {dev:.3e}")
        object.__setattr__(self, "matrix", _freeze(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A state: Hermitian, positive semidefinite and unit trace.

    Tolerances: Hermiticity 1e-12 (max entry), eigenvalues >= -1e-10,
    trace within 1e-10 of one.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_square(self.matrix)
        dev = np.abs(m - m.conj().T).max()
        if dev > HERMITIAN_TOL:
            raise NotHermitianError(f"max deviation from conjugate transpose {dev:.3e}")
        eigenvalues = np.linalg.eigvalsh(m)
        if eigenvalues[0] < -POSITIVITY_TOL:
            raise NotPositiveError(float(eigenvalues[0]))
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > TRACE_TOL:
            raise TraceNotOneError(f"trace {tr!r} differs from 1 beyond {TRACE_TOL}")
        object.__setattr__(self, "matrix", _freeze(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


Operator = HermitianOperator | DensityOperator


def validate_density(matrix) -> DensityOperator:
    """Validate a raw matrix as a density operator.

    Checks run in order: Hermiticity, positivity (the error reports the
    most negative eigenvalue), unit trace.
    """
    return DensityOperator(matrix)


def hermitian(matrix) -> HermitianOperator:
    """Wrap a raw matrix as a validated Hermitian operator."""
    return HermitianOperator(matrix)


def pure_state(amplitudes) -> DensityOperator:
    """Density operator of the pure state with the given amplitudes.

    The amplitude vector is normalized before the projector is formed.
    """
    ket = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    norm = np.linalg.norm(ket)
    if norm == 0:
        raise NotPositiveError(0.0, "zero amplitude vector")
    ket = ket / norm
    return DensityOperator(np.outer(ket, ket.conj()))


def maximally_mixed(dim: int) -> DensityOperator:
    """The state I/dim."""
    return DensityOperator(np.eye(dim) / dim)


def eig_hermitian(op: Operator) -> tuple[np.ndarray, np.ndarray]:
    """Spectral decomposition with eigenvalues sorted in descending order.

    Returns ``(eigenvalues, eigenvectors)`` where column ``i`` of the
    eigenvector matrix matches ``eigenvalues[i]``.  Reconstruction
    ``V diag(w) V^dagger`` matches the input within 1e-9 per entry and the
    eigenvector columns are orthonormal to the same tolerance.
    """
    try:
        vals, vecs = np.linalg.eigh(op.matrix)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"Hermitian eigensolver failed: {exc}") from exc
    order = np.argsort(vals)[::-1]
    return vals[order].copy(), vecs[:, order].copy()


def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Half the trace norm of ``rho - sigma``; lies in [0, 1].

    Equals half the sum of absolute eigenvalues of the difference.  The
    value 1 is attained exactly when the two states have orthogonal ranges.
    """
    if rho.dim != sigma.dim:
        raise DimensionMismatchError(f"dims {rho.dim} and {sigma.dim} differ")
    eigenvalues = np.linalg.eigvalsh(rho.matrix - sigma.matrix)
    value = 0.5 * float(np.abs(eigenvalues).sum())
    return min(max(value, 0.0), 1.0)


def tensor(a: Operator, b: Operator):
    """Kronecker product of two operators of the same kind.

    The result dimension is the product of the input dimensions and the
    trace is multiplicative.
    """
    if type(a) is not type(b):
        raise TypeError("tensor requires two operators of the same kind")
    return type(a)(np.kron(a.matrix, b.matrix))


def partial_trace(op: Operator, dims: tuple[int, int], keep: int):
    """Trace out one factor of a bipartite operator.

    ``dims`` gives the factor dimensions ``(d_a, d_b)`` with
    ``d_a * d_b == op.dim``; ``keep`` selects the factor (0 or 1) that
    survives.  Returns the same operator kind as the input.
    """
    d_a, d_b = dims
    if d_a * d_b != op.dim:
        raise DimensionMismatchError(f"{dims} incompatible with dim {op.dim}")
    blocks = op.matrix.reshape(d_a, d_b, d_a, d_b)
    if keep == 0:
        reduced = np.einsum("abcb->ac", blocks)
    elif keep == 1:
        reduced = np.einsum("abad->bd", blocks)
    else:
        raise ValueError("keep must be 0 or 1")
    return type(op)(reduced)


def von_neumann_entropy(rho: DensityOperator) -> float:
    """Spectral entropy in bits, in [0, log2(dim)].

    Eigenvalues are clamped to [0, 1] after validation so round-off just
    below zero cannot poison the logarithm; 0 log 0 is taken as 0.
    """
    eigenvalues = np.clip(np.linalg.eigvalsh(rho.matrix), 0.0, 1.0)
    positive = eigenvalues[eigenvalues > 0.0]
    return max(0.0, float(-(positive * np.log2(positive)).sum()))


# ---------------------------------------------------------------------------
# Wire format: a complex matrix is a nested list of [re, im] pairs, row-major.
# ---------------------------------------------------------------------------

def matrix_to_pairs(op) -> list:
    """Serialize an operator (or raw 2-D array) to nested [re, im] pairs."""
    m = op.matrix if isinstance(op, (HermitianOperator, DensityOperator)) else np.asarray(op)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_pairs(obj) -> np.ndarray:
    """Parse the nested [re, im] pair format back into a complex matrix."""
    try:
        arr = np.asarray(obj, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed matrix literal: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ParseError(f"matrix literal must have shape (rows, cols, 2), got {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]
