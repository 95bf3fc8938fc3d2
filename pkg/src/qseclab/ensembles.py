"""Classical-quantum key ensembles and the secrecy criteria computed on them.

A ``CQEnsemble`` pairs a prior over n-bit key values with one probe state
per key.  On top of it this module evaluates the trace-distance secrecy
criterion in its two equivalent forms (explicit joint-vs-product state,
and prior-weighted average of per-key distances), the prior-weighted
variant used for non-uniform priors, the Holevo information, the
measured (classical) counterparts induced by a POVM, and key-subset
uniformity gaps.

Key-bit convention: key value k is an integer in [0, 2^n); bit position 0
is the most significant bit, so for n = 2 the keys order as
00, 01, 10, 11.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import distributions as dist
from . import operators as ops
from .errors import (
    DimensionCapError,
    DimensionMismatchError,
    EmptySubsetError,
    ParseError,
    ValidationError,
)
from .operators import DensityOperator

if TYPE_CHECKING:  # pragma: no cover
    from .detection import POVM

JOINT_DIM_CAP = 64
FORM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CQEnsemble:
    """Prior over 2^n key values paired with per-key probe states."""

    n_bits: int
    prior: np.ndarray
    states: tuple[DensityOperator, ...]

    def __post_init__(self):
        if self.n_bits < 0:
            raise ValidationError("key length must be nonnegative")
        prior = dist.validate_distribution(self.prior)
        n_keys = 2**self.n_bits
        if prior.size != n_keys:
            raise ValidationError(f"prior has {prior.size} entries, expected {n_keys}")
        states = tuple(
            s if isinstance(s, DensityOperator) else DensityOperator(s) for s in self.states
        )
        if len(states) != n_keys:
            raise ValidationError(f"{len(states)} states supplied, expected {n_keys}")
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise ValidationError(f"states have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "states", states)

    @property
    def num_keys(self) -> int:
        return 2**self.n_bits

    @property
    def state_dim(self) -> int:
        return self.states[0].dim

    def key_label(self, k: int) -> str:
        return format(k, f"0{self.n_bits}b") if self.n_bits else ""


def uniform_prior(n_bits: int) -> np.ndarray:
    return np.full(2**n_bits, 1.0 / 2**n_bits)


def average_state(e: CQEnsemble) -> DensityOperator:
    """The prior-averaged probe state."""
    acc = np.zeros((e.state_dim, e.state_dim), dtype=np.complex128)
    for w, s in zip(e.prior, e.states):
        acc += w * s.matrix
    return DensityOperator(acc)


def key_register_state(e: CQEnsemble) -> DensityOperator:
    """The prior as a diagonal state on the key register."""
    return DensityOperator(np.diag(e.prior.astype(np.complex128)))


def joint_state(e: CQEnsemble) -> DensityOperator:
    """Block-diagonal joint state of key register and probe.

    Explicit construction, so the total dimension 2^n * d is capped at 64.
    """
    d = e.state_dim
    total = e.num_keys * d
    if total > JOINT_DIM_CAP:
        raise DimensionCapError(f"joint dimension {total} exceeds cap {JOINT_DIM_CAP}")
    out = np.zeros((total, total), dtype=np.complex128)
    for k, (w, s) in enumerate(zip(e.prior, e.states)):
        out[k * d:(k + 1) * d, k * d:(k + 1) * d] = w * s.matrix
    return DensityOperator(out)


def joint_product_distance(e: CQEnsemble) -> float:
    """Trace distance between the joint state and the product of marginals.

    Built explicitly, so it inherits the joint-dimension cap; beyond the
    cap use :func:`mean_conditional_distance`, which is equal.
    """
    joint = joint_state(e)
    product = ops.tensor(key_register_state(e), average_state(e))
    return ops.trace_distance(joint, product)


def conditional_distances(e: CQEnsemble, reference: DensityOperator | None = None) -> np.ndarray:
    """Per-key half trace norms ``0.5 * || rho_k - reference ||_1``.

    The reference defaults to the ensemble average state; passing the
    maximally mixed state gives the ideal-reference variant.
    """
    ref = average_state(e) if reference is None else reference
    if ref.dim != e.state_dim:
        raise DimensionMismatchError(f"reference dim {ref.dim} != {e.state_dim}")
    return np.array([ops.trace_distance(s, ref) for s in e.states])


def mean_conditional_distance(e: CQEnsemble) -> float:
    """Prior-weighted mean distance between per-key states and the average.

    Equals :func:`joint_product_distance` for every prior; the joint form
    is kept as an independent cross-check within the dimension cap.
    """
    return float(e.prior @ conditional_distances(e))


def weighted_conditional_distance(e: CQEnsemble) -> float:
    """Half the summed trace norms of ``p(k) rho_k - avg/N``.

    Coincides with :func:`mean_conditional_distance` when the prior is
    uniform; for skewed priors it keeps the per-key weighting inside the
    norm.
    """
    avg = average_state(e).matrix / e.num_keys
    total = 0.0
    for w, s in zip(e.prior, e.states):
        total += float(np.abs(np.linalg.eigvalsh(w * s.matrix - avg)).sum())
    return 0.5 * total


def holevo_information(e: CQEnsemble) -> float:
    """Average-state entropy minus mean per-key entropy, in bits.

    Upper-bounds the mutual information extractable by any measurement on
    the probe; clamped at zero after a -1e-10 round-off allowance.
    """
    value = ops.von_neumann_entropy(average_state(e))
    value -= float(e.prior @ np.array([ops.von_neumann_entropy(s) for s in e.states]))
    if value < -1e-10:
        raise ValidationError(f"negative Holevo information {value:.3e}")
    return max(0.0, value)


@dataclass(frozen=True)
class MeasuredCriteria:
    """Classical quantities induced by measuring an ensemble with a POVM."""

    delta_e: float
    i_e_deficit: float
    cpd_table: np.ndarray        # outcome-major: row y holds p(k | y)
    outcome_probs: np.ndarray
    per_outcome_deficit: np.ndarray


def measurement_table(e: CQEnsemble, povm: "POVM") -> np.ndarray:
    """Outcome probabilities per key: entry (k, y) is p(y | k)."""
    if povm.dim != e.state_dim:
        raise DimensionMismatchError(f"POVM dim {povm.dim} != state dim {e.state_dim}")
    elements = np.stack([el.matrix for el in povm.elements])
    table = np.einsum("yij,kji->ky", elements, np.stack([s.matrix for s in e.states])).real
    table = np.clip(table, 0.0, None)
    return table / table.sum(axis=1, keepdims=True)


def measured_criteria(e: CQEnsemble, povm: "POVM") -> MeasuredCriteria:
    """Joint-vs-product variational distance, entropy deficit and CPDs.

    The classical distance is ``v(p(y|k) p0(k), p(y) p0(k))`` with no
    extra prefactor, so it contracts exactly from the operator criterion;
    a circulating variant carries an additional 1/2, which reports note
    rather than adopt.  The information deficit is the outcome-averaged
    gap between full key entropy and posterior entropy.
    """
    table = measurement_table(e, povm)
    joint = e.prior[:, None] * table
    outcome_probs = joint.sum(axis=0)
    product = e.prior[:, None] * outcome_probs[None, :]
    delta = 0.5 * float(np.abs(joint - product).sum())
    cpds = np.empty((len(povm.elements), e.num_keys))
    deficits = np.empty(len(povm.elements))
    for y in range(len(povm.elements)):
        if outcome_probs[y] > 0.0:
            cpds[y] = joint[:, y] / outcome_probs[y]
        else:
            cpds[y] = e.prior  # unreachable outcome: posterior stays at the prior
        deficits[y] = e.n_bits - dist.shannon_entropy(cpds[y])
    deficit = float(outcome_probs @ deficits)
    return MeasuredCriteria(
        delta_e=min(max(delta, 0.0), 1.0),
        i_e_deficit=max(0.0, deficit),
        cpd_table=cpds,
        outcome_probs=outcome_probs,
        per_outcome_deficit=deficits,
    )


def semantic_security_gap(cpd, subset_positions) -> tuple[float, float]:
    """Uniformity gap of a key-bit subset marginal.

    Marginalizes a distribution over n-bit keys onto the given bit
    positions (MSB-first) and returns the largest and the value-averaged
    absolute deviation from the uniform value 2^-|subset|.
    """
    p = dist.validate_distribution(cpd)
    n_bits = p.size.bit_length() - 1
    if 2**n_bits != p.size:
        raise ValidationError(f"CPD size {p.size} is not a power of two")
    positions = tuple(subset_positions)
    if not positions:
        raise EmptySubsetError("subset of key bits must be non-empty")
    if len(set(positions)) != len(positions):
        raise ValidationError(f"duplicate bit positions in {positions}")
    if any(not 0 <= b < n_bits for b in positions):
        raise ValidationError(f"bit positions {positions} outside [0, {n_bits})")
    keys = np.arange(p.size)
    values = np.zeros(p.size, dtype=np.int64)
    for j, b in enumerate(positions):
        bit = (keys >> (n_bits - 1 - b)) & 1
        values |= bit << (len(positions) - 1 - j)
    marginal = np.bincount(values, weights=p, minlength=2 ** len(positions))
    gaps = np.abs(marginal - 2.0 ** -len(positions))
    return float(gaps.max()), float(gaps.mean())


@dataclass(frozen=True)
class CriteriaRecord:
    """All secrecy criteria evaluated on one ensemble.

    ``d`` is the per-key average form, ``d_joint`` the explicit joint form
    (None beyond the joint-dimension cap), ``d_prime`` the prior-weighted
    variant, ``chi`` the Holevo information in bits.  ``delta_e`` and
    ``i_e_deficit`` are the classical counterparts under the measurement
    named in ``p1_bound_notes``.
    """

    d: float
    d_joint: float | None
    d_prime: float
    chi: float
    delta_e: float
    i_e_deficit: float
    p1_bound_notes: str

    def __post_init__(self):
        for name in ("d", "d_prime", "delta_e"):
            value = getattr(self, name)
            if not -1e-12 <= value <= 1.0 + 1e-12:
                raise ValidationError(f"{name} = {value!r} outside [0, 1]")
        if self.d_joint is not None and not -1e-12 <= self.d_joint <= 1.0 + 1e-12:
            raise ValidationError(f"d_joint = {self.d_joint!r} outside [0, 1]")
        if self.chi < -1e-12:
            raise ValidationError(f"chi = {self.chi!r} negative")

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "d_joint": self.d_joint,
            "d_prime": self.d_prime,
            "chi": self.chi,
            "delta_e": self.delta_e,
            "i_e_deficit": self.i_e_deficit,
            "p1_bound_notes": self.p1_bound_notes,
        }


def criteria_record(e: CQEnsemble, povm: "POVM | None" = None) -> CriteriaRecord:
    """Evaluate every criterion on one ensemble.

    The joint form is included when the joint dimension fits the cap.  The
    measured quantities default to the square-root measurement when no
    POVM is supplied.
    """
    from . import detection  # deferred: detection builds on this module

    d = mean_conditional_distance(e)
    d_joint = None
    if e.num_keys * e.state_dim <= JOINT_DIM_CAP:
        d_joint = joint_product_distance(e)
    if povm is None:
        povm = detection.square_root_measurement(e).povm
        povm_name = "square-root measurement"
    else:
        povm_name = f"caller POVM ({len(povm.elements)} outcomes)"
    chi = holevo_information(e)
    if chi > e.n_bits + 1e-9:
        raise ValidationError(f"chi = {chi!r} exceeds key length {e.n_bits}")
    measured = measured_criteria(e, povm)
    top = float(measured.cpd_table.max())
    notes = (
        f"measurement: {povm_name}; max posterior key mass {top:.6g}; "
        "classical delta computed as v(joint, product) with no extra 1/2 "
        "prefactor so it contracts exactly from d; "
        + dist.EVENT_GAP_NOTE
    )
    return CriteriaRecord(
        d=d,
        d_joint=d_joint,
        d_prime=weighted_conditional_distance(e),
        chi=chi,
        delta_e=measured.delta_e,
        i_e_deficit=measured.i_e_deficit,
        p1_bound_notes=notes,
    )


# ---------------------------------------------------------------------------
# Ensemble file format: {"n": int, "prior": [...], "states": [matrix literals]}
# ---------------------------------------------------------------------------

def ensemble_to_dict(e: CQEnsemble) -> dict:
    return {
        "n": e.n_bits,
        "prior": [float(w) for w in e.prior],
        "states": [ops.matrix_to_pairs(s) for s in e.states],
    }


def ensemble_from_dict(obj) -> CQEnsemble:
    if not isinstance(obj, dict):
        raise ParseError(f"ensemble record must be an object, got {type(obj).__name__}")
    missing = {"n", "prior", "states"} - set(obj)
    if missing:
        raise ParseError(f"ensemble record missing fields {sorted(missing)}")
    states = []
    for k, literal in enumerate(obj["states"]):
        try:
            states.append(DensityOperator(ops.matrix_from_pairs(literal)))
        except ParseError as exc:
            raise ParseError(f"state {k}: {exc}") from exc
        except ValidationError as exc:
            raise ValidationError(f"state {k}: {exc}") from exc
    try:
        return CQEnsemble(n_bits=int(obj["n"]), prior=obj["prior"], states=tuple(states))
    except (ValueError, TypeError) as exc:
        raise ParseError(f"bad ensemble record: {exc}") from exc


def load_ensemble(path) -> CQEnsemble:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    return ensemble_from_dict(obj)


def save_ensemble(e: CQEnsemble, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ensemble_to_dict(e), fh, sort_keys=True)
        fh.write("\n")
