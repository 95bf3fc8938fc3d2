"""The two-bit basis-locking counterexample and its known-plaintext attack.

Construction: the first key bit selects which conjugate qubit basis
carries it, and the first qubit's actual basis state selects the basis in
which the second qubit encodes the second key bit.  Every per-key probe
state is an equal mixture of two orthogonal product projectors, so it
sits at trace distance 1/2 from the maximally mixed reference, yet an
attacker who knows the first bit unlocks the second deterministically by
measuring qubit one in the bit's basis and steering the second-qubit
basis by the outcome.

Two variants are provided.  ``symmetric_corrected`` completes the
first-qubit encoding pattern for all four keys.  ``as_printed`` keeps an
asymmetric fourth state (both mixture terms share one first-slot
projector), which breaks the deterministic unlock for known first bit 0;
whether that asymmetry is intentional is not decidable, so both variants
are first-class and every report labels the one in use.

Basis realization is fixed for bit-reproducibility: state 1 = (1, 0),
state 3 = (0, 1), state 2 = (1, 1)/sqrt2, state 4 = (1, -1)/sqrt2, so
1-3 and 2-4 are the two conjugate bases.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import distributions, ensembles as ens, operators as ops
from .errors import ValidationError
from .operators import DensityOperator

BASIS_13 = (1, 3)
BASIS_24 = (2, 4)

_KETS = {
    1: np.array([1.0, 0.0], dtype=np.complex128),
    2: np.array([1.0, 1.0], dtype=np.complex128) / np.sqrt(2.0),
    3: np.array([0.0, 1.0], dtype=np.complex128),
    4: np.array([1.0, -1.0], dtype=np.complex128) / np.sqrt(2.0),
}

# half of the 2-term mixture; exact in binary floating point
_HALF = 0.5

TERM_TABLES = {
    "symmetric_corrected": {
        (1, 1): ((1, 1), (3, 2)),
        (1, 0): ((1, 3), (3, 4)),
        (0, 1): ((2, 1), (4, 2)),
        (0, 0): ((2, 3), (4, 4)),
    },
    "as_printed": {
        (1, 1): ((1, 1), (3, 2)),
        (1, 0): ((1, 3), (3, 4)),
        (0, 1): ((2, 1), (4, 2)),
        (0, 0): ((4, 3), (4, 4)),
    },
}

VARIANTS = tuple(TERM_TABLES)


@dataclass(frozen=True, eq=False)
class BB84Basis:
    """Four qubit states forming two mutually unbiased bases."""

    kets: np.ndarray  # shape (4, 2), rows are states 1..4

    def __post_init__(self):
        kets = np.asarray(self.kets, dtype=np.complex128)
        if kets.shape != (4, 2):
            raise ValidationError(f"expected four qubit kets, got shape {kets.shape}")
        if abs(np.vdot(kets[0], kets[2])) > 1e-12 or abs(np.vdot(kets[1], kets[3])) > 1e-12:
            raise ValidationError("states 1-3 and 2-4 must be orthogonal pairs")
        if abs(abs(np.vdot(kets[0], kets[1])) ** 2 - 0.5) > 1e-12:
            raise ValidationError("the two bases must be mutually unbiased")
        kets = kets.copy()
        kets.setflags(write=False)
        object.__setattr__(self, "kets", kets)
        # Born weights between basis states can only be 0, 1/2 or 1 by the
        # invariants above; snap away representation noise (1/sqrt2 is not
        # exactly representable) so deterministic attack paths stay exact.
        table = np.empty((4, 4))
        for i in range(4):
            for j in range(4):
                raw = abs(np.vdot(kets[i], kets[j])) ** 2
                snapped = min((0.0, 0.5, 1.0), key=lambda v: abs(raw - v))
                if abs(raw - snapped) > 1e-9:
                    raise ValidationError(f"overlap {raw!r} is not one of 0, 1/2, 1")
                table[i, j] = snapped
        table.setflags(write=False)
        object.__setattr__(self, "_overlap_table", table)

    def ket(self, index: int) -> np.ndarray:
        return self.kets[index - 1]

    def projector(self, index: int) -> np.ndarray:
        k = self.ket(index)
        return np.outer(k, k.conj())

    def overlap2(self, i: int, j: int) -> float:
        """Born weight |<i|j>|^2, snapped to its exact value in {0, 1/2, 1}."""
        return float(self._overlap_table[i - 1, j - 1])


def default_basis() -> BB84Basis:
    return BB84Basis(np.stack([_KETS[i] for i in (1, 2, 3, 4)]))


def _basis_of(index: int) -> tuple[int, int]:
    return BASIS_13 if index in BASIS_13 else BASIS_24


@dataclass(frozen=True, eq=False)
class LockingEnsemble:
    """A term table together with the ensemble it generates.

    ``terms`` maps each key (tuple of bits, first bit first) to the two
    product terms of its state; each term is a tuple of basis-state
    indices, one per qubit.  ``term_orthogonality`` records, per key,
    whether the two mixture terms are orthogonal (they are for every key
    of symmetric_corrected; as_printed breaks it on key 00, whose state
    then has eigenvalues (2 +- sqrt2)/4 instead of (1/2, 1/2)).
    """

    variant: str
    basis: BB84Basis
    terms: dict
    ensemble: ens.CQEnsemble
    term_orthogonality: dict

    @property
    def n_bits(self) -> int:
        return self.ensemble.n_bits


def _state_from_term(basis: BB84Basis, slots: tuple[int, ...]) -> np.ndarray:
    out = basis.projector(slots[0])
    for index in slots[1:]:
        out = np.kron(out, basis.projector(index))
    return out


def build_term_ensemble(terms: dict, variant: str, basis: BB84Basis | None = None) -> LockingEnsemble:
    """Assemble a locking ensemble from an explicit term table.

    Keys are indexed with the first bit most significant; the prior is
    uniform.  Term orthogonality is verified numerically per key: where
    the two product terms are orthogonal the state must come out with
    eigenvalues (1/2, 1/2) within 1e-10; non-orthogonal term pairs (the
    as_printed key 00) are permitted and recorded.
    """
    basis = basis or default_basis()
    n_bits = len(next(iter(terms)))
    states = []
    orthogonality = {}
    for k in range(2**n_bits):
        bits = tuple((k >> (n_bits - 1 - j)) & 1 for j in range(n_bits))
        first, second = terms[bits]
        matrix = _HALF * (_state_from_term(basis, first) + _state_from_term(basis, second))
        state = DensityOperator(matrix)
        overlap = 1.0
        for a, b in zip(first, second):
            overlap *= basis.overlap2(a, b)
        orthogonality[bits] = overlap == 0.0
        if orthogonality[bits]:
            eigenvalues = np.sort(np.linalg.eigvalsh(state.matrix))[::-1]
            if abs(eigenvalues[0] - 0.5) > 1e-10 or abs(eigenvalues[1] - 0.5) > 1e-10:
                raise ValidationError(
                    f"state {bits}: orthogonal terms but eigenvalues {eigenvalues[:2]}"
                )
        states.append(state)
    ensemble = ens.CQEnsemble(
        n_bits=n_bits, prior=ens.uniform_prior(n_bits), states=tuple(states)
    )
    return LockingEnsemble(
        variant=variant,
        basis=basis,
        terms=dict(terms),
        ensemble=ensemble,
        term_orthogonality=orthogonality,
    )


def build_locking_ensemble(variant: str = "symmetric_corrected") -> LockingEnsemble:
    """The two-bit locking ensemble, in the requested variant."""
    if variant not in TERM_TABLES:
        raise ValidationError(f"unknown variant {variant!r}; pick one of {VARIANTS}")
    return build_term_ensemble(TERM_TABLES[variant], variant)


def build_chained_locking_ensemble(n_bits: int) -> LockingEnsemble:
    """Experimental n-bit generalization of the two-bit construction.

    Bit 1 picks the basis of qubit 1 (its state within the basis is the
    coin of the two-term mixture); each later qubit encodes its bit in
    the basis selected by the previous qubit's state.  For n = 2 this
    reproduces the symmetric_corrected table.
    """
    if n_bits < 2:
        raise ValidationError("chained construction needs at least two bits")
    if 2**n_bits > ops.MAX_DIM:
        raise ValidationError(f"probe dimension 2^{n_bits} exceeds cap {ops.MAX_DIM}")
    terms = {}
    for bits in itertools.product((0, 1), repeat=n_bits):
        pair = []
        for coin in (0, 1):
            first_basis = BASIS_13 if bits[0] == 1 else BASIS_24
            slots = [first_basis[coin]]
            for bit in bits[1:]:
                basis = BASIS_13 if slots[-1] in (1, 2) else BASIS_24
                slots.append(basis[0] if bit == 1 else basis[1])
            pair.append(tuple(slots))
        terms[bits] = tuple(pair)
    return build_term_ensemble(terms, f"chained_{n_bits}")


def build_all_equal_control() -> LockingEnsemble:
    """Control ensemble: every key maps to the same state, so nothing leaks."""
    terms = {bits: ((1, 1), (3, 2)) for bits in itertools.product((0, 1), repeat=2)}
    return build_term_ensemble(terms, "control_all_equal")


# ---------------------------------------------------------------------------
# Ideal-reference comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdealComparison:
    per_key: dict
    mean: float


def ideal_comparison_value(le: LockingEnsemble) -> IdealComparison:
    """Per-key and mean half trace norms against the maximally mixed state."""
    reference = ops.maximally_mixed(le.ensemble.state_dim)
    values = ens.conditional_distances(le.ensemble, reference=reference)
    per_key = {
        le.ensemble.key_label(k): float(v) for k, v in enumerate(values)
    }
    return IdealComparison(per_key=per_key, mean=float(le.ensemble.prior @ values))


# ---------------------------------------------------------------------------
# Known-plaintext attack
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnlockingStrategy:
    """Measurement plan for recovering bit 2 given bit 1 of a 2-bit key.

    Derived mechanically from the term table: qubit 1 is measured in the
    basis covering the first slots of the consistent keys; for each first
    outcome the second-qubit basis is whichever of the two bases decodes
    best in closed form, with maximum-likelihood outcome decoding.
    """

    known_bit_value: int
    first_basis: tuple[int, int]
    second_basis: dict
    decode: dict
    closed_form_success: float

    def describe(self) -> dict:
        return {
            "known_first_bit": self.known_bit_value,
            "first_qubit_basis": list(self.first_basis),
            "second_qubit_basis_by_first_outcome": {
                str(o): list(b) for o, b in sorted(self.second_basis.items())
            },
            "decode_table": {
                f"{o1},{o2}": guess for (o1, o2), guess in sorted(self.decode.items())
            },
            "closed_form_success": self.closed_form_success,
        }


def _joint_outcome_weight(le: LockingEnsemble, key: tuple, f: int, s: int) -> float:
    """Probability of first outcome f then second outcome s for one key."""
    basis = le.basis
    return _HALF * sum(
        basis.overlap2(f, first) * basis.overlap2(s, second)
        for first, second in le.terms[key]
    )


def unlocking_strategy(le: LockingEnsemble, known_k1: int, conjugate: bool = False) -> UnlockingStrategy:
    """Derive the unlock rule for a known first bit.

    With ``conjugate=True`` the second-qubit measurement is flipped to the
    other basis (a control arm: decoding then degrades to coin flipping on
    the deterministic paths).
    """
    if le.n_bits != 2:
        raise ValidationError("table-derived strategy applies to 2-bit ensembles")
    if known_k1 not in (0, 1):
        raise ValidationError(f"known first bit must be 0 or 1, got {known_k1!r}")
    keys = [(known_k1, 0), (known_k1, 1)]
    first_slots = {first for key in keys for first, _ in le.terms[key]}
    first_basis = None
    for candidate in (BASIS_13, BASIS_24):
        if first_slots <= set(candidate):
            first_basis = candidate
            break
    if first_basis is None:
        raise ValidationError(f"first slots {sorted(first_slots)} span both bases")

    second_basis: dict = {}
    decode: dict = {}
    closed_form = 0.0
    for f in first_basis:
        best = None
        for basis in (BASIS_13, BASIS_24):
            contribution = 0.0
            table = {}
            for s in basis:
                weights = {k2: _joint_outcome_weight(le, (known_k1, k2), f, s) for k2 in (0, 1)}
                guess = max(sorted(weights), key=lambda k2: weights[k2])
                table[(f, s)] = guess
                contribution += 0.5 * weights[guess]
            if best is None or contribution > best[0] + 1e-15:
                best = (contribution, basis, table)
        contribution, basis, table = best
        if conjugate:
            basis = BASIS_24 if basis == BASIS_13 else BASIS_13
            contribution = 0.0
            table = {}
            for s in basis:
                weights = {k2: _joint_outcome_weight(le, (known_k1, k2), f, s) for k2 in (0, 1)}
                guess = max(sorted(weights), key=lambda k2: weights[k2])
                table[(f, s)] = guess
                contribution += 0.5 * weights[guess]
        second_basis[f] = basis
        decode.update(table)
        closed_form += contribution
    return UnlockingStrategy(
        known_bit_value=known_k1,
        first_basis=first_basis,
        second_basis=second_basis,
        decode=decode,
        closed_form_success=closed_form,
    )


@dataclass(frozen=True)
class KPAResult:
    success_rate: float
    closed_form_success: float
    trials: int
    seed: int
    strategy: UnlockingStrategy | None
    description: str

    def to_dict(self) -> dict:
        out = {
            "empirical_success": self.success_rate,
            "closed_form_success": self.closed_form_success,
            "trials": self.trials,
            "seed": self.seed,
            "strategy": self.strategy.describe() if self.strategy else self.description,
        }
        return out


def kpa_simulate(
    le: LockingEnsemble,
    known_k1: int,
    trials: int,
    seed: int,
    conjugate: bool = False,
) -> KPAResult:
    """Sample the unlock attack on keys with a known first bit.

    The hidden bits are drawn uniformly each trial, the mixture coin is
    tossed, both qubits are measured per the derived strategy and the
    decode is compared to the truth.  Returns the empirical rate next to
    the closed-form rate.
    """
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    if le.n_bits == 2:
        return _kpa_two_bit(le, known_k1, trials, seed, conjugate)
    if conjugate:
        raise ValidationError("conjugate control arm is available for 2-bit tables only")
    return _kpa_chain(le, known_k1, trials, seed)


def _kpa_two_bit(le, known_k1, trials, seed, conjugate) -> KPAResult:
    strategy = unlocking_strategy(le, known_k1, conjugate=conjugate)
    rng = np.random.default_rng([seed, known_k1])
    k2 = rng.integers(0, 2, size=trials)
    coin = rng.integers(0, 2, size=trials)
    first_true = np.empty(trials, dtype=np.int64)
    second_true = np.empty(trials, dtype=np.int64)
    for value in (0, 1):
        for t in (0, 1):
            mask = (k2 == value) & (coin == t)
            f, s = le.terms[(known_k1, value)][t]
            first_true[mask] = f
            second_true[mask] = s

    a, b = strategy.first_basis
    p_first = np.array([le.basis.overlap2(a, j) for j in (1, 2, 3, 4)])
    o1 = np.where(rng.random(trials) < p_first[first_true - 1], a, b)

    o2 = np.empty(trials, dtype=np.int64)
    for f in strategy.first_basis:
        c, dd = strategy.second_basis[f]
        mask = o1 == f
        p_second = np.array([le.basis.overlap2(c, j) for j in (1, 2, 3, 4)])
        o2[mask] = np.where(rng.random(mask.sum()) < p_second[second_true[mask] - 1], c, dd)

    decoded = np.array([strategy.decode[(f, s)] for f, s in zip(o1, o2)])
    rate = float(np.mean(decoded == k2))
    return KPAResult(
        success_rate=rate,
        closed_form_success=strategy.closed_form_success,
        trials=trials,
        seed=seed,
        strategy=strategy,
        description="table-derived unlock",
    )


def _kpa_chain(le, known_k1, trials, seed) -> KPAResult:
    """Sequential unlock of a chained ensemble, steering each basis by the
    previous outcome."""
    n = le.n_bits
    rng = np.random.default_rng([seed, known_k1])
    hidden = rng.integers(0, 2, size=(trials, n - 1))
    coin = rng.integers(0, 2, size=trials)
    correct = np.zeros(trials, dtype=bool)
    overlap = le.basis.overlap2
    for trial in range(trials):
        bits = (known_k1, *hidden[trial])
        slots = le.terms[bits][coin[trial]]
        basis = BASIS_13 if known_k1 == 1 else BASIS_24
        outcome = None
        decoded = []
        for j, prepared in enumerate(slots):
            if j > 0:
                basis = BASIS_13 if outcome in (1, 2) else BASIS_24
            p = overlap(basis[0], prepared)
            outcome = basis[0] if rng.random() < p else basis[1]
            if j > 0:
                decoded.append(1 if outcome == basis[0] else 0)
        correct[trial] = tuple(decoded) == tuple(hidden[trial])
    closed = _chain_closed_form(le, known_k1)
    return KPAResult(
        success_rate=float(correct.mean()),
        closed_form_success=closed,
        trials=trials,
        seed=seed,
        strategy=None,
        description=f"sequential unlock over {n - 1} hidden bits",
    )


def _chain_closed_form(le, known_k1) -> float:
    """Exact success of the sequential unlock: every step is deterministic
    because each prepared slot lies in the basis being measured."""
    n = le.n_bits
    total = 0.0
    weight = 1.0 / (2 ** (n - 1) * 2)
    for bits in itertools.product((0, 1), repeat=n - 1):
        key = (known_k1, *bits)
        for slots in le.terms[key]:
            basis = BASIS_13 if known_k1 == 1 else BASIS_24
            outcome = None
            decoded = []
            ok = True
            for j, prepared in enumerate(slots):
                if j > 0:
                    basis = BASIS_13 if outcome in (1, 2) else BASIS_24
                p0 = le.basis.overlap2(basis[0], prepared)
                if p0 not in (0.0, 1.0):
                    ok = False
                    break
                outcome = basis[0] if p0 == 1.0 else basis[1]
                if j > 0:
                    decoded.append(1 if outcome == basis[0] else 0)
            if ok and tuple(decoded) == bits:
                total += weight
    return total


# ---------------------------------------------------------------------------
# Full report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LockingReport:
    variant: str
    criteria: ens.CriteriaRecord
    ideal: IdealComparison
    half_plus_ideal: float
    kpa: dict
    average_state_distance_from_mixed: float
    notes: tuple

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "criteria": self.criteria.to_dict(),
            "ideal_reference_per_key": dict(sorted(self.ideal.per_key.items())),
            "ideal_reference_mean": self.ideal.mean,
            "half_plus_ideal": self.half_plus_ideal,
            "kpa": {str(k): v.to_dict() for k, v in sorted(self.kpa.items())},
            "average_state_distance_from_mixed": self.average_state_distance_from_mixed,
            "notes": list(self.notes),
        }


def locking_report(le: LockingEnsemble, trials: int = 100_000, seed: int = 0) -> LockingReport:
    """Assemble every criterion plus the attack outcome for one ensemble.

    The headline composition is one half plus the mean ideal-reference
    distance: the binary distinguishing success against the maximally
    mixed reference, which reaches 1.0 here even though the trace
    criterion itself sits near one half.
    """
    criteria = ens.criteria_record(le.ensemble)
    ideal = ideal_comparison_value(le)
    kpa = {k1: kpa_simulate(le, k1, trials, seed) for k1 in (0, 1)}
    avg = ens.average_state(le.ensemble)
    mixed_distance = ops.trace_distance(avg, ops.maximally_mixed(avg.dim))
    skewed = [str(bits) for bits, ok in sorted(le.term_orthogonality.items()) if not ok]
    if skewed:
        structure = (
            "mixture terms are orthogonal (eigenvalues 1/2, 1/2, 0...) for all "
            f"keys except {', '.join(skewed)}"
        )
    else:
        structure = (
            "every per-key state is an equal mixture of orthogonal product "
            "projectors (eigenvalues 1/2, 1/2, 0...)"
        )
    notes = (
        f"variant: {le.variant}",
        structure,
        "half_plus_ideal is the binary distinguishing success against the "
        "maximally mixed reference",
        distributions.EVENT_GAP_NOTE,
    )
    return LockingReport(
        variant=le.variant,
        criteria=criteria,
        ideal=ideal,
        half_plus_ideal=0.5 + ideal.mean,
        kpa=kpa,
        average_state_distance_from_mixed=mixed_distance,
        notes=notes,
    )
