"""
Eavesdropping strategies applied while Charlie distributes the pairs

Every attack is described by its measurement branches (probability, Eve's
outcome, forwarded state); exact analysis enumerates them and sampling
draws one. Eve's inference is maximum likelihood over the public transcript
using the exact outcome oracle.
"""
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from app.core.exceptions import AttackTagError, UnmappedLabelError
from app.models.schemas import (
    AncillaEntangle,
    AttackModel,
    ClassicalMessage,
    EveRecord,
    EveReport,
    GhzCoupling,
    InterceptResend,
    NoAttack,
    Role,
    Scheme,
)
from app.services.statevec import (
    ATOL,
    SIGMA_1,
    Basis,
    BellLabel,
    QubitRegister,
    append_qubit,
    apply_local,
    apply_permutation,
    make_bell,
    make_ghz,
    measure,
    outcome_distribution,
    project,
)

SIDE_QUBIT = {"alice": 0, "bob": 1}
EVE_QUBIT = 2


def _cnot_onto_ancilla(control: int) -> Dict[int, int]:
    """Basis permutation of CNOT(control -> qubit 2) on three qubits"""
    mapping = {}
    for index in range(8):
        control_bit = (index >> (2 - control)) & 1
        mapping[index] = index ^ 1 if control_bit else index
    return mapping


_CNOT = {side: _cnot_onto_ancilla(qubit) for side, qubit in SIDE_QUBIT.items()}


def _coupled_state(attack: AttackModel, label: BellLabel) -> QubitRegister:
    """Three-qubit state after a GHZ or CNOT coupling"""
    if isinstance(attack, GhzCoupling):
        try:
            return make_ghz(attack.mapping[label])
        except KeyError:
            raise UnmappedLabelError(f"ghz-coupling map has no entry for {label.value}") from None
    return apply_permutation(append_qubit(make_bell(label)), _CNOT[attack.target])


def attack_branches(attack: AttackModel, label: BellLabel) -> List[Tuple[float, Optional[int], QubitRegister]]:
    """
    Enumerate the states Eve can leave behind for one pair

    Returns:
        List of (probability, Eve's intercept outcome or None, forwarded state)
    """
    label = BellLabel(label)
    if isinstance(attack, NoAttack):
        return [(1.0, None, make_bell(label))]
    if isinstance(attack, InterceptResend):
        bell = make_bell(label)
        branches = []
        for outcome in (0, 1):
            prob, post = project(bell, SIDE_QUBIT[attack.target], attack.basis, outcome)
            if post is not None:
                branches.append((prob, outcome, post))
        return branches
    return [(1.0, None, _coupled_state(attack, label))]


def apply_attack(
    attack: AttackModel,
    label: BellLabel,
    rng: np.random.Generator,
    pair_id: int = 0,
    role: Role = "message",
) -> Tuple[QubitRegister, Optional[EveRecord]]:
    """Distribute one pair through Eve; honest distribution draws nothing from rng.

    Args:
        attack: Eve's strategy
        label: Bell label Charlie prepared
        rng: session stream; intercept-resend draws one sample
        pair_id: pair index recorded in Eve's view
        role: "security_test" or "message"

    Returns:
        (state Alice and Bob receive, Eve's record or None without an attack)

    Raises:
        UnmappedLabelError: a GHZ map has no entry for the label
    """
    label = BellLabel(label)
    if isinstance(attack, NoAttack):
        return make_bell(label), None
    if isinstance(attack, InterceptResend):
        outcome, forwarded = measure(make_bell(label), SIDE_QUBIT[attack.target], attack.basis, rng.random())
        return forwarded, EveRecord(pair_id=pair_id, role_in_session=role, intercept_outcome=outcome)
    return _coupled_state(attack, label), EveRecord(pair_id=pair_id, role_in_session=role)


def eve_measure_ancilla(
    attack: AttackModel,
    state: QubitRegister,
    rng: np.random.Generator
) -> Tuple[int, QubitRegister]:
    """Eve reads her ancilla; called after Alice's measurement"""
    return measure(state, EVE_QUBIT, attack.eve_basis, rng.random())


def _conditional_state(attack: AttackModel, label: BellLabel, record: Optional[EveRecord]) -> Optional[QubitRegister]:
    """State of the pair as Eve knows it, given her intercept record"""
    if isinstance(attack, InterceptResend):
        if record is None or record.intercept_outcome is None:
            return make_bell(label)
        _, post = project(make_bell(label), SIDE_QUBIT[attack.target], attack.basis, record.intercept_outcome)
        return post
    if isinstance(attack, (GhzCoupling, AncillaEntangle)):
        try:
            return _coupled_state(attack, label)
        except UnmappedLabelError:
            return None
    return make_bell(label)


def _likelihood(
    attack: AttackModel,
    scheme: Scheme,
    state: Optional[QubitRegister],
    record: Optional[EveRecord],
    public_bit: int,
    bit: int,
) -> float:
    """P(public announcement, Eve's ancilla reading | message bit)"""
    if state is None:
        return 0.0
    if scheme == "A":
        encoded = apply_local(state, 0, SIGMA_1) if bit else state
        measured, key = [(0, Basis.X)], str(public_bit)
    else:
        encoded = state
        measured, key = [(0, Basis.Z)], str(public_bit ^ bit)
    if state.n_qubits == 3 and record is not None and record.ancilla_outcome is not None:
        measured.append((EVE_QUBIT, attack.eve_basis))
        key += str(record.ancilla_outcome)
    return outcome_distribution(encoded, measured)[key]


def eve_infer(
    attack: AttackModel,
    scheme: Scheme,
    eve_view: Sequence[EveRecord],
    public_messages: Sequence[ClassicalMessage],
    label_pool: Sequence[BellLabel],
    secret_bits: Optional[Dict[int, int]] = None,
) -> EveReport:
    """
    Eve's best guess for every message pair she can see announced

    Args:
        attack: Strategy Eve used during distribution
        scheme: "A" (public X outcome) or "B" (public delta)
        eve_view: Eve's per-pair records (empty without an attack)
        public_messages: Whole public transcript
        label_pool: Charlie's pool, used when no reveal was published
        secret_bits: pair_id -> true bit, to score the guesses

    Returns:
        EveReport with guesses filled into the records
    """
    announce_variant = "AliceXAnnounce" if scheme == "A" else "AliceDelta"
    announcements: Dict[int, int] = {}
    reveals: Dict[int, BellLabel] = {}
    for message in public_messages:
        if message.variant == announce_variant:
            announcements[message.pair_id] = int(message.payload)
        elif message.variant == "CharlieReveal":
            reveals[message.pair_id] = BellLabel.from_code(message.payload)

    records = {record.pair_id: record.model_copy() for record in eve_view}
    cache: Dict[tuple, float] = {}
    guesses: Dict[int, int] = {}

    for pair_id in sorted(announcements):
        record = records.get(pair_id)
        public_bit = announcements[pair_id]
        labels = [reveals[pair_id]] if pair_id in reveals else list(label_pool)
        likelihoods = []
        for bit in (0, 1):
            total = 0.0
            for label in labels:
                key = (
                    label,
                    record.intercept_outcome if record else None,
                    record.ancilla_outcome if record else None,
                    public_bit,
                    bit,
                )
                if key not in cache:
                    state = _conditional_state(attack, label, record)
                    cache[key] = _likelihood(attack, scheme, state, record, public_bit, bit)
                total += cache[key]
            likelihoods.append(total / len(labels))
        guess = 1 if likelihoods[1] > likelihoods[0] + ATOL else 0
        guesses[pair_id] = guess
        if record is not None:
            record.guessed_bit = guess

    accuracy = None
    if secret_bits:
        scored = [guesses.get(pair_id, 0) == bit for pair_id, bit in secret_bits.items()]
        accuracy = float(np.mean(scored))

    guessed_message = "".join(str(guesses[pair_id]) for pair_id in sorted(guesses))
    logger.debug(f"Eve guessed {len(guesses)} bits under {attack.tag}, accuracy {accuracy}")
    return EveReport(
        attack=attack.tag,
        records=[records[pair_id] for pair_id in sorted(records)],
        guessed_message=guessed_message,
        accuracy=accuracy,
    )


def parse_attack_tag(tag: str) -> AttackModel:
    """
    Build an attack from its command-line tag

    Tags: none, intercept-resend[:BASIS[:TARGET]], ghz-coupling[:EVE_BASIS],
    ancilla-entangle[:TARGET[:EVE_BASIS]]
    """
    kind, *options = tag.strip().split(":")
    try:
        if kind == "none" and not options:
            return NoAttack()
        if kind == "intercept-resend" and len(options) <= 2:
            basis = Basis(options[0].upper()) if options else Basis.Z
            target = options[1].lower() if len(options) > 1 else "bob"
            return InterceptResend(basis=basis, target=target)
        if kind == "ghz-coupling" and len(options) <= 1:
            return GhzCoupling(eve_basis=Basis(options[0].upper()) if options else Basis.Z)
        if kind == "ancilla-entangle" and len(options) <= 2:
            target = options[0].lower() if options else "bob"
            eve_basis = Basis(options[1].upper()) if len(options) > 1 else Basis.Z
            return AncillaEntangle(target=target, eve_basis=eve_basis)
    except ValueError as e:
        raise AttackTagError(f"invalid attack tag {tag!r}: {e}") from None
    raise AttackTagError(f"unknown attack tag {tag!r}")
