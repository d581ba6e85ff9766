"""
Controlled direct communication over Charlie's EPR pairs

Scheme A: Alice encodes each bit with sigma0/sigma1 on her qubit, both
parties measure in X and Alice announces her outcome.
Scheme B: both parties measure in Z and Alice announces outcome XOR bit.
In both schemes Bob needs Charlie's reveal of the initial Bell label.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from app.core.exceptions import CapacityExceededError, ConfigViolationError, ReplayError
from app.models.schemas import (
    ClassicalMessage,
    EveRecord,
    PairRecord,
    Scheme,
    SessionConfig,
    SessionReport,
    TestRecord,
    Verdict,
)
from app.services.adversary import apply_attack, eve_infer, eve_measure_ancilla
from app.services.channel_security import parity_bit, run_security_test
from app.services.statevec import (
    ATOL,
    SIGMA_0,
    SIGMA_1,
    Basis,
    BellLabel,
    LocalUnitary,
    QubitRegister,
    apply_local,
    make_bell,
    measure,
    outcome_distribution,
    project,
)

BYPASS_PREFIX = "control bypass"
CAPACITY_PREFIX = "capacity exceeded"

# Bases in which each scheme's information can be read off a shared parity;
# sigma_z flips the X and Y parities only
READABLE_BASES = {
    "A": (Basis.X, Basis.Y),
    "B": (Basis.Z, Basis.X, Basis.Y),
}
SCHEME_BASIS = {"A": Basis.X, "B": Basis.Z}
ANNOUNCE_VARIANT = {"A": "AliceXAnnounce", "B": "AliceDelta"}

PAULI_CODEC: Dict[int, LocalUnitary] = {0: SIGMA_0, 1: SIGMA_1}

# Bob's guess for every bit when Charlie withholds the reveal
FALLBACK_BIT = 0


# ===== Codecs =====

def bell_encode(label: BellLabel) -> str:
    """Phi+ -> 00, Phi- -> 01, Psi+ -> 10, Psi- -> 11

    Args:
        label: Bell label

    Returns:
        Two-character code, letter bit first
    """
    return BellLabel(label).code


def bell_decode(code: str) -> BellLabel:
    """Inverse of bell_encode.

    Args:
        code: "00", "01", "10" or "11"

    Returns:
        The Bell label with that code

    Raises:
        ValueError: any other string
    """
    return BellLabel.from_code(code)


def pauli_for_bit(bit: int) -> LocalUnitary:
    """0 -> sigma0, 1 -> sigma1"""
    return PAULI_CODEC[bit]


def bit_for_pauli(u: LocalUnitary) -> int:
    """Inverse of pauli_for_bit, matched on the matrix rather than the name"""
    for bit, op in PAULI_CODEC.items():
        if np.allclose(op.matrix, u.matrix, rtol=0.0, atol=ATOL):
            return bit
    raise ValueError(f"{u.name} is not an encoding operation")


# ===== Configuration checks =====

def control_bypass_bases(scheme: Scheme, pool: Sequence[BellLabel]) -> List[Basis]:
    """Bases in which every pool label shares one parity, so Bob can decode without Charlie"""
    return [
        basis for basis in READABLE_BASES[scheme]
        if len({parity_bit(label, basis) for label in pool}) == 1
    ]


def validate_config(config: SessionConfig) -> List[str]:
    """Constraint violations of a session configuration; empty means ok"""
    violations = []
    pool = config.label_pool
    if len(pool) == 1:
        violations.append(f"{BYPASS_PREFIX}: single Bell state")
    else:
        for basis in control_bypass_bases(config.scheme, pool):
            violations.append(f"{BYPASS_PREFIX}: {basis.value}-basis correlated pool")

    needed, available = len(config.secret_message), config.message_capacity
    if needed > available:
        violations.append(
            f"{CAPACITY_PREFIX}: message needs {needed} pairs, "
            f"{available} of {config.n_pairs} remain after testing"
        )
    return violations


# ===== Scheme A =====

def scheme_a_encode(pair_state: QubitRegister, secret_bit: int) -> QubitRegister:
    """Alice's local encoding on qubit 0.

    Args:
        pair_state: two-qubit pair as received
        secret_bit: 0 leaves the pair alone, 1 applies sigma_z (Phi+ <-> Phi-, Psi+ <-> Psi-)

    Returns:
        Encoded pair
    """
    return apply_local(pair_state, 0, pauli_for_bit(secret_bit))


def scheme_a_alice_measure(pair_state: QubitRegister, sample: float) -> Tuple[int, QubitRegister]:
    """Alice's X measurement of the encoded pair.

    Args:
        pair_state: encoded pair
        sample: uniform draw deciding the outcome

    Returns:
        (Alice's X outcome, pair collapsed onto it)
    """
    return measure(pair_state, 0, Basis.X, sample)


def scheme_a_bob_decode(initial: BellLabel, alice_x: int, bob_x: int) -> int:
    """X parity of the final state XOR sign of the initial one.

    Args:
        initial: label Charlie reveals
        alice_x: Alice's announced X outcome
        bob_x: Bob's own X outcome

    Returns:
        Recovered message bit
    """
    return alice_x ^ bob_x ^ BellLabel(initial).sign_bit


# ===== Scheme B =====

def scheme_b_alice(pair_state: QubitRegister, secret_bit: int, sample: float) -> Tuple[int, QubitRegister]:
    """Z measurement; the announced delta is outcome XOR bit.

    Args:
        pair_state: pair as received
        secret_bit: message bit
        sample: uniform draw deciding Alice's outcome

    Returns:
        (delta Alice announces, pair collapsed onto her outcome)
    """
    outcome, post = measure(pair_state, 0, Basis.Z, sample)
    return outcome ^ secret_bit, post


def scheme_b_bob_decode(initial: BellLabel, bob_z: int, delta: int) -> int:
    """Bob infers Alice's Z outcome from the revealed letter and removes delta.

    Args:
        initial: label Charlie reveals
        bob_z: Bob's Z outcome
        delta: Alice's announcement

    Returns:
        Recovered message bit
    """
    alice_z = bob_z ^ BellLabel(initial).letter_bit
    return alice_z ^ delta


# ===== Sessions =====

@dataclass(frozen=True)
class ReplayScript:
    """Predetermined labels and Bob outcomes (message pairs, in order)"""
    labels: Sequence[BellLabel]
    bob_outcomes: Optional[Sequence[int]] = None


def _consistent_alice_outcome(state: QubitRegister, basis: Basis, bob_bit: int) -> int:
    dist = outcome_distribution(state, [(0, basis), (1, basis)])
    weights = {alice: dist[f"{alice}{bob_bit}"] for alice in (0, 1)}
    alice = max(weights, key=weights.get)
    if weights[alice] <= ATOL:
        raise ReplayError(f"Bob outcome {bob_bit} in {basis.value} is impossible for this pair")
    return alice


class SessionRunner:
    """Executes one session: distribution, channel test, transport, reveal"""

    def __init__(self, config: SessionConfig, script: Optional[ReplayScript] = None):
        self.config = config
        self.script = script
        self.rng = np.random.default_rng(config.seed)
        self.records: List[PairRecord] = []
        self.states: List[QubitRegister] = []
        self.eve_view: List[EveRecord] = []
        self.transcript: List[ClassicalMessage] = []

    def _send(self, record: PairRecord, variant: str, payload: str = ""):
        message = ClassicalMessage(pair_id=record.pair_id, variant=variant, payload=payload)
        record.messages.append(message)
        self.transcript.append(message)

    def _check(self):
        violations = validate_config(self.config)
        capacity = [v for v in violations if v.startswith(CAPACITY_PREFIX)]
        bypass = [v for v in violations if v.startswith(BYPASS_PREFIX)]
        if capacity:
            raise CapacityExceededError(capacity[0])
        if bypass and not self.config.allow_bypass:
            raise ConfigViolationError(bypass)
        if bypass:
            logger.warning(f"Running despite control bypass: {'; '.join(bypass)}")

    def _draw_labels(self) -> List[BellLabel]:
        n = self.config.n_pairs
        if self.script is not None:
            if len(self.script.labels) != n:
                raise ReplayError(f"script holds {len(self.script.labels)} labels for {n} pairs")
            return [BellLabel(label) for label in self.script.labels]
        pool = self.config.label_pool
        return [pool[i] for i in self.rng.integers(len(pool), size=n)]

    def _distribute(self):
        n_test = self.config.n_test_pairs
        for pair_id, label in enumerate(self._draw_labels()):
            role = "security_test" if pair_id < n_test else "message"
            state, eve_record = apply_attack(self.config.attack, label, self.rng, pair_id=pair_id, role=role)
            self.records.append(PairRecord(
                pair_id=pair_id,
                initial_label=label,
                role_in_session=role,
                attack_applied=None if eve_record is None else self.config.attack.tag,
            ))
            self.states.append(state)
            if eve_record is not None:
                self.eve_view.append(eve_record)

    def _test_channel(self) -> Tuple[Verdict, List[TestRecord]]:
        n_test = self.config.n_test_pairs
        pairs = list(zip(self.records[:n_test], self.states[:n_test]))
        verdict, test_records = run_security_test(pairs, self.rng)
        for record in self.records[:n_test]:
            self._send(record, "CharlieReveal", bell_encode(record.initial_label))
        return verdict, test_records

    def _measure_alice(self, state: QubitRegister, bit: int, forced_bob: Optional[int]) -> Tuple[int, QubitRegister]:
        scheme = self.config.scheme
        if forced_bob is not None:
            outcome = _consistent_alice_outcome(state, SCHEME_BASIS[scheme], forced_bob)
            return outcome, project(state, 0, SCHEME_BASIS[scheme], outcome)[1]
        if scheme == "A":
            return scheme_a_alice_measure(state, self.rng.random())
        delta, state = scheme_b_alice(state, bit, self.rng.random())
        return delta ^ bit, state

    def _measure_bob(self, state: QubitRegister, basis: Basis, forced_bob: Optional[int]) -> int:
        if forced_bob is None:
            return measure(state, 1, basis, self.rng.random())[0]
        if project(state, 1, basis, forced_bob)[1] is None:
            raise ReplayError(f"Bob outcome {forced_bob} is impossible after Alice's measurement")
        return forced_bob

    def _transport(self, message_records: List[PairRecord]):
        scheme = self.config.scheme
        basis = SCHEME_BASIS[scheme]
        eve_by_pair = {record.pair_id: record for record in self.eve_view}
        forced = self.script.bob_outcomes if self.script is not None else None

        for index, record in enumerate(message_records):
            bit = record.secret_bit
            state = self.states[record.pair_id]
            forced_bob = forced[index] if forced is not None else None

            if scheme == "A":
                state = scheme_a_encode(state, bit)
            alice, state = self._measure_alice(state, bit, forced_bob)
            announced = alice if scheme == "A" else alice ^ bit
            record.alice_outcome = alice
            self._send(record, ANNOUNCE_VARIANT[scheme], str(announced))

            eve_record = eve_by_pair.get(record.pair_id)
            if state.n_qubits == 3 and eve_record is not None:
                eve_record.ancilla_outcome, state = eve_measure_ancilla(self.config.attack, state, self.rng)

            record.bob_outcome = self._measure_bob(state, basis, forced_bob)
            self._send(record, "BobMeasured")

    def _reveal(self, message_records: List[PairRecord]):
        scheme = self.config.scheme
        for record in message_records:
            if not self.config.charlie_cooperates:
                record.undetermined = True
                continue
            self._send(record, "CharlieReveal", bell_encode(record.initial_label))
            announced = int(record.messages[0].payload)
            if scheme == "A":
                record.decoded_bit = scheme_a_bob_decode(record.initial_label, announced, record.bob_outcome)
            else:
                record.decoded_bit = scheme_b_bob_decode(record.initial_label, record.bob_outcome, announced)

    def run(self) -> SessionReport:
        config = self.config
        self._check()
        logger.info(
            f"Session seed={config.seed} scheme={config.scheme}: {config.n_pairs} pairs, "
            f"{config.n_test_pairs} tested, attack {config.attack.tag}"
        )

        self._distribute()
        verdict, test_records = self._test_channel()

        message_records: List[PairRecord] = []
        aborted = verdict.outcome == "tampered"
        if aborted:
            logger.warning(f"Session seed={config.seed} aborted: {verdict.mismatches} test mismatches")
        else:
            message_records = self.records[config.n_test_pairs:config.n_test_pairs + len(config.secret_message)]
            for record, bit in zip(message_records, config.secret_message):
                record.secret_bit = int(bit)
            self._transport(message_records)
            self._reveal(message_records)

        recovered = None
        if aborted:
            accuracy = 0.0
        elif config.charlie_cooperates:
            recovered = "".join(str(record.decoded_bit) for record in message_records)
            accuracy = _accuracy([r.decoded_bit for r in message_records], message_records)
        else:
            accuracy = _accuracy([FALLBACK_BIT] * len(message_records), message_records)

        secret_bits = {record.pair_id: record.secret_bit for record in message_records}
        eve = eve_infer(
            config.attack, config.scheme, self.eve_view, self.transcript, config.label_pool, secret_bits
        )

        logger.info(
            f"Session seed={config.seed}: verdict {verdict.outcome}, "
            f"{len(message_records)} bits sent, accuracy {accuracy:.4f}"
        )
        return SessionReport(
            config=config,
            pairs=self.records,
            test_records=test_records,
            verdict=verdict,
            aborted=aborted,
            recovered_message=recovered,
            recovery_accuracy=accuracy,
            detection_flag=aborted,
            transcript=[message.canonical() for message in self.transcript],
            eve=eve,
        )


def _accuracy(guesses: List[Optional[int]], records: List[PairRecord]) -> float:
    """Fraction of message pairs whose guess matches the secret bit"""
    # an empty message is recovered vacuously
    if not records:
        return 1.0
    return float(np.mean([guess == record.secret_bit for guess, record in zip(guesses, records)]))


def run_session(config: SessionConfig, script: Optional[ReplayScript] = None) -> SessionReport:
    """Run one complete session end to end.

    Args:
        config: session configuration; refused configurations raise before any draw
        script: fixed labels and Bob outcomes for replaying a worked example

    Returns:
        Session report with the transcript, test records, recovered message and Eve's result

    Raises:
        CapacityExceededError: the message does not fit after the test pairs
        ConfigViolationError: the pool allows a control bypass
        ReplayError: the script does not fit the configuration
    """
    return SessionRunner(config, script).run()


# ===== Control bypass =====

def bypass_agreement(pool: Sequence[BellLabel], basis: Basis = Basis.Y) -> Dict[BellLabel, float]:
    """Exact probability that Alice and Bob agree in `basis`, per pool label"""
    agreement = {}
    for label in pool:
        dist = outcome_distribution(make_bell(label), [(0, basis), (1, basis)])
        agreement[BellLabel(label)] = dist["00"] + dist["11"]
    return agreement


def run_bypass_session(
    pool: Sequence[BellLabel],
    message: str,
    seed: int,
    basis: Basis = Basis.Y
) -> Tuple[str, float]:
    """
    Alice and Bob run the announcement scheme in `basis` without Charlie

    Returns:
        (message Bob decodes with no reveal, its accuracy)
    """
    parities = {parity_bit(label, basis) for label in pool}
    if len(parities) != 1:
        raise ValueError(f"pool is not correlated in the {Basis(basis).value} basis")
    parity = parities.pop()

    rng = np.random.default_rng(seed)
    pool = list(pool)
    decoded = []
    for bit in message:
        state = make_bell(pool[int(rng.integers(len(pool)))])
        alice, state = measure(state, 0, basis, rng.random())
        delta = alice ^ int(bit)
        bob, _ = measure(state, 1, basis, rng.random())
        decoded.append(str(bob ^ parity ^ delta))

    recovered = "".join(decoded)
    accuracy = float(np.mean([a == b for a, b in zip(recovered, message)])) if message else 1.0
    logger.info(f"Bypass in {Basis(basis).value}: {len(message)} bits, accuracy {accuracy:.4f}")
    return recovered, accuracy
