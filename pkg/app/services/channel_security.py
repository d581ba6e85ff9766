"""
Channel verification on a sacrificed subset of pairs

Alice and Bob measure each test pair in the same randomly chosen basis
(Z or X), Charlie then reveals the label and the observed parity is
compared against the Bell correlation table. One mismatch means tampering.
"""
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np
from loguru import logger
from tqdm import tqdm

from app.models.schemas import AttackModel, NoAttack, PairRecord, TestRecord, Verdict
from app.services.adversary import apply_attack, attack_branches
from app.services.statevec import (
    Basis,
    BellLabel,
    QubitRegister,
    measure,
    outcome_distribution,
)

TEST_BASES = (Basis.Z, Basis.X)


class Parity(str, Enum):
    SAME = "same"
    ANTI = "anti"


@dataclass(frozen=True)
class CorrelationExpectation:
    label: BellLabel
    basis: Basis
    parity: Parity


def parity_bit(label: BellLabel, basis: Basis) -> int:
    """0 if the two outcomes always agree, 1 if they always differ"""
    label, basis = BellLabel(label), Basis(basis)
    if basis is Basis.Z:
        return label.letter_bit
    if basis is Basis.X:
        return label.sign_bit
    # Y: Phi+ and Psi- anti-correlate, Phi- and Psi+ correlate
    return 1 ^ label.letter_bit ^ label.sign_bit


def expected_parity(label: BellLabel, basis: Basis) -> Parity:
    """Whether Alice and Bob agree when both measure `label` in `basis`.

    Args:
        label: Bell label Charlie prepared
        basis: common measurement basis

    Returns:
        Parity.SAME or Parity.ANTI
    """
    return Parity.ANTI if parity_bit(label, basis) else Parity.SAME


def correlation_table() -> List[CorrelationExpectation]:
    """All twelve label and basis combinations"""
    return [
        CorrelationExpectation(label, basis, expected_parity(label, basis))
        for label in BellLabel
        for basis in Basis
    ]


def mismatch_probability(state: QubitRegister, label: BellLabel, basis: Basis) -> float:
    """Exact probability that a test of `state` in `basis` contradicts `label`"""
    expected = parity_bit(label, basis)
    dist = outcome_distribution(state, [(0, basis), (1, basis)])
    return dist.probability(lambda outcome: int(outcome[0]) ^ int(outcome[1]) != expected)


def check_pair(record: PairRecord, state: QubitRegister, rng: np.random.Generator) -> TestRecord:
    """Measure one test pair on both sides and compare after the reveal"""
    basis = TEST_BASES[int(rng.integers(len(TEST_BASES)))]
    alice_bit, state = measure(state, 0, basis, rng.random())
    bob_bit, _ = measure(state, 1, basis, rng.random())
    record.alice_outcome = alice_bit
    record.bob_outcome = bob_bit
    passed = (alice_bit ^ bob_bit) == parity_bit(record.initial_label, basis)
    return TestRecord(
        pair_id=record.pair_id,
        label=record.initial_label,
        basis=basis,
        alice_bit=alice_bit,
        bob_bit=bob_bit,
        passed=passed,
    )


def run_security_test(
    test_pairs: Sequence[Tuple[PairRecord, QubitRegister]],
    rng: np.random.Generator
) -> Tuple[Verdict, List[TestRecord]]:
    """Test every supplied pair; Eve's ancilla, if any, stays unmeasured"""
    records = [check_pair(record, state, rng) for record, state in test_pairs]
    mismatches = sum(not record.passed for record in records)
    verdict = Verdict(
        tested=len(records),
        mismatches=mismatches,
        outcome="tampered" if mismatches else "pass",
    )
    if mismatches:
        logger.debug(f"Channel test failed: {mismatches}/{len(records)} mismatches")
    return verdict, records


def detection_probability_exact(attack: AttackModel, label: BellLabel) -> float:
    """Chance that one attacked test pair fails, averaged over the Z/X choice"""
    if isinstance(attack, NoAttack):
        return 0.0
    total = 0.0
    for prob, _, state in attack_branches(attack, label):
        per_basis = [mismatch_probability(state, label, basis) for basis in TEST_BASES]
        total += prob * float(np.mean(per_basis))
    return total


def pool_detection_probability(attack: AttackModel, pool: Sequence[BellLabel]) -> float:
    """Per-pair detection probability with labels drawn uniformly from `pool`"""
    return float(np.mean([detection_probability_exact(attack, label) for label in pool]))


def all_pass_probability(p: float, n: int) -> float:
    """Probability that n independent test pairs all pass"""
    return (1.0 - p) ** n


def monte_carlo_detection(
    attack: AttackModel,
    n_test_pairs: int,
    sessions: int,
    rng: np.random.Generator,
    pool: Sequence[BellLabel] = tuple(BellLabel),
    progress: bool = False,
) -> Tuple[int, int]:
    """
    Sample attacked channel tests end to end

    Returns:
        (sessions with at least one mismatch, total mismatched pairs)
    """
    pool = list(pool)
    detected = mismatched = 0
    for _ in tqdm(range(sessions), desc=f"{attack.tag} n={n_test_pairs}", disable=not progress):
        pairs = []
        for pair_id in range(n_test_pairs):
            label = pool[int(rng.integers(len(pool)))]
            state, _ = apply_attack(attack, label, rng, pair_id=pair_id, role="security_test")
            pairs.append((PairRecord(pair_id=pair_id, initial_label=label, role_in_session="security_test"), state))
        verdict, _ = run_security_test(pairs, rng)
        detected += verdict.mismatches > 0
        mismatched += verdict.mismatches
    return detected, mismatched
