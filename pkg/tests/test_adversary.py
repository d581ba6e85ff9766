"""
Tests for the attack models and Eve's inference
"""
import numpy as np
import pytest
from pydantic import ValidationError

from app.core.exceptions import AttackTagError, QscdcError, UnmappedLabelError
from app.models.schemas import (
    AncillaEntangle,
    ClassicalMessage,
    EveRecord,
    GhzCoupling,
    InterceptResend,
    NoAttack,
    SessionConfig,
)
from app.services.adversary import (
    apply_attack,
    attack_branches,
    eve_infer,
    eve_measure_ancilla,
    parse_attack_tag,
)
from app.services.statevec import (
    Basis,
    BellLabel,
    GhzLabel,
    make_bell,
    make_ghz,
    outcome_distribution,
    same_state,
)


class TestAttackModels:
    """Configuration of the attacks"""

    def test_default_ghz_map(self):
        mapping = GhzCoupling().mapping
        assert mapping[BellLabel.PHI_PLUS] is GhzLabel.P_PLUS
        assert mapping[BellLabel.PSI_MINUS] is GhzLabel.R_MINUS

    def test_ghz_map_must_be_z_stealthy(self):
        """R states anti-correlate Alice and Bob in Z, so they cannot stand in for Phi"""
        with pytest.raises(ValidationError):
            GhzCoupling(mapping={BellLabel.PHI_PLUS: GhzLabel.R_PLUS})

    def test_alternative_stealthy_map(self):
        attack = GhzCoupling(mapping={"Phi+": "Q+", "Psi+": "S-"})
        assert attack.mapping[BellLabel.PSI_PLUS] is GhzLabel.S_MINUS

    def test_discriminated_union(self):
        config = SessionConfig.model_validate({"attack": {"kind": "intercept-resend", "basis": "Y"}})
        assert isinstance(config.attack, InterceptResend)
        assert config.attack.basis is Basis.Y
        assert config.attack.target == "bob"

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            SessionConfig.model_validate({"attack": {"kind": "photon-splitting"}})

    @pytest.mark.parametrize("tag,expected", [
        ("none", NoAttack()),
        ("intercept-resend", InterceptResend()),
        ("intercept-resend:y", InterceptResend(basis=Basis.Y)),
        ("intercept-resend:X:alice", InterceptResend(basis=Basis.X, target="alice")),
        ("ghz-coupling", GhzCoupling()),
        ("ancilla-entangle:alice", AncillaEntangle(target="alice")),
        ("ancilla-entangle:bob:X", AncillaEntangle(eve_basis=Basis.X)),
    ])
    def test_parse_attack_tag(self, tag, expected):
        assert parse_attack_tag(tag) == expected

    @pytest.mark.parametrize("tag", ["", "none:Z", "intercept-resend:W", "intercept-resend:Z:charlie", "teleport"])
    def test_parse_attack_tag_rejects(self, tag):
        with pytest.raises(AttackTagError):
            parse_attack_tag(tag)

    def test_attack_tag_error_kinds(self):
        """Bad tags are simulator errors, and still ValueErrors for older callers"""
        assert issubclass(AttackTagError, QscdcError)
        assert issubclass(AttackTagError, ValueError)


class TestApplyAttack:
    """States Eve forwards"""

    def test_no_attack_draws_nothing(self):
        rng = np.random.default_rng(3)
        before = rng.bit_generator.state
        state, record = apply_attack(NoAttack(), BellLabel.PSI_MINUS, rng)
        assert record is None
        assert same_state(state, make_bell(BellLabel.PSI_MINUS))
        assert rng.bit_generator.state == before

    def test_intercept_branches(self):
        branches = attack_branches(InterceptResend(), BellLabel.PHI_PLUS)
        assert [outcome for _, outcome, _ in branches] == [0, 1]
        assert sum(prob for prob, _, _ in branches) == pytest.approx(1.0)
        assert all(prob == pytest.approx(0.5) for prob, _, _ in branches)

    def test_intercept_record(self):
        state, record = apply_attack(InterceptResend(), BellLabel.PSI_PLUS, np.random.default_rng(5), pair_id=4)
        assert record.pair_id == 4
        assert record.intercept_outcome in (0, 1)
        # forwarded pair is a product state consistent with Eve's reading
        bob = record.intercept_outcome
        assert state.probabilities()[(1 - bob) * 2 + bob] == pytest.approx(1.0)

    @pytest.mark.parametrize("target,label,ghz", [
        ("bob", BellLabel.PHI_PLUS, GhzLabel.P_PLUS),
        ("bob", BellLabel.PSI_PLUS, GhzLabel.S_PLUS),
        ("alice", BellLabel.PSI_PLUS, GhzLabel.R_PLUS),
        ("alice", BellLabel.PHI_MINUS, GhzLabel.P_MINUS),
    ])
    def test_ancilla_entangle_produces_ghz(self, target, label, ghz):
        state, record = apply_attack(AncillaEntangle(target=target), label, np.random.default_rng(0))
        assert same_state(state, make_ghz(ghz))
        assert record.intercept_outcome is None

    def test_ghz_coupling(self):
        state, _ = apply_attack(GhzCoupling(), BellLabel.PSI_MINUS, np.random.default_rng(0))
        assert same_state(state, make_ghz(GhzLabel.R_MINUS))

    def test_unmapped_label(self):
        attack = GhzCoupling(mapping={BellLabel.PHI_PLUS: GhzLabel.P_PLUS})
        with pytest.raises(UnmappedLabelError):
            apply_attack(attack, BellLabel.PSI_PLUS, np.random.default_rng(0))

    def test_ancilla_reading_matches_alice(self):
        """On P+ Eve's Z reading equals Alice's"""
        state = make_ghz(GhzLabel.P_PLUS)
        rng = np.random.default_rng(9)
        for _ in range(10):
            eve, post = eve_measure_ancilla(GhzCoupling(), state, rng)
            assert post.probabilities()[int(f"{eve}{eve}{eve}", 2)] == pytest.approx(1.0)


class TestEveInference:
    """Maximum-likelihood guesses from the public transcript"""

    def test_ghz_reads_scheme_b(self):
        """Eve's ancilla equals Alice's Z outcome, so the delta gives the bit away"""
        records = [
            EveRecord(pair_id=0, role_in_session="message", ancilla_outcome=1),
            EveRecord(pair_id=1, role_in_session="message", ancilla_outcome=0),
        ]
        messages = [
            ClassicalMessage(pair_id=0, variant="AliceDelta", payload="0"),
            ClassicalMessage(pair_id=1, variant="AliceDelta", payload="0"),
            ClassicalMessage(pair_id=0, variant="CharlieReveal", payload="00"),
            ClassicalMessage(pair_id=1, variant="CharlieReveal", payload="10"),
        ]
        report = eve_infer(GhzCoupling(), "B", records, messages, list(BellLabel), secret_bits={0: 1, 1: 0})
        assert report.guessed_message == "10"
        assert report.accuracy == 1.0
        assert [record.guessed_bit for record in report.records] == [1, 0]
        # inputs are not modified
        assert records[0].guessed_bit is None

    def test_without_reveal_averages_pool(self):
        """Eve still reads scheme B without Charlie: her ancilla is Alice's outcome for every label"""
        records = [EveRecord(pair_id=0, role_in_session="message", ancilla_outcome=0)]
        messages = [ClassicalMessage(pair_id=0, variant="AliceDelta", payload="1")]
        report = eve_infer(GhzCoupling(), "B", records, messages, list(BellLabel))
        assert report.guessed_message == "1"
        assert report.accuracy is None

    def test_no_attack_ties_guess_zero(self):
        messages = [
            ClassicalMessage(pair_id=5, variant="AliceXAnnounce", payload="1"),
            ClassicalMessage(pair_id=5, variant="CharlieReveal", payload="01"),
        ]
        report = eve_infer(NoAttack(), "A", [], messages, list(BellLabel), secret_bits={5: 1})
        assert report.guessed_message == "0"
        assert report.accuracy == 0.0

    def test_intercept_x_reads_scheme_a(self):
        """Bob's X outcome plus the reveal and Alice's announcement fix the bit"""
        # Phi+ , Eve saw Bob's X = 0; Alice announces 1 so the parity flipped: bit 1
        records = [EveRecord(pair_id=0, role_in_session="message", intercept_outcome=0)]
        messages = [
            ClassicalMessage(pair_id=0, variant="AliceXAnnounce", payload="1"),
            ClassicalMessage(pair_id=0, variant="CharlieReveal", payload="00"),
        ]
        report = eve_infer(InterceptResend(basis=Basis.X), "A", records, messages, list(BellLabel))
        assert report.guessed_message == "1"


class TestAttackProperties:
    """Exact properties of the coupled states"""

    def test_ancilla_entangle_equals_ghz_coupling_on_phi_plus(self):
        rng = np.random.default_rng(0)
        entangled, _ = apply_attack(AncillaEntangle(), BellLabel.PHI_PLUS, rng)
        coupled, _ = apply_attack(GhzCoupling(), BellLabel.PHI_PLUS, rng)
        assert same_state(entangled, coupled)

    @pytest.mark.parametrize("label", list(BellLabel))
    def test_default_map_z_stealthy_x_uniform(self, label):
        coupled = make_ghz(GhzCoupling().mapping[label])
        genuine = make_bell(label)
        zz = [(0, Basis.Z), (1, Basis.Z)]
        xx = [(0, Basis.X), (1, Basis.X)]
        for outcome, p in outcome_distribution(genuine, zz).items():
            assert outcome_distribution(coupled, zz)[outcome] == pytest.approx(p, abs=1e-12)
        assert all(p == pytest.approx(0.25) for _, p in outcome_distribution(coupled, xx).items())
