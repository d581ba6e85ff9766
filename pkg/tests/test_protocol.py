"""
Tests for both communication schemes and session execution
"""
import numpy as np
import pytest
from pydantic import ValidationError

from app.core.exceptions import CapacityExceededError, ConfigViolationError, ReplayError
from app.models.schemas import GhzCoupling, InterceptResend, SessionConfig
from app.services.protocol import (
    ReplayScript,
    bell_decode,
    bell_encode,
    bit_for_pauli,
    bypass_agreement,
    control_bypass_bases,
    pauli_for_bit,
    run_bypass_session,
    run_session,
    scheme_a_bob_decode,
    scheme_a_encode,
    scheme_b_bob_decode,
    validate_config,
)
from app.services.statevec import (
    SIGMA_0,
    SIGMA_1,
    Basis,
    BellLabel,
    LocalUnitary,
    make_bell,
    outcome_distribution,
    project,
    same_state,
)

PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS = list(BellLabel)


def random_message(n: int, seed: int) -> str:
    return "".join(map(str, np.random.default_rng(seed).integers(2, size=n)))


class TestCodecs:
    """Bell label and Pauli codecs"""

    def test_bell_codec(self):
        assert [bell_encode(label) for label in BellLabel] == ["00", "01", "10", "11"]
        assert [bell_decode(code) for code in ("00", "01", "10", "11")] == list(BellLabel)

    def test_bell_decode_rejects(self):
        with pytest.raises(ValueError):
            bell_decode("0")

    def test_pauli_codec(self):
        assert pauli_for_bit(0) is SIGMA_0
        assert pauli_for_bit(1) is SIGMA_1
        assert bit_for_pauli(LocalUnitary(np.diag([1, -1]))) == 1
        with pytest.raises(ValueError):
            bit_for_pauli(LocalUnitary(np.array([[0, 1], [1, 0]]), name="sigma_x"))


class TestRoundTrip:
    """Exhaustive decoding over label, bit and measurement branch"""

    def test_encode_flips_psi_plus(self):
        """Encoding a 1 turns Psi+ into Psi-, a 0 leaves it alone"""
        assert same_state(scheme_a_encode(make_bell(PSI_PLUS), 1), make_bell(PSI_MINUS))
        assert same_state(scheme_a_encode(make_bell(PSI_PLUS), 0), make_bell(PSI_PLUS))

    @pytest.mark.parametrize("label", list(BellLabel))
    @pytest.mark.parametrize("bit", [0, 1])
    def test_scheme_a(self, label, bit):
        encoded = scheme_a_encode(make_bell(label), bit)
        for alice in (0, 1):
            prob, post = project(encoded, 0, Basis.X, alice)
            assert prob == pytest.approx(0.5)
            bobs = outcome_distribution(post, [(1, Basis.X)]).support()
            assert len(bobs) == 1
            assert scheme_a_bob_decode(label, alice, int(bobs.pop())) == bit

    @pytest.mark.parametrize("label", list(BellLabel))
    @pytest.mark.parametrize("bit", [0, 1])
    def test_scheme_b(self, label, bit):
        for alice in (0, 1):
            prob, post = project(make_bell(label), 0, Basis.Z, alice)
            assert prob == pytest.approx(0.5)
            (bob,) = outcome_distribution(post, [(1, Basis.Z)]).support()
            assert scheme_b_bob_decode(label, int(bob), alice ^ bit) == bit


class TestValidateConfig:
    """Control bypass and capacity"""

    def test_single_label(self):
        config = SessionConfig(scheme="A", label_pool=["Phi+"])
        assert validate_config(config) == ["control bypass: single Bell state"]

    def test_scheme_b_two_labels(self):
        config = SessionConfig(scheme="B", label_pool=["Phi+", "Phi-"])
        assert validate_config(config) == ["control bypass: Z-basis correlated pool"]

    def test_scheme_a_safe_pairs(self):
        for pool in (["Phi+", "Phi-"], ["Psi+", "Psi-"]):
            assert validate_config(SessionConfig(scheme="A", label_pool=pool)) == []

    def test_y_correlated_pool(self):
        assert control_bypass_bases("A", [PHI_MINUS, PSI_PLUS]) == [Basis.Y]
        assert control_bypass_bases("B", [PHI_MINUS, PSI_PLUS]) == [Basis.Y]

    def test_every_two_label_pool_is_bypass_for_b(self):
        labels = list(BellLabel)
        for i in range(4):
            for j in range(i + 1, 4):
                assert control_bypass_bases("B", [labels[i], labels[j]])

    def test_three_labels_are_safe(self):
        for scheme in ("A", "B"):
            assert validate_config(SessionConfig(scheme=scheme, label_pool=["Phi+", "Psi+", "Psi-"])) == []

    def test_capacity(self):
        config = SessionConfig(n_pairs=8, test_fraction=0.25, secret_message="1010101")
        assert config.n_test_pairs == 2
        (violation,) = validate_config(config)
        assert violation.startswith("capacity exceeded")

    def test_n_test_pairs_rounding(self):
        assert SessionConfig(n_pairs=30, test_fraction=0.1).n_test_pairs == 3
        assert SessionConfig(n_pairs=10, test_fraction=0.01).n_test_pairs == 1
        assert SessionConfig(n_pairs=10, test_fraction=0.0).n_test_pairs == 0

    def test_pool_canonicalized(self):
        config = SessionConfig(label_pool=["Psi-", "Phi+", "Phi+"])
        assert config.label_pool == [PHI_PLUS, PSI_MINUS]

    @pytest.mark.parametrize("field,value", [
        ("label_pool", []),
        ("secret_message", "102"),
        ("seed", 2 ** 64),
        ("seed", -1),
        ("test_fraction", 1.0),
        ("n_pairs", 0),
        ("scheme", "C"),
    ])
    def test_type_level_rejections(self, field, value):
        with pytest.raises(ValidationError):
            SessionConfig(**{field: value})


class TestRunSession:
    """End-to-end sessions"""

    @pytest.mark.parametrize("scheme", ["A", "B"])
    def test_recovers_message(self, scheme):
        message = random_message(40, seed=1)
        report = run_session(SessionConfig(scheme=scheme, n_pairs=64, secret_message=message, seed=3))
        assert report.verdict.outcome == "pass"
        assert report.verdict.tested == 16
        assert not report.aborted
        assert report.recovered_message == message
        assert report.recovery_accuracy == 1.0
        assert report.detection_flag is False

    def test_scheme_a_all_zeros(self):
        report = run_session(SessionConfig(scheme="A", n_pairs=20, secret_message="0" * 15, seed=12))
        assert report.recovered_message == "0" * 15
        assert report.recovery_accuracy == 1.0

    def test_roles(self):
        report = run_session(SessionConfig(n_pairs=12, secret_message="101", seed=0))
        roles = [pair.role_in_session for pair in report.pairs]
        assert roles == ["security_test"] * 3 + ["message"] * 9
        assert [pair.secret_bit for pair in report.pairs[3:6]] == [1, 0, 1]
        assert all(pair.secret_bit is None for pair in report.pairs[6:])

    def test_deterministic(self):
        config = SessionConfig(scheme="A", n_pairs=32, secret_message="110010", seed=99)
        assert run_session(config).model_dump_json() == run_session(config).model_dump_json()

    def test_seed_changes_labels(self):
        labels = {
            tuple(pair.initial_label for pair in run_session(SessionConfig(n_pairs=32, seed=seed)).pairs)
            for seed in (1, 2)
        }
        assert len(labels) == 2

    def test_transcript_order(self):
        report = run_session(SessionConfig(scheme="B", n_pairs=4, secret_message="1", seed=4))
        variants = [line.split(":")[1] for line in report.transcript]
        assert variants == ["CharlieReveal", "AliceDelta", "BobMeasured", "CharlieReveal"]
        assert report.transcript[0].startswith("0:CharlieReveal:")

    def test_charlie_withholds(self):
        report = run_session(SessionConfig(n_pairs=8, secret_message="0101", seed=2, charlie_cooperates=False))
        message_pairs = report.pairs[2:6]
        assert report.recovered_message is None
        assert all(pair.undetermined and pair.decoded_bit is None for pair in message_pairs)
        assert report.recovery_accuracy == 0.5

    def test_refuses_bypass_pool(self):
        with pytest.raises(ConfigViolationError) as excinfo:
            run_session(SessionConfig(scheme="A", label_pool=["Phi+"]))
        assert "control bypass" in str(excinfo.value)

    def test_bypass_override(self):
        config = SessionConfig(scheme="B", label_pool=["Phi+", "Phi-"], secret_message="11", allow_bypass=True)
        assert run_session(config).recovered_message == "11"

    def test_capacity_not_overridable(self):
        config = SessionConfig(n_pairs=4, secret_message="1111", allow_bypass=True)
        with pytest.raises(CapacityExceededError):
            run_session(config)

    def test_intercept_resend_aborts(self):
        config = SessionConfig(
            n_pairs=200, test_fraction=0.5, secret_message="1011", seed=8, attack=InterceptResend()
        )
        report = run_session(config)
        assert report.aborted
        assert report.detection_flag
        assert report.verdict.mismatches > 0
        assert report.recovered_message is None
        assert report.recovery_accuracy == 0.0
        assert all(pair.secret_bit is None for pair in report.pairs)

    def test_ghz_eve_reads_scheme_b(self):
        """Untested session under GHZ coupling: Eve learns every bit"""
        message = random_message(32, seed=5)
        config = SessionConfig(n_pairs=32, test_fraction=0.0, secret_message=message, seed=6, attack=GhzCoupling())
        report = run_session(config)
        assert report.recovered_message == message
        assert report.eve.guessed_message == message
        assert report.eve.accuracy == 1.0
        assert all(pair.attack_applied == "ghz-coupling" for pair in report.pairs)

    def test_intercept_x_eve_reads_scheme_a(self):
        message = random_message(24, seed=6)
        config = SessionConfig(
            scheme="A", n_pairs=24, test_fraction=0.0, secret_message=message, seed=7,
            attack=InterceptResend(basis=Basis.X),
        )
        report = run_session(config)
        assert report.recovered_message == message
        assert report.eve.accuracy == 1.0

    def test_intercept_z_on_bob_reads_scheme_b(self):
        """Bob's Z outcome plus the revealed letter gives Eve Alice's outcome, delta does the rest"""
        message = random_message(48, seed=9)
        config = SessionConfig(
            scheme="B", n_pairs=48, test_fraction=0.0, secret_message=message, seed=10,
            attack=InterceptResend(basis=Basis.Z, target="bob"),
        )
        report = run_session(config)
        assert report.recovered_message == message
        assert report.eve.guessed_message == message
        assert report.eve.accuracy == 1.0

    def test_eve_without_attack_is_guessing(self):
        """Public X outcomes alone carry nothing: every guess is the tie-break 0"""
        message = random_message(4_000, seed=11)
        config = SessionConfig(scheme="A", n_pairs=4_000, test_fraction=0.0, secret_message=message, seed=12)
        report = run_session(config)
        assert report.recovered_message == message
        assert report.eve.guessed_message == "0" * len(message)
        assert report.eve.accuracy == pytest.approx(message.count("0") / len(message))
        assert 0.46 <= report.eve.accuracy <= 0.54


class TestReplay:
    """Forced labels and outcomes"""

    def test_label_count_mismatch(self):
        config = SessionConfig(n_pairs=4, test_fraction=0.0)
        with pytest.raises(ReplayError):
            run_session(config, ReplayScript(labels=[PHI_PLUS]))

    def test_forced_outcomes(self):
        config = SessionConfig(n_pairs=2, test_fraction=0.0, secret_message="10")
        report = run_session(config, ReplayScript(labels=[PSI_PLUS, PHI_MINUS], bob_outcomes=[0, 1]))
        assert [pair.bob_outcome for pair in report.pairs] == [0, 1]
        assert [pair.alice_outcome for pair in report.pairs] == [1, 1]
        assert report.recovered_message == "10"


class TestBypassDemonstration:
    """Alice and Bob decoding without Charlie"""

    def test_y_agreement_is_certain(self):
        agreement = bypass_agreement([PHI_MINUS, PSI_PLUS], Basis.Y)
        assert agreement == {PHI_MINUS: pytest.approx(1.0, abs=1e-12), PSI_PLUS: pytest.approx(1.0, abs=1e-12)}

    def test_bypass_session(self):
        message = random_message(200, seed=8)
        recovered, accuracy = run_bypass_session([PHI_MINUS, PSI_PLUS], message, seed=9)
        assert recovered == message
        assert accuracy == 1.0

    def test_bypass_session_needs_correlated_pool(self):
        with pytest.raises(ValueError):
            run_bypass_session(list(BellLabel), "1", seed=0)


class TestAcceptance:
    """Large-sample fidelity and control"""

    @pytest.mark.parametrize("scheme", ["A", "B"])
    def test_fidelity_ten_thousand_bits(self, scheme):
        message = random_message(10_000, seed=10)
        config = SessionConfig(scheme=scheme, n_pairs=10_000, test_fraction=0.0, secret_message=message, seed=11)
        assert run_session(config).recovery_accuracy == 1.0

    @pytest.mark.parametrize("scheme", ["A", "B"])
    def test_control_ten_thousand_bits(self, scheme):
        message = random_message(10_000, seed=12)
        config = SessionConfig(
            scheme=scheme, n_pairs=10_000, test_fraction=0.0, secret_message=message, seed=13,
            charlie_cooperates=False,
        )
        assert 0.47 <= run_session(config).recovery_accuracy <= 0.53
