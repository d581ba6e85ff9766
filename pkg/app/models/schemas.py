"""
Pydantic schemas for configurations, transcripts and reports
"""
import math
from datetime import datetime
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator

from app.config import settings
from app.services.statevec import (
    ATOL,
    Basis,
    BellLabel,
    GhzLabel,
    make_bell,
    make_ghz,
    outcome_distribution,
)

REPORT_SCHEMA_VERSION = "1.0"

Scheme = Literal["A", "B"]
Side = Literal["alice", "bob"]
Role = Literal["message", "security_test"]

BELL_ORDER = [BellLabel.PHI_PLUS, BellLabel.PHI_MINUS, BellLabel.PSI_PLUS, BellLabel.PSI_MINUS]

DEFAULT_GHZ_MAP: Dict[BellLabel, GhzLabel] = {
    BellLabel.PHI_PLUS: GhzLabel.P_PLUS,
    BellLabel.PHI_MINUS: GhzLabel.P_MINUS,
    BellLabel.PSI_PLUS: GhzLabel.R_PLUS,
    BellLabel.PSI_MINUS: GhzLabel.R_MINUS,
}


# ===== Attack models =====

class NoAttack(BaseModel):
    """Honest distribution"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["none"] = "none"

    @property
    def tag(self) -> str:
        return "none"


class InterceptResend(BaseModel):
    """Eve measures one transiting qubit and forwards the collapsed pair"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["intercept-resend"] = "intercept-resend"
    basis: Basis = Basis.Z
    target: Side = "bob"

    @property
    def tag(self) -> str:
        return f"intercept-resend:{self.basis.value}:{self.target}"


def _z_marginal(state) -> Dict[str, float]:
    return outcome_distribution(state, [(0, Basis.Z), (1, Basis.Z)]).entries


class GhzCoupling(BaseModel):
    """Eve replaces each Bell pair by a GHZ state and keeps the third qubit"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["ghz-coupling"] = "ghz-coupling"
    mapping: Dict[BellLabel, GhzLabel] = Field(default_factory=lambda: dict(DEFAULT_GHZ_MAP))
    eve_basis: Basis = Basis.Z

    @field_validator("mapping")
    @classmethod
    def mapping_is_z_stealthy(cls, mapping: Dict[BellLabel, GhzLabel]) -> Dict[BellLabel, GhzLabel]:
        for bell, ghz in mapping.items():
            genuine = _z_marginal(make_bell(bell))
            coupled = _z_marginal(make_ghz(ghz))
            if any(abs(genuine[k] - coupled[k]) > ATOL for k in genuine):
                raise ValueError(
                    f"{ghz.value} does not reproduce the Z statistics of {bell.value}"
                )
        return mapping

    @property
    def tag(self) -> str:
        return "ghz-coupling"


class AncillaEntangle(BaseModel):
    """Eve entangles a fresh ancilla with one transiting qubit (controlled-NOT)"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["ancilla-entangle"] = "ancilla-entangle"
    target: Side = "bob"
    eve_basis: Basis = Basis.Z

    @property
    def tag(self) -> str:
        return f"ancilla-entangle:{self.target}"


AttackModel = Annotated[
    Union[NoAttack, InterceptResend, GhzCoupling, AncillaEntangle],
    Field(discriminator="kind"),
]


# ===== Session configuration =====

class SessionConfig(BaseModel):
    """One protocol run"""
    model_config = ConfigDict(frozen=True)

    scheme: Scheme = Field(default="B", description="A: sigma_z encoding, B: Z measurement + announcement")
    n_pairs: PositiveInt = Field(default=64, description="EPR pairs prepared by Charlie")
    label_pool: List[BellLabel] = Field(default_factory=lambda: list(BELL_ORDER))
    test_fraction: float = Field(default=0.25, ge=0.0, lt=1.0)
    secret_message: str = Field(default="", pattern=r"^[01]*$")
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    attack: AttackModel = Field(default_factory=NoAttack)
    charlie_cooperates: bool = True
    allow_bypass: bool = Field(default=False, description="Run even if the pool defeats Charlie's control")

    @field_validator("label_pool")
    @classmethod
    def pool_is_canonical(cls, pool: List[BellLabel]) -> List[BellLabel]:
        if not pool:
            raise ValueError("label_pool must not be empty")
        unique = set(pool)
        return [label for label in BELL_ORDER if label in unique]

    @property
    def n_test_pairs(self) -> int:
        # rounding guards 0.1 * 30 -> 3.0000000000000004
        return math.ceil(round(self.test_fraction * self.n_pairs, 9))

    @property
    def message_capacity(self) -> int:
        return self.n_pairs - self.n_test_pairs


# ===== Transcript =====

MessageVariant = Literal["AliceXAnnounce", "AliceDelta", "BobMeasured", "CharlieReveal"]


class ClassicalMessage(BaseModel):
    """Public classical message about one pair"""
    model_config = ConfigDict(frozen=True)

    pair_id: int
    variant: MessageVariant
    payload: str = ""

    def canonical(self) -> str:
        return f"{self.pair_id}:{self.variant}:{self.payload}"


class PairRecord(BaseModel):
    """Lifecycle of one shared EPR pair"""
    pair_id: int
    initial_label: BellLabel
    role_in_session: Role
    attack_applied: Optional[str] = None
    secret_bit: Optional[int] = None
    alice_outcome: Optional[int] = None
    bob_outcome: Optional[int] = None
    messages: List[ClassicalMessage] = Field(default_factory=list)
    decoded_bit: Optional[int] = None
    undetermined: bool = False


class TestRecord(BaseModel):
    """Outcome of testing one sacrificed pair"""
    __test__ = False

    pair_id: int
    label: BellLabel
    basis: Basis
    alice_bit: int
    bob_bit: int
    passed: bool = Field(alias="pass")

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    def csv_row(self) -> Tuple[int, str, str, int, int, int]:
        return (self.pair_id, self.label.value, self.basis.value,
                self.alice_bit, self.bob_bit, int(self.passed))

    def csv_line(self) -> str:
        return ",".join(str(value) for value in self.csv_row())


TEST_CSV_COLUMNS = ["pair_id", "label", "basis", "alice_bit", "bob_bit", "pass"]


class Verdict(BaseModel):
    """Aggregate of the channel test"""
    model_config = ConfigDict(frozen=True)

    tested: int
    mismatches: int
    outcome: Literal["pass", "tampered"]


class EveRecord(BaseModel):
    """What Eve saw on one attacked pair"""
    pair_id: int
    role_in_session: Role
    intercept_outcome: Optional[int] = None
    ancilla_outcome: Optional[int] = None
    guessed_bit: Optional[int] = None


class EveReport(BaseModel):
    """Eve's best guesses at the message and how well they did"""
    attack: str
    records: List[EveRecord]
    guessed_message: str
    accuracy: Optional[float] = None


class SessionReport(BaseModel):
    """Transcript plus statistics of one protocol run"""
    model_config = ConfigDict(frozen=True)

    schema_version: str = REPORT_SCHEMA_VERSION
    config: SessionConfig
    pairs: List[PairRecord]
    test_records: List[TestRecord]
    verdict: Verdict
    aborted: bool
    recovered_message: Optional[str] = None
    recovery_accuracy: float
    detection_flag: bool
    transcript: List[str]
    eve: Optional[EveReport] = None


# ===== Harness =====

class RunConfig(BaseModel):
    """Contents of a `run --config` file"""
    session: SessionConfig = Field(default_factory=SessionConfig)
    reps: PositiveInt = 1
    format: Literal["json", "csv", "text"] = "json"
    out_dir: str = Field(default_factory=lambda: settings.report_dir)
    workers: PositiveInt = 1


class RunSummary(BaseModel):
    """Aggregate over the repetitions of cmd_run"""
    schema_version: str = REPORT_SCHEMA_VERSION
    reps: int
    seeds: List[int]
    recovery_rate: Optional[float] = None
    detection_rate: float
    mean_mismatches: float
    aborted_sessions: int
    report_files: List[str]


class SweepRow(BaseModel):
    """One line of the detection table"""
    attack: str
    n_test_pairs: int
    p_exact: float
    all_pass_exact: float
    mc_detection_frequency: float
    std_error: float
    reps: int


SWEEP_CSV_COLUMNS = list(SweepRow.model_fields)


class PaperCheckResult(BaseModel):
    """One worked-example check"""
    name: str
    passed: bool
    expected: str
    observed: str


class PaperCheckReport(BaseModel):
    """Replay of the worked examples"""
    checks: List[PaperCheckResult]
    passed: bool


# ===== HTTP responses =====

class HealthResponse(BaseModel):
    """Health check response"""
    status: str = "healthy"
    timestamp: datetime = Field(default_factory=datetime.now)
    version: str = "1.0.0"


class ValidationResponse(BaseModel):
    """validate_config result for a proposed session"""
    ok: bool
    violations: List[str]


class DetectionResponse(BaseModel):
    """Exact per-pair and all-pass detection for one attack and label"""
    attack: str
    label: BellLabel
    probability: float


class ErrorResponse(BaseModel):
    """Body of every handled error; violations only for refused configurations"""
    error: str
    status_code: int
    detail: Optional[str] = None
    violations: Optional[List[str]] = None
    timestamp: datetime = Field(default_factory=datetime.now)
