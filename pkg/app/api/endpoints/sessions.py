"""
Session, validation and detection endpoints
"""
from fastapi import APIRouter, HTTPException, Query
from loguru import logger

from app.core.exceptions import AttackTagError
from app.harness.paper_check import cmd_paper_check
from app.models.schemas import (
    DetectionResponse,
    ErrorResponse,
    PaperCheckReport,
    SessionConfig,
    SessionReport,
    ValidationResponse,
)
from app.services.adversary import parse_attack_tag
from app.services.channel_security import detection_probability_exact
from app.services.protocol import run_session, validate_config
from app.services.statevec import BellLabel

router = APIRouter()


# Sessions are CPU-bound, so these are plain defs and run in the threadpool
@router.post("/sessions", response_model=SessionReport, responses={422: {"model": ErrorResponse}})
def create_session(config: SessionConfig):
    """
    Run one session and return its full report

    Refused configurations (control bypass without override, message over
    capacity) come back as 422 with the violation list.
    """
    logger.info(f"Session request: scheme={config.scheme} seed={config.seed} attack={config.attack.tag}")
    return run_session(config)


@router.post("/sessions/validate", response_model=ValidationResponse)
def validate_session(config: SessionConfig):
    """Constraint violations of a configuration, without running it"""
    violations = validate_config(config)
    return ValidationResponse(ok=not violations, violations=violations)


@router.get("/paper-check", response_model=PaperCheckReport)
def paper_check():
    """Replay the worked examples"""
    return cmd_paper_check()


@router.get("/detection", response_model=DetectionResponse, responses={400: {"model": ErrorResponse}})
def detection(
    attack: str = Query(..., description="Attack tag, e.g. intercept-resend:Z or ghz-coupling"),
    label: BellLabel = Query(BellLabel.PHI_PLUS),
):
    """Exact probability that one attacked test pair fails"""
    try:
        model = parse_attack_tag(attack)
    except AttackTagError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return DetectionResponse(
        attack=model.tag,
        label=label,
        probability=detection_probability_exact(model, label),
    )
