"""
Session runs and detection sweeps with their report writers
"""
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger
from tqdm import tqdm

from app.config import settings
from app.core.exceptions import ConfigViolationError
from app.models.schemas import (
    BELL_ORDER,
    SWEEP_CSV_COLUMNS,
    TEST_CSV_COLUMNS,
    RunConfig,
    RunSummary,
    SessionConfig,
    SessionReport,
    SweepRow,
)
from app.services.adversary import parse_attack_tag
from app.services.channel_security import (
    all_pass_probability,
    monte_carlo_detection,
    pool_detection_probability,
)
from app.services.protocol import BYPASS_PREFIX, run_session, validate_config
from app.services.statevec import BellLabel

PAIR_CSV_COLUMNS = [
    "pair_id", "initial_label", "role_in_session", "attack_applied", "secret_bit",
    "alice_outcome", "bob_outcome", "decoded_bit", "undetermined",
]


def load_run_config(path: str) -> RunConfig:
    """Parse a `run --config` JSON file"""
    return RunConfig.model_validate_json(Path(path).read_bytes())


def apply_overrides(
    run_config: RunConfig,
    seed: Optional[int] = None,
    reps: Optional[int] = None,
    fmt: Optional[str] = None,
    out_dir: Optional[str] = None,
    workers: Optional[int] = None,
) -> RunConfig:
    """Command-line flags win over the file; the result is re-validated"""
    data = run_config.model_dump(mode="json")
    if seed is not None:
        data["session"]["seed"] = seed
    for key, value in (("reps", reps), ("format", fmt), ("out_dir", out_dir), ("workers", workers)):
        if value is not None:
            data[key] = value
    return RunConfig.model_validate(data)


def session_for_seed(config: SessionConfig, seed: int) -> SessionConfig:
    """Copy of the session config with its seed replaced"""
    data = config.model_dump(mode="json")
    data["seed"] = seed
    return SessionConfig.model_validate(data)


# ===== Renderings =====

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    return str(getattr(value, "value", value))


def tests_frame(report: SessionReport) -> pd.DataFrame:
    """Test records, one row each"""
    return pd.DataFrame([record.csv_row() for record in report.test_records], columns=TEST_CSV_COLUMNS)


def pairs_frame(report: SessionReport) -> pd.DataFrame:
    """Per-pair table; None becomes an empty cell, booleans 0/1"""
    rows = [[_cell(getattr(pair, column)) for column in PAIR_CSV_COLUMNS] for pair in report.pairs]
    return pd.DataFrame(rows, columns=PAIR_CSV_COLUMNS)


def render_text(report: SessionReport) -> str:
    """Summary header, blank line, then one transcript message per line"""
    config = report.config
    header = [
        f"schema_version: {report.schema_version}",
        f"scheme: {config.scheme}",
        f"seed: {config.seed}",
        f"attack: {config.attack.tag}",
        f"verdict: {report.verdict.outcome} ({report.verdict.mismatches}/{report.verdict.tested} mismatches)",
        f"recovered: {report.recovered_message if report.recovered_message is not None else '-'}",
        f"accuracy: {report.recovery_accuracy:.6f}",
    ]
    if report.eve is not None and report.eve.accuracy is not None:
        header.append(f"eve accuracy: {report.eve.accuracy:.6f}")
    return "\n".join(header + ["", *report.transcript]) + "\n"


def write_session_report(report: SessionReport, out_dir: Path, fmt: str) -> List[Path]:
    """Write one session in the requested format; file names derive from the seed"""
    stem = out_dir / f"session_{report.config.seed}"
    if fmt == "json":
        path = stem.with_suffix(".json")
        path.write_text(report.model_dump_json(indent=2, by_alias=True) + "\n", encoding="utf-8")
        return [path]
    if fmt == "csv":
        tests_path = out_dir / f"{stem.name}_tests.csv"
        pairs_path = out_dir / f"{stem.name}_pairs.csv"
        tests_frame(report).to_csv(tests_path, index=False, lineterminator="\n")
        pairs_frame(report).to_csv(pairs_path, index=False, lineterminator="\n")
        return [tests_path, pairs_path]
    path = stem.with_suffix(".txt")
    path.write_text(render_text(report), encoding="utf-8")
    return [path]


# ===== cmd_run =====

def _blocking_violations(config: SessionConfig) -> List[str]:
    """Violations that still refuse the config once allow_bypass is honoured"""
    violations = validate_config(config)
    if config.allow_bypass:
        violations = [v for v in violations if not v.startswith(BYPASS_PREFIX)]
    return violations


def summarize(reports: Sequence[SessionReport], report_files: Sequence[str]) -> RunSummary:
    return RunSummary(
        reps=len(reports),
        seeds=[report.config.seed for report in reports],
        recovery_rate=float(np.mean([report.recovery_accuracy for report in reports])),
        detection_rate=float(np.mean([report.detection_flag for report in reports])),
        mean_mismatches=float(np.mean([report.verdict.mismatches for report in reports])),
        aborted_sessions=sum(report.aborted for report in reports),
        report_files=list(report_files),
    )


def cmd_run(run_config: RunConfig) -> RunSummary:
    """
    Run the configured session once per repetition and write the reports

    Repetition i uses seed + i. Sessions run on a thread pool, each writing
    its own files; the summary is reduced afterwards in seed order.

    Raises:
        ConfigViolationError: the session config is refused
        OSError: the output directory cannot be created or written
    """
    base = run_config.session
    violations = _blocking_violations(base)
    if violations:
        raise ConfigViolationError(violations)

    out_dir = Path(run_config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    seeds = [base.seed + rep for rep in range(run_config.reps)]
    configs = [session_for_seed(base, seed) for seed in seeds]
    logger.info(f"Running {len(seeds)} sessions from seed {base.seed} into {out_dir}")

    reports: Dict[int, SessionReport] = {}
    files: Dict[int, List[Path]] = {}

    def job(config: SessionConfig):
        report = run_session(config)
        return report, write_session_report(report, out_dir, run_config.format)

    with ThreadPoolExecutor(max_workers=min(run_config.workers, settings.max_workers)) as executor:
        future_to_seed = {executor.submit(job, config): config.seed for config in configs}
        for future in tqdm(
            as_completed(future_to_seed),
            total=len(future_to_seed),
            desc="Sessions",
            disable=not settings.mc_progress,
        ):
            seed = future_to_seed[future]
            reports[seed], files[seed] = future.result()

    ordered = [reports[seed] for seed in seeds]
    names = [path.name for seed in seeds for path in files[seed]]
    summary = summarize(ordered, names)
    (out_dir / "summary.json").write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(
        f"Run complete: recovery rate {summary.recovery_rate:.4f}, "
        f"detection rate {summary.detection_rate:.4f}"
    )
    return summary


# ===== cmd_sweep =====

def cmd_sweep(
    attack_tags: Sequence[str],
    test_pairs: Sequence[int],
    reps: int,
    seed: int = 0,
    pool: Sequence[BellLabel] = tuple(BELL_ORDER),
) -> List[SweepRow]:
    """
    Detection table: exact per-pair and all-pass probabilities next to
    the Monte-Carlo detection frequency over `reps` attacked test rounds

    Every (attack, n) cell draws from its own generator seeded with
    (seed, attack index, n), so cells are reproducible independently.

    Raises:
        ConfigViolationError: reps or a test-pair count below 1, or a negative seed
        AttackTagError: an unknown attack tag
    """
    violations = [f"reps must be at least 1, got {reps}"] if reps < 1 else []
    violations += [f"test pairs must be at least 1, got {n}" for n in test_pairs if n < 1]
    if seed < 0:
        violations.append(f"seed must be non-negative, got {seed}")
    if violations:
        raise ConfigViolationError(violations)
    attacks = [parse_attack_tag(tag) for tag in attack_tags]
    rows = []
    for index, attack in enumerate(attacks):
        p = pool_detection_probability(attack, pool)
        for n in test_pairs:
            rng = np.random.default_rng([seed, index, n])
            detected, _ = monte_carlo_detection(attack, n, reps, rng, pool, progress=settings.mc_progress)
            frequency = detected / reps
            rows.append(SweepRow(
                attack=attack.tag,
                n_test_pairs=n,
                p_exact=p,
                all_pass_exact=all_pass_probability(p, n),
                mc_detection_frequency=frequency,
                std_error=math.sqrt(frequency * (1.0 - frequency) / reps),
                reps=reps,
            ))
            logger.info(f"{attack.tag} n={n}: exact {1.0 - all_pass_probability(p, n):.5f}, observed {frequency:.5f}")
    return rows


def sweep_frame(rows: Sequence[SweepRow]) -> pd.DataFrame:
    """Sweep rows in output column order"""
    return pd.DataFrame([row.model_dump() for row in rows], columns=SWEEP_CSV_COLUMNS)
