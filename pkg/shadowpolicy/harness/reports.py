import csv
import math
import os
import pathlib
from typing import Any, Dict, Iterable, List, Sequence, Union

import jsonschema

from shadowpolicy.agents import EpisodeRecord, EvalStats, ImitationLogRecord
from shadowpolicy.attacks import AttackReport, TransferReport
from shadowpolicy.defenses import CropReport
from shadowpolicy.exceptions import ReportSchemaError
from shadowpolicy.utils import get_logger

from ._enum import ReportKind
from .schema import REPORT_SCHEMAS, report_columns

logger = get_logger(__name__)

Row = Dict[str, Any]

AGGREGATE_EPISODE = "mean"


def format_value(value: Any) -> str:
    """CSV cell text: integers as is, reals with 6 significant digits."""
    if isinstance(value, bool):
        raise TypeError("booleans have no report representation")

    if isinstance(value, int):
        return str(value)

    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return "{:#.6g}".format(value)

    return str(value)


def validate_rows(kind: ReportKind, rows: Sequence[Row]) -> None:
    validator = jsonschema.Draft7Validator(REPORT_SCHEMAS[kind])

    for index, row in enumerate(rows):
        error = jsonschema.exceptions.best_match(validator.iter_errors(row))
        if error is not None:
            raise ReportSchemaError(
                "{} row {} is invalid: {}".format(kind.value, index, error.message)
            )


def emit_report(
    kind: Union[ReportKind, str],
    rows: Sequence[Row],
    path: Union[str, pathlib.Path],
) -> pathlib.Path:
    kind = ReportKind(kind)
    validate_rows(kind, rows)
    columns = report_columns(kind)
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(path.name + ".tmp")

    with tmp_path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row[column]) for column in columns])

    os.replace(str(tmp_path), str(path))
    logger.debug("{} report written to {}".format(kind.value, path))
    return path


def read_report(path: Union[str, pathlib.Path]) -> List[Dict[str, str]]:
    with open(str(path), "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def attack_rows(victim_id: str, demo_count: int, report: AttackReport) -> List[Row]:
    rows: List[Row] = [
        {
            "victim_id": victim_id,
            "demo_count": demo_count,
            "episode": e.episode,
            "regret": float(e.regret),
            "perturbations": e.perturbations,
        }
        for e in report.episodes
    ]
    rows.append(
        {
            "victim_id": victim_id,
            "demo_count": demo_count,
            "episode": AGGREGATE_EPISODE,
            "regret": report.mean_regret,
            "perturbations": report.mean_perturbations,
        }
    )
    return rows


def transfer_rows(
    victim_id: str, demo_count: int, report: TransferReport
) -> List[Row]:
    rows: List[Row] = [
        {
            "victim_id": victim_id,
            "demo_count": demo_count,
            "episode": e.episode,
            "crafted": e.crafted,
            "transferred": e.transferred,
        }
        for e in report.episodes
    ]
    rows.append(
        {
            "victim_id": victim_id,
            "demo_count": demo_count,
            "episode": AGGREGATE_EPISODE,
            "crafted": report.mean_crafted,
            "transferred": report.mean_transferred,
        }
    )
    return rows


def crop_rows(report: CropReport) -> List[Row]:
    return [
        {
            "omega": r.omega,
            "mean_return": r.mean_return,
            "imitation_agreement": r.imitation_agreement,
            "mean_transfers": r.mean_transfers,
        }
        for r in report.rows
    ]


def curve_rows(records: Iterable[EpisodeRecord]) -> List[Row]:
    return [
        {"episode": r.episode, "steps": r.steps, "return": float(r.return_)}
        for r in records
    ]


def imitation_log_rows(records: Iterable[ImitationLogRecord]) -> List[Row]:
    return [
        {"step": r.step, "loss": float(r.loss), "agreement": float(r.agreement)}
        for r in records
    ]


def attack_summary_row(victim_id: str, demo_count: int, report: AttackReport) -> Row:
    return {
        "victim_id": victim_id,
        "demo_count": demo_count,
        "mean_regret": report.mean_regret,
        "mean_perturbations": report.mean_perturbations,
        "max_regret": float(report.max_regret),
    }


def transfer_summary_row(
    victim_id: str, demo_count: int, report: TransferReport
) -> Row:
    return {
        "victim_id": victim_id,
        "demo_count": demo_count,
        "mean_crafted": report.mean_crafted,
        "mean_transferred": report.mean_transferred,
    }


def imitation_summary_row(victim_id: str, demo_count: int, agreement: float) -> Row:
    return {"victim_id": victim_id, "demo_count": demo_count, "agreement": agreement}


def victim_summary_row(victim_id: str, stats: EvalStats) -> Row:
    return {
        "victim_id": victim_id,
        "mean_return": stats.mean,
        "min_return": float(stats.min),
        "max_return": float(stats.max),
    }
