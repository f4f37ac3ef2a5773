from typing import Any, Dict, List

from ._enum import ReportKind

_NUMBER = {"type": "number"}
_COUNT = {"type": "integer", "minimum": 0}
_VICTIM_ID = {"type": "string", "minLength": 1}
_DEMO_COUNT = {"type": "integer", "minimum": 1}
# per-episode rows carry the episode index, the aggregate row "mean"
_EPISODE = {
    "anyOf": [{"type": "integer", "minimum": 1}, {"type": "string", "enum": ["mean"]}]
}


def _row_schema(title: str, properties: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "title": title,
        "type": "object",
        "properties": properties,
        "required": list(properties),
        "additionalProperties": False,
    }


ATTACK_ROW_SCHEMA = _row_schema(
    "Attack Report Row",
    {
        "victim_id": _VICTIM_ID,
        "demo_count": _DEMO_COUNT,
        "episode": _EPISODE,
        "regret": _NUMBER,
        "perturbations": {"type": "number", "minimum": 0},
    },
)

TRANSFER_ROW_SCHEMA = _row_schema(
    "Transfer Report Row",
    {
        "victim_id": _VICTIM_ID,
        "demo_count": _DEMO_COUNT,
        "episode": _EPISODE,
        "crafted": {"type": "number", "minimum": 0},
        "transferred": {"type": "number", "minimum": 0},
    },
)

CROP_ROW_SCHEMA = _row_schema(
    "CRoP Trade-off Row",
    {
        "omega": {"type": "number", "minimum": 0},
        "mean_return": _NUMBER,
        "imitation_agreement": _NUMBER,
        "mean_transfers": _NUMBER,
    },
)

TRAINING_CURVE_ROW_SCHEMA = _row_schema(
    "Training Curve Row",
    {"episode": {"type": "integer", "minimum": 1}, "steps": _COUNT, "return": _NUMBER},
)

IMITATION_LOG_ROW_SCHEMA = _row_schema(
    "Imitation Log Row",
    {"step": {"type": "integer", "minimum": 1}, "loss": _NUMBER, "agreement": _NUMBER},
)

ATTACK_SUMMARY_ROW_SCHEMA = _row_schema(
    "Attack Summary Row",
    {
        "victim_id": _VICTIM_ID,
        "demo_count": _DEMO_COUNT,
        "mean_regret": _NUMBER,
        "mean_perturbations": _NUMBER,
        "max_regret": _NUMBER,
    },
)

TRANSFER_SUMMARY_ROW_SCHEMA = _row_schema(
    "Transfer Summary Row",
    {
        "victim_id": _VICTIM_ID,
        "demo_count": _DEMO_COUNT,
        "mean_crafted": _NUMBER,
        "mean_transferred": _NUMBER,
    },
)

IMITATION_SUMMARY_ROW_SCHEMA = _row_schema(
    "Imitation Summary Row",
    {"victim_id": _VICTIM_ID, "demo_count": _DEMO_COUNT, "agreement": _NUMBER},
)

VICTIM_SUMMARY_ROW_SCHEMA = _row_schema(
    "Victim Summary Row",
    {
        "victim_id": _VICTIM_ID,
        "mean_return": _NUMBER,
        "min_return": _NUMBER,
        "max_return": _NUMBER,
    },
)

REPORT_SCHEMAS: Dict[ReportKind, Dict[str, Any]] = {
    ReportKind.attack: ATTACK_ROW_SCHEMA,
    ReportKind.transfer: TRANSFER_ROW_SCHEMA,
    ReportKind.crop: CROP_ROW_SCHEMA,
    ReportKind.training_curve: TRAINING_CURVE_ROW_SCHEMA,
    ReportKind.imitation_log: IMITATION_LOG_ROW_SCHEMA,
    ReportKind.attack_summary: ATTACK_SUMMARY_ROW_SCHEMA,
    ReportKind.transfer_summary: TRANSFER_SUMMARY_ROW_SCHEMA,
    ReportKind.imitation_summary: IMITATION_SUMMARY_ROW_SCHEMA,
    ReportKind.victim_summary: VICTIM_SUMMARY_ROW_SCHEMA,
}


def report_columns(kind: ReportKind) -> List[str]:
    return list(REPORT_SCHEMAS[kind]["properties"])
