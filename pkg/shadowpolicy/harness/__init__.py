from ._enum import ReportKind, Stage, StageStatus
from .config import (
    CropSweepConfig,
    EvaluationConfig,
    ExperimentConfig,
    VictimSpec,
    apply_overrides,
    config_hash,
    load_config,
)
from .manifest import RunLayout, RunManifest, StageRecord
from .reports import emit_report, format_value

__all__ = [
    "CropSweepConfig",
    "EvaluationConfig",
    "ExperimentConfig",
    "ReportKind",
    "RunLayout",
    "RunManifest",
    "Stage",
    "StageRecord",
    "StageStatus",
    "VictimSpec",
    "apply_overrides",
    "config_hash",
    "emit_report",
    "format_value",
    "load_config",
]
