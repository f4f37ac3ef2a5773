import os
from pathlib import Path
from typing import Optional

PROJECT_DIR = Path(__file__).parent.parent
CONFIG_DIR = PROJECT_DIR / "config"
DEFAULT_CONFIG_PATH = CONFIG_DIR / "default.json"

OUTPUT_DIR = Path(
    os.environ.get("SHADOWPOLICY_OUTPUT_DIR", str(PROJECT_DIR / "runs"))
)
WORKER_COUNT = int(os.environ.get("WORKER_COUNT", 1))

SENTRY_DSN: Optional[str] = os.environ.get("SENTRY_DSN")

# Layout of a run directory

VICTIMS_DIRNAME = "victims"
CELLS_DIRNAME = "cells"
REPORTS_DIRNAME = "reports"
PLOTS_DIRNAME = "plots"
MANIFEST_NAME = "manifest.json"

VICTIM_CHECKPOINT_NAME = "victim.mlab"
VICTIM_CURVE_NAME = "training_curve.csv"
VICTIM_STATS_NAME = "eval_stats.json"
DEMONSTRATIONS_NAME = "demonstrations.demo"
IMITATION_CHECKPOINT_NAME = "imitation.mlab"
IMITATION_LOG_NAME = "imitation_log.csv"
IMITATION_CURVE_NAME = "imitation_curve.csv"
IMITATION_STATS_NAME = "imitation_stats.json"
ADVERSARY_CHECKPOINT_NAME = "adversary.mlab"
ADVERSARY_CURVE_NAME = "adversary_curve.csv"
ATTACK_REPORT_NAME = "attack.csv"
ATTACK_STATS_NAME = "attack_stats.json"
TRANSFER_REPORT_NAME = "transfer.csv"
TRANSFER_STATS_NAME = "transfer_stats.json"
CROP_REPORT_NAME = "crop.csv"
CROP_STATS_NAME = "crop_stats.json"

ATTACK_SUMMARY_NAME = "attack_summary.csv"
TRANSFER_SUMMARY_NAME = "transfer_summary.csv"
IMITATION_SUMMARY_NAME = "imitation_summary.csv"
VICTIM_SUMMARY_NAME = "victim_summary.csv"

TEST_DIR = PROJECT_DIR / "tests"
