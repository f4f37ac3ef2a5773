from .crop import (
    CropPolicy,
    crop_policy,
    evaluate_crop,
    feasible_actions,
    spearman_correlation,
)
from .dataclass import CropConfig, CropReport, CropRow

__all__ = [
    "CropConfig",
    "CropPolicy",
    "CropReport",
    "CropRow",
    "crop_policy",
    "evaluate_crop",
    "feasible_actions",
    "spearman_correlation",
]
