"""Dataset management, training loop and experiment protocols."""

from .manifest import (
    ImageRecord,
    build_manifest,
    load_manifest,
    save_manifest,
    select_split,
    split_dataset,
    split_sizes,
)
from .metrics import (
    Confusion,
    EpochStats,
    Metrics,
    classify,
    compute_metrics,
    metrics_to_dict,
    save_history_csv,
    save_metrics_json,
)
from .protocols import CategoryTable, cross_dataset, jpeg_robustness, leave_one_category_out
from .training import TrainConfig, evaluate, extract_features, fit, label01, train

__all__ = [
    "CategoryTable",
    "Confusion",
    "EpochStats",
    "ImageRecord",
    "Metrics",
    "TrainConfig",
    "build_manifest",
    "classify",
    "compute_metrics",
    "cross_dataset",
    "evaluate",
    "extract_features",
    "fit",
    "jpeg_robustness",
    "label01",
    "leave_one_category_out",
    "load_manifest",
    "metrics_to_dict",
    "save_history_csv",
    "save_metrics_json",
    "save_manifest",
    "select_split",
    "split_dataset",
    "split_sizes",
    "train",
]
