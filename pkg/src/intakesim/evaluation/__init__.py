from .alignment import (
    AblationReport,
    AlignmentReport,
    SuspicionAlignment,
    TrustTrajectory,
    ablation_run,
    binarize_human,
    default_arms,
    diagnostic_alignment,
    strata_counts,
    stratified_sample,
    suspicion_alignment,
)
from .metrics import ConfusionMatrix, MetricsReport, classification_metrics, confusion
from .realism import Dimension, RealismScore, presentation_order, rate_realism, realism_table
from .stats import auc, cohens_d, compare_groups, icc_two_way, pearson

__all__ = [
    "AblationReport", "AlignmentReport", "ConfusionMatrix", "Dimension", "MetricsReport",
    "RealismScore", "SuspicionAlignment", "TrustTrajectory", "ablation_run", "auc",
    "binarize_human", "classification_metrics", "cohens_d", "compare_groups", "confusion",
    "default_arms", "diagnostic_alignment", "icc_two_way", "pearson", "presentation_order",
    "rate_realism", "realism_table", "strata_counts", "stratified_sample", "suspicion_alignment",
]
