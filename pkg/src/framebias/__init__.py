"""Frame-length bias toolkit for trimmed-clip text-video retrieval datasets.

Audits per-class train/test frame-length discrepancy, applies debiasing
filters (greedy margin filter and single-class removal), scores similarity
matrices with relevancy-aware retrieval metrics, and ships a simulator that
reproduces the bias mechanism at desk scale.
"""

from framebias.dataset import (
    ActionClass,
    ClipRecord,
    Dataset,
    class_of,
    frame_length,
    parse_annotations,
    to_native_csv,
)
from framebias.audit import (
    ClassStats,
    LengthHistogram,
    class_stats,
    discrepancy_table,
    global_length_summary,
    length_histogram,
)
from framebias.filtering import (
    FilterConfig,
    FilterReport,
    filter_margin,
    filter_single_class,
    sum_similarity_matrices,
)
from framebias.matrices import RelevancyMatrix, SimilarityMatrix
from framebias.metrics import (
    MetricsReport,
    average_precision,
    build_relevancy,
    gt_rank,
    inspect_query,
    map_average,
    metrics_report,
    ndcg_average,
    ndcg_query,
    recall_at_k,
    topk_avg_length,
)
from framebias.simulate import SimConfig, SimOutput, bias_sweep, synth_dataset, synth_similarity

__version__ = "0.1.0"

__all__ = [
    "ActionClass",
    "ClipRecord",
    "Dataset",
    "class_of",
    "frame_length",
    "parse_annotations",
    "to_native_csv",
    "ClassStats",
    "LengthHistogram",
    "class_stats",
    "discrepancy_table",
    "global_length_summary",
    "length_histogram",
    "FilterConfig",
    "FilterReport",
    "filter_margin",
    "filter_single_class",
    "sum_similarity_matrices",
    "SimilarityMatrix",
    "RelevancyMatrix",
    "MetricsReport",
    "average_precision",
    "build_relevancy",
    "gt_rank",
    "inspect_query",
    "map_average",
    "metrics_report",
    "ndcg_average",
    "ndcg_query",
    "recall_at_k",
    "topk_avg_length",
    "SimConfig",
    "SimOutput",
    "bias_sweep",
    "synth_dataset",
    "synth_similarity",
    "__version__",
]
