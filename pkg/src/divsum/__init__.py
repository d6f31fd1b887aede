"""Diversity-controlled summarization of image feature-vector corpora."""

from .core import (
    Dataset,
    DiversityControlSet,
    EvaluationLabels,
    ExternalScores,
    FeatureVector,
    InvalidInputError,
    QuerySpec,
    ReferenceSet,
    ScoreMatrix,
    Summary,
    SummaryEntry,
)
from .scoring import build_score_matrix, ds_scores, query_scores
from .selection import (
    SelectionConfig,
    autolabel,
    autolabel_rwd,
    dds_iterative,
    det_greedy,
    ds_top,
    mmr,
    mmr_balanced,
    qs_balanced,
    qs_top,
    rank_all,
)
from .similarity import avg_sim, cosine_distance, cosine_similarity, diversity_matrix, z_normalize

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DiversityControlSet",
    "EvaluationLabels",
    "ExternalScores",
    "FeatureVector",
    "InvalidInputError",
    "QuerySpec",
    "ReferenceSet",
    "ScoreMatrix",
    "SelectionConfig",
    "Summary",
    "SummaryEntry",
    "autolabel",
    "autolabel_rwd",
    "avg_sim",
    "build_score_matrix",
    "cosine_distance",
    "cosine_similarity",
    "dds_iterative",
    "det_greedy",
    "diversity_matrix",
    "ds_scores",
    "ds_top",
    "mmr",
    "mmr_balanced",
    "qs_balanced",
    "qs_top",
    "query_scores",
    "rank_all",
    "z_normalize",
]
