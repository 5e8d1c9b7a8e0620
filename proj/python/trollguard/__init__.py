"""Troll counter-response pipeline and evaluation toolkit."""

from ._core import (
    AnnotationStore,
    TrollguardError,
    alignment_report,
    chi2_sf,
    coarse_predict,
    format_p,
    friedman,
    hellinger,
    ingest_filter,
    joint_distribution,
    jsd,
    kl,
    map_predict,
    moderate,
    normal_sf,
    preference_distribution,
    preference_table_csv,
    prompt_hash,
    render_prompt,
    response_strategies,
    self_consistency_accuracy,
    significance_report,
    trolling_strategies,
    wilcoxon_signed_rank,
)

__all__ = [
    "AnnotationStore",
    "TrollguardError",
    "alignment_report",
    "chi2_sf",
    "coarse_predict",
    "format_p",
    "friedman",
    "hellinger",
    "ingest_filter",
    "joint_distribution",
    "jsd",
    "kl",
    "map_predict",
    "moderate",
    "normal_sf",
    "preference_distribution",
    "preference_table_csv",
    "prompt_hash",
    "render_prompt",
    "response_strategies",
    "self_consistency_accuracy",
    "significance_report",
    "trolling_strategies",
    "wilcoxon_signed_rank",
]
