"""NLI disagreement toolkit: label conversions, agreement statistics,
relabeling rules, and evaluation metrics backed by the C++ core."""

from nlid._nlid import (  # noqa: F401
    TAXONOMY_CATEGORIES,
    __version__,
    counts_to_distribution,
    distribution_to_multilabel,
    entropy,
    extract_features,
    fourway_report,
    kl_divergence,
    krippendorff_alpha,
    majority,
    mann_whitney_two_sided,
    masi_distance,
    multilabel_report,
    multilabel_to_fourway,
    relabel_counts,
    sigmoid_probs_to_multilabel,
)

__all__ = [
    "TAXONOMY_CATEGORIES",
    "__version__",
    "counts_to_distribution",
    "distribution_to_multilabel",
    "entropy",
    "extract_features",
    "fourway_report",
    "kl_divergence",
    "krippendorff_alpha",
    "majority",
    "mann_whitney_two_sided",
    "masi_distance",
    "multilabel_report",
    "multilabel_to_fourway",
    "relabel_counts",
    "sigmoid_probs_to_multilabel",
]
