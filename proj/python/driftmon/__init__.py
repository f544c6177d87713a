"""Embedding drift monitoring: fit a baseline, estimate thresholds, watch windows."""

from ._driftmon import (
    BaselineModel,
    ClusteringResult,
    DriftError,
    GaussianSummary,
    KSearchEntry,
    LabelWindowStat,
    OfflineConfig,
    PrototypeEntry,
    ThresholdSet,
    WindowReport,
    analyze_window,
    cluster_select,
    estimate_gaussian,
    estimate_thresholds,
    extract_prototypes,
    fdd,
    fit_baseline,
    gaussian_distance,
    generate_pattern,
    h_dd,
    load_bundle,
    purity,
    save_bundle,
    spearman,
    synth_pools,
)

__all__ = [
    "BaselineModel",
    "ClusteringResult",
    "DriftError",
    "GaussianSummary",
    "KSearchEntry",
    "LabelWindowStat",
    "OfflineConfig",
    "PrototypeEntry",
    "ThresholdSet",
    "WindowReport",
    "analyze_window",
    "cluster_select",
    "estimate_gaussian",
    "estimate_thresholds",
    "extract_prototypes",
    "fdd",
    "fit_baseline",
    "gaussian_distance",
    "generate_pattern",
    "h_dd",
    "load_bundle",
    "purity",
    "save_bundle",
    "spearman",
    "synth_pools",
]
