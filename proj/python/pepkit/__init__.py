"""Weight-noise ensembling and curvature probes for small softmax classifiers."""

from ._core import (
    CheckpointSeries,
    ConfigError,
    CurvatureEstimate,
    DataError,
    Dataset,
    EnsembleLogLik,
    EpochCheckpoint,
    McEstimate,
    NetworkSpec,
    NumericError,
    ParamVector,
    SigmaCurvePoint,
    SigmaSearchResult,
    TemperatureFit,
    accuracy,
    assign_splits,
    brier,
    calibration_report_json,
    confidences,
    curvature_report_json,
    derive_seed,
    ece_percent,
    ensemble_log_likelihood,
    ensemble_predict,
    fisher_trace,
    fit_temperature,
    golden_section_sigma,
    laplacian_loglik,
    load_checkpoint,
    load_idx,
    logits,
    mean_log_likelihood,
    nll,
    observed_pep_effect,
    overfit_gap,
    pep_effect_direct,
    pep_effect_predicted,
    pep_search_json,
    predict_probs,
    save_checkpoint,
    save_idx,
    scale_logits,
    symmetrized_kld,
    synth_blobs,
    train,
)

__all__ = [
    "CheckpointSeries",
    "ConfigError",
    "CurvatureEstimate",
    "DataError",
    "Dataset",
    "EnsembleLogLik",
    "EpochCheckpoint",
    "McEstimate",
    "NetworkSpec",
    "NumericError",
    "ParamVector",
    "SigmaCurvePoint",
    "SigmaSearchResult",
    "TemperatureFit",
    "accuracy",
    "assign_splits",
    "brier",
    "calibration_report_json",
    "confidences",
    "curvature_report_json",
    "derive_seed",
    "ece_percent",
    "ensemble_log_likelihood",
    "ensemble_predict",
    "fisher_trace",
    "fit_temperature",
    "golden_section_sigma",
    "laplacian_loglik",
    "load_checkpoint",
    "load_idx",
    "logits",
    "mean_log_likelihood",
    "nll",
    "observed_pep_effect",
    "overfit_gap",
    "pep_effect_direct",
    "pep_effect_predicted",
    "pep_search_json",
    "predict_probs",
    "save_checkpoint",
    "save_idx",
    "scale_logits",
    "symmetrized_kld",
    "synth_blobs",
    "train",
]

__version__ = "0.1.0"
