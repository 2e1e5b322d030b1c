"""Paddle-stroke onset/ending detection: models, event extraction and soft scoring."""

from ._strokenet import (
    ConfigError,
    DataError,
    NumericError,
    architecture_names,
    count_params,
    layer_params,
    summary_table,
    minmax_normalize,
    encode_ternary,
    gaussian_smooth,
    savgol_filter,
    savgol_coefficients,
    percentile,
    extract_events,
    cluster_detections,
    membership,
    soft_confusion,
    evaluate_windowed,
    generate_run,
    init_params,
    predict,
    load_weights,
    save_weights,
)

__all__ = [
    "ConfigError",
    "DataError",
    "NumericError",
    "architecture_names",
    "count_params",
    "layer_params",
    "summary_table",
    "minmax_normalize",
    "encode_ternary",
    "gaussian_smooth",
    "savgol_filter",
    "savgol_coefficients",
    "percentile",
    "extract_events",
    "cluster_detections",
    "membership",
    "soft_confusion",
    "evaluate_windowed",
    "generate_run",
    "init_params",
    "predict",
    "load_weights",
    "save_weights",
]
