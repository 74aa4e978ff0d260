from .strategies import (DIVERGENCE_LIMIT, KINDS, HorizonForecast, StrategyError, StrategySpec,
                         TrainedStrategy, extend_inputs, fit, fit_direct, fit_hybrid,
                         fit_multioutput, fit_recursive, forecast, hybrid_training_inputs,
                         leakage_audit, predict_normalized)
from .evaluation import (LOOKAHEAD_COLUMNS, TABLE_COLUMNS, EvaluationError, LookaheadReport,
                         average_reports, evaluate, format_lookahead, format_table,
                         lookahead_report, parse_table, predict_dataset)
from .baselines import baseline_geth, baseline_gse, rolling_baseline_geth
from .catalog import TABLE_MODELS, spec_from_label
from .data import Prepared, prepare, preprocess

__all__ = [
    "DIVERGENCE_LIMIT", "KINDS", "HorizonForecast", "StrategyError", "StrategySpec",
    "TrainedStrategy", "extend_inputs", "fit", "fit_direct", "fit_hybrid", "fit_multioutput",
    "fit_recursive", "forecast", "hybrid_training_inputs", "leakage_audit", "predict_normalized",
    "LOOKAHEAD_COLUMNS", "TABLE_COLUMNS", "EvaluationError", "LookaheadReport",
    "average_reports", "evaluate", "format_lookahead", "format_table", "lookahead_report",
    "parse_table", "predict_dataset", "baseline_geth", "baseline_gse", "rolling_baseline_geth",
    "TABLE_MODELS", "spec_from_label", "Prepared", "prepare", "preprocess",
]
