from .layers import ShapeError
from .network import (LayerSpec, Network, NetworkSpec, StaleCacheError, architecture,
                      attention_spec, cnn_lstm_spec, lstm_spec, validate)
from .optim import AdamState, adam_step
from .training import TrainReport, TrainingDiverged, train
from .gradcheck import GradCheckResult, gradient_check
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "ShapeError", "LayerSpec", "Network", "NetworkSpec", "StaleCacheError", "architecture",
    "attention_spec", "cnn_lstm_spec", "lstm_spec", "validate", "AdamState", "adam_step",
    "TrainReport", "TrainingDiverged", "train", "GradCheckResult", "gradient_check",
    "load_checkpoint", "save_checkpoint",
]
