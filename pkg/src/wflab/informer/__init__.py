"""Attention-based sequence forecaster: embedding, sparse attention,
distilling encoder, decoder, training losses, and the training loop."""
from .config import Batch, InformerConfig
from .losses import gmadl_loss, quantile_loss, rmse_loss
from .model import InformerModel, forward, init_model
from .predict import forecasts_by_level, predict_series
from .training import SampleSet, TrainingLog, ValidationPoint, train
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Batch",
    "InformerConfig",
    "InformerModel",
    "SampleSet",
    "TrainingLog",
    "ValidationPoint",
    "forecasts_by_level",
    "forward",
    "gmadl_loss",
    "init_model",
    "load_checkpoint",
    "predict_series",
    "quantile_loss",
    "rmse_loss",
    "save_checkpoint",
    "train",
]
