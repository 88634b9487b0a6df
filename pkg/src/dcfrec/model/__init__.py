"""GMF backbone and its optimizer."""

from dcfrec.model.gmf import EmbeddingModel
from dcfrec.model.gmf import backward_and_step
from dcfrec.model.gmf import bce_loss
from dcfrec.model.gmf import init_model
from dcfrec.model.gmf import load_checkpoint
from dcfrec.model.gmf import predict
from dcfrec.model.gmf import save_checkpoint
from dcfrec.model.gmf import score_all_items
from dcfrec.model.optimizer import OptimizerConfig


__all__ = [
    "EmbeddingModel",
    "OptimizerConfig",
    "backward_and_step",
    "bce_loss",
    "init_model",
    "load_checkpoint",
    "predict",
    "save_checkpoint",
    "score_all_items",
]
