from .autodiff import GraphError, Tensor, concat, grad, parameter, zero_grad
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import grad_check
from .layers import DenseNet, GruCell, gru_forward, gru_sequence
from .optim import Adam, NonFiniteGradientError, OptimizerState, adam_step

__all__ = [
    "Adam",
    "DenseNet",
    "GraphError",
    "GruCell",
    "NonFiniteGradientError",
    "OptimizerState",
    "Tensor",
    "adam_step",
    "concat",
    "grad",
    "grad_check",
    "gru_forward",
    "gru_sequence",
    "load_checkpoint",
    "parameter",
    "save_checkpoint",
    "zero_grad",
]
