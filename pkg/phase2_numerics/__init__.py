"""
Phase 2: Numerics toolkit.

Float32 tensors, a recorded operation tape for reverse-mode gradients, dense and
conv2d layers, Adam, and the GIRL checkpoint format. Sized for the agent and
discriminator networks; no GPU, no graph compiler.
"""

from .checkpoint import load_checkpoint, load_into, save_checkpoint
from .errors import CheckpointError, NonFiniteError, NumericsError, ShapeError, TapeError
from .layers import ConvMeta, LayerParams, collect_parameters, conv2d_params, dense_params, forward
from .ops import log_softmax, softmax
from .optim import Adam, OptimState, optim_step
from .tensor import Parameter, Tape, Tensor, backward

__all__ = [
    "Adam",
    "CheckpointError",
    "ConvMeta",
    "LayerParams",
    "NonFiniteError",
    "NumericsError",
    "OptimState",
    "Parameter",
    "ShapeError",
    "Tape",
    "TapeError",
    "Tensor",
    "backward",
    "collect_parameters",
    "conv2d_params",
    "dense_params",
    "forward",
    "load_checkpoint",
    "load_into",
    "log_softmax",
    "optim_step",
    "save_checkpoint",
    "softmax",
]
