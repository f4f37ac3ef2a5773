from .dataclass import Activation, GradientSet, NetworkSpec
from .io import load_checkpoint, save_checkpoint
from .network import (
    Network,
    Objective,
    backward,
    forward,
    forward_batch,
    init_network,
    input_gradient,
    input_gradient_batch,
)
from .optimizer import OptimizerState, init_optimizer, optimizer_step

__all__ = [
    "Activation",
    "GradientSet",
    "Network",
    "NetworkSpec",
    "Objective",
    "OptimizerState",
    "backward",
    "forward",
    "forward_batch",
    "init_network",
    "init_optimizer",
    "input_gradient",
    "input_gradient_batch",
    "load_checkpoint",
    "optimizer_step",
    "save_checkpoint",
]
