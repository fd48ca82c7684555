from .ddpg import DdpgAgent, TrainingDivergence, select_action
from .mlp import Mlp
from .noise import OuNoise
from .replay import Batch, SplitReplay, Transition

__all__ = ["Batch", "DdpgAgent", "Mlp", "OuNoise", "SplitReplay", "TrainingDivergence", "Transition", "select_action"]
