from .agent import Td3Agent, Td3Config, actor_loss_and_grads, critic_loss_and_grads, select_action
from .nn import Adam, Mlp, soft_update
from .noise import OUNoise
from .replay import Batch, ReplayBuffer
from .train import TrainLog, train

__all__ = ["Adam", "Batch", "Mlp", "OUNoise", "ReplayBuffer", "Td3Agent", "Td3Config", "TrainLog",
           "actor_loss_and_grads", "critic_loss_and_grads", "select_action", "soft_update", "train"]
