import numpy as np

from fusionlab.diffcore.tape import Tensor
from fusionlab.lora.adapters import LoraAdapter, lora_apply


class EmbeddingBranch(LoraAdapter):
    """
    Last layer of a frozen backbone for precomputed embeddings: a LoRA adapter over the
    identity map, so a fresh branch passes embeddings through unchanged and training only
    moves the low-rank update.
    """

    def __init__(self, name: str, dim: int, rank: int, seed: int = 0):
        super().__init__(name, np.eye(dim), rank, group=name, seed=seed, trainable=rank > 0)
        self.dim = dim

    def __call__(self, x: Tensor) -> Tensor:
        return lora_apply(self, x)
