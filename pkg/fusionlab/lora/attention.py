import numpy as np

from fusionlab.diffcore import ops
from fusionlab.diffcore.modules import Module
from fusionlab.diffcore.tape import Tensor
from fusionlab.utils.errors import DimensionError, EmptyContextError
from .adapters import LoraAdapter, lora_apply


class CrossModalAttention(Module):
    """
    Attention block whose frozen Q/K/V projections [d×d] carry one LoRA adapter each.\n
    Queries come from one modality and keys/values from the other; passing the same rows
    for both gives ordinary self-attention.
    """

    def __init__(self, name: str, dim: int, rank: int, heads: int = 1, group: str | None = None,
                 seed: int = 0):
        super().__init__(name, group)
        if heads < 1 or dim % heads:
            raise DimensionError(f'{name}: width {dim} does not split into {heads} heads')
        self.dim = dim
        self.heads = heads
        rng = np.random.default_rng(seed)
        self.q, self.k, self.v = (
            self.add_child(LoraAdapter(
                f'{name}.{role}',
                rng.normal(0.0, 1.0 / np.sqrt(dim), size=(dim, dim)),
                rank,
                group=group,
                seed=seed + offset,
            ))
            for offset, role in enumerate(('q', 'k', 'v'), start=1)
        )

    @property
    def head_dim(self) -> int:
        return self.dim // self.heads

    @property
    def adapters(self) -> tuple[LoraAdapter, LoraAdapter, LoraAdapter]:
        return self.q, self.k, self.v

    def update_products(self) -> dict[str, np.ndarray]:
        """The trainable part of each projection, ``B_m·A_m`` for m in q, k, v."""
        return {
            adapter.name: (adapter.B @ adapter.A if adapter.rank else np.zeros((adapter.d, adapter.k)))
            for adapter in self.adapters
        }


def cross_modal_attention(params: CrossModalAttention, v: Tensor, t: Tensor, return_weights: bool = False):
    """
    softmax(Q·Kᵀ/√d_k)·V with Q from the rows of ``v`` and K, V from the rows of ``t``.\n
    Returns the [n_v×d] output, or ``(output, weights)`` with one [n_v×n_t] weight
    tensor per head when ``return_weights`` is set.
    """
    if v.ndim != 2 or t.ndim != 2 or v.shape[1] != params.dim or t.shape[1] != params.dim:
        raise DimensionError(f'{params.name}: inputs {v.shape} and {t.shape} do not match width {params.dim}')
    if t.shape[0] == 0:
        raise EmptyContextError(f'{params.name}: attention needs at least one context row, got shape {t.shape}')
    query = lora_apply(params.q, v)
    key = lora_apply(params.k, t)
    value = lora_apply(params.v, t)
    output, weights = ops.scaled_dot_product_attention(query, key, value, heads=params.heads)
    if return_weights:
        return output, weights
    return output
