import numpy as np

from fusionlab.diffcore import ops
from fusionlab.diffcore.modules import Module
from fusionlab.diffcore.tape import Tensor
from fusionlab.utils.errors import ConfigurationError, DimensionError


def lora_param_count(d: int, k: int, r: int) -> tuple[int, int]:
    """Returns (trainable, full): r·(d + k) low-rank scalars against d·k dense ones."""
    if d < 1 or k < 1:
        raise ConfigurationError(f'adapter dimensions must be positive, got d={d}, k={k}')
    if not 0 <= r <= min(d, k):
        raise ConfigurationError(f'rank {r} outside [0, {min(d, k)}]')
    return r * (d + k), d * k


class LoraAdapter(Module):
    """
    Frozen base weight ``W0`` [d×k] with a trainable low-rank update ``B·A``.\n
    ``B`` [d×r] starts at zero and ``A`` [r×k] is drawn from U(-1/√k, 1/√k), so a fresh
    adapter reproduces the frozen map exactly. No α/r scaling is applied to the update.
    A rank-0 adapter carries no factors and may only be applied with ``trainable=False``.
    """

    def __init__(self, name: str, base, rank: int, group: str | None = None, seed: int = 0,
                 trainable: bool = True):
        super().__init__(name, group)
        base = np.asarray(base, dtype=np.float64)
        if base.ndim != 2:
            raise DimensionError(f'{name}: base weight must be a matrix, got shape {base.shape}')
        self.d, self.k = base.shape
        lora_param_count(self.d, self.k, rank)
        self.rank = rank
        self.trainable = trainable
        self.add_buffer('W0', base)
        if rank > 0:
            bound = 1.0 / np.sqrt(self.k)
            rng = np.random.default_rng(seed)
            self.add_parameter('B', np.zeros((self.d, rank)))
            self.add_parameter('A', rng.uniform(-bound, bound, size=(rank, self.k)))

    @property
    def W0(self) -> np.ndarray:
        return self._buffers['W0']

    @property
    def B(self) -> np.ndarray:
        return self._parameters['B']

    @property
    def A(self) -> np.ndarray:
        return self._parameters['A']

    def trainable_parameter_count(self) -> int:
        return self.parameter_count()

    def __repr__(self):
        return f'LoraAdapter({self.name!r}, d={self.d}, k={self.k}, rank={self.rank})'


def lora_apply(adapter: LoraAdapter, x: Tensor) -> Tensor:
    """
    (W0 + B·A)·x computed as W0·x + B·(A·x), for x of shape [k] or rows [n×k].\n
    The dense sum is never formed; ``W0`` is bound as a constant so gradients reach only
    ``B`` and ``A``.
    """
    if adapter.rank == 0 and adapter.trainable:
        raise ConfigurationError(f'{adapter.name}: a rank-0 adapter has no trainable update')
    tape = x.tape
    base = ops.affine(x, adapter.buffer(tape, 'W0'))
    if adapter.rank == 0:
        return base
    reduced = ops.affine(x, adapter.param(tape, 'A'))
    return ops.add(base, ops.affine(reduced, adapter.param(tape, 'B')))


def merge_adapter(adapter: LoraAdapter) -> np.ndarray:
    if adapter.rank == 0:
        return adapter.W0.copy()
    return adapter.W0 + adapter.B @ adapter.A
