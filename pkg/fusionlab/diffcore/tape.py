from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from fusionlab.utils.errors import ConfigurationError, DimensionError

PRECISIONS = {
    'float64': np.float64,
    'float32': np.float32,
}


class Tensor:
    """
    Immutable value produced on a GradTape.\n
    ``data`` is a read-only numpy array in the tape's precision.
    """
    __slots__ = ('data', 'tape', 'index', 'requires_grad')

    def __init__(self, data: np.ndarray, tape: 'GradTape', index: int, requires_grad: bool):
        data.setflags(write=False)
        self.data = data
        self.tape = tape
        self.index = index
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError(f'item() needs a single value, tensor has shape {self.shape}')
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def __repr__(self):
        return f'Tensor(shape={self.shape}, requires_grad={self.requires_grad})'


@dataclass(frozen=True)
class _Node:
    output: int
    parents: tuple[Tensor, ...]
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]


class GradTape:
    """
    Ordered record of executed primitives plus the parameter registry.\n
    Parameters whose group is in ``frozen_groups`` are bound as constants, so they never
    receive a gradient and the tape records nothing for work that only touches them.
    """

    def __init__(self, precision: str = 'float64', frozen_groups=()):
        if precision not in PRECISIONS:
            raise ConfigurationError(f'unknown precision {precision!r}, expected one of {sorted(PRECISIONS)}')
        self.precision = precision
        self.dtype = np.dtype(PRECISIONS[precision])
        self.frozen_groups = frozenset(frozen_groups)
        self._nodes: list[_Node] = []
        self._parameters: dict[str, Tensor] = {}
        self._bound: dict[str, Tensor] = {}
        self._counter = 0

    def _next_index(self) -> int:
        self._counter += 1
        return self._counter

    def _make(self, value, requires_grad: bool) -> Tensor:
        data = np.array(value, dtype=self.dtype)
        return Tensor(data, self, self._next_index(), requires_grad)

    def constant(self, value) -> Tensor:
        return self._make(value, requires_grad=False)

    def param(self, name: str, value: np.ndarray, group: str | None = None) -> Tensor:
        """Binds a named parameter once per tape; later calls return the same tensor."""
        if name in self._bound:
            return self._bound[name]
        trainable = group not in self.frozen_groups
        tensor = self._make(value, requires_grad=trainable)
        self._bound[name] = tensor
        if trainable:
            self._parameters[name] = tensor
        return tensor

    @property
    def parameters(self) -> dict[str, Tensor]:
        return dict(self._parameters)

    def record(self, data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
        for parent in parents:
            if parent.tape is not self:
                raise ConfigurationError('tensors from different tapes cannot be combined')
        requires_grad = any(parent.requires_grad for parent in parents)
        output = Tensor(np.asarray(data, dtype=self.dtype), self, self._next_index(), requires_grad)
        if requires_grad:
            self._nodes.append(_Node(output.index, tuple(parents), backward))
        return output

    def backward(self, loss: Tensor) -> dict[str, np.ndarray]:
        """
        Replays the tape in reverse from a scalar loss.\n
        Returns exactly one gradient per registered parameter, shaped like the parameter.
        """
        if loss.size != 1:
            raise DimensionError(f'backward needs a scalar loss, got shape {loss.shape}')
        grads: dict[int, np.ndarray] = {}
        if loss.requires_grad:
            grads[loss.index] = np.ones_like(loss.data)
        # nodes are appended in creation order, so reverse order is topological
        for node in reversed(self._nodes):
            upstream = grads.pop(node.output, None)
            if upstream is None:
                continue
            for parent, grad in zip(node.parents, node.backward(upstream)):
                if grad is None or not parent.requires_grad:
                    continue
                if parent.index in grads:
                    grads[parent.index] = grads[parent.index] + grad
                else:
                    grads[parent.index] = np.array(grad, dtype=self.dtype)
        return {
            name: grads.get(tensor.index, np.zeros_like(tensor.data)).reshape(tensor.shape)
            for name, tensor in self._parameters.items()
        }
