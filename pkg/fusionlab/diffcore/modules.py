import numpy as np

from fusionlab.utils.errors import ConfigMismatchError
from .tape import GradTape, Tensor


class Module:
    """
    Owns float64 master arrays under fully qualified names.\n
    Parameters are trainable and updated in place by the optimizer; buffers are frozen
    and stored read-only. ``group`` names the freeze group the parameters belong to.
    """

    def __init__(self, name: str, group: str | None = None):
        self.name = name
        self.group = group
        self._parameters: dict[str, np.ndarray] = {}
        self._buffers: dict[str, np.ndarray] = {}
        self._children: list['Module'] = []

    def qualify(self, key: str) -> str:
        return f'{self.name}.{key}'

    def add_parameter(self, key: str, value) -> np.ndarray:
        array = np.array(value, dtype=np.float64)
        self._parameters[key] = array
        return array

    def add_buffer(self, key: str, value) -> np.ndarray:
        array = np.array(value, dtype=np.float64)
        array.setflags(write=False)
        self._buffers[key] = array
        return array

    def add_child(self, module: 'Module') -> 'Module':
        self._children.append(module)
        return module

    def param(self, tape: GradTape, key: str) -> Tensor:
        return tape.param(self.qualify(key), self._parameters[key], group=self.group)

    def buffer(self, tape: GradTape, key: str) -> Tensor:
        return tape.constant(self._buffers[key])

    def named_parameters(self) -> dict[str, np.ndarray]:
        named = {self.qualify(key): value for key, value in self._parameters.items()}
        for child in self._children:
            named.update(child.named_parameters())
        return named

    def named_buffers(self) -> dict[str, np.ndarray]:
        named = {self.qualify(key): value for key, value in self._buffers.items()}
        for child in self._children:
            named.update(child.named_buffers())
        return named

    def parameter_groups(self) -> dict[str, str | None]:
        groups = {self.qualify(key): self.group for key in self._parameters}
        for child in self._children:
            groups.update(child.parameter_groups())
        return groups

    def names_in_groups(self, groups) -> list[str]:
        groups = set(groups)
        return [name for name, group in self.parameter_groups().items() if group in groups]

    def parameter_count(self) -> int:
        return sum(value.size for value in self.named_parameters().values())

    def state_dict(self) -> dict[str, np.ndarray]:
        """Parameters then buffers, in registration order."""
        state = {name: value.copy() for name, value in self.named_parameters().items()}
        state.update({name: value.copy() for name, value in self.named_buffers().items()})
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]):
        expected = set(self.named_parameters()) | set(self.named_buffers())
        if set(state) != expected:
            missing = sorted(expected - set(state))
            unexpected = sorted(set(state) - expected)
            raise ConfigMismatchError(f'state does not match model: missing {missing}, unexpected {unexpected}')
        self._load(state)

    def _load(self, state: dict[str, np.ndarray]):
        for key, target in self._parameters.items():
            value = np.asarray(state[self.qualify(key)])
            if value.shape != target.shape:
                raise ConfigMismatchError(f'{self.qualify(key)}: shape {value.shape}, model expects {target.shape}')
            np.copyto(target, value)
        for key, target in list(self._buffers.items()):
            value = np.asarray(state[self.qualify(key)])
            if value.shape != target.shape:
                raise ConfigMismatchError(f'{self.qualify(key)}: shape {value.shape}, model expects {target.shape}')
            self.add_buffer(key, value)
        for child in self._children:
            child._load(state)
