import numpy as np

from fusionlab.utils.errors import ConfigurationError


class Adam:
    """
    Adam with bias correction and one step counter per parameter, so groups that sit out
    a frozen phase resume their own moment estimates. Updates the master arrays in place.
    """

    def __init__(self, learning_rate: float = 1e-4, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if learning_rate <= 0:
            raise ConfigurationError(f'learning rate must be positive, got {learning_rate}')
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ConfigurationError(f'Adam betas must lie in [0, 1), got {beta1} and {beta2}')
        if eps <= 0:
            raise ConfigurationError(f'Adam eps must be positive, got {eps}')
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.first_moment: dict[str, np.ndarray] = {}
        self.second_moment: dict[str, np.ndarray] = {}
        self.steps: dict[str, int] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        for name, grad in grads.items():
            param = params[name]
            grad = np.asarray(grad, dtype=np.float64)
            if grad.shape != param.shape:
                raise ConfigurationError(f'{name}: gradient {grad.shape} does not match parameter {param.shape}')
            step = self.steps.get(name, 0) + 1
            m = self.beta1 * self.first_moment.get(name, 0.0) + (1.0 - self.beta1) * grad
            v = self.beta2 * self.second_moment.get(name, 0.0) + (1.0 - self.beta2) * grad * grad
            self.first_moment[name] = m
            self.second_moment[name] = v
            self.steps[name] = step
            m_hat = m / (1.0 - self.beta1 ** step)
            v_hat = v / (1.0 - self.beta2 ** step)
            param -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
