import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from fusionlab.utils.errors import EvaluationError
from .tape import GradTape, Tensor

logger = logging.getLogger(__name__)

DENOMINATOR_FLOOR = 1e-8


@dataclass(frozen=True)
class GradCheckReport:
    errors: dict[str, float]
    eps: float
    tolerance: float
    checked: dict[str, int]

    @property
    def passed(self) -> bool:
        return all(error < self.tolerance for error in self.errors.values())

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    def to_text(self) -> str:
        lines = [f'eps = {self.eps:g}', f'tolerance = {self.tolerance:g}']
        for name, error in self.errors.items():
            lines.append(f'{name}: max_rel_err = {error:.3e} over {self.checked[name]} coords')
        lines.append(f'passed = {"true" if self.passed else "false"}')
        return '\n'.join(lines)


def _evaluate(fn: Callable[[GradTape], Tensor]) -> float:
    value = fn(GradTape('float64')).item()
    if not np.isfinite(value):
        raise EvaluationError(f'function value is not finite: {value}')
    return value


def grad_check(
        fn: Callable[[GradTape], Tensor],
        params: dict[str, np.ndarray],
        eps: float = 1e-5,
        tolerance: float = 1e-4,
        max_coords: int | None = None,
        seed: int = 0,
) -> GradCheckReport:
    """
    Compares tape gradients against central differences (f(θ+ε) - f(θ-ε)) / 2ε.\n
    ``fn`` builds the scalar on the tape it is given and must read ``params`` arrays, which
    are perturbed in place and restored. With ``max_coords`` set, that many coordinates per
    parameter are sampled; otherwise every coordinate is checked. Always runs in 64-bit.
    """
    if eps <= 0:
        raise ValueError('eps must be positive')
    tape = GradTape('float64')
    loss = fn(tape)
    if not np.isfinite(loss.item()):
        raise EvaluationError(f'function value is not finite: {loss.item()}')
    analytic = tape.backward(loss)
    rng = np.random.default_rng(seed)

    errors, checked = {}, {}
    for name, array in params.items():
        gradient = analytic.get(name, np.zeros_like(array))
        flat_count = array.size
        if max_coords is None or max_coords >= flat_count:
            coords = np.arange(flat_count)
        else:
            coords = np.sort(rng.choice(flat_count, size=max_coords, replace=False))
        worst = 0.0
        for flat in coords:
            index = np.unravel_index(flat, array.shape)
            original = array[index]
            try:
                array[index] = original + eps
                upper = _evaluate(fn)
                array[index] = original - eps
                lower = _evaluate(fn)
            finally:
                array[index] = original
            numeric = (upper - lower) / (2 * eps)
            exact = float(gradient[index])
            denominator = max(abs(exact), abs(numeric), DENOMINATOR_FLOOR)
            worst = max(worst, abs(exact - numeric) / denominator)
        errors[name] = worst
        checked[name] = len(coords)
        logger.debug('grad check %s: max relative error %.3e over %d coords', name, worst, len(coords))
    return GradCheckReport(errors=errors, eps=eps, tolerance=tolerance, checked=checked)
