from fusionlab.diffcore import ops
from fusionlab.diffcore.tape import Tensor
from fusionlab.utils.errors import DomainError


def total_loss(fused_logits: Tensor, image_logits: Tensor, labels, lam: float) -> Tensor:
    """λ·CE(fused_logits, y) + (1 - λ)·CE(image_logits, y); either term alone at λ = 1 or 0."""
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f'lambda must lie in [0, 1], got {lam}')
    if fused_logits is image_logits or lam == 1.0:
        return ops.softmax_cross_entropy(fused_logits, labels)
    if lam == 0.0:
        return ops.softmax_cross_entropy(image_logits, labels)
    fused = ops.softmax_cross_entropy(fused_logits, labels)
    image = ops.softmax_cross_entropy(image_logits, labels)
    return ops.add(ops.scale(fused, lam), ops.scale(image, 1.0 - lam))
