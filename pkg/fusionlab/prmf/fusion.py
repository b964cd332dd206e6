"""
Progressive robust multi-modal fusion: the image feature is projected into the text
space, a confidence network scores the text from the raw image and text features, and
the fused feature is the confidence-weighted convex combination of the two.
"""
from dataclasses import dataclass

import numpy as np

from fusionlab.diffcore import ops
from fusionlab.diffcore.modules import Module
from fusionlab.diffcore.tape import Tensor
from fusionlab.utils.errors import DimensionError, DomainError

PROJECTION_GROUP = 'projection'
CONFIDENCE_GROUP = 'confidence'
CLASSIFIER_GROUP = 'classifier'


def fan_in_normal(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / shape[1]), size=shape)


class Affine(Module):
    def __init__(self, name: str, in_dim: int, out_dim: int, group: str, rng: np.random.Generator,
                 zero: bool = False):
        super().__init__(name, group)
        self.in_dim = in_dim
        self.out_dim = out_dim
        weight = np.zeros((out_dim, in_dim)) if zero else fan_in_normal(rng, (out_dim, in_dim))
        self.add_parameter('weight', weight)
        self.add_parameter('bias', np.zeros(out_dim))

    def __call__(self, x: Tensor) -> Tensor:
        tape = x.tape
        return ops.affine(x, self.param(tape, 'weight'), self.param(tape, 'bias'))

    @property
    def weight(self) -> np.ndarray:
        return self._parameters['weight']

    @property
    def bias(self) -> np.ndarray:
        return self._parameters['bias']


class PrmfParams(Module):
    """
    Projection (d_t×d_i), confidence (1×(d_i+d_t)) and classifier (K×d_t) layers.\n
    The confidence layer starts at zero so a fresh block weighs both modalities at 0.5.
    With ``separate_image_head`` the image-only logits get their own classifier instead of
    sharing the fused one.
    """

    def __init__(self, image_dim: int = 512, text_dim: int = 768, num_classes: int = 3,
                 separate_image_head: bool = False, seed: int = 0, name: str = 'prmf'):
        super().__init__(name)
        self.image_dim = image_dim
        self.text_dim = text_dim
        self.num_classes = num_classes
        rng = np.random.default_rng(seed)
        self.projection = self.add_child(Affine(PROJECTION_GROUP, image_dim, text_dim, PROJECTION_GROUP, rng))
        self.confidence = self.add_child(
            Affine(CONFIDENCE_GROUP, image_dim + text_dim, 1, CONFIDENCE_GROUP, rng, zero=True)
        )
        self.classifier = self.add_child(Affine(CLASSIFIER_GROUP, text_dim, num_classes, CLASSIFIER_GROUP, rng))
        self.image_classifier = None
        if separate_image_head:
            self.image_classifier = self.add_child(
                Affine('image_classifier', text_dim, num_classes, CLASSIFIER_GROUP, rng)
            )


@dataclass(frozen=True)
class PrmfOutput:
    fused: Tensor
    alpha: Tensor | None
    fused_logits: Tensor
    image_logits: Tensor


def _check_width(name: str, x: Tensor, width: int):
    if x.ndim not in (1, 2) or x.shape[-1] != width:
        raise DimensionError(f'{name}: expected width {width}, got shape {x.shape}')


def project_image(params: PrmfParams, image: Tensor) -> Tensor:
    """I' = W_proj·I + b_proj, for one vector or a batch of rows."""
    _check_width('project_image', image, params.image_dim)
    return params.projection(image)


def confidence(params: PrmfParams, image: Tensor, text: Tensor) -> Tensor:
    """
    α = sigmoid(W_conf·[I; T] + b_conf) on the raw image feature.\n
    Returns a scalar tensor for vectors and one α per row for batches.
    """
    _check_width('confidence', image, params.image_dim)
    _check_width('confidence', text, params.text_dim)
    score = ops.activation('sigmoid', params.confidence(ops.concat(image, text)))
    return ops.reshape(score, () if image.ndim == 1 else (image.shape[0],))


def fuse(text: Tensor, projected: Tensor, alpha: Tensor) -> Tensor:
    """F = α·T + (1 - α)·I'. α must lie in [0, 1]."""
    values = alpha.data
    if np.any(~np.isfinite(values)) or np.any(values < 0) or np.any(values > 1):
        raise DomainError(f'alpha must lie in [0, 1], got {values}')
    return ops.convex_mix(text, projected, alpha)


def classify(params: PrmfParams, feature: Tensor, image_head: bool = False) -> Tensor:
    head = params.image_classifier if image_head and params.image_classifier is not None else params.classifier
    return head(feature)


def forward_prmf(params: PrmfParams, image: Tensor, text: Tensor, fixed_alpha: float | None = None) -> PrmfOutput:
    """
    Projection, confidence and fusion, then the classifier on both F and I'.\n
    ``fixed_alpha`` replaces the confidence network with a constant weight.
    """
    projected = project_image(params, image)
    _check_width('forward_prmf', text, params.text_dim)
    if fixed_alpha is None:
        alpha = confidence(params, image, text)
    else:
        shape = () if image.ndim == 1 else (image.shape[0],)
        alpha = image.tape.constant(np.full(shape, fixed_alpha))
    fused = fuse(text, projected, alpha)
    return PrmfOutput(
        fused=fused,
        alpha=alpha,
        fused_logits=classify(params, fused),
        image_logits=classify(params, projected, image_head=True),
    )
