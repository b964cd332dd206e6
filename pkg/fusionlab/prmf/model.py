from dataclasses import asdict, dataclass

import numpy as np

from fusionlab.diffcore import ops
from fusionlab.diffcore.modules import Module
from fusionlab.diffcore.tape import GradTape, Tensor
from fusionlab.encoders.branch import EmbeddingBranch
from fusionlab.encoders.conv import VISUAL_ENCODER_GROUP, ToyConvEncoder, conv_encode
from fusionlab.encoders.text import TEXT_ENCODER_GROUP, ToyTextEncoder, text_encode_batch
from fusionlab.utils.errors import ConfigurationError
from .fusion import PROJECTION_GROUP, Affine, PrmfOutput, PrmfParams, classify, forward_prmf, project_image

FUSION_MODES = ('prmf', 'concat', 'image_only', 'text_only')
PARAMETER_GROUPS = (VISUAL_ENCODER_GROUP, TEXT_ENCODER_GROUP, 'projection', 'confidence', 'classifier')


@dataclass(frozen=True)
class ModelConfig:
    """
    ``fusion`` selects the full block or an ablation: ``concat`` replaces gating with
    concatenation [I'; T] and an affine map back to d_t, ``image_only`` and ``text_only``
    drop a branch. ``fixed_alpha`` replaces the confidence network.
    """
    image_dim: int = 512
    text_dim: int = 768
    num_classes: int = 3
    lora_rank: int = 8
    fusion: str = 'prmf'
    fixed_alpha: float | None = None
    separate_image_head: bool = False
    raw_inputs: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.fusion not in FUSION_MODES:
            raise ConfigurationError(f'unknown fusion mode {self.fusion!r}, expected one of {FUSION_MODES}')
        if self.fixed_alpha is not None and not 0.0 <= self.fixed_alpha <= 1.0:
            raise ConfigurationError(f'fixed_alpha must lie in [0, 1], got {self.fixed_alpha}')
        if self.fixed_alpha is not None and self.fusion != 'prmf':
            raise ConfigurationError('fixed_alpha only applies to the prmf fusion mode')

    def to_dict(self) -> dict:
        return asdict(self)


class FusionModel(Module):
    """Visual branch, text branch and the fusion head, trained as one parameter set."""

    def __init__(self, config: ModelConfig, visual: Module, text: Module):
        super().__init__('model')
        self.config = config
        self.visual = self.add_child(visual)
        self.text = self.add_child(text)
        self.head = self.add_child(PrmfParams(
            config.image_dim, config.text_dim, config.num_classes,
            separate_image_head=config.separate_image_head, seed=config.seed + 101,
        ))
        self.concat = None
        if config.fusion == 'concat':
            rng = np.random.default_rng(config.seed + 202)
            self.concat = self.add_child(Affine('concat_fusion', 2 * config.text_dim, config.text_dim,
                                                PROJECTION_GROUP, rng))

    def encode_image(self, tape: GradTape, images) -> Tensor:
        if self.config.raw_inputs:
            return conv_encode(self.visual, tape.constant(images))
        return self.visual(tape.constant(images))

    def encode_text(self, tape: GradTape, texts) -> Tensor:
        if self.config.raw_inputs:
            return text_encode_batch(self.text, texts, tape)
        return self.text(tape.constant(texts))

    def forward(self, tape: GradTape, images, texts) -> PrmfOutput:
        """Runs a batch; for the branch-dropping ablations the missing branch is never evaluated."""
        mode = self.config.fusion
        if mode == 'text_only':
            text = self.encode_text(tape, texts)
            logits = classify(self.head, text)
            return PrmfOutput(fused=text, alpha=None, fused_logits=logits, image_logits=logits)
        image = self.encode_image(tape, images)
        if mode == 'image_only':
            projected = project_image(self.head, image)
            logits = classify(self.head, projected, image_head=True)
            return PrmfOutput(fused=projected, alpha=None, fused_logits=logits, image_logits=logits)
        text = self.encode_text(tape, texts)
        if mode == 'concat':
            projected = project_image(self.head, image)
            fused = self.concat(ops.concat(projected, text))
            return PrmfOutput(
                fused=fused,
                alpha=None,
                fused_logits=classify(self.head, fused),
                image_logits=classify(self.head, projected, image_head=True),
            )
        return forward_prmf(self.head, image, text, fixed_alpha=self.config.fixed_alpha)


def build_embedding_model(config: ModelConfig) -> FusionModel:
    """Model over precomputed embeddings: LoRA branches over frozen identity backbones."""
    visual = EmbeddingBranch(VISUAL_ENCODER_GROUP, config.image_dim, config.lora_rank, seed=config.seed + 1)
    text = EmbeddingBranch(TEXT_ENCODER_GROUP, config.text_dim, config.lora_rank, seed=config.seed + 2)
    return FusionModel(config, visual, text)


def build_toy_model(config: ModelConfig, *, channels=(8, 16), vocab_size: int = 64, d_model: int = 32,
                    max_len: int = 32, heads: int = 1) -> FusionModel:
    """Model over raw synthetic images and token streams through the toy encoders."""
    config = ModelConfig(**{**config.to_dict(), 'raw_inputs': True})
    visual = ToyConvEncoder(channels=channels, output_dim=config.image_dim, seed=config.seed + 1)
    text = ToyTextEncoder(vocab_size=vocab_size, d_model=d_model, max_len=max_len, output_dim=config.text_dim,
                          heads=heads, rank=config.lora_rank, seed=config.seed + 2)
    return FusionModel(config, visual, text)
