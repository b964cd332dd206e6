import numpy as np

from fusionlab.diffcore import ops
from fusionlab.diffcore.modules import Module
from fusionlab.diffcore.tape import Tensor
from fusionlab.utils.errors import ConfigurationError, DimensionError

VISUAL_ENCODER_GROUP = 'visual_encoder'


def init_conv_weights(shape, c_in: int, seed: int) -> np.ndarray:
    """
    Zero-mean Gaussian weights with variance 2 / (3·3·c_in).\n
    This is fan-in scaling over a 3×3 receptive field, even though it is often quoted as
    Xavier initialization.
    """
    if c_in < 1:
        raise ConfigurationError(f'c_in must be at least 1, got {c_in}')
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, np.sqrt(2.0 / (9 * c_in)), size=shape)


class ToyConvEncoder(Module):
    """
    Stages of (3×3 same conv, ReLU, 2×2 max pool), then global average pooling and an
    affine map to ``output_dim``.
    """

    def __init__(self, in_channels: int = 1, channels=(8, 16), output_dim: int = 512, seed: int = 0,
                 name: str = VISUAL_ENCODER_GROUP, group: str = VISUAL_ENCODER_GROUP):
        super().__init__(name, group)
        if not channels:
            raise ConfigurationError('conv encoder needs at least one stage')
        self.in_channels = in_channels
        self.channels = tuple(channels)
        self.output_dim = output_dim
        c_in = in_channels
        for stage, c_out in enumerate(self.channels):
            self.add_parameter(f'conv{stage}.kernel', init_conv_weights((3, 3, c_in, c_out), c_in, seed + stage))
            self.add_parameter(f'conv{stage}.bias', np.zeros(c_out))
            c_in = c_out
        rng = np.random.default_rng(seed + len(self.channels))
        self.add_parameter('head.weight', rng.normal(0.0, np.sqrt(2.0 / c_in), size=(output_dim, c_in)))
        self.add_parameter('head.bias', np.zeros(output_dim))

    @property
    def min_spatial_size(self) -> int:
        return 2 ** len(self.channels)


def conv_encode(enc: ToyConvEncoder, image: Tensor) -> Tensor:
    """Encodes [C×H×W] to [output_dim], or a batch [B×C×H×W] to [B×output_dim]."""
    if image.ndim not in (3, 4):
        raise DimensionError(f'expected [C×H×W] or [B×C×H×W], got shape {image.shape}')
    channels, height, width = image.shape[-3:]
    if channels != enc.in_channels:
        raise DimensionError(f'encoder expects {enc.in_channels} channels, got {channels}')
    if min(height, width) < enc.min_spatial_size:
        raise DimensionError(
            f'{height}×{width} image is too small for {len(enc.channels)} pooling stages, '
            f'need at least {enc.min_spatial_size}×{enc.min_spatial_size}'
        )
    tape = image.tape
    x = image
    for stage in range(len(enc.channels)):
        x = ops.conv2d_same(x, enc.param(tape, f'conv{stage}.kernel'), enc.param(tape, f'conv{stage}.bias'))
        x = ops.max_pool2x2(ops.activation('relu', x))
    pooled = ops.global_avg_pool(x)
    return ops.affine(pooled, enc.param(tape, 'head.weight'), enc.param(tape, 'head.bias'))
