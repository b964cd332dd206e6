"""
Differentiable primitives over GradTape tensors.

Every primitive computes its forward value with numpy and records a closure that maps
the upstream gradient to one gradient per input. Broadcasting is limited to bias
addition (``affine``, ``add_bias``, ``conv2d_same``) and the per-row weight of
``convex_mix``.
"""
import math
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from fusionlab.utils.errors import DimensionError, LabelIndexError
from .tape import Tensor


def _same_shape(name: str, a: Tensor, b: Tensor):
    if a.shape != b.shape:
        raise DimensionError(f'{name}: shapes {a.shape} and {b.shape} differ')


def affine(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """W·x + b for x of shape [n] or a batch of rows [B×n]."""
    if weight.ndim != 2 or x.ndim not in (1, 2) or x.shape[-1] != weight.shape[1]:
        raise DimensionError(f'affine: cannot apply weight {weight.shape} to input {x.shape}')
    if bias is not None and bias.shape != (weight.shape[0],):
        raise DimensionError(f'affine: bias {bias.shape} does not match weight {weight.shape}')
    x_data, w_data = x.data, weight.data
    out = x_data @ w_data.T
    if bias is not None:
        out = out + bias.data

    def backward(g):
        gx = g @ w_data
        gw = np.outer(g, x_data) if x_data.ndim == 1 else g.T @ x_data
        if bias is None:
            return gx, gw
        gb = g if g.ndim == 1 else g.sum(axis=0)
        return gx, gw, gb

    parents = (x, weight) if bias is None else (x, weight, bias)
    return x.tape.record(out, parents, backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f'matmul: shapes {a.shape} and {b.shape} do not conform')
    a_data, b_data = a.data, b.data

    def backward(g):
        return g @ b_data.T, a_data.T @ g

    return a.tape.record(a_data @ b_data, (a, b), backward)


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise DimensionError(f'transpose needs a matrix, got shape {a.shape}')
    return a.tape.record(a.data.T, (a,), lambda g: (g.T,))


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape('add', a, b)
    return a.tape.record(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape('sub', a, b)
    return a.tape.record(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape('mul', a, b)
    a_data, b_data = a.data, b.data
    return a.tape.record(a_data * b_data, (a, b), lambda g: (g * b_data, g * a_data))


def scale(a: Tensor, factor: float) -> Tensor:
    return a.tape.record(a.data * factor, (a,), lambda g: (g * factor,))


def add_bias(x: Tensor, bias: Tensor) -> Tensor:
    """Adds a [d] bias to every row of x [..×d]."""
    if bias.ndim != 1 or x.shape[-1] != bias.shape[0]:
        raise DimensionError(f'add_bias: bias {bias.shape} does not match input {x.shape}')

    def backward(g):
        return g, g.reshape(-1, bias.shape[0]).sum(axis=0)

    return x.tape.record(x.data + bias.data, (x, bias), backward)


def activation(kind: str, x: Tensor) -> Tensor:
    """Elementwise relu or sigmoid. Sigmoid output stays strictly inside (0, 1)."""
    data = x.data
    if kind == 'relu':
        mask = data > 0
        return x.tape.record(np.where(mask, data, 0), (x,), lambda g: (g * mask,))
    if kind == 'sigmoid':
        positive = data >= 0
        exp_neg_abs = np.exp(-np.abs(data))
        out = np.where(positive, 1.0 / (1.0 + exp_neg_abs), exp_neg_abs / (1.0 + exp_neg_abs))
        info = np.finfo(x.tape.dtype)
        out = np.clip(out, info.tiny, 1.0 - info.eps)
        return x.tape.record(out, (x,), lambda g: (g * out * (1.0 - out),))
    raise ValueError(f'unknown activation {kind!r}, expected "relu" or "sigmoid"')


def softmax_rows(x: Tensor) -> Tensor:
    if x.ndim != 2:
        raise DimensionError(f'softmax_rows needs a matrix, got shape {x.shape}')
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    out = exp / exp.sum(axis=1, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=1, keepdims=True)),)

    return x.tape.record(out, (x,), backward)


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """
    Mean of -log softmax(logits)[label].\n
    Accepts one [K] logit vector with an int label, or [B×K] rows with B labels.
    Computed in log space after max-subtraction, so the value stays finite for finite
    logits and the gradient is exactly softmax - onehot.
    """
    single = logits.ndim == 1
    rows = logits.data.reshape(1, -1) if single else logits.data
    if rows.ndim != 2 or rows.shape[1] < 2:
        raise DimensionError(f'softmax_cross_entropy needs K >= 2 logits, got shape {logits.shape}')
    labels = np.atleast_1d(np.asarray(labels))
    if labels.shape != (rows.shape[0],):
        raise DimensionError(f'softmax_cross_entropy: {labels.shape[0]} labels for {rows.shape[0]} rows')
    if not np.issubdtype(labels.dtype, np.integer):
        raise LabelIndexError(f'labels must be integers, got {labels.dtype}')
    num_classes = rows.shape[1]
    if labels.min() < 0 or labels.max() >= num_classes:
        raise LabelIndexError(f'label out of range [0, {num_classes})')
    batch = rows.shape[0]
    picked = np.arange(batch)
    shifted = rows - rows.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    per_row = log_norm - shifted[picked, labels]
    loss = per_row.mean()
    probs = np.exp(shifted - log_norm[:, None])

    def backward(g):
        grad = probs.copy()
        grad[picked, labels] -= 1.0
        grad *= g / batch
        return (grad.reshape(logits.shape),)

    return logits.tape.record(loss, (logits,), backward)


def concat(a: Tensor, b: Tensor) -> Tensor:
    """Joins along the last axis."""
    if a.ndim != b.ndim or a.shape[:-1] != b.shape[:-1]:
        raise DimensionError(f'concat: shapes {a.shape} and {b.shape} do not conform')
    split = a.shape[-1]

    def backward(g):
        return g[..., :split], g[..., split:]

    return a.tape.record(np.concatenate([a.data, b.data], axis=-1), (a, b), backward)


def slice_columns(x: Tensor, start: int, stop: int) -> Tensor:
    if x.ndim != 2 or not 0 <= start < stop <= x.shape[1]:
        raise DimensionError(f'slice_columns: [{start}:{stop}] is invalid for shape {x.shape}')

    def backward(g):
        grad = np.zeros(x.shape, dtype=g.dtype)
        grad[:, start:stop] = g
        return (grad,)

    return x.tape.record(x.data[:, start:stop], (x,), backward)


def take_row(x: Tensor, row: int) -> Tensor:
    if x.ndim != 2 or not 0 <= row < x.shape[0]:
        raise DimensionError(f'take_row: row {row} is invalid for shape {x.shape}')

    def backward(g):
        grad = np.zeros(x.shape, dtype=g.dtype)
        grad[row] = g
        return (grad,)

    return x.tape.record(x.data[row], (x,), backward)


def stack_rows(rows: Sequence[Tensor]) -> Tensor:
    if not rows:
        raise DimensionError('stack_rows needs at least one row')
    width = rows[0].shape
    if any(row.shape != width or row.ndim != 1 for row in rows):
        raise DimensionError('stack_rows needs vectors of equal length')

    def backward(g):
        return tuple(g[i] for i in range(len(rows)))

    return rows[0].tape.record(np.stack([row.data for row in rows]), tuple(rows), backward)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    original = x.shape
    return x.tape.record(x.data.reshape(shape), (x,), lambda g: (g.reshape(original),))


def embedding_lookup(table: Tensor, ids) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2:
        raise DimensionError(f'embedding table must be a matrix, got shape {table.shape}')

    def backward(g):
        grad = np.zeros(table.shape, dtype=g.dtype)
        np.add.at(grad, ids, g)
        return (grad,)

    return table.tape.record(table.data[ids], (table,), backward)


def sum_all(x: Tensor) -> Tensor:
    shape = x.shape
    return x.tape.record(x.data.sum(), (x,), lambda g: (np.broadcast_to(g, shape).copy(),))


def mean_all(x: Tensor) -> Tensor:
    shape, count = x.shape, x.size
    return x.tape.record(x.data.mean(), (x,), lambda g: (np.broadcast_to(g / count, shape).copy(),))


def convex_mix(a: Tensor, b: Tensor, weight: Tensor) -> Tensor:
    """
    weight·a + (1 - weight)·b, one weight per row (or a single weight for vectors).\n
    Weight 0 returns b bitwise, weight 1 returns a bitwise, and every component stays in
    the closed interval spanned by a and b.
    """
    _same_shape('convex_mix', a, b)
    expected = () if a.ndim == 1 else (a.shape[0],)
    if weight.size != (1 if a.ndim == 1 else a.shape[0]) or weight.ndim > 1:
        raise DimensionError(f'convex_mix: weight {weight.shape} does not match rows of {a.shape}')
    w = weight.data.reshape(expected)[..., None] if a.ndim == 2 else weight.data.reshape(())
    a_data, b_data = a.data, b.data
    gap = a_data - b_data
    mixed = np.clip(b_data + w * gap, np.minimum(a_data, b_data), np.maximum(a_data, b_data))
    out = np.where(w == 1, a_data, np.where(w == 0, b_data, mixed))

    def backward(g):
        gw = (g * gap).sum(axis=-1)
        return g * w, g * (1 - w), gw.reshape(weight.shape)

    return a.tape.record(out, (a, b, weight), backward)


def _as_batch(x: Tensor) -> tuple[np.ndarray, bool]:
    if x.ndim == 3:
        return x.data[None], True
    if x.ndim == 4:
        return x.data, False
    raise DimensionError(f'expected [C×H×W] or [B×C×H×W], got shape {x.shape}')


def conv2d_same(x: Tensor, kernel: Tensor, bias: Tensor) -> Tensor:
    """
    3×3 same-padding convolution with zero fill.\n
    kernel is [3×3×C_in×C_out], bias is [C_out]; x is [C×H×W] or [B×C×H×W].
    """
    data, squeeze = _as_batch(x)
    if kernel.shape[:2] != (3, 3) or kernel.ndim != 4 or kernel.shape[2] != data.shape[1]:
        raise DimensionError(f'conv2d_same: kernel {kernel.shape} does not fit input {x.shape}')
    if bias.shape != (kernel.shape[3],):
        raise DimensionError(f'conv2d_same: bias {bias.shape} does not match kernel {kernel.shape}')
    height, width = data.shape[2:]
    padded = np.pad(data, ((0, 0), (0, 0), (1, 1), (1, 1)))
    windows = sliding_window_view(padded, (3, 3), axis=(2, 3))
    k_data = kernel.data
    out = np.einsum('bchwpq,pqco->bohw', windows, k_data) + bias.data[None, :, None, None]

    def backward(g):
        g4 = g[None] if squeeze else g
        g_kernel = np.einsum('bchwpq,bohw->pqco', windows, g4)
        g_bias = g4.sum(axis=(0, 2, 3))
        g_padded = np.zeros(padded.shape, dtype=g4.dtype)
        for p in range(3):
            for q in range(3):
                g_padded[:, :, p:p + height, q:q + width] += np.einsum('bohw,co->bchw', g4, k_data[p, q])
        g_x = g_padded[:, :, 1:-1, 1:-1]
        return (g_x[0] if squeeze else g_x), g_kernel, g_bias

    return x.tape.record(out[0] if squeeze else out, (x, kernel, bias), backward)


def max_pool2x2(x: Tensor) -> Tensor:
    """2×2 max pooling with stride 2; an odd trailing row or column is dropped."""
    data, squeeze = _as_batch(x)
    batch, channels, height, width = data.shape
    if height < 2 or width < 2:
        raise DimensionError(f'max_pool2x2 needs at least 2×2 spatial size, got {height}×{width}')
    h2, w2 = height // 2, width // 2
    cropped = data[:, :, :h2 * 2, :w2 * 2]
    windows = cropped.reshape(batch, channels, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5)
    windows = windows.reshape(batch, channels, h2, w2, 4)
    winner = windows.argmax(axis=-1)[..., None]
    out = np.take_along_axis(windows, winner, axis=-1)[..., 0]

    def backward(g):
        g4 = g[None] if squeeze else g
        g_windows = np.zeros(windows.shape, dtype=g4.dtype)
        np.put_along_axis(g_windows, winner, g4[..., None], axis=-1)
        g_cropped = g_windows.reshape(batch, channels, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        g_x = np.zeros(data.shape, dtype=g4.dtype)
        g_x[:, :, :h2 * 2, :w2 * 2] = g_cropped.reshape(batch, channels, h2 * 2, w2 * 2)
        return (g_x[0] if squeeze else g_x,)

    return x.tape.record(out[0] if squeeze else out, (x,), backward)


def global_avg_pool(x: Tensor) -> Tensor:
    """[C×H×W] -> [C], [B×C×H×W] -> [B×C]."""
    data, squeeze = _as_batch(x)
    height, width = data.shape[2:]
    out = data.mean(axis=(2, 3))

    def backward(g):
        g2 = g[None] if squeeze else g
        g_x = np.broadcast_to(g2[:, :, None, None] / (height * width), data.shape).copy()
        return (g_x[0] if squeeze else g_x,)

    return x.tape.record(out[0] if squeeze else out, (x,), backward)


def scaled_dot_product_attention(query: Tensor, key: Tensor, value: Tensor, heads: int = 1):
    """
    softmax(Q·Kᵀ/√d_k)·V over column blocks of width d_k = d / heads.\n
    Returns the [n_q×d] output and the list of per-head [n_q×n_k] weight tensors.
    """
    if query.ndim != 2 or key.ndim != 2 or value.ndim != 2:
        raise DimensionError('attention inputs must be matrices')
    if key.shape[0] != value.shape[0] or query.shape[1] != key.shape[1]:
        raise DimensionError(f'attention: shapes {query.shape}, {key.shape}, {value.shape} do not conform')
    width = query.shape[1]
    if heads < 1 or width % heads:
        raise DimensionError(f'attention: width {width} does not split into {heads} heads')
    head_dim = width // heads
    outputs, weights = [], []
    for head in range(heads):
        start, stop = head * head_dim, (head + 1) * head_dim
        q = query if heads == 1 else slice_columns(query, start, stop)
        k = key if heads == 1 else slice_columns(key, start, stop)
        v = value if heads == 1 else slice_columns(value, start, stop)
        scores = scale(matmul(q, transpose(k)), 1.0 / math.sqrt(head_dim))
        attention = softmax_rows(scores)
        weights.append(attention)
        outputs.append(matmul(attention, v))
    output = outputs[0]
    for part in outputs[1:]:
        output = concat(output, part)
    return output, weights
