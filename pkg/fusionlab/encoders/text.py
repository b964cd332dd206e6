import numpy as np

from fusionlab.diffcore import ops
from fusionlab.diffcore.modules import Module
from fusionlab.diffcore.tape import Tensor
from fusionlab.lora.attention import CrossModalAttention, cross_modal_attention
from fusionlab.utils.errors import DimensionError, InputError, VocabularyError

TEXT_ENCODER_GROUP = 'text_encoder'
CLS_TOKEN = 0


class ToyTextEncoder(Module):
    """
    Token, positional and segment embeddings summed per position, one LoRA-adapted
    self-attention layer, and an affine map of the CLS row to ``output_dim``.\n
    Token id 0 is the CLS token and is prepended automatically, so callers pass ids in
    ``1..vocab_size-1``. A single segment is used, so the segment embedding is one vector
    added to every position.
    """

    def __init__(self, vocab_size: int = 64, d_model: int = 32, max_len: int = 32, output_dim: int = 768,
                 heads: int = 1, rank: int = 4, use_positions: bool = True, seed: int = 0,
                 name: str = TEXT_ENCODER_GROUP, group: str = TEXT_ENCODER_GROUP):
        super().__init__(name, group)
        self.vocab_size = vocab_size
        self.d_model = d_model
        self.max_len = max_len
        self.output_dim = output_dim
        self.use_positions = use_positions
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(d_model)
        self.add_parameter('token_embedding', rng.normal(0.0, scale, size=(vocab_size, d_model)))
        if use_positions:
            self.add_parameter('position_embedding', rng.normal(0.0, scale, size=(max_len, d_model)))
        self.add_parameter('segment_embedding', rng.normal(0.0, scale, size=d_model))
        self.attention = self.add_child(
            CrossModalAttention(f'{name}.attention', d_model, rank, heads=heads, group=group, seed=seed + 1)
        )
        self.add_parameter('output.weight', rng.normal(0.0, np.sqrt(2.0 / d_model), size=(output_dim, d_model)))
        self.add_parameter('output.bias', np.zeros(output_dim))

    def token_ids(self, tokens) -> np.ndarray:
        tokens = np.asarray(tokens)
        if tokens.ndim != 1 or tokens.size == 0:
            raise InputError('text_encode needs a non-empty sequence of token ids')
        if not np.issubdtype(tokens.dtype, np.integer):
            raise VocabularyError(f'token ids must be integers, got {tokens.dtype}')
        unknown = tokens[(tokens < 1) | (tokens >= self.vocab_size)]
        if unknown.size:
            raise VocabularyError(f'unknown token id {int(unknown[0])}, expected 1..{self.vocab_size - 1}')
        if tokens.size + 1 > self.max_len:
            raise DimensionError(f'{tokens.size} tokens plus CLS exceed max_len {self.max_len}')
        return np.concatenate([[CLS_TOKEN], tokens]).astype(np.int64)


def embed_tokens(enc: ToyTextEncoder, ids: np.ndarray, tape) -> Tensor:
    hidden = ops.embedding_lookup(enc.param(tape, 'token_embedding'), ids)
    if enc.use_positions:
        positions = ops.embedding_lookup(enc.param(tape, 'position_embedding'), np.arange(ids.size))
        hidden = ops.add(hidden, positions)
    return ops.add_bias(hidden, enc.param(tape, 'segment_embedding'))


def text_encode(enc: ToyTextEncoder, tokens, tape) -> Tensor:
    """Returns the CLS output [output_dim] for one token sequence."""
    ids = enc.token_ids(tokens)
    hidden = embed_tokens(enc, ids, tape)
    attended = cross_modal_attention(enc.attention, hidden, hidden)
    cls = ops.take_row(attended, 0)
    return ops.affine(cls, enc.param(tape, 'output.weight'), enc.param(tape, 'output.bias'))


def text_encode_batch(enc: ToyTextEncoder, token_rows, tape) -> Tensor:
    return ops.stack_rows([text_encode(enc, tokens, tape) for tokens in token_rows])
