"""Forecaster building blocks on top of the autodiff tensor kit.

All functions build fresh graph nodes each call; parameters are held in
small dataclasses of tensors so a model is just a tree of these.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Iterator, Optional

import numpy as np

from ..autodiff.ops import (
    add,
    broadcast_to,
    concat,
    constant,
    conv1d,
    dropout,
    elu,
    embedding,
    gather_rows,
    layer_norm,
    matmul,
    maxpool1d,
    mean,
    relu,
    scale,
    scatter_rows,
    slice_axis,
    softmax,
    swapaxes,
)
from ..autodiff.tensor import Tensor
from ..errors import ShapeError


@dataclass
class MultiHeadParams:
    wq: Tensor  # (d_model_q, d)
    wk: Tensor  # (d_model_kv, d)
    wv: Tensor  # (d_model_kv, d)

    def tensors(self) -> Iterator[Tensor]:
        for f in fields(self):
            yield getattr(self, f.name)


@dataclass
class EncoderLayerParams:
    attn: MultiHeadParams
    conv_w: Tensor  # (3, d, d)
    conv_b: Tensor  # (d,)

    def tensors(self) -> Iterator[Tensor]:
        yield from self.attn.tensors()
        yield self.conv_w
        yield self.conv_b


@dataclass
class DecoderLayerParams:
    self_attn: MultiHeadParams
    cross_attn: MultiHeadParams
    ffn_w1: Tensor  # (d, f)
    ffn_b1: Tensor  # (f,)
    ffn_w2: Tensor  # (f, d)
    ffn_b2: Tensor  # (d,)
    norm1_gain: Tensor
    norm1_bias: Tensor
    norm2_gain: Tensor
    norm2_bias: Tensor
    norm3_gain: Tensor
    norm3_bias: Tensor

    def tensors(self) -> Iterator[Tensor]:
        yield from self.self_attn.tensors()
        yield from self.cross_attn.tensors()
        for name in (
            "ffn_w1", "ffn_b1", "ffn_w2", "ffn_b2",
            "norm1_gain", "norm1_bias", "norm2_gain", "norm2_bias",
            "norm3_gain", "norm3_bias",
        ):
            yield getattr(self, name)


def positional_encoding(length: int, dim: int) -> np.ndarray:
    """Interleaved sinusoids: PE[p, 2i] = sin(p/10000^(2i/d)), PE[p, 2i+1] = cos."""
    pe = np.zeros((length, dim))
    position = np.arange(length, dtype=np.float64)[:, None]
    rates = np.exp(-math.log(10000.0) * (2 * np.arange(0, (dim + 1) // 2)) / dim)
    angles = position * rates[None, :]
    pe[:, 0::2] = np.sin(angles)
    pe[:, 1::2] = np.cos(angles[:, : dim // 2])
    return pe


def input_embedding(
    real: np.ndarray,
    cats: np.ndarray,
    w_real: Tensor,
    cat_tables,
    w_cat: Tensor,
) -> Tensor:
    """Sum of projected real features, projected categorical embeddings,
    and the positional encoding. Projections carry no bias so an all-zero
    input contributes exactly nothing."""
    if real.ndim != 3 or cats.ndim != 3:
        raise ShapeError(f"expected 3-d inputs, got real {real.shape}, cats {cats.shape}")
    if real.shape[-1] != w_real.shape[0]:
        raise ShapeError(
            f"real feature count {real.shape[-1]} does not match "
            f"projection rows {w_real.shape[0]}"
        )
    if cats.shape[-1] != len(cat_tables):
        raise ShapeError(
            f"{cats.shape[-1]} categorical columns but {len(cat_tables)} tables"
        )
    projected = matmul(constant(real), w_real)
    embedded = [embedding(table, cats[..., i]) for i, table in enumerate(cat_tables)]
    cat_stack = concat(embedded, axis=-1) if len(embedded) > 1 else embedded[0]
    projected = add(projected, matmul(cat_stack, w_cat))
    pe = positional_encoding(real.shape[1], w_real.shape[1])
    return add(projected, constant(pe))


def sparsity_top_queries(q_data: np.ndarray, k_data: np.ndarray, u: int) -> np.ndarray:
    """Indices of the u queries with the largest max-minus-mean score.

    Operates on raw arrays: the selection is a discrete choice, outside
    the differentiable graph.
    """
    d = q_data.shape[-1]
    scores = q_data @ np.swapaxes(k_data, -1, -2) / math.sqrt(d)
    m = scores.max(axis=-1) - scores.mean(axis=-1)
    idx = np.argpartition(-m, u - 1, axis=-1)[..., :u]
    return np.sort(idx, axis=-1)


def _dense_attention(q: Tensor, k: Tensor, v: Tensor) -> Tensor:
    d = q.shape[-1]
    scores = scale(matmul(q, swapaxes(k, -1, -2)), 1.0 / math.sqrt(d))
    return matmul(softmax(scores, axis=-1), v)


def probsparse_attention(q: Tensor, k: Tensor, v: Tensor, c: float) -> Tensor:
    """Scaled-dot attention computed only for the top queries.

    u = max(1, ceil(c*ln(L_Q))) queries ranked by max-minus-mean score get
    the full softmax row; the rest fall back to the mean of V. u >= L_Q
    short-circuits to exact dense attention.
    """
    if q.shape[-1] != k.shape[-1]:
        raise ShapeError(f"query dim {q.shape[-1]} != key dim {k.shape[-1]}")
    if k.shape[-2] != v.shape[-2]:
        raise ShapeError(f"key length {k.shape[-2]} != value length {v.shape[-2]}")
    l_q = q.shape[-2]
    u = max(1, math.ceil(c * math.log(l_q)))
    if u >= l_q:
        return _dense_attention(q, k, v)
    idx = sparsity_top_queries(q.data, k.data, u)
    q_top = gather_rows(q, idx)
    attended = _dense_attention(q_top, k, v)
    lazy = broadcast_to(mean(v, axis=-2, keepdims=True), q.shape[:-1] + (v.shape[-1],))
    return scatter_rows(lazy, idx, attended)


def multi_head(
    q: Tensor,
    k: Tensor,
    v: Tensor,
    heads: int,
    params: MultiHeadParams,
    c: float,
) -> Tensor:
    """h parallel sparse attentions over projected slices, concatenated.

    The concatenation of per-head outputs is the layer output; there is no
    extra output projection, so heads=1 with identity projections is
    exactly single-head attention.
    """
    d = params.wq.shape[1]
    if d % heads != 0:
        raise ShapeError(f"model dim {d} not divisible by {heads} heads")
    step = d // heads
    qp = matmul(q, params.wq)
    kp = matmul(k, params.wk)
    vp = matmul(v, params.wv)
    outputs = []
    for h in range(heads):
        lo, hi = h * step, (h + 1) * step
        outputs.append(
            probsparse_attention(
                slice_axis(qp, -1, lo, hi),
                slice_axis(kp, -1, lo, hi),
                slice_axis(vp, -1, lo, hi),
                c,
            )
        )
    return concat(outputs, axis=-1) if heads > 1 else outputs[0]


def encoder_layer(
    x: Tensor,
    params: EncoderLayerParams,
    heads: int,
    c: float,
) -> Tensor:
    """Self-attention, width-3 convolution, ELU, then stride-2 max pooling.

    The pooling halves the time axis (ceil(L/2)); a length-1 input has
    nothing left to distill and is rejected.
    """
    if x.shape[-2] < 2:
        raise ShapeError(f"encoder input time length must be >= 2, got {x.shape[-2]}")
    attended = multi_head(x, x, x, heads, params.attn, c)
    convolved = conv1d(attended, params.conv_w, params.conv_b, stride=1, padding="same")
    return maxpool1d(elu(convolved), window=3, stride=2, padding=1)


def _ffn(x: Tensor, params: DecoderLayerParams) -> Tensor:
    hidden = relu(add(matmul(x, params.ffn_w1), params.ffn_b1))
    return add(matmul(hidden, params.ffn_w2), params.ffn_b2)


def decoder_layer(
    y: Tensor,
    z: Tensor,
    params: DecoderLayerParams,
    heads: int,
    c: float,
    rate: float = 0.0,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tensor:
    """Self-attention and cross-attention sublayers, summed, then the FFN.

    Each sublayer is residual + dropout + layer norm; the cross-attention
    queries come from the self-attention output while keys and values are
    the encoder output z.
    """
    self_out = multi_head(y, y, y, heads, params.self_attn, c)
    s = layer_norm(
        add(y, dropout(self_out, rate, training, rng)),
        params.norm1_gain,
        params.norm1_bias,
    )
    cross_out = multi_head(s, z, z, heads, params.cross_attn, c)
    x = layer_norm(
        add(s, dropout(cross_out, rate, training, rng)),
        params.norm2_gain,
        params.norm2_bias,
    )
    summed = add(s, x)
    return layer_norm(
        add(summed, dropout(_ffn(summed, params), rate, training, rng)),
        params.norm3_gain,
        params.norm3_bias,
    )
