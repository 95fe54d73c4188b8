"""Model parameter tree, initialization, and the forward pass."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from ..autodiff.ops import add, concat, constant, matmul, reshape, slice_axis
from ..autodiff.optim import uniform_fan_in
from ..autodiff.tensor import Tensor
from ..errors import ShapeError
from .config import Batch, InformerConfig
from .layers import (
    DecoderLayerParams,
    EncoderLayerParams,
    MultiHeadParams,
    decoder_layer,
    encoder_layer,
    input_embedding,
)


@dataclass
class InformerModel:
    config: InformerConfig
    w_real: Tensor
    cat_tables: Tuple[Tensor, ...]
    w_cat: Tensor
    encoder: Tuple[EncoderLayerParams, ...]
    decoder: Tuple[DecoderLayerParams, ...]
    head_w: Tensor
    head_b: Tensor

    def named_parameters(self) -> Iterator[Tuple[str, Tensor]]:
        yield "embed.w_real", self.w_real
        for i, table in enumerate(self.cat_tables):
            yield f"embed.cat_{i}", table
        yield "embed.w_cat", self.w_cat
        for i, layer in enumerate(self.encoder):
            yield f"encoder.{i}.attn.wq", layer.attn.wq
            yield f"encoder.{i}.attn.wk", layer.attn.wk
            yield f"encoder.{i}.attn.wv", layer.attn.wv
            yield f"encoder.{i}.conv_w", layer.conv_w
            yield f"encoder.{i}.conv_b", layer.conv_b
        for i, layer in enumerate(self.decoder):
            yield f"decoder.{i}.self.wq", layer.self_attn.wq
            yield f"decoder.{i}.self.wk", layer.self_attn.wk
            yield f"decoder.{i}.self.wv", layer.self_attn.wv
            yield f"decoder.{i}.cross.wq", layer.cross_attn.wq
            yield f"decoder.{i}.cross.wk", layer.cross_attn.wk
            yield f"decoder.{i}.cross.wv", layer.cross_attn.wv
            yield f"decoder.{i}.ffn_w1", layer.ffn_w1
            yield f"decoder.{i}.ffn_b1", layer.ffn_b1
            yield f"decoder.{i}.ffn_w2", layer.ffn_w2
            yield f"decoder.{i}.ffn_b2", layer.ffn_b2
            yield f"decoder.{i}.norm1_gain", layer.norm1_gain
            yield f"decoder.{i}.norm1_bias", layer.norm1_bias
            yield f"decoder.{i}.norm2_gain", layer.norm2_gain
            yield f"decoder.{i}.norm2_bias", layer.norm2_bias
            yield f"decoder.{i}.norm3_gain", layer.norm3_gain
            yield f"decoder.{i}.norm3_bias", layer.norm3_bias
        yield "head.w", self.head_w
        yield "head.b", self.head_b

    def parameters(self) -> List[Tensor]:
        return [t for _, t in self.named_parameters()]

    def parameter_count(self) -> int:
        return sum(int(np.prod(t.shape)) for t in self.parameters())

    def state_arrays(self) -> List[np.ndarray]:
        """Copies of all parameter values, in named_parameters order."""
        return [t.data.copy() for t in self.parameters()]

    def load_state_arrays(self, arrays: List[np.ndarray]) -> None:
        params = self.parameters()
        if len(arrays) != len(params):
            raise ShapeError(f"expected {len(params)} arrays, got {len(arrays)}")
        for t, a in zip(params, arrays):
            if t.shape != a.shape:
                raise ShapeError(f"parameter shape {t.shape} vs stored {a.shape}")
            t.data = a.copy()


def _param(rng: np.random.Generator, shape, fan_in=None) -> Tensor:
    return Tensor(uniform_fan_in(rng, shape, fan_in), requires_grad=True)


def _const_param(value: np.ndarray) -> Tensor:
    return Tensor(value, requires_grad=True)


def _multi_head_params(rng, d_q: int, d_kv: int, d: int) -> MultiHeadParams:
    return MultiHeadParams(
        wq=_param(rng, (d_q, d)),
        wk=_param(rng, (d_kv, d)),
        wv=_param(rng, (d_kv, d)),
    )


def init_model(config: InformerConfig, seed: int) -> InformerModel:
    """Fresh model with uniform fan-in scaled weights, unit norms, zero biases."""
    rng = np.random.default_rng(seed)
    d = config.model_dim
    cat_total = len(config.cat_sizes) * config.cat_embed_dim
    encoder = tuple(
        EncoderLayerParams(
            attn=_multi_head_params(rng, d, d, d),
            conv_w=_param(rng, (3, d, d), fan_in=3 * d),
            conv_b=_const_param(np.zeros(d)),
        )
        for _ in range(config.encoder_layers)
    )
    decoder = tuple(
        DecoderLayerParams(
            self_attn=_multi_head_params(rng, d, d, d),
            cross_attn=_multi_head_params(rng, d, d, d),
            ffn_w1=_param(rng, (d, config.ffn_dim)),
            ffn_b1=_const_param(np.zeros(config.ffn_dim)),
            ffn_w2=_param(rng, (config.ffn_dim, d)),
            ffn_b2=_const_param(np.zeros(d)),
            norm1_gain=_const_param(np.ones(d)),
            norm1_bias=_const_param(np.zeros(d)),
            norm2_gain=_const_param(np.ones(d)),
            norm2_bias=_const_param(np.zeros(d)),
            norm3_gain=_const_param(np.ones(d)),
            norm3_bias=_const_param(np.zeros(d)),
        )
        for _ in range(config.decoder_layers)
    )
    return InformerModel(
        config=config,
        w_real=_param(rng, (config.num_real, d)),
        cat_tables=tuple(
            _param(rng, (size, config.cat_embed_dim), fan_in=config.cat_embed_dim)
            for size in config.cat_sizes
        ),
        w_cat=_param(rng, (cat_total, d)),
        encoder=encoder,
        decoder=decoder,
        head_w=_param(rng, (d, config.out_dim)),
        head_b=_const_param(np.zeros(config.out_dim)),
    )


def forward(
    model: InformerModel,
    batch: Batch,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tensor:
    """Predictions of shape (batch, out_dim) for one input window batch.

    The encoder distills the embedded past window; the decoder starts from
    the last half of the embedded inputs plus one zero slot, and the head
    reads that slot's final state.
    """
    config = model.config
    n = config.past_window
    if batch.real.shape[1] != n:
        raise ShapeError(f"batch window {batch.real.shape[1]} != past_window {n}")
    if batch.real.shape[2] != config.num_real:
        raise ShapeError(f"batch has {batch.real.shape[2]} real features, config {config.num_real}")
    embedded = input_embedding(
        batch.real, batch.cats, model.w_real, model.cat_tables, model.w_cat
    )
    z = embedded
    for layer in model.encoder:
        z = encoder_layer(z, layer, config.heads, config.sampling_factor)
    start = config.decoder_start
    zeros = constant(np.zeros((batch.real.shape[0], 1, config.model_dim)))
    y = concat([slice_axis(embedded, -2, n - start, n), zeros], axis=-2)
    for layer in model.decoder:
        y = decoder_layer(
            y, z, layer, config.heads, config.sampling_factor,
            rate=config.dropout, training=training, rng=rng,
        )
    last = slice_axis(y, -2, y.shape[-2] - 1, y.shape[-2])
    flat = reshape(last, (y.shape[0], config.model_dim))
    return add(matmul(flat, model.head_w), model.head_b)
