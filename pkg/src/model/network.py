"""Encoder, decoders and discriminators.

The encoder turns an RGB image into a context feature map. Each decoder maps
that context to R per-shelf layouts: a learned row and column mixing step
re-grids image features onto the layout grid, upsample + conv stages refine
it, and one small head per shelf emits 3 class logits per cell. The
discriminator scores 1-of-3 encoded layouts patch by patch.
"""

from __future__ import annotations

import logging
import math
import zlib
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import ContractViolation
from src.layout.grid import NUM_CLASSES, View
from src.model.variants import Variant
from src.nn.ops import conv2d, leaky_relu, mix_cols, mix_rows, softmax_over_classes, stack, upsample_nearest
from src.nn.tensor import Tensor, no_grad
from src.render.image import Image
from src.scene.rng import derive_seed

logger = logging.getLogger(__name__)


class ModelConfig(BaseModel):
    """Layer widths; the grid-dependent sizes come from the layout and camera settings."""

    model_config = ConfigDict(frozen=True)

    encoder_widths: tuple[int, ...] = (16, 32, 64, 64)
    encoder_strides: tuple[int, ...] = (2, 2, 2, 1)
    decoder_widths: tuple[int, ...] = (32, 16)
    discriminator_widths: tuple[int, ...] = (16, 32, 32)
    leak: float = Field(0.1, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_encoder(self) -> ModelConfig:
        if len(self.encoder_widths) != len(self.encoder_strides):
            raise ValueError("encoder_widths and encoder_strides must have the same length")
        return self


class NetworkConfig(ModelConfig):
    """Full architecture description.

    Attributes:
        image_height, image_width: Input size in pixels.
        max_shelves: Output channels R.
        grid_size: Layout side D.
    """

    image_height: int = Field(128, ge=8)
    image_width: int = Field(128, ge=8)
    max_shelves: int = Field(4, ge=1)
    grid_size: int = Field(64, ge=4)

    @model_validator(mode="after")
    def _check_grid(self) -> NetworkConfig:
        if self.grid_size % self.upsample_factor:
            raise ValueError(
                f"grid_size {self.grid_size} must be divisible by 2**len(decoder_widths) = {self.upsample_factor}"
            )
        return self

    @property
    def upsample_factor(self) -> int:
        return 2 ** len(self.decoder_widths)

    @property
    def context_shape(self) -> tuple[int, int, int]:
        h, w = self.image_height, self.image_width
        for stride in self.encoder_strides:
            h = (h + 2 - 3) // stride + 1
            w = (w + 2 - 3) // stride + 1
        return self.encoder_widths[-1], h, w

    @property
    def base_grid(self) -> int:
        return self.grid_size // self.upsample_factor


@dataclass
class NetworkParams:
    """Named parameter sets of one model.

    Attributes:
        config: Architecture.
        variant: Which parameter sets exist.
        views: Decoded views, in output order.
        encoder: Encoder parameters.
        decoders: Decoder parameters per view.
        discriminators: Discriminator parameters per view (-disc variants only).
    """

    config: NetworkConfig
    variant: Variant
    views: tuple[View, ...]
    encoder: dict[str, Tensor] = field(default_factory=dict)
    decoders: dict[View, dict[str, Tensor]] = field(default_factory=dict)
    discriminators: dict[View, dict[str, Tensor]] = field(default_factory=dict)

    def generator_tensors(self) -> dict[str, Tensor]:
        named = dict(self.encoder)
        for group in self.decoders.values():
            named.update(group)
        return named

    def discriminator_tensors(self) -> dict[str, Tensor]:
        named: dict[str, Tensor] = {}
        for group in self.discriminators.values():
            named.update(group)
        return named

    def named_tensors(self) -> dict[str, Tensor]:
        return {**self.generator_tensors(), **self.discriminator_tensors()}

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self.named_tensors().items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        """Copy values in; names and shapes must match exactly."""
        named = self.named_tensors()
        missing = sorted(set(named) - set(state))
        unexpected = sorted(set(state) - set(named))
        if missing or unexpected:
            raise ContractViolation(f"Parameter mismatch: missing={missing}, unexpected={unexpected}")
        for name, tensor in named.items():
            if state[name].shape != tensor.shape:
                raise ContractViolation(
                    f"Parameter '{name}' has shape {state[name].shape}, expected {tensor.shape}"
                )
            tensor.data = np.asarray(state[name], dtype=np.float32).copy()


def _param(name: str, shape: tuple[int, ...], std: float, seed: int) -> Tensor:
    rng = np.random.default_rng(derive_seed(seed, zlib.crc32(name.encode("utf-8"))))
    data = rng.standard_normal(shape) * std if std > 0 else np.zeros(shape)
    return Tensor(data.astype(np.float32), requires_grad=True, name=name)


def _conv_params(prefix: str, c_out: int, c_in: int, seed: int, zero: bool = False) -> dict[str, Tensor]:
    std = 0.0 if zero else math.sqrt(2.0 / (c_in * 9))
    return {
        f"{prefix}.weight": _param(f"{prefix}.weight", (c_out, c_in, 3, 3), std, seed),
        f"{prefix}.bias": _param(f"{prefix}.bias", (c_out,), 0.0, seed),
    }


def views_for(variant: Variant, view: View | None = None) -> tuple[View, ...]:
    if variant.dual:
        return (View.TOP, View.FRONT)
    return (view or View.TOP,)


def init_params(
    config: NetworkConfig,
    variant: Variant,
    views: tuple[View, ...] | None = None,
    seed: int = 0,
    zero_heads: bool = False,
) -> NetworkParams:
    """Deterministically initialise every parameter set the variant needs.

    Each tensor draws from its own seed derived from `seed` and its name, so
    the shared parts of two variants start identical.
    """
    views = views or views_for(variant)
    params = NetworkParams(config=config, variant=variant, views=views)

    c_in = 3
    for i, width in enumerate(config.encoder_widths):
        params.encoder.update(_conv_params(f"encoder.conv{i}", width, c_in, seed))
        c_in = width

    channels, h, w = config.context_shape
    base = config.base_grid
    for view in views:
        prefix = f"decoder.{view.value}"
        group = {
            f"{prefix}.rows.a": _param(f"{prefix}.rows.a", (channels, base, h), 1.0 / math.sqrt(h), seed),
            f"{prefix}.rows.b": _param(f"{prefix}.rows.b", (channels, base), 0.0, seed),
            f"{prefix}.cols.a": _param(f"{prefix}.cols.a", (channels, base, w), 1.0 / math.sqrt(w), seed),
            f"{prefix}.cols.b": _param(f"{prefix}.cols.b", (channels, base), 0.0, seed),
        }
        c_in = channels
        for i, width in enumerate(config.decoder_widths):
            group.update(_conv_params(f"{prefix}.stage{i}", width, c_in, seed))
            c_in = width
        for shelf in range(config.max_shelves):
            group.update(_conv_params(f"{prefix}.head{shelf}", NUM_CLASSES, c_in, seed, zero=zero_heads))
        params.decoders[view] = group

        if variant.adversarial:
            disc: dict[str, Tensor] = {}
            c_in = config.max_shelves * NUM_CLASSES
            for i, width in enumerate((*config.discriminator_widths, 1)):
                disc.update(_conv_params(f"disc.{view.value}.conv{i}", width, c_in, seed))
                c_in = width
            params.discriminators[view] = disc

    count = sum(t.data.size for t in params.named_tensors().values())
    logger.debug(f"Initialised {variant.value} network with {count} parameters")
    return params


def image_batch(images) -> np.ndarray:
    """Stack Images or uint8 arrays into [N, H, W, 3]."""
    if isinstance(images, Image):
        return images.pixels[None]
    if isinstance(images, np.ndarray):
        return images[None] if images.ndim == 3 else images
    return np.stack([img.pixels if isinstance(img, Image) else img for img in images])


def encode(images, params: NetworkParams) -> Tensor:
    """Context features [N, C, H/8, W/8] (default config) of an image batch.

    Raises:
        ContractViolation: If the images do not match the configured size.
    """
    cfg = params.config
    pixels = image_batch(images)
    if pixels.ndim != 4 or pixels.shape[1:] != (cfg.image_height, cfg.image_width, 3):
        raise ContractViolation(
            f"Expected images [N, {cfg.image_height}, {cfg.image_width}, 3], got {pixels.shape}"
        )
    x = Tensor(np.ascontiguousarray(pixels.transpose(0, 3, 1, 2), dtype=np.float32) / 255.0 - 0.5)
    for i, stride in enumerate(cfg.encoder_strides):
        p = params.encoder
        x = leaky_relu(
            conv2d(x, p[f"encoder.conv{i}.weight"], p[f"encoder.conv{i}.bias"], stride=stride, pad=1),
            cfg.leak,
        )
    return x


def decode(ctx: Tensor, params: NetworkParams, view: View) -> Tensor:
    """Class logits [N, R, 3, D, D] for one view."""
    cfg = params.config
    p = params.decoders[view]
    prefix = f"decoder.{view.value}"
    x = mix_rows(ctx, p[f"{prefix}.rows.a"], p[f"{prefix}.rows.b"])
    x = leaky_relu(mix_cols(x, p[f"{prefix}.cols.a"], p[f"{prefix}.cols.b"]), cfg.leak)
    for i in range(len(cfg.decoder_widths)):
        x = upsample_nearest(x, 2)
        x = leaky_relu(conv2d(x, p[f"{prefix}.stage{i}.weight"], p[f"{prefix}.stage{i}.bias"], pad=1), cfg.leak)
    heads = [
        conv2d(x, p[f"{prefix}.head{shelf}.weight"], p[f"{prefix}.head{shelf}.bias"], pad=1)
        for shelf in range(cfg.max_shelves)
    ]
    return stack(heads, axis=1)


def discriminate(layout: Tensor, params: NetworkParams, view: View) -> Tensor:
    """Patch scores [N, 1, D/16, D/16] for layouts encoded as [N, R*3, D, D]."""
    cfg = params.config
    p = params.discriminators[view]
    x = layout
    depth = len(cfg.discriminator_widths) + 1
    for i in range(depth):
        prefix = f"disc.{view.value}.conv{i}"
        x = conv2d(x, p[f"{prefix}.weight"], p[f"{prefix}.bias"], stride=2, pad=1)
        if i < depth - 1:
            x = leaky_relu(x, cfg.leak)
    return x


def predict_probs(images, params: NetworkParams) -> dict[View, np.ndarray]:
    """Class probabilities [N, R, 3, D, D] per decoded view, from one encode call."""
    with no_grad():
        ctx = encode(images, params)
        return {
            view: softmax_over_classes(decode(ctx, params, view), axis=2).data for view in params.views
        }


def predict(images, params: NetworkParams) -> dict[View, np.ndarray]:
    """Label maps [N, R, D, D] per decoded view.

    Ties between classes resolve to the lowest class index.
    """
    with no_grad():
        ctx = encode(images, params)
        return {view: decode(ctx, params, view).data.argmax(axis=2).astype(np.uint8) for view in params.views}
