"""Training loop for all four variants.

A step first updates the generator (encoder + active decoders) on the
supervised loss plus, for -disc variants, the weighted adversarial loss. It
then updates each discriminator on one-hot ground truth (real) against the
detached predictions of the same batch (fake).
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.errors import CheckpointError, TrainingDivergedError
from src.layout.grid import NUM_CLASSES, View
from src.model.network import (
    NetworkConfig,
    NetworkParams,
    decode,
    discriminate,
    encode,
    init_params,
    views_for,
)
from src.model.variants import Variant
from src.nn.checkpoint import load_checkpoint, save_checkpoint
from src.nn.losses import cross_entropy, lsgan_disc_loss, lsgan_gen_loss
from src.nn.ops import softmax_over_classes
from src.nn.optim import SGD
from src.nn.tensor import Tensor
from src.scene.rng import derive_seed

logger = logging.getLogger(__name__)

SIDECAR_SUFFIX = ".json"
GEN_VELOCITY_PREFIX = "optim.gen."
DISC_VELOCITY_PREFIX = "optim.disc."

Batch = tuple[np.ndarray, dict[View, np.ndarray]]


class TrainConfig(BaseModel):
    """Optimisation settings.

    Attributes:
        variant: Model variant.
        view: Decoded view for S variants; D variants always decode both.
        lr: SGD learning rate.
        momentum: SGD momentum.
        lambda_adv: Weight of the adversarial term in the generator loss.
        epochs: Passes over the training split.
        batch_size: Samples per step.
        seed: Initialisation and shuffling seed.
        class_weights: Cross-entropy weight for background, unoccupied, occupied.
    """

    model_config = ConfigDict(frozen=True)

    variant: Variant = Variant.D_DISC
    view: Literal["top", "front", "both"] | None = None
    lr: float = Field(0.01, ge=0.0)
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    lambda_adv: float = Field(0.01, ge=0.0)
    epochs: int = Field(10, ge=0)
    batch_size: int = Field(8, ge=1)
    seed: int = 0
    class_weights: tuple[float, float, float] = (0.2, 1.0, 1.0)

    @model_validator(mode="after")
    def _check_view(self) -> TrainConfig:
        if self.variant.dual and self.view not in (None, "both"):
            raise ValueError(f"Variant {self.variant.value} decodes both views; --view is for S variants only")
        if not self.variant.dual and self.view == "both":
            raise ValueError(f"Variant {self.variant.value} decodes a single view; choose top or front")
        return self

    @property
    def views(self) -> tuple[View, ...]:
        single = View(self.view) if self.view in ("top", "front") else None
        return views_for(self.variant, single)


@dataclass
class LossReport:
    """Loss values of one step; terms of inactive views or losses stay 0."""

    sup_top: float = 0.0
    sup_front: float = 0.0
    adv_top: float = 0.0
    adv_front: float = 0.0
    discr_top: float = 0.0
    discr_front: float = 0.0

    @property
    def sup(self) -> float:
        return self.sup_top + self.sup_front

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.as_dict().values())

    @classmethod
    def mean(cls, reports: Sequence[LossReport]) -> LossReport:
        if not reports:
            return cls()
        keys = cls().as_dict().keys()
        return cls(**{k: float(np.mean([getattr(r, k) for r in reports])) for k in keys})


class OptimizerState:
    """Generator and discriminator optimisers of one run."""

    def __init__(self, params: NetworkParams, config: TrainConfig):
        self.gen = SGD(params.generator_tensors(), lr=config.lr, momentum=config.momentum)
        self.disc = SGD(params.discriminator_tensors(), lr=config.lr, momentum=config.momentum)

    def velocities(self) -> dict[str, np.ndarray]:
        out = {GEN_VELOCITY_PREFIX + k: v for k, v in self.gen.velocities.items()}
        out.update({DISC_VELOCITY_PREFIX + k: v for k, v in self.disc.velocities.items()})
        return out

    def load_velocities(self, state: dict[str, np.ndarray]) -> None:
        for name, value in state.items():
            if name.startswith(GEN_VELOCITY_PREFIX):
                self.gen.velocities[name[len(GEN_VELOCITY_PREFIX) :]] = value
            elif name.startswith(DISC_VELOCITY_PREFIX):
                self.disc.velocities[name[len(DISC_VELOCITY_PREFIX) :]] = value


def one_hot_layouts(labels: np.ndarray) -> np.ndarray:
    """Encode labels [N, R, D, D] as float32 [N, R*3, D, D]."""
    n, r, d, _ = labels.shape
    encoded = np.eye(NUM_CLASSES, dtype=np.float32)[labels]  # [N, R, D, D, 3]
    return np.ascontiguousarray(np.moveaxis(encoded, -1, 2).reshape(n, r * NUM_CLASSES, d, d))


def train_step(
    batch: Batch,
    params: NetworkParams,
    optim: OptimizerState,
    config: TrainConfig,
    step: int = 0,
) -> LossReport:
    """One generator update followed by one discriminator update.

    Args:
        batch: Images [N, H, W, 3] and ground-truth labels [N, R, D, D] per view.
        params: Model parameters, updated in place.
        optim: Optimiser state, updated in place.
        config: Loss weights and optimiser settings.
        step: Global step number, for diagnostics.

    Returns:
        Loss values measured before the updates.

    Raises:
        TrainingDivergedError: If any loss is not finite.
    """
    images, targets = batch
    report = LossReport()
    adversarial = params.variant.adversarial

    optim.gen.zero_grad()
    optim.disc.zero_grad()
    ctx = encode(images, params)
    fakes: dict[View, Tensor] = {}
    total: Tensor | None = None
    for view in params.views:
        logits = decode(ctx, params, view)
        probs = softmax_over_classes(logits, axis=2)
        sup = cross_entropy(probs, targets[view], config.class_weights)
        setattr(report, f"sup_{view.value}", sup.item())
        total = sup if total is None else total + sup
        if adversarial:
            n, r, k, d, _ = probs.shape
            fakes[view] = probs.reshape(n, r * k, d, d)
            adv = lsgan_gen_loss(discriminate(fakes[view], params, view))
            setattr(report, f"adv_{view.value}", adv.item())
            total = total + adv * config.lambda_adv

    if not report.is_finite():
        raise TrainingDivergedError(step, report.as_dict())
    assert total is not None
    total.backward()
    optim.gen.step()

    if adversarial:
        optim.disc.zero_grad()
        disc_total: Tensor | None = None
        for view in params.views:
            real = Tensor(one_hot_layouts(targets[view]))
            d_loss = lsgan_disc_loss(
                discriminate(real, params, view), discriminate(fakes[view].detach(), params, view)
            )
            setattr(report, f"discr_{view.value}", d_loss.item())
            disc_total = d_loss if disc_total is None else disc_total + d_loss
        if not report.is_finite():
            raise TrainingDivergedError(step, report.as_dict())
        assert disc_total is not None
        disc_total.backward()
        optim.disc.step()

    return report


class Trainer:
    """Owns one run's parameters, optimiser state and progress."""

    def __init__(self, params: NetworkParams, config: TrainConfig):
        self.params = params
        self.config = config
        self.optim = OptimizerState(params, config)
        self.epoch = 0
        self.step = 0
        self.history: list[LossReport] = []

    @classmethod
    def create(cls, network: NetworkConfig, config: TrainConfig, zero_heads: bool = False) -> Trainer:
        params = init_params(network, config.variant, config.views, seed=config.seed, zero_heads=zero_heads)
        return cls(params, config)

    def train_step(self, batch: Batch) -> LossReport:
        report = train_step(batch, self.params, self.optim, self.config, step=self.step)
        self.step += 1
        return report

    def epoch_order(self, count: int, epoch: int) -> np.ndarray:
        """Deterministic shuffle of sample positions for an epoch."""
        return np.random.default_rng(derive_seed(self.config.seed, epoch)).permutation(count)

    def fit(
        self,
        load_batch: Callable[[Sequence[int]], Batch],
        count: int,
        epochs: int | None = None,
        on_epoch: Callable[[int, LossReport], None] | None = None,
    ) -> list[LossReport]:
        """Train until `epochs` epochs are complete (counting resumed ones).

        Args:
            load_batch: Builds a batch from sample positions.
            count: Number of training samples.
            epochs: Target epoch count; defaults to the config value.
            on_epoch: Called with (epoch, mean LossReport) after each epoch.

        Returns:
            Mean loss report per epoch trained in this call.
        """
        target = self.config.epochs if epochs is None else epochs
        means = []
        if count == 0:
            return means
        with ThreadPoolExecutor(max_workers=1) as prefetcher:
            while self.epoch < target:
                order = self.epoch_order(count, self.epoch)
                chunks = [order[i : i + self.config.batch_size] for i in range(0, count, self.config.batch_size)]
                reports = []
                pending = prefetcher.submit(load_batch, chunks[0])
                for k in range(len(chunks)):
                    batch = pending.result()
                    if k + 1 < len(chunks):
                        pending = prefetcher.submit(load_batch, chunks[k + 1])
                    reports.append(self.train_step(batch))
                mean = LossReport.mean(reports)
                self.history.append(mean)
                means.append(mean)
                logger.info(f"Epoch {self.epoch + 1}/{target}: sup={mean.sup:.4f}")
                self.epoch += 1
                if on_epoch is not None:
                    on_epoch(self.epoch - 1, mean)
        return means

    def save(self, path: Path) -> None:
        """Write parameters + momentum buffers, and a JSON sidecar with run metadata."""
        tensors = {**self.params.state_dict(), **self.optim.velocities()}
        save_checkpoint(path, tensors)
        sidecar = {
            "version": 1,
            "variant": self.params.variant.value,
            "views": [v.value for v in self.params.views],
            "network": self.params.config.model_dump(mode="json"),
            "train": self.config.model_dump(mode="json"),
            "epochs_completed": self.epoch,
            "steps_completed": self.step,
        }
        path.with_suffix(path.suffix + SIDECAR_SUFFIX).write_text(json.dumps(sidecar, indent=2))

    @classmethod
    def load(cls, path: Path, config: TrainConfig | None = None) -> Trainer:
        """Restore a run written by `save`.

        Args:
            path: Checkpoint path.
            config: Overrides the stored train config (e.g. more epochs); must
                keep the same variant and view.
        """
        meta = read_sidecar(path)
        try:
            network = NetworkConfig.model_validate(meta["network"])
            stored = TrainConfig.model_validate(meta["train"])
        except (KeyError, ValidationError) as e:
            raise CheckpointError(f"Invalid checkpoint metadata for {path}: {e}") from e
        config = config or stored
        if config.variant != stored.variant or config.views != stored.views:
            raise CheckpointError(
                f"Checkpoint {path} holds a {stored.variant.value} model for "
                f"{[v.value for v in stored.views]}, not {config.variant.value}"
            )
        trainer = cls.create(network, config)
        state = load_checkpoint(path)
        trainer.params.load_state_dict({k: v for k, v in state.items() if not k.startswith("optim.")})
        trainer.optim.load_velocities({k: v for k, v in state.items() if k.startswith("optim.")})
        trainer.epoch = int(meta.get("epochs_completed", 0))
        trainer.step = int(meta.get("steps_completed", 0))
        return trainer


def read_sidecar(path: Path) -> dict:
    sidecar = path.with_suffix(path.suffix + SIDECAR_SUFFIX)
    try:
        return json.loads(sidecar.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"Cannot read checkpoint metadata {sidecar}: {e}") from e


def load_params(path: Path) -> NetworkParams:
    """Parameters of a saved run, for inference."""
    return Trainer.load(path).params


def write_loss_log(path: Path, reports: Iterable[tuple[int, LossReport]], append: bool = False) -> None:
    """Per-epoch loss CSV: epoch followed by every LossReport field.

    With `append`, rows go after the existing ones and the header is only
    written to a new file.
    """
    fields = list(LossReport().as_dict())
    path.parent.mkdir(parents=True, exist_ok=True)
    fresh = not append or not path.exists()
    with path.open("a" if append else "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        if fresh:
            writer.writerow(["epoch", *fields])
        for epoch, report in reports:
            values = report.as_dict()
            writer.writerow([epoch, *(f"{values[k]:.6f}" for k in fields)])
