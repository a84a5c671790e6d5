"""Tests for the layout networks and the training loop."""

import numpy as np
import pytest

from src.dataset.loader import LayoutDataset
from src.errors import CheckpointError, ContractViolation, TrainingDivergedError
from src.layout.grid import Label, View
from src.metrics.evaluation import LayoutClass
from src.model import network
from src.model.network import decode, discriminate, encode, init_params, predict, predict_probs
from src.model.trainer import (
    LossReport,
    OptimizerState,
    TrainConfig,
    Trainer,
    load_params,
    one_hot_layouts,
    read_sidecar,
    train_step,
    write_loss_log,
)
from src.model.variants import Variant
from src.nn.tensor import Tensor
from src.pipeline import run_eval, run_train


@pytest.fixture(scope="module")
def net_config(small_config):
    return small_config.network_config()


@pytest.fixture(scope="module")
def train_batch(small_dataset):
    dataset = LayoutDataset(small_dataset, "train")
    return dataset.batch([0, 1], (View.TOP, View.FRONT))


class TestVariants:
    """Test the variant flags."""

    def test_flags(self):
        """Test dual and adversarial flags of every variant."""
        assert [v.dual for v in Variant] == [False, False, True, True]
        assert [v.adversarial for v in Variant] == [False, True, False, True]


class TestNetwork:
    """Test parameter sets and forward shapes."""

    def test_parameter_sets(self, net_config):
        """Test each variant owns exactly the decoders and discriminators it needs."""
        s = init_params(net_config, Variant.S, (View.FRONT,))
        assert list(s.decoders) == [View.FRONT]
        assert s.discriminators == {}
        dd = init_params(net_config, Variant.D_DISC)
        assert list(dd.decoders) == [View.TOP, View.FRONT]
        assert list(dd.discriminators) == [View.TOP, View.FRONT]

    def test_deterministic_init(self, net_config):
        """Test the same seed gives the same parameters and shared parts match across variants."""
        a = init_params(net_config, Variant.D, seed=3).state_dict()
        b = init_params(net_config, Variant.D, seed=3).state_dict()
        c = init_params(net_config, Variant.S, seed=3).state_dict()
        other = init_params(net_config, Variant.D, seed=4).state_dict()
        assert all(np.array_equal(a[k], b[k]) for k in a)
        assert all(np.array_equal(a[k], c[k]) for k in c)
        assert not np.array_equal(a["encoder.conv0.weight"], other["encoder.conv0.weight"])

    def test_shapes(self, net_config):
        """Test context, layout logits and patch scores."""
        params = init_params(net_config, Variant.D_DISC)
        images = np.zeros((2, 64, 64, 3), dtype=np.uint8)
        ctx = encode(images, params)
        assert ctx.shape == (2, *net_config.context_shape)
        logits = decode(ctx, params, View.TOP)
        assert logits.shape == (2, 4, 3, 32, 32)
        scores = discriminate(Tensor(np.zeros((2, 12, 32, 32), dtype=np.float32)), params, View.FRONT)
        assert scores.shape == (2, 1, 2, 2)

    def test_wrong_image_size(self, net_config):
        """Test images of the wrong size are a contract violation."""
        params = init_params(net_config, Variant.S)
        with pytest.raises(ContractViolation):
            encode(np.zeros((1, 32, 32, 3), dtype=np.uint8), params)

    def test_predict_encodes_once(self, net_config, mocker):
        """Test both views of a dual model come from one encoder pass."""
        spy = mocker.spy(network, "encode")
        params = init_params(net_config, Variant.D)
        labels = predict(np.zeros((1, 64, 64, 3), dtype=np.uint8), params)
        assert spy.call_count == 1
        assert set(labels) == {View.TOP, View.FRONT}
        assert labels[View.TOP].dtype == np.uint8
        assert labels[View.TOP].shape == (1, 4, 32, 32)

    def test_zero_heads_predict_background(self, net_config):
        """Test tied logits resolve to the lowest class."""
        params = init_params(net_config, Variant.D, zero_heads=True)
        labels = predict(np.full((1, 64, 64, 3), 128, dtype=np.uint8), params)
        assert all((v == Label.BACKGROUND).all() for v in labels.values())

    def test_probabilities(self, net_config):
        """Test per-cell class probabilities sum to one."""
        params = init_params(net_config, Variant.S)
        probs = predict_probs(np.zeros((1, 64, 64, 3), dtype=np.uint8), params)[View.TOP]
        assert probs.shape == (1, 4, 3, 32, 32)
        assert np.allclose(probs.sum(axis=2), 1.0, atol=1e-5)

    def test_load_state_mismatch(self, net_config):
        """Test loading parameters of another variant fails."""
        params = init_params(net_config, Variant.S)
        with pytest.raises(ContractViolation, match="missing"):
            params.load_state_dict(init_params(net_config, Variant.D).state_dict())

    def test_front_decoder_does_not_touch_top(self, net_config):
        """Test swapping the front decoder leaves the top layout bit-identical."""
        images = np.random.default_rng(0).integers(0, 256, size=(2, 64, 64, 3), dtype=np.uint8)
        params = init_params(net_config, Variant.D, seed=0)
        swapped = init_params(net_config, Variant.D, seed=0)
        swapped.decoders[View.FRONT] = init_params(net_config, Variant.D, seed=9).decoders[View.FRONT]
        before, after = predict_probs(images, params), predict_probs(images, swapped)
        assert np.array_equal(before[View.TOP], after[View.TOP])
        assert not np.array_equal(before[View.FRONT], after[View.FRONT])

    def test_heads_are_independent(self, net_config):
        """Test zeroing one shelf head leaves every other channel's logits bit-identical."""
        images = np.random.default_rng(1).integers(0, 256, size=(1, 64, 64, 3), dtype=np.uint8)
        params = init_params(net_config, Variant.D, seed=2)
        before = decode(encode(images, params), params, View.TOP).data.copy()
        head = params.decoders[View.TOP]
        head["decoder.top.head2.weight"].data[...] = 0.0
        head["decoder.top.head2.bias"].data[...] = 0.0
        after = decode(encode(images, params), params, View.TOP).data
        for shelf in (0, 1, 3):
            assert np.array_equal(before[:, shelf], after[:, shelf])
        assert not after[:, 2].any()


class TestTrainStep:
    """Test one optimisation step."""

    def test_one_hot_layouts(self):
        """Test labels become R*3 one-hot channels."""
        labels = np.array([[[[0, 2], [1, 1]]]], dtype=np.uint8)  # [1, 1, 2, 2]
        encoded = one_hot_layouts(labels)
        assert encoded.shape == (1, 3, 2, 2)
        assert encoded[0, :, 0, 1].tolist() == [0.0, 0.0, 1.0]

    def test_supervised_only(self, net_config, train_batch):
        """Test a D step reports supervised terms and no adversarial ones."""
        config = TrainConfig(variant=Variant.D)
        params = init_params(net_config, Variant.D)
        before = params.state_dict()
        before = {k: v.copy() for k, v in before.items()}
        report = train_step(train_batch, params, OptimizerState(params, config), config)
        assert report.sup_top > 0 and report.sup_front > 0
        assert report.adv_top == report.discr_top == 0.0
        changed = [k for k, v in params.state_dict().items() if not np.array_equal(v, before[k])]
        assert any(k.startswith("encoder.") for k in changed)
        assert any(k.startswith("decoder.front") for k in changed)

    def test_adversarial_terms(self, net_config, train_batch):
        """Test a D-disc step reports every loss and updates the discriminators."""
        config = TrainConfig(variant=Variant.D_DISC)
        params = init_params(net_config, Variant.D_DISC)
        disc_before = {k: v.data.copy() for k, v in params.discriminator_tensors().items()}
        report = train_step(train_batch, params, OptimizerState(params, config), config)
        assert report.is_finite()
        assert report.adv_top > 0 and report.discr_front > 0
        assert any(not np.array_equal(t.data, disc_before[k]) for k, t in params.discriminator_tensors().items())

    def test_single_view_batch(self, net_config, train_batch):
        """Test an S model only uses its own view's targets."""
        config = TrainConfig(variant=Variant.S, view="front")
        params = init_params(net_config, Variant.S, config.views)
        images, targets = train_batch
        report = train_step((images, {View.FRONT: targets[View.FRONT]}), params, OptimizerState(params, config), config)
        assert report.sup_front > 0
        assert report.sup_top == 0.0

    def test_divergence(self, net_config, train_batch):
        """Test a non-finite loss raises TrainingDivergedError."""
        config = TrainConfig(variant=Variant.S)
        params = init_params(net_config, Variant.S)
        params.encoder["encoder.conv0.weight"].data[...] = np.nan
        with pytest.raises(TrainingDivergedError) as exc:
            train_step(train_batch, params, OptimizerState(params, config), config, step=5)
        assert exc.value.step == 5

    def test_loss_decreases(self, net_config, train_batch):
        """Test repeated steps on one batch lower the supervised loss."""
        trainer = Trainer.create(net_config, TrainConfig(variant=Variant.D, lr=0.01))
        losses = [trainer.train_step(train_batch).sup for _ in range(8)]
        assert losses[-1] < losses[0]

    def test_zero_adversarial_weight(self, net_config, train_batch):
        """Test a -disc model with lambda_adv 0 makes exactly the supervised generator update."""
        plain_config = TrainConfig(variant=Variant.D)
        plain = init_params(net_config, Variant.D)
        train_step(train_batch, plain, OptimizerState(plain, plain_config), plain_config)

        disc_config = TrainConfig(variant=Variant.D_DISC, lambda_adv=0.0)
        with_disc = init_params(net_config, Variant.D_DISC)
        train_step(train_batch, with_disc, OptimizerState(with_disc, disc_config), disc_config)

        expected = plain.generator_tensors()
        differing = [k for k, t in with_disc.generator_tensors().items() if not np.array_equal(t.data, expected[k].data)]
        assert differing == []

    def test_discriminator_update_keeps_generator(self, net_config, train_batch, mocker):
        """Test the discriminator half of a step leaves encoder and decoders untouched."""
        config = TrainConfig(variant=Variant.D_DISC)
        params = init_params(net_config, Variant.D_DISC)
        optim = OptimizerState(params, config)
        after_gen: dict[str, np.ndarray] = {}
        gen_step = optim.gen.step

        def snapshot():
            gen_step()
            after_gen.update({k: t.data.copy() for k, t in params.generator_tensors().items()})

        mocker.patch.object(optim.gen, "step", side_effect=snapshot)
        disc_before = {k: t.data.copy() for k, t in params.discriminator_tensors().items()}
        train_step(train_batch, params, optim, config)

        assert after_gen
        for name, tensor in params.generator_tensors().items():
            assert np.array_equal(tensor.data, after_gen[name]), name
        assert any(not np.array_equal(t.data, disc_before[k]) for k, t in params.discriminator_tensors().items())

    def test_seeded_loss_sequence(self, net_config, small_dataset):
        """Test a fixed seed reproduces the exact per-step loss reports."""
        dataset = LayoutDataset(small_dataset, "train")

        def run(seed: int) -> list[dict[str, float]]:
            trainer = Trainer.create(net_config, TrainConfig(variant=Variant.D_DISC, seed=seed, batch_size=4))
            reports = []
            for epoch in range(2):
                order = trainer.epoch_order(len(dataset), epoch)
                for start in range(0, len(dataset), 4):
                    batch = dataset.batch(order[start : start + 4], trainer.params.views)
                    reports.append(trainer.train_step(batch).as_dict())
            return reports

        first = run(3)
        assert len(first) == 4
        assert run(3) == first
        assert run(4) != first


class TestTrainer:
    """Test the run lifecycle."""

    def test_fit_and_resume(self, net_config, small_dataset, tmp_path):
        """Test checkpoints carry epochs and momentum so a run can continue."""
        dataset = LayoutDataset(small_dataset, "train")
        config = TrainConfig(variant=Variant.S_DISC, view="top", epochs=1, batch_size=4)
        trainer = Trainer.create(net_config, config)
        epochs = []
        reports = trainer.fit(
            lambda p: dataset.batch(p, trainer.params.views), len(dataset), on_epoch=lambda e, r: epochs.append(e)
        )
        assert len(reports) == 1 and epochs == [0]
        assert trainer.step == 2

        path = tmp_path / "run.ssck"
        trainer.save(path)
        meta = read_sidecar(path)
        assert meta["epochs_completed"] == 1
        assert meta["variant"] == "s-disc"

        resumed = Trainer.load(path, config.model_copy(update={"epochs": 2}))
        assert resumed.epoch == 1
        assert resumed.optim.gen.velocities.keys() == trainer.optim.gen.velocities.keys()
        for name, value in trainer.params.state_dict().items():
            assert np.array_equal(resumed.params.state_dict()[name], value)
        resumed.fit(lambda p: dataset.batch(p, resumed.params.views), len(dataset))
        assert resumed.epoch == 2

    def test_load_rejects_other_variant(self, net_config, tmp_path):
        """Test resuming with a different variant fails."""
        path = tmp_path / "run.ssck"
        Trainer.create(net_config, TrainConfig(variant=Variant.D)).save(path)
        with pytest.raises(CheckpointError):
            Trainer.load(path, TrainConfig(variant=Variant.S))

    def test_load_params(self, net_config, tmp_path):
        """Test inference parameters come back with their variant."""
        path = tmp_path / "run.ssck"
        Trainer.create(net_config, TrainConfig(variant=Variant.D)).save(path)
        params = load_params(path)
        assert params.variant == Variant.D
        assert params.views == (View.TOP, View.FRONT)

    def test_missing_sidecar(self, tmp_path):
        """Test a checkpoint without metadata is refused."""
        with pytest.raises(CheckpointError):
            load_params(tmp_path / "nothing.ssck")

    def test_epoch_order_is_seeded(self, net_config):
        """Test shuffles depend on seed and epoch only."""
        a = Trainer.create(net_config, TrainConfig(seed=1, variant=Variant.S))
        b = Trainer.create(net_config, TrainConfig(seed=1, variant=Variant.S))
        assert np.array_equal(a.epoch_order(10, 3), b.epoch_order(10, 3))
        assert sorted(a.epoch_order(10, 0).tolist()) == list(range(10))

    def test_loss_log(self, tmp_path):
        """Test the loss CSV has a header and one row per epoch, appending on resume."""
        path = tmp_path / "losses.csv"
        write_loss_log(path, [(0, LossReport(sup_top=1.0))])
        write_loss_log(path, [(1, LossReport(sup_top=0.5))], append=True)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("epoch,sup_top,sup_front")
        assert lines[1].startswith("0,1.000000")
        assert lines[2].startswith("1,0.500000")

    @pytest.mark.slow
    def test_overfits_one_sample(self, net_config, small_dataset):
        """Test a D model memorises a single scene to at least 99% of cells."""
        dataset = LayoutDataset(small_dataset, "train")
        batch = dataset.batch([0], (View.TOP, View.FRONT))
        config = TrainConfig(variant=Variant.D, lr=0.02, momentum=0.9, class_weights=(1.0, 1.0, 1.0))
        trainer = Trainer.create(net_config, config)
        for _ in range(400):
            trainer.train_step(batch)
        labels = predict(batch[0], trainer.params)
        for view in (View.TOP, View.FRONT):
            assert (labels[view] == batch[1][view]).mean() >= 0.99

    @pytest.mark.slow
    def test_training_beats_untrained(self, small_dataset, small_config, tmp_path):
        """Test a trained D-disc model scores above its untrained initialisation."""
        config = small_config.with_train(variant="d-disc", epochs=40, batch_size=4, lr=0.02)
        untrained = tmp_path / "untrained.ssck"
        trained = tmp_path / "trained.ssck"
        run_train(small_dataset, config.with_train(epochs=0), untrained)
        run_train(small_dataset, config, trained)

        before = run_eval(small_dataset, untrained, tmp_path / "before", split="train")
        after = run_eval(small_dataset, trained, tmp_path / "after", split="train")
        for view in (View.TOP, View.FRONT):
            assert after.get(view, LayoutClass.RACK).miou > before.get(view, LayoutClass.RACK).miou
        mean_before = np.nanmean([miou for _, _, miou, _ in before.rows()])
        mean_after = np.nanmean([miou for _, _, miou, _ in after.rows()])
        assert mean_after > mean_before
