"""Unit test for the training loops."""

import json
from pathlib import Path
import numpy as np
import pytest
from dcfrec.datasets.sampling import batch_stream
from dcfrec.denoise.config import DenoiseConfig
from dcfrec.denoise.gates import current_positives
from dcfrec.denoise.hard_samples import FNAME_HARD_SAMPLES
from dcfrec.denoise.relabel import read_events
from dcfrec.denoise.schedules import drop_count
from dcfrec.denoise.schedules import drop_fraction
from dcfrec.denoise.trainers import FNAME_EPOCHS
from dcfrec.denoise.trainers import FNAME_LEDGER
from dcfrec.denoise.trainers import FNAME_RELABEL
from dcfrec.denoise.trainers import RunLogs
from dcfrec.denoise.trainers import train_baseline
from dcfrec.denoise.trainers import train_dcf
from dcfrec.denoise.trainers import train_method
from dcfrec.evaluation import MetricsReport
from dcfrec.evaluation import evaluate
from dcfrec.evaluation import flip_precision
from dcfrec.model.gmf import init_model
from dcfrec.model.optimizer import OptimizerConfig
from dcfrec.robustloss import LossLedger
from tests import planted_dataset


OPT = OptimizerConfig(learning_rate=0.01, embedding_dim=8)


@pytest.fixture(scope="module")
def dataset():
    return planted_dataset(num_users=30, num_items=40, positives=10, noise_rate=0.2)


def new_model(dataset, seed=0):
    return init_model(dataset.num_users, dataset.num_items, k=8, seed=seed)


def assert_same_parameters(first, second):
    for name, parameter in first.parameters().items():
        np.testing.assert_array_equal(parameter, second.parameters()[name])


def test_degenerate_dcf_equals_normal(dataset):
    cfg = DenoiseConfig(
        R=0.0, drop_max=0.0, sigma2=0.0, epochs=4, batch_size=64, patience=0
    )
    dcf = train_dcf(dataset, new_model(dataset), cfg=cfg, opt=OPT)
    normal = train_baseline(dataset, new_model(dataset), "normal", cfg, OPT)
    assert dcf.events == []
    assert [r.loss for r in dcf.reports] == [r.loss for r in normal.reports]
    assert_same_parameters(dcf.model, normal.model)


def test_epoch_drops_follow_batch_rounding(dataset):
    cfg = DenoiseConfig(
        R=0.0, drop_max=0.3, drop_warmup=2, epochs=3, batch_size=64, patience=0
    )
    result = train_dcf(dataset, new_model(dataset), cfg=cfg, opt=OPT)
    positives = dataset.num_train_positives
    for report in result.reports:
        fraction = drop_fraction(report.epoch, cfg)
        stream = batch_stream(
            dataset, cfg.batch_size, cfg.negatives, cfg.seed, report.epoch
        )
        per_batch = [drop_count(fraction, len(current_positives(b))) for b in stream]
        assert report.dropped == sum(per_batch)
        assert fraction * positives - 1e-6 <= report.dropped
        assert report.dropped <= fraction * positives + len(per_batch)


def test_tce_without_dropping_equals_normal(dataset):
    cfg = DenoiseConfig(drop_max=0.0, epochs=3, batch_size=64, patience=0)
    tce = train_baseline(dataset, new_model(dataset), "tce", cfg, OPT)
    normal = train_baseline(dataset, new_model(dataset), "normal", cfg, OPT)
    assert all(r.dropped == 0 for r in tce.reports)
    assert_same_parameters(tce.model, normal.model)


def test_dcf_deterministic(dataset):
    cfg = DenoiseConfig(
        R=0.1, O=2, drop_warmup=2, epochs=4, batch_size=64, patience=0
    )
    first = train_dcf(dataset, new_model(dataset), cfg=cfg, opt=OPT)
    second = train_dcf(dataset, new_model(dataset), cfg=cfg, opt=OPT)
    assert first.events == second.events
    assert first.hard_samples == second.hard_samples
    assert_same_parameters(first.model, second.model)


def test_dcf_flips_within_quota(dataset):
    cfg = DenoiseConfig(
        R=0.1, O=2, drop_warmup=2, epochs=5, batch_size=64, patience=0
    )
    result = train_dcf(dataset, new_model(dataset), cfg=cfg, opt=OPT)
    flipped = [e.sample for e in result.events]
    assert len(flipped) == len(set(flipped))
    assert len(flipped) <= np.ceil(0.1 * len(dataset.train))
    assert np.all(result.labels[flipped] == 0)
    assert np.all(dataset.train.labels[flipped] == 1)
    assert result.reports[-1].relabel_ratio == pytest.approx(0.1)


def test_dcf_drops_positives(dataset):
    cfg = DenoiseConfig(
        drop_max=0.2, drop_warmup=1, epochs=2, batch_size=64, patience=0
    )
    result = train_dcf(dataset, new_model(dataset), cfg=cfg, opt=OPT)
    assert all(r.dropped > 0 for r in result.reports)


def test_protected_tce_drops_equal_counts(dataset):
    cfg = DenoiseConfig(
        drop_max=0.2, drop_warmup=1, epochs=2, batch_size=64, patience=0
    )
    protected = set(range(0, len(dataset.train), 3))
    plain = train_baseline(dataset, new_model(dataset), "tce", cfg, OPT)
    guarded = train_baseline(
        dataset, new_model(dataset), "tce", cfg, OPT, protected=protected
    )
    assert [r.dropped for r in plain.reports] == [r.dropped for r in guarded.reports]


def test_ledger_mismatch(dataset):
    with pytest.raises(ValueError, match="ledger"):
        train_dcf(dataset, new_model(dataset), ledger=LossLedger(3, v=3))


def test_unknown_method(dataset):
    with pytest.raises(ValueError, match="Unknown method"):
        train_method("mae", dataset, new_model(dataset))


def test_protected_requires_tce(dataset):
    with pytest.raises(ValueError, match="tce"):
        train_baseline(dataset, new_model(dataset), "normal", protected={1})


def test_early_stopping_restores_best(dataset, mocker):
    snapshots = []
    scores = iter([0.5, 0.6, 0.4, 0.3, 0.9])

    def fake_evaluate(model, dataset, ks, split):
        snapshots.append(model.copy_parameters())
        ndcg = next(scores)
        return MetricsReport(values={"recall": {5: ndcg}, "ndcg": {5: ndcg}})

    mocker.patch("dcfrec.denoise.trainers.evaluate", side_effect=fake_evaluate)
    cfg = DenoiseConfig(epochs=10, batch_size=64, patience=2)
    result = train_baseline(dataset, new_model(dataset), "normal", cfg, OPT)
    assert result.epochs_trained == 4
    assert result.best_epoch == 2
    for name, parameter in result.model.parameters().items():
        np.testing.assert_array_equal(parameter, snapshots[1][name])


def test_empty_validation_disables_stopping(dataset):
    no_validation = type(dataset)(
        num_users=dataset.num_users,
        num_items=dataset.num_items,
        train=dataset.train,
        validation=dataset.validation.from_records([]),
        test=dataset.test,
    )
    cfg = DenoiseConfig(epochs=2, batch_size=64, patience=1)
    with pytest.warns(UserWarning, match="early stopping"):
        result = train_baseline(no_validation, new_model(dataset), "normal", cfg, OPT)
    assert result.epochs_trained == 2
    assert result.best_epoch == 2


def test_run_logs(dataset, tmp_path: Path):
    cfg = DenoiseConfig(
        R=0.2, O=1, drop_warmup=1, epochs=3, batch_size=64, patience=0
    )
    logs = RunLogs(tmp_path, method="dcf", seed=0, dump_ledger=True)
    result = train_dcf(dataset, new_model(dataset), cfg=cfg, opt=OPT, logs=logs)

    lines = (tmp_path / FNAME_EPOCHS).read_text(encoding="utf-8").splitlines()
    assert [json.loads(line)["epoch"] for line in lines] == [1, 2, 3]
    assert (tmp_path / FNAME_HARD_SAMPLES).exists()
    assert (tmp_path / FNAME_LEDGER).exists()
    if result.events:
        assert read_events(tmp_path / FNAME_RELABEL) == result.events


HARNESS_SEEDS = range(5)
HARNESS_OPT = OptimizerConfig(learning_rate=0.01, embedding_dim=16)


def harness_dataset(seed: int):
    """200 users x 100 items from a rank-8 planted model with 20% false positives."""
    return planted_dataset(
        num_users=200, num_items=100, positives=15, noise_rate=0.2, seed=seed, rank=8
    )


def harness_model(dataset, seed: int):
    return init_model(dataset.num_users, dataset.num_items, k=16, seed=seed)


def early_precision(result, noisy: set[int], last_epoch: int) -> float | None:
    """Cumulative flip precision of the flips made up to and including an epoch."""
    events = [e for e in result.events if e.epoch <= last_epoch]
    return flip_precision(events, noisy)


@pytest.mark.slow
class TestSyntheticHarness:
    """Test denoising on planted data with known noise, over five seeds."""

    @pytest.fixture(scope="class")
    def runs(self):
        runs = []
        for seed in HARNESS_SEEDS:
            dataset = harness_dataset(seed)
            cfg = DenoiseConfig(seed=seed)
            normal = train_baseline(
                dataset, harness_model(dataset, seed), "normal", cfg, HARNESS_OPT
            )
            progressive = train_dcf(
                dataset, harness_model(dataset, seed), cfg=cfg, opt=HARNESS_OPT
            )
            fixed = train_dcf(
                dataset,
                harness_model(dataset, seed),
                cfg=DenoiseConfig(seed=seed, schedule="fixed"),
                opt=HARNESS_OPT,
            )
            runs.append((dataset, cfg, normal, progressive, fixed))
        return runs

    def test_flips_target_injected_noise(self, runs):
        passed = 0
        for dataset, cfg, _, progressive, _ in runs:
            assert progressive.epochs_trained > cfg.O
            precision = flip_precision(progressive.events, dataset.noisy_sample_ids())
            passed += precision is not None and precision >= 2 * 0.2
        assert passed >= 4

    def test_recall_not_below_normal(self, runs):
        passed = 0
        for dataset, _, normal, progressive, _ in runs:
            recall = {
                name: evaluate(result.model, dataset, (5,)).get("recall", 5)
                for name, result in (("normal", normal), ("dcf", progressive))
            }
            passed += recall["dcf"] >= recall["normal"]
        assert passed >= 4

    def test_progressive_flips_cleaner_early(self, runs):
        passed = 0
        for dataset, cfg, _, progressive, fixed in runs:
            noisy = dataset.noisy_sample_ids()
            ramped = early_precision(progressive, noisy, cfg.O)
            constant = early_precision(fixed, noisy, cfg.O)
            passed += None not in (ramped, constant) and ramped >= constant
        assert passed >= 4

    def test_protecting_hard_samples(self):
        ndcg: dict[str, list[float]] = {"tce+hard": [], "tce+random": [], "tce": []}
        non_empty = 0
        for seed in HARNESS_SEEDS:
            dataset = harness_dataset(seed)
            # a larger sigma2 separates the mean-loss and bound rankings
            dcf = train_dcf(
                dataset,
                harness_model(dataset, seed),
                cfg=DenoiseConfig(seed=seed, sigma2=0.1),
                opt=HARNESS_OPT,
            )
            export = dcf.hard_samples
            assert export is not None
            non_empty += len(export.hard) > 0
            protected = {
                "tce+hard": set(export.hard),
                "tce+random": set(export.random_control),
                "tce": None,
            }
            for variant, samples in protected.items():
                result = train_baseline(
                    dataset,
                    harness_model(dataset, seed),
                    "tce",
                    DenoiseConfig(seed=seed),
                    HARNESS_OPT,
                    protected=samples,
                )
                report = evaluate(result.model, dataset, (5,))
                ndcg[variant].append(report.get("ndcg", 5))

        assert non_empty >= 4
        wins = np.array(ndcg["tce+hard"]) >= np.array(ndcg["tce"])
        assert wins.sum() >= 4
        assert np.mean(ndcg["tce+hard"]) >= np.mean(ndcg["tce+random"])
