"""Unit test for the hard-sample export."""

from pathlib import Path
import numpy as np
import pytest
from dcfrec.denoise.config import DenoiseConfig
from dcfrec.denoise.hard_samples import HardSampleExport
from dcfrec.denoise.hard_samples import drop_rankings
from dcfrec.denoise.hard_samples import export_hard_samples
from dcfrec.denoise.hard_samples import hard_sample_set
from dcfrec.robustloss import LossLedger


@pytest.fixture
def ledger():
    """Sample 0 has the largest mean but was never retained; sample 1 survived."""
    ledger = LossLedger(10, v=3)
    losses = np.array([1.0, 0.9, 0.1, 0.1, 0.2, 0.1, 0.3, 0.1, 0.1, 0.2])
    ledger.record_loss(np.arange(10), losses, 1)
    ledger.d[1] = 100
    return ledger


def test_hard_sample_kept_by_bound(ledger):
    cfg = DenoiseConfig(drop_max=0.1, drop_warmup=1, sigma2=0.5)
    by_mean, by_bound = drop_rankings(ledger, 1, cfg)
    assert by_mean.tolist() == [0]
    assert by_bound.tolist() == [1]
    assert hard_sample_set(ledger, 1, cfg) == {0}


def test_zero_sigma2_has_no_hard_samples(ledger):
    cfg = DenoiseConfig(drop_max=0.3, drop_warmup=1, sigma2=0.0)
    assert hard_sample_set(ledger, 1, cfg) == set()


def test_labels_restrict_candidates(ledger):
    cfg = DenoiseConfig(drop_max=0.1, drop_warmup=1, sigma2=0.5)
    labels = np.ones(10, dtype=np.int8)
    labels[0] = 0
    by_mean, _ = drop_rankings(ledger, 1, cfg, labels)
    assert by_mean.tolist() == [1]


def test_empty_ledger():
    by_mean, by_bound = drop_rankings(LossLedger(4, v=2), 1, DenoiseConfig())
    assert by_mean.size == 0
    assert by_bound.size == 0


def test_export(ledger, tmp_path: Path):
    cfg = DenoiseConfig(drop_max=0.1, drop_warmup=1, sigma2=0.5)
    export = export_hard_samples(ledger, 1, cfg, seed=3)
    assert export.hard == [0]
    assert export.random_control == [1]
    assert export.drop_fraction == pytest.approx(0.1)
    export.write(tmp_path / "hard_samples.json")
    assert HardSampleExport.read(tmp_path / "hard_samples.json") == export


def test_unequal_sizes():
    with pytest.raises(ValueError, match="size"):
        HardSampleExport(
            epoch=1, drop_fraction=0.1, hard=[1, 2], random_control=[3], seed=0
        )
