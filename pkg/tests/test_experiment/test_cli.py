"""Testing the command-line workflow on a small synthetic dataset."""

import json
from pathlib import Path
from typing import Any
import pandas as pd
import pytest
from click.testing import CliRunner
from click.testing import Result
from dcfrec.cli import cli
from dcfrec.datasets.interactions import FNAME_NOISE_MASK
from dcfrec.denoise.hard_samples import FNAME_HARD_SAMPLES
from dcfrec.experiment import FNAME_CHECKPOINT
from dcfrec.experiment import FNAME_RQ3
from dcfrec.experiment import FNAME_RQ4
from dcfrec.experiment import FNAME_SUMMARY
from dcfrec.experiment import FNAME_SWEEP
from dcfrec.experiment import MissingArtifactError


CONFIG = Path(__file__).parent / "configs" / "small.yml"


def command_line(command: str, **options: Any) -> list[str]:
    """Build `command --key value ...`; True adds a flag, lists repeat the option."""
    args = [command]
    for key, value in options.items():
        option = "--" + key.replace("_", "-")
        if value is True:
            args.append(option)
            continue
        for item in value if isinstance(value, list) else [value]:
            args.extend([option, str(item)])
    return args


def invoke(command: str, **options: Any) -> Result:
    result = CliRunner().invoke(cli, command_line(command, **options))
    assert result.exit_code == 0, result.output
    return result


def run_folder(out: Path, command: str) -> Path:
    (folder,) = out.glob(f"{command}_*")
    return folder


@pytest.fixture
def prepared(tmp_path: Path) -> Path:
    data = tmp_path / "planted.tsv"
    invoke("synthesize", out=data, users=30, items=25, rank=4, positives=8)
    invoke(
        "prepare",
        config=CONFIG,
        input=data,
        out=tmp_path / "prepared",
        noise_rate=0.2,
    )
    return tmp_path / "prepared"


def test_command_line():
    args = command_line("sweep", R=[0.0, 0.1], dump_ledger=True, drop_max=0.2)
    assert args == [
        "sweep",
        "--R",
        "0.0",
        "--R",
        "0.1",
        "--dump-ledger",
        "--drop-max",
        "0.2",
    ]


def test_version():
    result = CliRunner().invoke(cli, ["--version"])
    assert "version" in result.output


def test_prepare(prepared: Path):
    manifest = json.loads((prepared / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["noisy_samples"] > 0
    assert manifest["config"]["noise_rate"] == 0.2
    mask = pd.read_csv(prepared / FNAME_NOISE_MASK)
    assert list(mask.columns) == ["sample_id", "user", "item"]
    assert len(mask) == manifest["noisy_samples"]


def test_prepare_is_reproducible(prepared: Path, tmp_path: Path):
    rerun = tmp_path / "rerun"
    data = tmp_path / "planted.tsv"
    invoke("prepare", config=CONFIG, input=data, out=rerun, noise_rate=0.2)
    files = sorted(path.name for path in prepared.iterdir())
    assert files == sorted(path.name for path in rerun.iterdir())
    assert FNAME_NOISE_MASK in files
    for name in files:
        assert (prepared / name).read_bytes() == (rerun / name).read_bytes(), name


def test_train_and_evaluate(prepared: Path, tmp_path: Path):
    out = tmp_path / "runs"
    invoke(
        "train", config=CONFIG, input=prepared, out=out, seeds=2, dump_ledger=True
    )
    folder = run_folder(out, "train")
    manifest = json.loads((folder / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "train"
    assert manifest["config"]["dump_ledger"] is True

    summary = pd.read_csv(folder / FNAME_SUMMARY)
    assert set(summary["K"]) == {5, 10}
    assert summary["std"].notna().all()
    for seed in (0, 1):
        assert (folder / "dcf" / f"seed_{seed}" / FNAME_CHECKPOINT).exists()
        assert (folder / "dcf" / f"seed_{seed}" / FNAME_HARD_SAMPLES).exists()

    checkpoint = folder / "dcf" / "seed_0" / FNAME_CHECKPOINT
    result = invoke("evaluate", input=prepared, out=out, checkpoint=checkpoint, K=5)
    assert "recall@5" in result.output
    assert "ndcg@5" in result.output


@pytest.mark.parametrize("method", ["normal", "tce"])
def test_train_baselines(prepared: Path, tmp_path: Path, method: str):
    out = tmp_path / "runs"
    invoke("train", config=CONFIG, input=prepared, out=out, method=method)
    summary = pd.read_csv(run_folder(out, "train") / FNAME_SUMMARY)
    assert set(summary["method"]) == {method}


def test_sweep(prepared: Path, tmp_path: Path):
    out = tmp_path / "runs"
    invoke("sweep", config=CONFIG, input=prepared, out=out, R=[0.0, 0.1], v=2)
    table = pd.read_csv(run_folder(out, "sweep") / FNAME_SWEEP)
    assert len(table) == 2
    assert set(table["R"]) == {0.0, 0.1}
    assert set(table["v"]) == {2}
    assert table["validation_ndcg@5"].is_monotonic_decreasing


def test_rq3(prepared: Path, tmp_path: Path):
    out = tmp_path / "runs"
    invoke("train", config=CONFIG, input=prepared, out=out)
    export = run_folder(out, "train") / "dcf" / "seed_0" / FNAME_HARD_SAMPLES
    invoke(
        "rq3",
        config=CONFIG,
        input=prepared,
        out=out,
        hard_samples=export,
        drop_max=0.2,
    )
    table = pd.read_csv(run_folder(out, "rq3") / FNAME_RQ3)
    assert table["variant"].tolist() == ["tce+hard", "tce+random", "tce"]
    hard, random, _ = table["protected"]
    assert hard == random
    assert table["dropped"].nunique() == 1


def test_rq4(prepared: Path, tmp_path: Path):
    out = tmp_path / "runs"
    invoke("rq4", config=CONFIG, input=prepared, out=out, R=0.2, epochs=3)
    table = pd.read_csv(run_folder(out, "rq4") / FNAME_RQ4)
    assert set(table["schedule"]) == {"progressive", "fixed"}
    assert len(table) == 6
    assert list(table.columns) == [
        "schedule",
        "seed",
        "epoch",
        "flips",
        "flip_precision",
        "cumulative_precision",
    ]


def test_train_needs_input(tmp_path: Path):
    result = CliRunner().invoke(cli, command_line("train", out=tmp_path))
    assert result.exit_code != 0
    assert isinstance(result.exception, MissingArtifactError)


def test_rq4_needs_noise_mask(tmp_path: Path):
    data = tmp_path / "planted.tsv"
    invoke("synthesize", out=data, users=10, items=12, positives=6)
    invoke("prepare", input=data, out=tmp_path / "clean", format="tsv-triplet")
    result = CliRunner().invoke(
        cli, command_line("rq4", input=tmp_path / "clean", out=tmp_path / "runs")
    )
    assert isinstance(result.exception, MissingArtifactError)
