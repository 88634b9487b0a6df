"""Unit test for config files and their resolution."""

from pathlib import Path
import pytest
from dcfrec.experiment import RunConfig
from dcfrec.experiment import config_loader
from dcfrec.experiment import expand_grid
from dcfrec.experiment import resolve_config


CONFIG_FOLDER = Path(__file__).parent / "configs"


@pytest.mark.parametrize("fname", ["small.yml", "small.cfg"])
def test_valid_config(fname):
    config = config_loader(CONFIG_FOLDER / fname)
    assert config == {
        "format": "tsv-triplet",
        "epochs": 2,
        "batch": 64,
        "dim": 4,
        "patience": 0,
        "drop_warmup": 1,
        "R": 0.1,
        "O": 1,
        "K": [5, 10],
    }


def test_missing_config(tmp_path: Path):
    with pytest.raises(FileNotFoundError):
        config_loader(tmp_path / "missing.yml")


def test_unknown_key(tmp_path: Path):
    path = tmp_path / "bad.yml"
    path.write_text("learning_rate: 0.1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="Unknown key"):
        config_loader(path)


def test_malformed_line(tmp_path: Path):
    path = tmp_path / "bad.cfg"
    path.write_text("epochs = 3\nsigma2 0.1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="Line 2"):
        config_loader(path)


def test_yaml_must_be_mapping(tmp_path: Path):
    path = tmp_path / "bad.yml"
    path.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="mapping"):
        config_loader(path)


class TestResolveConfig:
    """Test the defaults < config file < command line precedence."""

    def test_defaults(self):
        config = resolve_config()
        assert config.lr == 0.001
        assert config.dim == 32
        assert config.K == (5, 20)
        assert config.ratio == (8, 1, 1)
        assert config.input is None

    def test_file_overrides_defaults(self):
        config = resolve_config(CONFIG_FOLDER / "small.yml")
        assert config.epochs == 2
        assert config.K == (5, 10)
        assert config.sigma2 == 0.01

    def test_command_line_overrides_file(self):
        config = resolve_config(CONFIG_FOLDER / "small.yml", epochs=7, dim=None)
        assert config.epochs == 7
        assert config.dim == 4

    def test_paths(self):
        config = resolve_config(input="data", out="results")
        assert config.input == Path("data")
        assert config.out == Path("results")

    def test_single_cutoff(self):
        assert resolve_config(K=10).K == (10,)

    @pytest.mark.parametrize(
        ("override", "message"),
        [
            ({"method": "mae"}, "Unknown method"),
            ({"format": "netflix"}, "Unsupported format"),
            ({"seeds": 0}, "seed"),
            ({"K": [0]}, "cut-offs"),
            ({"ratio": [8, 1]}, "split ratio"),
            ({"sigma2": 2.0}, "sigma2"),
            ({"lr": -1.0}, "learning rate"),
            ({"noise_rate": 1.0}, "noise rate"),
            ({"schedule": "cosine"}, "schedule"),
        ],
    )
    def test_invalid(self, override, message):
        with pytest.raises(ValueError, match=message):
            resolve_config(**override)

    def test_unknown_override(self):
        with pytest.raises(ValueError, match="Unknown setting"):
            resolve_config(alpha=0.1)

    def test_derived_configs(self):
        config = resolve_config(seed=3, seeds=3, batch=128)
        assert config.seed_list == [3, 4, 5]
        assert config.denoise(4).seed == 4
        assert config.denoise().batch_size == 128
        assert config.optimizer.embedding_dim == 32
        assert config.noise.seed == 3

    def test_roundtrip(self):
        config = resolve_config(K=[5, 20], input="data")
        assert resolve_config(**config.to_dict()) == config
        assert set(config.to_dict()) == set(RunConfig.keys())


def test_expand_grid():
    grid = expand_grid({"R": (0.0, 0.1), "v": (1, 2, 3)})
    assert len(grid) == 6
    assert grid[0] == {"R": 0.0, "v": 1}
    assert grid[-1] == {"R": 0.1, "v": 3}


def test_empty_grid():
    with pytest.raises(ValueError, match="empty"):
        expand_grid({"R": ()})
