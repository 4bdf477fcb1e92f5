from pathlib import Path
import pytest
from rydwalk.errors import ConfigError
from rydwalk.experiments import AngleProfile, Experiment, StripeProfile
from rydwalk.fetchers import fetch_config, fetch_params, fetch_runtime
from rydwalk.protocols import MOEBIUS_X, TETRAMER

CONFIGS = Path(__file__).parent.parent / "configs"

BASE = """
[lattice]
dimension = 1
cells = [5]
a0 = [1.0]

[program]
name = "ssh"
steps = 2

[init]
sites = [4]
"""


def _write(tmp_path, text: str) -> Path:
    path = tmp_path / "run.toml"
    path.write_text(text)
    return path


def test_edge_config():
    config = fetch_config(CONFIGS / "edge_1d.toml")
    assert config.name == "edge_1d"
    assert config.steps == 100
    assert isinstance(config.angles["theta0"], AngleProfile)
    assert config.init == (((100,), (0,)),)


def test_surface_config():
    config = fetch_config(CONFIGS / "moebius.toml")
    assert config.lattice.unit_kind == TETRAMER
    assert config.seam.seam == MOEBIUS_X
    assert Experiment()(config)["final_norm"] == pytest.approx(1.0)


def test_noise_config():
    config = fetch_config(CONFIGS / "decoherence.toml")
    assert config.p_s == pytest.approx(0.1)
    assert config.init == (50,)


def test_defaults(tmp_path):
    config = fetch_config(_write(tmp_path, BASE))
    assert config.name == "run"
    assert config.lattice.a1 == (1.0,)
    assert config.boundary.rules == ("open",)
    assert config.seam is None


def test_stripe_angle(tmp_path):
    text = BASE + '\n[angles]\ntheta1 = 0.5\n\n[angles.theta0]\nkind = "stripe"\ninside = 0.3\noutside = 1.2\nlo = 1\nhi = 2\n'
    config = fetch_config(_write(tmp_path, text))
    assert isinstance(config.angles["theta0"], StripeProfile)
    assert config.angles["theta1"] == 0.5


@pytest.mark.parametrize(
    "text",
    [
        "not = [toml",
        BASE.replace("[program]", "[programme]"),
        BASE.replace('name = "ssh"', 'name = "hadamard"'),
        BASE.replace("sites = [4]", "weights = [1.0]"),
        BASE + '\n[angles.theta0]\nkind = "gauss"\n',
        BASE + '\n[angles.theta0]\nkind = "tanh"\nminus = 0.1\n',
        BASE + '\n[boundary]\nrules = ["closed"]\n',
        BASE.replace("steps = 2", "steps = 0"),
    ],
)
def test_malformed_configs(tmp_path, text):
    with pytest.raises(ConfigError):
        fetch_config(_write(tmp_path, text))


def test_missing_config(tmp_path):
    with pytest.raises(ConfigError):
        fetch_config(tmp_path / "absent.toml")


def test_params_from_the_environment(monkeypatch):
    monkeypatch.setenv("RYDWALK_OMEGA", "1.5")
    monkeypatch.setenv("RYDWALK_N", "90")
    params = fetch_params()
    assert params.omega == 1.5
    assert params.n == 90
    # explicit overrides win
    assert fetch_params(omega=1.0).omega == 1.0


def test_bad_params(monkeypatch):
    with pytest.raises(ConfigError):
        fetch_params(frequency=1.0)
    monkeypatch.setenv("RYDWALK_OMEGA", "fast")
    with pytest.raises(ConfigError):
        fetch_params()


def test_runtime(monkeypatch):
    monkeypatch.setenv("RYDWALK_WORKERS", "4")
    monkeypatch.setenv("RYDWALK_OUT", "results")
    runtime = fetch_runtime()
    assert runtime["workers"] == 4
    assert runtime["out"] == "results"
    monkeypatch.setenv("RYDWALK_SEED", "x")
    with pytest.raises(ConfigError):
        fetch_runtime()


def test_runtime_seed(monkeypatch):
    monkeypatch.delenv("RYDWALK_SEED", raising=False)
    assert fetch_runtime()["seed"] is None
    monkeypatch.setenv("RYDWALK_SEED", "5")
    assert fetch_runtime()["seed"] == 5
