import json
import math
import numpy as np
import pytest
from rydwalk.errors import ConfigError, GapClosedError
from rydwalk.experiments import (
    AngleProfile,
    Experiment,
    ExperimentConfig,
    StripeProfile,
    angle_at,
    decoherence_config,
    edge_config_1d,
    edge_config_2d,
    edge_config_3d,
    edge_sites,
    period_map,
    run_1d_edge,
    run_2d_edge,
    run_3d_coinless_insulator,
    run_3d_edge,
    run_crossover,
    run_decoherence,
    run_surface_walk,
)
from rydwalk.lattice import BoundaryTopology, LatticeSpec, build_lattice, tessellation_pairs
from rydwalk.protocols import EVEN, ODD


# narrow down the scope to each module
@pytest.fixture(scope="module")
def experiment():
    return Experiment(strict=True)


# pytest teardown
@pytest.fixture(autouse=True)
def setup(experiment):
    experiment.strict = True
    yield
    experiment.setup()


@pytest.fixture
def config():
    spec = LatticeSpec.chain(5, a0=1.0, a1=1.0)
    return ExperimentConfig("chain", spec, "ssh", {"theta0": 0.3, "theta1": 1.1}, (4,), 3)


def test_angle_profile():
    profile = AngleProfile(0.2, 1.0, 0.5)
    assert angle_at(profile, -100.0) == pytest.approx(0.2)
    assert angle_at(profile, 100.0) == pytest.approx(1.0)
    assert angle_at(profile, 0.0) == pytest.approx(0.6)
    with pytest.raises(ValueError):
        AngleProfile(0.2, 1.0, 0.0)


def test_stripe_profile():
    table = build_lattice(LatticeSpec.chain(6, a0=1.0, a1=1.0))
    stripe = StripeProfile(0.9, 0.1, 2, 3)
    angles = stripe(table, tessellation_pairs(table, "x0"))
    assert angles.tolist() == [0.1, 0.1, 0.9, 0.9, 0.1, 0.1]
    wrapped = tessellation_pairs(table, "x1", BoundaryTopology.periodic(1))
    assert stripe(table, wrapped)[-1] == 0.1


def test_invalid_configs(config):
    with pytest.raises(ConfigError):
        ExperimentConfig("x", config.lattice, "hadamard", {}, (0,), 1)
    with pytest.raises(ConfigError):
        ExperimentConfig("x", config.lattice, "ssh", {}, (0,), 0)
    with pytest.raises(ConfigError):
        ExperimentConfig("x", config.lattice, "ssh", {}, (), 1)
    with pytest.raises(ConfigError):
        ExperimentConfig("x", config.lattice, "ssh", {}, (0,), 1, BoundaryTopology.open(2))


def test_pipeline_logs_every_stage(experiment, config):
    summary = experiment(config)
    assert list(experiment.log) == ["warnings", "build", "validate", "prepare", "evolve", "analyze"]
    assert summary["final_norm"] == pytest.approx(1.0)
    assert summary["n_sites"] == 10
    assert sum(summary["final_dimer_sum"]) == pytest.approx(1.0)
    experiment.setup()
    assert experiment.out is None
    assert list(experiment.log) == ["warnings"]


def test_init_by_cell_and_parity(experiment, config):
    config.init = (((2,), (EVEN,)),)
    experiment.setup().build(config).validate().prepare()
    assert experiment.out.probabilities[5] == pytest.approx(1.0)


def test_strict_validation(experiment, config):
    config.angles = {"theta0": AngleProfile(0.5, 0.3, 0.1), "theta1": AngleProfile(0.5, 1.1, 0.1)}
    with pytest.raises(GapClosedError):
        experiment(config)


def test_lenient_validation(experiment, config):
    experiment.strict = False
    config.angles = {"theta0": AngleProfile(0.5, 0.3, 0.1), "theta1": AngleProfile(0.5, 1.1, 0.1)}
    with pytest.warns(UserWarning):
        summary = experiment(config)
    assert len(summary["warnings"]) == 1


def test_validation_rejects_sides_in_one_region(experiment, config):
    config.angles = {"theta0": AngleProfile(0.3, 0.35, 0.1), "theta1": AngleProfile(1.1, 1.2, 0.1)}
    with pytest.raises(ConfigError):
        experiment(config)


@pytest.mark.parametrize("protocol", ["coined_chern", "coined_simple", "coinless_tetramer"])
def test_stripe_sides_lie_in_two_regions(experiment, protocol):
    experiment.setup().build(edge_config_2d(protocol)).validate()
    assert experiment.out["same_region"] is False
    assert experiment.out["min_gap"] < 1e-3


def test_3d_stripe_sides_lie_in_two_regions(experiment):
    experiment.setup().build(edge_config_3d(cells=(2, 2, 2), steps=1)).validate()
    assert experiment.out["same_region"] is False


def test_density_run(experiment, config):
    config.p_s = 0.1
    summary = experiment(config)
    assert summary["final_trace"] == pytest.approx(1.0)
    assert summary["msd"] >= 0


def test_export(experiment, config, tmp_path):
    experiment(config)
    paths = experiment.export(tmp_path)
    assert [path.name for path in paths] == ["chain_trajectory.csv", "chain_dimers.csv", "chain_summary.json"]
    assert json.loads(paths[-1].read_text())["steps"] == 3
    # reruns write the same bytes
    first = paths[0].read_bytes()
    experiment(config)
    assert experiment.export(tmp_path)[0].read_bytes() == first


def test_export_of_a_density_run(experiment, config, tmp_path):
    config.p_s = 0.1
    experiment(config)
    names = [path.name for path in experiment.export(tmp_path)]
    assert names[0] == "chain_coherence.csv"


def test_edge_config_1d():
    with pytest.raises(ValueError):
        edge_config_1d("sudden")


def test_1d_bound_state():
    transition = run_1d_edge(case="transition")
    adiabatic = run_1d_edge(case="adiabatic")
    report = transition.summary["validate"]
    assert (report["outside"]["nu0"], report["outside"]["nupi"]) != (report["inside"]["nu0"], report["inside"]["nupi"])
    assert "same_region" not in adiabatic.summary["validate"]
    assert transition.summary["trapped_fraction"] > 5 * adiabatic.summary["trapped_fraction"]


def test_anomalous_bulk_returns_and_edge_moves():
    config = edge_config_2d("coinless_dimer_anomalous")
    result = run_2d_edge(config)
    table = result.table
    assert result.evolved.final[table.index_of((2, 2), (ODD,))] == pytest.approx(1.0)
    experiment = Experiment()
    experiment.setup().build(config)
    landing = period_map(table, experiment.compiled)
    edge = edge_sites(table, config)
    assert edge.sum() == 22
    assert (landing["returned"].to_numpy() == ~edge).all()
    # clockwise, y up
    target = landing.set_index("site")["target"]
    assert target[table.index_of((2, 5), (EVEN,))] == table.index_of((3, 5), (EVEN,))
    assert target[table.index_of((5, 3), (ODD,))] == table.index_of((5, 2), (ODD,))
    assert target[table.index_of((3, 0), (ODD,))] == table.index_of((2, 0), (ODD,))
    assert target[table.index_of((0, 2), (EVEN,))] == table.index_of((0, 3), (EVEN,))
    assert target[table.index_of((5, 5), (EVEN,))] == table.index_of((5, 5), (ODD,))


def test_run_2d_edge_rejects_other_programs():
    with pytest.raises(ConfigError):
        run_2d_edge(edge_config_3d(cells=(2, 2, 2), steps=1))
    with pytest.raises(ValueError):
        edge_config_2d("ssh")


def test_3d_coinless_insulator():
    result = run_3d_coinless_insulator(cells=(3, 3, 3))
    table = result.table
    summary = result.summary
    landing = result.evolved.set_index("site")
    assert summary["moved"]
    assert set(summary["moved"]) <= set(summary["edge"])
    bulk = sorted(set(range(table.n_sites)) - set(summary["edge"]))
    assert landing.loc[bulk, "returned"].all()
    assert summary["returned"] + len(summary["moved"]) == table.n_sites


def test_torus_walk():
    assert run_surface_walk("torus").summary["landing"] == [6, 0]


def test_moebius_walk():
    assert run_surface_walk("moebius").summary["landing"] == [6, 7]


def test_unknown_surface():
    with pytest.raises(ValueError):
        run_surface_walk("sphere")


def test_decoherence_run():
    result = run_decoherence(decoherence_config(0.1, steps=20, cells=11, start=10))
    summary = result.summary
    assert len(summary["gamma_t"]) == len(summary["msd_series"]) == 20
    assert summary["gamma_t"][-1] == pytest.approx(2.0)
    assert summary["coherence_length"] is None or summary["coherence_length"] > 0


def test_crossover_frame():
    df = run_crossover((0.1, 0.2), steps=5, cells=11)
    assert list(df.columns) == ["p_s", "gamma_t", "msd", "scaled"]
    assert df["gamma_t"].tolist() == pytest.approx([0.5, 1.0])
    assert df["scaled"].iloc[1] == pytest.approx(4 * df["msd"].iloc[1])


@pytest.mark.slow
def test_3d_edge_concentrates_on_the_stripe_borders():
    result = run_3d_edge()
    assert result.summary["validate"]["same_region"] is False
    stripe = result.summary["plane_fraction"]
    control = run_3d_edge(edge_config_3d(stripe=False)).summary["plane_fraction"]
    assert np.mean(stripe[-50:]) > 1.5 * np.mean(control[-50:])
