import math
import numpy as np
import pytest
from rydwalk.decoherence import (
    PERIOD_STEP,
    DensityMatrix,
    DephasingModel,
    channel_step,
    classical_oracle,
    coherence_length,
    evolve_density,
    fixed_time_sweep,
    mean_square_displacement,
    msd_series,
    transport_fit,
)
from rydwalk.errors import DensityMatrixError, FitFailure
from rydwalk.lattice import LatticeSpec, build_lattice
from rydwalk.protocols import PROGRAMS
from rydwalk.walk import StepProgram, WalkerState, compile_program, run_program

START = 10


@pytest.fixture(scope="module")
def chain():
    return build_lattice(LatticeSpec.chain(11, a0=1.0, a1=1.0))


@pytest.fixture(scope="module")
def hadamard(chain):
    program = StepProgram.from_product(PROGRAMS["ssh_plain"]).bind({"theta0": math.pi / 4, "theta1": math.pi / 4})
    return compile_program(program, chain)


@pytest.fixture(scope="module")
def rho0(chain):
    return DensityMatrix.pure(WalkerState.localized(chain.n_sites, START))


def test_no_dephasing_matches_pure_evolution(chain, hadamard, rho0):
    density = evolve_density(rho0, hadamard, 20, 0.0)
    pure = run_program(WalkerState.localized(chain.n_sites, START), hadamard, 10)
    assert np.allclose(density.diagonals[-1], pure.final, atol=1e-10)


def test_per_period_dephasing(chain, hadamard, rho0):
    density = evolve_density(rho0, hadamard, 10, 0.0, per=PERIOD_STEP)
    pure = run_program(WalkerState.localized(chain.n_sites, START), hadamard, 10)
    assert np.allclose(density.diagonals[-1], pure.final, atol=1e-10)


def test_full_dephasing_matches_classical_walk(hadamard, rho0):
    density = evolve_density(rho0, hadamard, 20, 1.0)
    assert np.allclose(density.diagonals[-1], classical_oracle(rho0.diagonal, hadamard, 20), atol=1e-10)


def test_channel_keeps_a_density_matrix(hadamard, rho0):
    rho = rho0
    for t in hadamard * 5:
        rho = channel_step(rho, t, 0.3)
    rho.check()
    assert rho.trace == pytest.approx(1.0, abs=1e-12)


def test_invalid_probability(hadamard, rho0):
    with pytest.raises(DensityMatrixError):
        DephasingModel(1.5)
    with pytest.raises(DensityMatrixError):
        channel_step(rho0, hadamard, -0.1)


def test_invalid_schedule(hadamard, rho0):
    with pytest.raises(ValueError):
        evolve_density(rho0, hadamard, 1, 0.1, per="pulse")


def test_bad_trace_is_caught(chain):
    with pytest.raises(DensityMatrixError):
        DensityMatrix(2 * np.eye(chain.n_sites) / chain.n_sites).check()


def test_mean_square_displacement():
    assert mean_square_displacement(np.array([0.5, 0.0, 0.5]), center=1) == pytest.approx(1.0)
    assert mean_square_displacement(DensityMatrix(np.diag([0.0, 0.0, 1.0])), center=0) == pytest.approx(4.0)


def test_coherence_of_the_noiseless_walk_is_unbounded(hadamard, rho0):
    ideal = evolve_density(rho0, hadamard, 20, 0.0).final
    assert coherence_length(ideal, ideal, START).unbounded


def test_dephasing_bounds_the_coherence(hadamard, rho0):
    ideal = evolve_density(rho0, hadamard, 20, 0.0).final
    noisy = evolve_density(rho0, hadamard, 20, 0.2).final
    fit = coherence_length(noisy, ideal, START)
    assert not fit.unbounded
    assert fit.length > 0


def test_coherence_needs_a_spread_walker(rho0):
    with pytest.raises(FitFailure):
        coherence_length(rho0, rho0, START)


def test_transport_fit_on_a_known_curve():
    gamma_t = np.linspace(0.05, 5.0, 100)
    msd = np.where(gamma_t < 1.0, 22.5 * gamma_t**2, 22.5 * gamma_t)
    fit = transport_fit(gamma_t, msd)
    assert fit.ballistic_exponent == pytest.approx(2.0)
    assert fit.diffusive_exponent == pytest.approx(1.0)
    assert fit.coefficient == pytest.approx(22.5)


def test_transport_fit_needs_both_regimes():
    with pytest.raises(FitFailure):
        transport_fit(np.array([0.1, 0.2, 0.3]), np.array([1.0, 2.0, 3.0]))


def test_transport_fit_skips_the_crossover():
    gamma_t = np.array([0.2, 0.4, 0.6, 0.8, 1.5, 2.5, 3.0, 4.0, 5.0, 6.0])
    msd = np.where(gamma_t < 1.0, gamma_t**2, np.where(gamma_t < 3.0, 100.0, gamma_t))
    fit = transport_fit(gamma_t, msd)
    assert fit.diffusive_exponent == pytest.approx(1.0)


def test_msd_series_counts_gamma_t(chain, hadamard):
    gamma_t, msd = msd_series(WalkerState.localized(chain.n_sites, START), hadamard, 4, 0.25, center=START)
    assert gamma_t.tolist() == pytest.approx([0.25, 0.5, 0.75, 1.0])
    assert msd[0] == pytest.approx(0.5)


def test_fixed_time_sweep_rescales_by_the_reference(chain, hadamard):
    start = WalkerState.localized(chain.n_sites, START)
    gamma_t, scaled = fixed_time_sweep(start, hadamard, 6, np.array([0.05, 0.2]), reference=0.1, center=START)
    assert gamma_t.tolist() == pytest.approx([0.3, 1.2])
    _, msd = msd_series(start, hadamard, 6, 0.2, center=START)
    assert scaled[1] == pytest.approx(4 * msd[-1])
    with pytest.raises(DensityMatrixError):
        fixed_time_sweep(start, hadamard, 6, np.array([0.1]), reference=0.0)


@pytest.mark.slow
def test_ballistic_to_diffusive_crossover():
    # 50 Hadamard steps per run on 102 sites, P_s swept so that γt = 50 P_s spans 0.05 to 50
    table = build_lattice(LatticeSpec.chain(51, a0=1.0, a1=1.0))
    program = StepProgram.from_product(PROGRAMS["ssh_plain"]).bind({"theta0": math.pi / 4, "theta1": math.pi / 4})
    compiled = compile_program(program, table)
    start = WalkerState.localized(table.n_sites, 50)
    gamma_t, scaled = fixed_time_sweep(start, compiled, 50, np.geomspace(1e-3, 1.0, 25), reference=0.1, center=50)
    fit = transport_fit(gamma_t, scaled)
    assert fit.ballistic_exponent > 1.8
    assert fit.diffusive_exponent < 1.2
    assert fit.coefficient == pytest.approx(22.5, rel=0.2)
