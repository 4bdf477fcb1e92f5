import math
import numpy as np
import pytest
from rydwalk.errors import NumericalToleranceError, ProgramError
from rydwalk.experiments import AngleProfile
from rydwalk.lattice import BoundaryTopology, LatticeSpec, build_lattice, tessellation_pairs
from rydwalk.protocols import BOUNDARY, ODD, OCTAMER, PROGRAMS, TETRAMER
from rydwalk.walk import (
    StepProgram,
    Tessellation,
    WalkerState,
    adjoint_program,
    apply_period,
    apply_tessellation,
    coin_rotation,
    compile_program,
    dense_program_matrix,
    dimer_sum,
    period_matrix,
    run_program,
    transition_operator,
)


@pytest.fixture(scope="module")
def chain():
    return build_lattice(LatticeSpec.chain(5, a0=1.0, a1=1.0))


@pytest.fixture(scope="module")
def ssh(chain):
    angles = {"theta0": AngleProfile(0.3, 1.1, 1.5, center=5.0), "theta1": 0.7}
    program = StepProgram.from_product(PROGRAMS["ssh"]).bind(angles)
    return compile_program(program, chain, BoundaryTopology.periodic(1))


def test_hadamard_splits_a_dimer(chain):
    state = WalkerState.localized(chain.n_sites, 0)
    state = coin_rotation(state, math.pi / 4, chain)
    assert state.probabilities[:2] == pytest.approx([0.5, 0.5])
    assert state.amplitudes[1] == pytest.approx(1j / math.sqrt(2))


def test_full_transfer(chain):
    t = Tessellation(tessellation_pairs(chain, "x0"), math.pi / 2)
    state = apply_tessellation(WalkerState.localized(chain.n_sites, 0), t)
    assert state.probabilities[1] == pytest.approx(1.0)


def test_transition_hops_to_the_next_cell(chain):
    state = transition_operator(WalkerState.localized(chain.n_sites, 0), "T", chain)
    assert state.probabilities[2] == pytest.approx(1.0)


def test_kernel_matches_dense_oracle(chain, ssh):
    assert np.allclose(period_matrix(chain.n_sites, ssh), dense_program_matrix(chain.n_sites, ssh), atol=1e-12)


def test_period_is_unitary(chain, ssh):
    u = period_matrix(chain.n_sites, ssh)
    assert np.allclose(u.conj().T @ u, np.eye(chain.n_sites), atol=1e-12)


def test_adjoint_undoes_the_period(chain, ssh):
    psi = WalkerState.superposition(chain.n_sites, [0, 3, 7], [1, 1j, -0.5]).amplitudes
    back = apply_period(apply_period(psi, ssh), adjoint_program(ssh))
    assert np.allclose(back, psi, atol=1e-12)


def test_run_program_conserves_norm(chain, ssh):
    trajectory = run_program(WalkerState.localized(chain.n_sites, 4), ssh, 30, keep_states=True)
    assert trajectory.probabilities.shape == (31, chain.n_sites)
    assert trajectory.states.shape == (31, chain.n_sites)
    assert np.allclose(trajectory.norms, 1.0, atol=1e-12)
    assert trajectory.summary()["steps"] == 30
    assert len(trajectory.to_frame()) == 31 * chain.n_sites


def test_norm_holds_over_a_thousand_periods(chain, ssh):
    trajectory = run_program(WalkerState.localized(chain.n_sites, 4), ssh, 1000)
    assert abs(trajectory.norms[-1] - 1.0) < 1e-10


def test_octamer_full_hops_cross_one_cell_per_axis():
    table = build_lattice(LatticeSpec(3, (3, 3, 3), (1.0,) * 3, (1.0,) * 3, OCTAMER))
    angles = {f"theta_{axis}{i}": math.pi / 2 for axis in "xyz" for i in (0, 1)}
    program = StepProgram.from_product(PROGRAMS["coinless_octamer"]).bind(angles)
    compiled = compile_program(program, table, BoundaryTopology.periodic(3))
    start = table.index_of((0, 0, 0), (ODD, ODD, ODD))
    final = run_program(WalkerState.localized(table.n_sites, start), compiled, 1).final
    assert final[table.index_of((1, 1, 1), (ODD, ODD, ODD))] == pytest.approx(1.0)


def test_run_program_is_deterministic(chain, ssh):
    first = run_program(WalkerState.localized(chain.n_sites, 4), ssh, 10).probabilities
    second = run_program(WalkerState.localized(chain.n_sites, 4), ssh, 10).probabilities
    assert np.array_equal(first, second)


def test_norm_drift_is_reported(chain, ssh):
    bad = WalkerState(np.full(chain.n_sites, 1.0))
    with pytest.raises(NumericalToleranceError):
        run_program(bad, ssh, 1, tol=-1.0)


def test_negative_steps(chain, ssh):
    with pytest.raises(ValueError):
        run_program(WalkerState.localized(chain.n_sites, 0), ssh, -1)


def test_from_product_reverses_order():
    program = StepProgram.from_product(PROGRAMS["ssh_plain"])
    assert [step.kind for step in program.steps] == ["x0", "x1"]


def test_unbound_angle():
    with pytest.raises(ProgramError):
        StepProgram.from_product(PROGRAMS["ssh"]).bind({"theta0": 0.3})


def test_boundary_step_needs_a_seam():
    table = build_lattice(LatticeSpec(2, (2, 2), (1.0, 1.0), (1.0, 1.0), TETRAMER))
    program = StepProgram.from_product(((BOUNDARY, "x", 1.0),))
    with pytest.raises(ProgramError):
        compile_program(program, table)


def test_angle_count_mismatch(chain):
    with pytest.raises(ProgramError):
        Tessellation(tessellation_pairs(chain, "x0"), np.zeros(2))


def test_dimer_sum(chain):
    p = np.arange(chain.n_sites, dtype=float)
    assert dimer_sum(p, chain).tolist() == [1.0, 5.0, 9.0, 13.0, 17.0]
