"""
Walker states, tessellation rotations and step programs.
exp(iθH) on a matching is a product of independent 2x2 rotations, so every step is O(N).
"""
from dataclasses import dataclass, field
from typing import Callable, Optional, Union
import numpy as np
import pandas as pd
from scipy.linalg import expm
from rydwalk.errors import ProgramError, NumericalToleranceError
from rydwalk.lattice import (
    SiteTable,
    PairSet,
    BoundaryTopology,
    tessellation_pairs,
    seam_pairs,
)
from rydwalk.protocols import TESSELLATION, COIN, SHIFT, BOUNDARY, TRANSITIONS

# an angle field maps (table, pairs) to one angle per pair
AngleField = Callable[[SiteTable, PairSet], np.ndarray]
Angle = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class WalkerState:
    amplitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", np.asarray(self.amplitudes, dtype=complex))

    @classmethod
    def localized(cls, n_sites: int, site: int) -> "WalkerState":
        amplitudes = np.zeros(n_sites, dtype=complex)
        amplitudes[site] = 1.0
        return cls(amplitudes)

    @classmethod
    def superposition(cls, n_sites: int, sites: list, weights: Optional[list] = None) -> "WalkerState":
        """
        normalized Σ w_i |site_i⟩, equal weights by default.
        """
        amplitudes = np.zeros(n_sites, dtype=complex)
        weights = np.ones(len(sites)) if weights is None else np.asarray(weights, dtype=complex)
        np.add.at(amplitudes, np.asarray(sites, dtype=int), weights)
        return cls(amplitudes / np.linalg.norm(amplitudes))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True, eq=False)
class Tessellation:
    pairs: PairSet
    angle: Angle = 0.0

    def __post_init__(self):
        if not isinstance(self.pairs, PairSet):
            object.__setattr__(self, "pairs", PairSet(self.pairs))
        angle = np.asarray(self.angle, dtype=float)
        if angle.ndim and len(angle) != len(self.pairs):
            raise ProgramError(f"{len(angle)} angles for {len(self.pairs)} pairs")
        if not np.all(np.isfinite(angle)):
            raise ProgramError(f"angles should be finite, but got {self.angle}")

    def inverse(self) -> "Tessellation":
        return Tessellation(self.pairs, -np.asarray(self.angle, dtype=float))


@dataclass(frozen=True)
class Step:
    """
    one descriptor of a step program; `angle` is a float, a (name, scale) reference,
    or an angle field.
    """

    op: str
    kind: Optional[str] = None
    angle: object = None


@dataclass(frozen=True)
class StepProgram:
    """
    steps in application order (the first step acts first).
    """

    steps: tuple = field(default_factory=tuple)

    @classmethod
    def from_product(cls, written: tuple) -> "StepProgram":
        """
        build from an operator product as written, e.g. W = A B C (C acts first).
        """
        return cls(tuple(Step(*descriptor) for descriptor in reversed(written)))

    def bind(self, angles: dict) -> "StepProgram":
        """
        resolve every (name, scale) angle reference against `angles`.
        """
        bound = []
        for step in self.steps:
            angle = step.angle
            if isinstance(angle, tuple):
                name, scale = angle
                if name not in angles:
                    raise ProgramError(f"angle {name} is not bound; got {sorted(angles)}")
                value = angles[name]
                angle = _scale_angle(value, scale)
            bound.append(Step(step.op, step.kind, angle))
        return StepProgram(tuple(bound))


def _scale_angle(value, scale: float):
    if callable(value):
        return lambda table, pairs: scale * np.asarray(value(table, pairs))
    return scale * float(value)


# --- kernels --- #
def _rotate(amplitudes: np.ndarray, pairs: PairSet, angle: Angle) -> np.ndarray:
    """
    (ψ_u, ψ_v) -> (cosθ ψ_u + i sinθ ψ_v, i sinθ ψ_u + cosθ ψ_v) on every pair;
    works on a vector or on a stack of columns.
    """
    out = amplitudes.copy()
    if not len(pairs):
        return out
    u, v = pairs.pairs[:, 0], pairs.pairs[:, 1]
    angle = np.asarray(angle, dtype=float)
    c, s = np.cos(angle), 1j * np.sin(angle)
    if angle.ndim and amplitudes.ndim > 1:
        c, s = c[:, None], s[:, None]
    out[u] = c * amplitudes[u] + s * amplitudes[v]
    out[v] = s * amplitudes[u] + c * amplitudes[v]
    return out


def apply_tessellation(state: WalkerState, t: Tessellation) -> WalkerState:
    return WalkerState(_rotate(state.amplitudes, t.pairs, t.angle))


def coin_rotation(state: WalkerState, theta: Angle, table: SiteTable) -> WalkerState:
    """
    R(θ) = exp(iθH_0), the population rotation inside every dimer.
    """
    return apply_tessellation(state, Tessellation(tessellation_pairs(table, "x0"), theta))


def transition_tessellations(
    table: SiteTable, kind: str, topology: Optional[BoundaryTopology] = None
) -> tuple:
    """
    T_kind = exp(iH π/2) R(π/2) as its two tessellations, in application order.
    """
    if kind not in TRANSITIONS:
        raise ProgramError(f"kind should be one of {tuple(TRANSITIONS)}, but got {kind}")
    return (
        Tessellation(tessellation_pairs(table, "x0", topology), np.pi / 2),
        Tessellation(tessellation_pairs(table, TRANSITIONS[kind], topology), np.pi / 2),
    )


def transition_operator(
    state: WalkerState, kind: str, table: SiteTable, topology: Optional[BoundaryTopology] = None
) -> WalkerState:
    for t in transition_tessellations(table, kind, topology):
        state = apply_tessellation(state, t)
    return state


def boundary_step(state: WalkerState, seam: PairSet, theta: Angle) -> WalkerState:
    """
    rotation across the seam pairs only; an empty seam leaves the state alone.
    """
    return apply_tessellation(state, Tessellation(seam, theta))


# --- programs --- #
def _resolve_angle(angle, table: SiteTable, pairs: PairSet) -> Angle:
    if angle is None:
        raise ProgramError("unbound angle in program; call StepProgram.bind first")
    if isinstance(angle, tuple):
        raise ProgramError(f"angle reference {angle} is not bound")
    if callable(angle):
        return np.asarray(angle(table, pairs), dtype=float)
    return float(angle)


def compile_program(
    program: StepProgram,
    table: SiteTable,
    topology: Optional[BoundaryTopology] = None,
    seam_topology: Optional[BoundaryTopology] = None,
) -> tuple:
    """
    Resolve a bound program against a lattice into tessellations, in application order.
    `seam_topology` feeds the boundary steps; the other steps use `topology`.
    """
    compiled = []
    for step in program.steps:
        if step.op == TESSELLATION:
            pairs = tessellation_pairs(table, step.kind, topology)
            compiled.append(Tessellation(pairs, _resolve_angle(step.angle, table, pairs)))
        elif step.op == COIN:
            pairs = tessellation_pairs(table, "x0", topology)
            compiled.append(Tessellation(pairs, _resolve_angle(step.angle, table, pairs)))
        elif step.op == SHIFT:
            compiled.extend(transition_tessellations(table, step.kind, topology))
        elif step.op == BOUNDARY:
            if seam_topology is None:
                raise ProgramError("a boundary step needs a seam topology")
            pairs = seam_pairs(table, seam_topology, step.kind)
            compiled.append(Tessellation(pairs, _resolve_angle(step.angle, table, pairs)))
        else:
            raise ProgramError(f"unknown step op: {step.op}")
    return tuple(compiled)


def adjoint_program(compiled: tuple) -> tuple:
    return tuple(t.inverse() for t in reversed(compiled))


def apply_period(amplitudes: np.ndarray, compiled: tuple) -> np.ndarray:
    for t in compiled:
        amplitudes = _rotate(amplitudes, t.pairs, t.angle)
    return amplitudes


@dataclass(frozen=True, eq=False)
class Trajectory:
    probabilities: np.ndarray  # (steps + 1, N)
    norms: np.ndarray
    states: Optional[np.ndarray] = None

    @property
    def final(self) -> np.ndarray:
        return self.probabilities[-1]

    def to_frame(self) -> pd.DataFrame:
        steps, sites = np.indices(self.probabilities.shape)
        return pd.DataFrame(
            {
                "step": steps.ravel(),
                "site": sites.ravel(),
                "probability": self.probabilities.ravel(),
            }
        )

    def summary(self) -> dict:
        return {
            "steps": len(self.probabilities) - 1,
            "final_distribution": self.final.tolist(),
            "norms": self.norms.tolist(),
        }


def run_program(
    state0: WalkerState, compiled: tuple, steps: int, keep_states: bool = False, tol: float = 1e-10
) -> Trajectory:
    """
    Apply one program period `steps` times, recording |ψ_x|² after each period.
    """
    if steps < 0:
        raise ValueError(f"steps should be non-negative, but got {steps}")
    amplitudes = state0.amplitudes
    probabilities = [np.abs(amplitudes) ** 2]
    states = [amplitudes] if keep_states else None
    for _ in range(steps):
        amplitudes = apply_period(amplitudes, compiled)
        probabilities.append(np.abs(amplitudes) ** 2)
        if keep_states:
            states.append(amplitudes)
    probabilities = np.array(probabilities)
    norms = np.sqrt(probabilities.sum(axis=1))
    if abs(norms[-1] - state0.norm) > tol:
        raise NumericalToleranceError(f"norm drifted from {state0.norm} to {norms[-1]}")
    return Trajectory(probabilities, norms, np.array(states) if keep_states else None)


def dimer_sum(probabilities: np.ndarray, table: SiteTable) -> np.ndarray:
    """
    population per cell, summed over the unit's sites; shaped like the cell grid.
    """
    per_cell = probabilities.reshape(*probabilities.shape[:-1], -1, table.spec.unit_size).sum(axis=-1)
    return per_cell.reshape(*probabilities.shape[:-1], *table.spec.cells)


# --- dense oracles (tests only, small N) --- #
def dense_hamiltonian(n_sites: int, t: Tessellation) -> np.ndarray:
    """
    Σ θ_p (|u⟩⟨v| + h.c.), the generator whose exponential is the tessellation step.
    """
    h = np.zeros((n_sites, n_sites))
    angle = np.broadcast_to(np.asarray(t.angle, dtype=float), (len(t.pairs),))
    for (u, v), theta in zip(t.pairs, angle):
        h[u, v] = h[v, u] = theta
    return h


def dense_tessellation_matrix(n_sites: int, t: Tessellation) -> np.ndarray:
    return expm(1j * dense_hamiltonian(n_sites, t))


def dense_program_matrix(n_sites: int, compiled: tuple) -> np.ndarray:
    u = np.eye(n_sites, dtype=complex)
    for t in compiled:
        u = dense_tessellation_matrix(n_sites, t) @ u
    return u


def period_matrix(n_sites: int, compiled: tuple) -> np.ndarray:
    """
    the one-period operator, built column by column with the O(N) kernel.
    """
    return apply_period(np.eye(n_sites, dtype=complex), compiled)
