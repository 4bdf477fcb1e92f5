"""
Stroboscopic dephasing of the walker: ρ -> (1 - P_s) WρW† + P_s Σ_x Π_x WρW† Π_x.
"""
from dataclasses import dataclass
from typing import Optional, Union
import numpy as np
import pandas as pd
from rydwalk.errors import DensityMatrixError, FitFailure
from rydwalk.walk import WalkerState, Tessellation, _rotate, dense_tessellation_matrix

TESSELLATION_STEP = "tessellation"
PERIOD_STEP = "period"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=complex))

    @classmethod
    def pure(cls, state: WalkerState) -> "DensityMatrix":
        return cls(np.outer(state.amplitudes, state.amplitudes.conj()))

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix).real.copy()

    def check(self, trace_tol: float = 1e-10, hermitian_tol: float = 1e-12) -> "DensityMatrix":
        if abs(self.trace - 1) > trace_tol:
            raise DensityMatrixError(f"trace {self.trace} deviates from 1")
        if np.max(np.abs(self.matrix - self.matrix.conj().T)) > hermitian_tol:
            raise DensityMatrixError("matrix is not Hermitian")
        if self.diagonal.min() < -1e-12:
            raise DensityMatrixError(f"negative population {self.diagonal.min()}")
        return self

    def to_frame(self) -> pd.DataFrame:
        """
        |ρ(x, x')| as a grid, rows x and columns x'.
        """
        return pd.DataFrame(np.abs(self.matrix))


@dataclass(frozen=True)
class DephasingModel:
    p_s: float

    def __post_init__(self):
        if not 0 <= self.p_s <= 1:
            raise DensityMatrixError(f"P_s should be in [0, 1], but got {self.p_s}")


def _conjugate(matrix: np.ndarray, t: Tessellation) -> np.ndarray:
    """
    W ρ W† with the pairwise kernel acting on rows, then on columns.
    """
    left = _rotate(matrix, t.pairs, t.angle)
    return _rotate(left.conj().T, t.pairs, t.angle).conj().T


def channel_step(rho: DensityMatrix, w: Union[Tessellation, tuple], p_s: float) -> DensityMatrix:
    """
    Conjugate by W (one tessellation or a composed tuple) and scale every
    off-diagonal element by (1 - P_s).
    """
    DephasingModel(p_s)
    matrix = rho.matrix
    for t in (w,) if isinstance(w, Tessellation) else w:
        matrix = _conjugate(matrix, t)
    diagonal = np.diag(np.diag(matrix))
    return DensityMatrix((1 - p_s) * matrix + p_s * diagonal)


@dataclass(frozen=True, eq=False)
class DensityTrajectory:
    diagonals: np.ndarray  # (steps + 1, N)
    traces: np.ndarray
    final: DensityMatrix


def evolve_density(
    rho0: DensityMatrix, compiled: tuple, n_steps: int, p_s: float, per: str = TESSELLATION_STEP
) -> DensityTrajectory:
    """
    One channel application per tessellation step by default; per="period" dephases
    after every full program period instead, and n_steps then counts periods.
    """
    if per not in (TESSELLATION_STEP, PERIOD_STEP):
        raise ValueError(f"per should be either '{TESSELLATION_STEP}' or '{PERIOD_STEP}', but got {per}")
    rho = rho0
    diagonals, traces = [rho.diagonal], [rho.trace]
    for step in range(n_steps):
        w = compiled[step % len(compiled)] if per == TESSELLATION_STEP else compiled
        rho = channel_step(rho, w, p_s)
        diagonals.append(rho.diagonal)
        traces.append(rho.trace)
    return DensityTrajectory(np.array(diagonals), np.array(traces), rho)


def classical_oracle(p0: np.ndarray, compiled: tuple, n_steps: int) -> np.ndarray:
    """
    The fully projective limit: populations pushed through the stochastic matrices |W|².
    Dense, for small lattices only.
    """
    n = len(p0)
    stochastic = [np.abs(dense_tessellation_matrix(n, t)) ** 2 for t in compiled]
    p = np.asarray(p0, dtype=float)
    for step in range(n_steps):
        p = stochastic[step % len(stochastic)] @ p
    return p


# --- observables --- #
def mean_square_displacement(rho: Union[DensityMatrix, np.ndarray], center: Optional[int] = None) -> float:
    """
    ⟨x²⟩ = Σ_x ρ(x, x) x², x counted in sites from `center`.
    """
    diagonal = rho.diagonal if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=float)
    center = len(diagonal) // 2 if center is None else center
    x = np.arange(len(diagonal)) - center
    return float(np.sum(diagonal * x**2))


@dataclass(frozen=True)
class CoherenceFit:
    length: float  # sites; inf when no suppression is visible
    slope: float
    n_points: int

    @property
    def unbounded(self) -> bool:
        return np.isinf(self.length)


def coherence_length(
    rho: DensityMatrix, rho_ideal: DensityMatrix, center: Optional[int] = None, floor: float = 1e-8
) -> CoherenceFit:
    """
    Fit |ρ(x,-x)| = |ρ_0(x,-x)| exp(-|x| / l_co) through the origin, over the
    anti-diagonal entries the noiseless walk populates above `floor`.
    """
    n = len(rho.matrix)
    center = n // 2 if center is None else center
    x = np.arange(1, min(center, n - 1 - center) + 1)
    noisy = np.abs(rho.matrix[center + x, center - x])
    ideal = np.abs(rho_ideal.matrix[center + x, center - x])
    usable = ideal > floor
    if usable.sum() < 3:
        raise FitFailure(f"only {usable.sum()} anti-diagonal points above {floor}")
    x, ratio = x[usable], noisy[usable] / ideal[usable]
    log_ratio = np.log(np.maximum(ratio, 1e-16))
    slope = float(np.sum(x * log_ratio) / np.sum(x * x))
    if slope >= -1e-12:
        return CoherenceFit(np.inf, slope, int(usable.sum()))
    return CoherenceFit(-1.0 / slope, slope, int(usable.sum()))


@dataclass(frozen=True)
class TransportFit:
    ballistic_exponent: float
    diffusive_exponent: float
    coefficient: float  # ⟨x²⟩ ≈ coefficient (γt)² on the ballistic branch


def transport_fit(
    gamma_t: np.ndarray, msd: np.ndarray, ballistic: float = 1.0, diffusive: float = 3.0, min_points: int = 4
) -> TransportFit:
    """
    log-log regressions below γt = ballistic and from γt = diffusive on; the crossover
    in between belongs to neither branch.
    """
    gamma_t, msd = np.asarray(gamma_t, dtype=float), np.asarray(msd, dtype=float)
    valid = (gamma_t > 0) & (msd > 0)
    gamma_t, msd = gamma_t[valid], msd[valid]
    early, late = gamma_t < ballistic, gamma_t >= diffusive
    if early.sum() < min_points or late.sum() < min_points:
        raise FitFailure(f"need {min_points} points per regime, got {early.sum()} and {late.sum()}")
    ballistic = np.polyfit(np.log(gamma_t[early]), np.log(msd[early]), 1)[0]
    diffusive = np.polyfit(np.log(gamma_t[late]), np.log(msd[late]), 1)[0]
    g2 = gamma_t[early] ** 2
    coefficient = float(np.sum(msd[early] * g2) / np.sum(g2 * g2))
    return TransportFit(float(ballistic), float(diffusive), coefficient)


def msd_series(
    state0: WalkerState, compiled: tuple, n_steps: int, p_s: float, center: Optional[int] = None
) -> tuple[np.ndarray, np.ndarray]:
    """
    (γt, ⟨x²⟩) after every tessellation step, γt = step index × P_s.
    """
    trajectory = evolve_density(DensityMatrix.pure(state0), compiled, n_steps, p_s)
    steps = np.arange(1, n_steps + 1)
    msd = np.array([mean_square_displacement(d, center) for d in trajectory.diagonals[1:]])
    return steps * p_s, msd


def fixed_time_sweep(
    state0: WalkerState,
    compiled: tuple,
    n_steps: int,
    p_s_values: np.ndarray,
    reference: float = 0.1,
    center: Optional[int] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    (γt, ⟨x²⟩ (P_s / reference)²) after `n_steps` tessellations, one run per P_s.

    Lengths are counted in coherence lengths 1/P_s, rescaled to the one at `reference`,
    so runs at every P_s fall on one curve: quadratic in γt while coherent, linear once dephased.
    """
    p_s_values = np.asarray(p_s_values, dtype=float)
    if reference <= 0:
        raise DensityMatrixError(f"reference should be positive, but got {reference}")
    rho0 = DensityMatrix.pure(state0)
    msd = np.array(
        [mean_square_displacement(evolve_density(rho0, compiled, n_steps, p_s).final, center) for p_s in p_s_values]
    )
    return n_steps * p_s_values, msd * (p_s_values / reference) ** 2
