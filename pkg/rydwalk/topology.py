"""
Momentum-space Floquet analysis of the walks.

Two-band chains have closed forms (Bloch Hamiltonians with unit spectrum, so
exp(iθH) = cosθ + i sinθ H). Any other protocol is transformed generically: the
real-space pair tables of a periodic three-cell reference lattice give every
tessellation as a Bloch matrix, and one period is their product.
"""
from dataclasses import dataclass
from typing import Callable, Optional, Union
import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.optimize import minimize_scalar
from rydwalk.errors import ConfigError, GapClosedError, NumericalToleranceError, ProgramError
from rydwalk.lattice import BoundaryTopology, LatticeSpec, build_lattice
from rydwalk.protocols import (
    DIMER,
    TETRAMER,
    OCTAMER,
    SYMMETRIC_0,
    SYMMETRIC_1,
    PLAIN,
    FRAMES,
    PROGRAMS,
    SHIFT,
)
from rydwalk.walk import StepProgram, compile_program

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

# reference lattice of every named protocol: (dimension, unit kind)
PROGRAM_LATTICES = {
    "ssh": (1, DIMER),
    "ssh_symmetric_1": (1, DIMER),
    "ssh_plain": (1, DIMER),
    "coined_simple": (2, DIMER),
    "coined_chern": (2, DIMER),
    "coined_3d": (3, DIMER),
    "coinless_tetramer": (2, TETRAMER),
    "coinless_octamer": (3, OCTAMER),
    "coinless_dimer_anomalous": (2, DIMER),
    "insulator_3d": (3, DIMER),
}

# k-points per axis of a zone scan, and the most points one scan may hold
DEFAULT_K_POINTS = {1: 256, 2: 64, 3: 16}
MAX_ZONE_POINTS = 2**18


# --- closed-form two-band chain --- #
def _unit_exp(theta: float, h: np.ndarray) -> np.ndarray:
    return np.cos(theta) * np.eye(len(h)) + 1j * np.sin(theta) * h


def bloch_hamiltonians(k: float, abar: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """
    (H̃_0, H̃_1) in the (odd, even) basis, with the phase convention e^{ikm - ik ā1} on the odd sites.
    """
    h0 = np.array([[0, np.exp(1j * k * abar)], [np.exp(-1j * k * abar), 0]])
    h1 = np.array([[0, np.exp(-1j * k * (1 - abar))], [np.exp(1j * k * (1 - abar)), 0]])
    return h0, h1


@dataclass(frozen=True, eq=False)
class FloquetOperator:
    k: float
    matrix: np.ndarray
    frame: str

    @property
    def eigenphases(self) -> np.ndarray:
        return np.sort(np.angle(np.linalg.eigvals(self.matrix)))

    def unitarity_error(self) -> float:
        return float(np.max(np.abs(self.matrix @ self.matrix.conj().T - np.eye(len(self.matrix)))))


def floquet_operator(k: float, theta0: float, theta1: float, abar: float = 0.5, frame: str = SYMMETRIC_0) -> FloquetOperator:
    h0, h1 = bloch_hamiltonians(k, abar)
    if frame == SYMMETRIC_0:
        matrix = _unit_exp(theta0 / 2, h0) @ _unit_exp(theta1, h1) @ _unit_exp(theta0 / 2, h0)
    elif frame == SYMMETRIC_1:
        matrix = _unit_exp(theta1 / 2, h1) @ _unit_exp(theta0, h0) @ _unit_exp(theta1 / 2, h1)
    elif frame == PLAIN:
        matrix = _unit_exp(theta1, h1) @ _unit_exp(theta0, h0)
    else:
        raise ValueError(f"frame should be one of {FRAMES}, but got {frame}")
    return FloquetOperator(k, matrix, frame)


def quasienergy(k: Union[float, np.ndarray], theta0: float, theta1: float) -> Union[float, np.ndarray]:
    """
    E ∈ [0, π] from cos E = cosθ0 cosθ1 - sinθ0 sinθ1 cos k; the bands are ±E.
    """
    cos_e = np.cos(theta0) * np.cos(theta1) - np.sin(theta0) * np.sin(theta1) * np.cos(k)
    e = np.arccos(np.clip(cos_e, -1.0, 1.0))
    return float(e) if np.ndim(e) == 0 else e


@dataclass(frozen=True)
class BandPoint:
    energy: float
    n: tuple


def _su2_axis(w: np.ndarray, tol: float) -> BandPoint:
    """
    W = cos E + i sin E (n·σ) -> (E, n).
    """
    cos_e = np.real(np.trace(w)) / 2
    energy = float(np.arccos(np.clip(cos_e, -1.0, 1.0)))
    sin_e = np.sin(energy)
    if sin_e < tol:
        raise GapClosedError(f"sin E = {sin_e:.3g}, the quantization axis is undefined")
    n = tuple(float(np.real(np.trace(s @ w) / (2j * sin_e))) for s in PAULI)
    return BandPoint(energy, n)


def bloch_vector(
    k: float, theta0: float, theta1: float, abar: float = 0.5, frame: str = SYMMETRIC_0, tol: float = 1e-9
) -> np.ndarray:
    return np.array(_su2_axis(floquet_operator(k, theta0, theta1, abar, frame).matrix, tol).n)


def effective_hamiltonian(w: np.ndarray) -> np.ndarray:
    """
    H̃_eff = -i log W with eigenphases on (-π, π]; a phase at ±π counts as a closed gap.
    """
    values, vectors = np.linalg.eig(w)
    phases = np.angle(values)
    if np.any(np.isclose(np.abs(phases), np.pi, atol=1e-12)):
        raise GapClosedError("an eigenphase sits on the branch cut at ±π")
    return vectors @ np.diag(phases) @ np.linalg.inv(vectors)


def bloch_vector_from_log(k: float, theta0: float, theta1: float, abar: float = 0.5, frame: str = SYMMETRIC_0) -> np.ndarray:
    h = effective_hamiltonian(floquet_operator(k, theta0, theta1, abar, frame).matrix)
    components = np.array([np.real(np.trace(s @ h)) / 2 for s in PAULI])
    norm = np.linalg.norm(components)
    if norm < 1e-12:
        raise GapClosedError(f"H̃_eff vanishes at k={k}")
    return components / norm


# --- winding --- #
@dataclass(frozen=True)
class Winding:
    value: int
    raw: float

    @property
    def residual(self) -> float:
        return abs(self.raw - self.value)


def winding_number(
    theta0: float,
    theta1: float,
    abar: float = 0.5,
    frame: str = SYMMETRIC_0,
    k_points: int = 2048,
    gap_tol: float = 1e-6,
) -> Winding:
    """
    Winding of (n_x, n_y) around the origin as k sweeps the zone.
    The e^{ik ā1} gauge is removed first so that the loop closes for any ā1.
    """
    if frame not in (SYMMETRIC_0, SYMMETRIC_1):
        raise ValueError(f"winding needs a chiral frame, one of {(SYMMETRIC_0, SYMMETRIC_1)}, but got {frame}")
    ks = np.linspace(-np.pi, np.pi, k_points, endpoint=False)
    energies = quasienergy(ks, theta0, theta1)
    gap = np.min(np.sin(energies))
    if gap < gap_tol:
        raise GapClosedError(f"gap closes at (θ0, θ1) = ({theta0:.6g}, {theta1:.6g}), min sin E = {gap:.3g}")
    off_diagonal = np.empty(k_points, dtype=complex)
    for i, k in enumerate(ks):
        w = floquet_operator(k, theta0, theta1, abar, frame).matrix
        off_diagonal[i] = w[0, 1] * np.exp(-1j * k * abar)
    phases = np.angle(off_diagonal)
    increments = np.angle(np.exp(1j * np.diff(np.append(phases, phases[0]))))
    if np.max(np.abs(increments)) > np.pi / 2:
        raise NumericalToleranceError(f"k-grid of {k_points} points is too coarse to follow the phase")
    # W[o, e] = i sin E (n_x - i n_y) winds opposite to n
    raw = -float(np.sum(increments)) / (2 * np.pi)
    winding = Winding(int(round(raw)), raw)
    if winding.residual > 1e-3:
        raise NumericalToleranceError(f"winding {raw} is not an integer")
    return winding


@dataclass(frozen=True)
class Invariants:
    nu: int
    nu_prime: int

    @property
    def nu_0(self) -> int:
        return (self.nu + self.nu_prime) // 2

    @property
    def nu_pi(self) -> int:
        return (self.nu - self.nu_prime) // 2


def invariants(theta0: float, theta1: float, abar: float = 0.5, k_points: int = 2048) -> Invariants:
    nu = winding_number(theta0, theta1, abar, SYMMETRIC_0, k_points).value
    nu_prime = winding_number(theta0, theta1, abar, SYMMETRIC_1, k_points).value
    if (nu + nu_prime) % 2:
        raise NumericalToleranceError(f"ν + ν′ = {nu + nu_prime} is odd")
    return Invariants(nu, nu_prime)


# --- generic Bloch operators --- #
class BlochModel:
    """
    One program period as a function of k, for any unit cell.
    A transition T = exp(iπ/2 H) R(π/2) is -1 times a pure shift on a closed lattice;
    W(k) keeps the pure shift, so it differs from the real-space period by (-1)^(#transitions).
    """

    def __init__(self, program: StepProgram, dimension: int, unit_kind: str = DIMER):
        spec = LatticeSpec(dimension, (3,) * dimension, (1.0,) * dimension, (1.0,) * dimension, unit_kind)
        table = build_lattice(spec)
        compiled = compile_program(program, table, BoundaryTopology.periodic(dimension))
        self.dimension = dimension
        self.unit_size = spec.unit_size
        self.sign = (-1.0) ** sum(step.op == SHIFT for step in program.steps)
        self.terms = []
        for t in compiled:
            angle = np.asarray(t.angle, dtype=float)
            if angle.ndim:
                raise ProgramError("a momentum-space period needs uniform angles")
            self.terms.append((float(angle), *self._bloch_terms(table, t.pairs.pairs)))

    def _bloch_terms(self, table, pairs: np.ndarray) -> tuple:
        """
        (row, column, cell offset) of every matrix element touching the reference cell.
        """
        rows, cols, offsets = [], [], []
        unit = table.spec.unit_size
        for u, v in pairs:
            delta = table.cells[v] - table.cells[u]
            delta = np.where(delta == 2, -1, np.where(delta == -2, 1, delta))
            if not table.cells[u].any():
                rows.append(u % unit)
                cols.append(v % unit)
                offsets.append(delta)
            if not table.cells[v].any():
                rows.append(v % unit)
                cols.append(u % unit)
                offsets.append(-delta)
        return np.array(rows, dtype=int), np.array(cols, dtype=int), np.array(offsets, dtype=float).reshape(-1, self.dimension)

    def __call__(self, k) -> np.ndarray:
        """
        W(k) for one point, or a stack of W for an (n, dimension) array of points.
        """
        k = np.asarray(k, dtype=float)
        single = k.ndim <= 1
        if single and k.size != self.dimension:
            raise ValueError(f"k should have {self.dimension} components, but got {k.size}")
        ks = k.reshape(-1, self.dimension)
        size = self.unit_size
        eye = np.eye(size, dtype=complex)
        w = np.broadcast_to(eye, (len(ks), size, size)).copy()
        batch = np.arange(len(ks))[:, None]
        for angle, rows, cols, offsets in self.terms:
            h = np.zeros((len(ks), size * size), dtype=complex)
            np.add.at(h, (batch, rows * size + cols), np.exp(1j * ks @ offsets.T))
            w = (np.cos(angle) * eye + 1j * np.sin(angle) * h.reshape(-1, size, size)) @ w
        w = self.sign * w
        return w[0] if single else w


def fetch_model(protocol: str, angles: dict) -> BlochModel:
    if protocol not in PROGRAM_LATTICES:
        raise ValueError(f"protocol should be one of {tuple(PROGRAM_LATTICES)}, but got {protocol}")
    dimension, unit_kind = PROGRAM_LATTICES[protocol]
    program = StepProgram.from_product(PROGRAMS[protocol]).bind(angles)
    return BlochModel(program, dimension, unit_kind)


def grid_angles(theta0: float, theta1: float) -> dict:
    """
    every angle name a protocol can ask for, bound from a (θ0, θ1) point.
    """
    return {
        "theta0": theta0,
        "theta1": theta1,
        "theta": theta0,
        "theta_x0": theta0,
        "theta_y0": theta0,
        "theta_x1": theta1,
        "theta_y1": theta1,
        "theta_z0": theta0,
        "theta_z1": theta1,
    }


def bloch_operator(
    program: Union[str, StepProgram],
    k,
    angles: Optional[dict] = None,
    dimension: int = 1,
    unit_kind: str = DIMER,
) -> np.ndarray:
    if isinstance(program, str):
        return fetch_model(program, angles or {})(k)
    return BlochModel(program, dimension, unit_kind)(k)


def _k_grid(dimension: int, k_points: Optional[int] = None) -> np.ndarray:
    """
    k_points per axis, DEFAULT_K_POINTS[dimension] when left out.
    """
    k_points = DEFAULT_K_POINTS[dimension] if k_points is None else int(k_points)
    if k_points < 2:
        raise ConfigError(f"k_points should be at least 2, but got {k_points}")
    if k_points**dimension > MAX_ZONE_POINTS:
        raise ConfigError(f"{k_points}^{dimension} k-points exceed {MAX_ZONE_POINTS}; pass a coarser grid")
    axis = np.linspace(-np.pi, np.pi, k_points, endpoint=False)
    return np.stack(np.meshgrid(*([axis] * dimension), indexing="ij"), axis=-1).reshape(-1, dimension)


def band_structure(protocol: str, angles: dict, k_points: Optional[int] = None) -> pd.DataFrame:
    """
    eigenphases per k, sorted, one row per (k, band).
    """
    model = fetch_model(protocol, angles)
    ks = _k_grid(model.dimension, k_points)
    energies = np.sort(np.angle(np.linalg.eigvals(model(ks))), axis=-1)
    rows = []
    for k, bands in zip(ks, energies):
        for band, energy in enumerate(bands):
            rows.append({**{f"k{'xyz'[a]}": k[a] for a in range(model.dimension)}, "band": band, "E": energy})
    return pd.DataFrame(rows)


@dataclass(frozen=True)
class Gaps:
    gap_at_0: float
    gap_at_pi: float

    def closed(self, tol: float = 1e-3) -> bool:
        return self.gap_at_0 < tol or self.gap_at_pi < tol


def model_gaps(model: BlochModel, k_points: Optional[int] = None) -> Gaps:
    """
    distance of the eigenphases from 0 and from π over the zone.
    """
    phases = np.abs(np.angle(np.linalg.eigvals(model(_k_grid(model.dimension, k_points)))))
    return Gaps(float(phases.min()), float((np.pi - phases).min()))


def gap_map_point(protocol: str, theta0: float, theta1: float, k_points: Optional[int] = None) -> Gaps:
    return model_gaps(fetch_model(protocol, grid_angles(theta0, theta1)), k_points)


def gap_map(
    protocol: str, theta0s: np.ndarray, theta1s: np.ndarray, k_points: Optional[int] = None, n_jobs: int = 1
) -> pd.DataFrame:
    points = [(t0, t1) for t0 in theta0s for t1 in theta1s]
    gaps = Parallel(n_jobs=n_jobs)(delayed(gap_map_point)(protocol, t0, t1, k_points) for t0, t1 in points)
    return pd.DataFrame(
        [{"theta0": t0, "theta1": t1, "gap_at_0": g.gap_at_0, "gap_at_pi": g.gap_at_pi} for (t0, t1), g in zip(points, gaps)]
    )


# --- regions --- #
@dataclass(frozen=True)
class RegionCheck:
    same: bool
    min_gap: float  # smallest gap on the straight path; nan for chains
    at: float  # where it sits, as a fraction of the path


def same_region(
    protocol: str, start: dict, end: dict, samples: int = 17, k_points: Optional[int] = None, tol: float = 1e-3
) -> RegionCheck:
    """
    Chains compare (ν0, νπ) of both ends. Other walks follow the straight path between the
    two angle sets and look for a gap closure on the way, refining around the smallest sampled gap.
    """
    if protocol not in PROGRAM_LATTICES:
        raise ValueError(f"protocol should be one of {tuple(PROGRAM_LATTICES)}, but got {protocol}")
    if set(start) != set(end):
        raise ConfigError(f"both ends should bind the same angles, but got {sorted(start)} and {sorted(end)}")
    if PROGRAM_LATTICES[protocol][0] == 1:
        first = invariants(start["theta0"], start["theta1"])
        second = invariants(end["theta0"], end["theta1"])
        return RegionCheck(first == second, np.nan, np.nan)

    def gap(t: float) -> float:
        angles = {name: (1 - t) * start[name] + t * end[name] for name in start}
        gaps = model_gaps(fetch_model(protocol, angles), k_points)
        return min(gaps.gap_at_0, gaps.gap_at_pi)

    ts = np.linspace(0.0, 1.0, samples)
    values = np.array([gap(t) for t in ts])
    i = int(values.argmin())
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, samples - 1)]
    refined = minimize_scalar(gap, bounds=(lo, hi), method="bounded", options={"xatol": 1e-9})
    at, min_gap = (float(refined.x), float(refined.fun)) if refined.fun < values[i] else (float(ts[i]), float(values[i]))
    return RegionCheck(min_gap >= tol, min_gap, at)


# --- Chern numbers --- #
def _band_grid(model: Callable, k_points: int, gap_tol: float) -> tuple[np.ndarray, np.ndarray]:
    """
    W(k) and the eigenvectors of sin E (n·σ) on a k_points × k_points grid; column 1 is the + band.
    """
    axis = np.linspace(-np.pi, np.pi, k_points, endpoint=False)
    ws = np.empty((k_points, k_points, 2, 2), dtype=complex)
    for i, kx in enumerate(axis):
        for j, ky in enumerate(axis):
            ws[i, j] = model((kx, ky))
    hermitian = (ws - np.conj(np.swapaxes(ws, -1, -2))) / 2j
    values, vectors = np.linalg.eigh(hermitian)
    if np.min(values[..., 1]) < gap_tol:
        raise GapClosedError(f"bands touch on the {k_points}² grid, min sin E = {np.min(values[..., 1]):.3g}")
    return ws, vectors


@dataclass(frozen=True)
class Chern:
    value: int
    raw: float

    @property
    def residual(self) -> float:
        return abs(self.raw - self.value)


def chern_number(model: Callable, band: int = 1, k_points: int = 128, gap_tol: float = 1e-6) -> Chern:
    """
    Lattice field strength of the band's eigenvectors summed over all plaquettes.
    band = 1 is the band with eigenphase in (0, π), band = 0 its partner.
    """
    if band not in (0, 1):
        raise ValueError(f"band should be either 0 or 1, but got {band}")
    _, vectors = _band_grid(model, k_points, gap_tol)
    u = vectors[..., band]
    link_x = np.sum(np.conj(u) * np.roll(u, -1, axis=0), axis=-1)
    link_y = np.sum(np.conj(u) * np.roll(u, -1, axis=1), axis=-1)
    link_x, link_y = link_x / np.abs(link_x), link_y / np.abs(link_y)
    flux = np.angle(link_x * np.roll(link_y, -1, axis=0) * np.conj(np.roll(link_x, -1, axis=1)) * np.conj(link_y))
    raw = float(np.sum(flux) / (2 * np.pi))
    chern = Chern(int(round(raw)), raw)
    if chern.residual > 1e-3:
        raise NumericalToleranceError(f"Chern number {raw} is not an integer")
    return chern


def chern_number_direct(model: Callable, band: int = 1, k_points: int = 128, gap_tol: float = 1e-6) -> float:
    """
    (1/4π) Σ n·(∂_x n × ∂_y n) Δk², central differences; a raw value for cross-checks.
    """
    ws, _ = _band_grid(model, k_points, gap_tol)
    cos_e = np.real(np.trace(ws, axis1=-2, axis2=-1)) / 2
    sin_e = np.sqrt(np.clip(1 - cos_e**2, 0.0, None))
    n = np.stack([np.real(np.einsum("ab,ijba->ij", s, ws) / (2j * sin_e)) for s in PAULI], axis=-1)
    if band == 0:
        n = -n
    dk = 2 * np.pi / k_points
    dx = (np.roll(n, -1, axis=0) - np.roll(n, 1, axis=0)) / (2 * dk)
    dy = (np.roll(n, -1, axis=1) - np.roll(n, 1, axis=1)) / (2 * dk)
    return float(np.sum(np.einsum("ijk,ijk->ij", n, np.cross(dx, dy))) * dk**2 / (4 * np.pi))


# --- phase diagrams --- #
def _phase_point(
    protocol: str, theta0: float, theta1: float, abar: float, k_points: Optional[int], chern_points: int
) -> dict:
    row = {"theta0": theta0, "theta1": theta1}
    dimension, _ = PROGRAM_LATTICES[protocol]
    k_points = DEFAULT_K_POINTS[dimension] if k_points is None else k_points
    if dimension == 1:
        energies = quasienergy(np.linspace(-np.pi, np.pi, k_points, endpoint=False), theta0, theta1)
        row["gap0"], row["gappi"] = float(np.min(energies)), float(np.min(np.pi - energies))
        try:
            result = invariants(theta0, theta1, abar, k_points)
            row["nu0"], row["nupi"] = result.nu_0, result.nu_pi
        except (GapClosedError, NumericalToleranceError):
            row["nu0"] = row["nupi"] = np.nan
        return row
    model = fetch_model(protocol, grid_angles(theta0, theta1))
    gaps = model_gaps(model, k_points)
    row["gap0"], row["gappi"] = gaps.gap_at_0, gaps.gap_at_pi
    if dimension == 2 and model.unit_size == 2:
        try:
            row["chern"] = chern_number(model, band=1, k_points=chern_points).value
        except (GapClosedError, NumericalToleranceError):
            row["chern"] = np.nan
    return row


def phase_diagram(
    theta0s: np.ndarray,
    theta1s: np.ndarray,
    protocol: str = "ssh",
    abar: float = 0.5,
    k_points: Optional[int] = None,
    chern_points: int = 48,
    n_jobs: int = 1,
) -> pd.DataFrame:
    """
    (ν0, νπ) for chains, the + band Chern number for two-band planar walks,
    and both gaps everywhere. Closed-gap points carry NaN invariants.
    """
    if protocol not in PROGRAM_LATTICES:
        raise ValueError(f"protocol should be one of {tuple(PROGRAM_LATTICES)}, but got {protocol}")
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_phase_point)(protocol, float(t0), float(t1), abar, k_points, chern_points) for t0 in theta0s for t1 in theta1s
    )
    return pd.DataFrame(rows)
