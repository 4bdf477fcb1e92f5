import json
import math
import warnings
from copy import copy
from dataclasses import dataclass, field
from functools import wraps
from pathlib import Path
from typing import Optional, Union
import numpy as np
import pandas as pd
from rydwalk.decoherence import (
    DensityMatrix,
    TESSELLATION_STEP,
    coherence_length,
    evolve_density,
    fixed_time_sweep,
    mean_square_displacement,
)
from rydwalk.errors import ConfigError, FitFailure, GapClosedError
from rydwalk.lattice import BoundaryTopology, LatticeSpec, PairSet, SiteTable, build_lattice
from rydwalk.protocols import (
    DIMER,
    TETRAMER,
    ODD,
    EVEN,
    OPEN,
    PERIODIC,
    PROGRAMS,
    STRIPE_INSIDE_2D,
    STRIPE_OUTSIDE_2D,
)
from rydwalk.topology import PROGRAM_LATTICES, fetch_model, invariants, model_gaps, same_region
from rydwalk.walk import (
    StepProgram,
    Trajectory,
    WalkerState,
    compile_program,
    dimer_sum,
    period_matrix,
    run_program,
)


# --- angle profiles --- #
@dataclass(frozen=True)
class AngleProfile:
    """
    θ(x) = (θ_- + θ_+)/2 + (θ_+ - θ_-)/2 tanh((x - center)/w), x and w in units of a0.
    """

    theta_minus: float
    theta_plus: float
    w: float
    center: float = 0.0
    axis: int = 0

    def __post_init__(self):
        if not self.w > 0:
            raise ValueError(f"w should be positive, but got {self.w}")

    @property
    def sides(self) -> tuple:
        return self.theta_minus, self.theta_plus

    def __call__(self, table: SiteTable, pairs: PairSet) -> np.ndarray:
        a0 = table.spec.a0[self.axis]
        midpoints = table.positions[pairs.pairs, self.axis].mean(axis=1) / a0
        return angle_at(self, midpoints)


def angle_at(profile: AngleProfile, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    middle = (profile.theta_minus + profile.theta_plus) / 2
    half = (profile.theta_plus - profile.theta_minus) / 2
    theta = middle + half * np.tanh((np.asarray(x, dtype=float) - profile.center) / profile.w)
    return float(theta) if np.ndim(theta) == 0 else theta


@dataclass(frozen=True)
class StripeProfile:
    """
    `inside` on pairs whose cell midpoint along `axis` lies in [lo, hi], `outside` elsewhere.
    """

    inside: float
    outside: float
    lo: float
    hi: float
    axis: int = 0

    @property
    def sides(self) -> tuple:
        return self.outside, self.inside

    def __call__(self, table: SiteTable, pairs: PairSet) -> np.ndarray:
        cells = table.cells[pairs.pairs, self.axis]
        midpoints = cells.mean(axis=1)
        # a pair wrapping across a periodic edge sits just left of cell 0
        midpoints = np.where(np.abs(cells[:, 0] - cells[:, 1]) > 1, -0.5, midpoints)
        return np.where((midpoints >= self.lo) & (midpoints <= self.hi), self.inside, self.outside)


def stripe_angles(lo: float, hi: float, inside: tuple = STRIPE_INSIDE_2D, outside: tuple = STRIPE_OUTSIDE_2D, axis: int = 0) -> dict:
    """
    (θ0, θ1) stripes, bound under every name a protocol can use for them.
    """
    theta0 = StripeProfile(inside[0], outside[0], lo, hi, axis)
    theta1 = StripeProfile(inside[1], outside[1], lo, hi, axis)
    return {"theta0": theta0, "theta1": theta1, "theta_x0": theta0, "theta_x1": theta1, "theta_y0": theta0, "theta_y1": theta1}


# --- configuration --- #
@dataclass
class ExperimentConfig:
    name: str
    lattice: LatticeSpec
    program: str
    angles: dict
    init: tuple  # site indices or (cell, parity) pairs
    steps: int
    boundary: Optional[BoundaryTopology] = None
    seam: Optional[BoundaryTopology] = None
    weights: Optional[tuple] = None
    p_s: Optional[float] = None
    dephase_per: str = TESSELLATION_STEP
    keep_states: bool = False
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.program not in PROGRAMS:
            raise ConfigError(f"program should be one of {tuple(PROGRAMS)}, but got {self.program}")
        if self.steps < 1:
            raise ConfigError(f"steps should be at least 1, but got {self.steps}")
        if not self.init:
            raise ConfigError("init needs at least one site")
        if self.boundary is None:
            self.boundary = BoundaryTopology.open(self.lattice.dimension)
        if len(self.boundary.rules) != self.lattice.dimension:
            raise ConfigError(f"boundary {self.boundary.rules} does not match a {self.lattice.dimension}D lattice")


def site_index(table: SiteTable, descriptor) -> int:
    if isinstance(descriptor, (int, np.integer)):
        return int(descriptor)
    cell, parity = descriptor
    return table.index_of(tuple(cell), tuple(parity))


# --- pipeline --- #
def log(f):
    @wraps(f)
    def wrapper(*args, **kwargs):
        f_out = f(*args, **kwargs)
        names = f.__code__.co_varnames[: f.__code__.co_argcount]
        experiment: Experiment = args[0]
        # exclude self
        experiment.log[f.__name__] = {
            "in": {**dict(zip(names[1:], args[1:])), **kwargs},
            "out": copy(experiment.out),
        }
        return f_out

    return wrapper


class Experiment:
    """
    build -> validate -> prepare -> evolve -> analyze, one config at a time.
    """

    def __init__(self, strict: bool = False):
        self.strict = strict
        self.out: any = None
        self.config: Optional[ExperimentConfig] = None
        self.table: Optional[SiteTable] = None
        self.compiled: Optional[tuple] = None
        self.evolved: any = None
        self.log = dict()

    def __call__(self, config: ExperimentConfig) -> dict:
        self.setup().build(config).validate().prepare().evolve().analyze()
        return self.out

    def setup(self):
        """
        Reset the out and clear all the logs.
        """
        self.out = None
        self.log.clear()
        self.log["warnings"] = []
        return self

    def warn(self, message: str):
        self.log.setdefault("warnings", []).append(message)
        warnings.warn(message)

    @log
    def build(self, config: ExperimentConfig):
        self.config = config
        self.table = build_lattice(config.lattice)
        program = StepProgram.from_product(PROGRAMS[config.program]).bind(config.angles)
        self.compiled = compile_program(program, self.table, config.boundary, config.seam)
        self.out = self.compiled
        return self

    @log
    def validate(self):
        """
        Spatially varying angles should join two gapped regions; a closed gap on
        either side is an error in strict mode and a warning otherwise. Two different
        sides that one path joins without closing a gap raise ConfigError.
        """
        config = self.config
        sides = [{}, {}]
        for name, angle in config.angles.items():
            left, right = getattr(angle, "sides", (angle, angle))
            sides[0][name], sides[1][name] = left, right
        report = {}
        closed = False
        varying = any(hasattr(angle, "sides") for angle in config.angles.values())
        if varying and config.program in PROGRAM_LATTICES:
            for label, angles in zip(("outside", "inside"), sides):
                if not all(np.isscalar(value) for value in angles.values()):
                    continue
                gaps = model_gaps(fetch_model(config.program, angles))
                report[label] = {"gap_at_0": gaps.gap_at_0, "gap_at_pi": gaps.gap_at_pi}
                if gaps.closed():
                    closed = True
                    message = f"{label} angles {angles} sit on a phase border"
                    if self.strict:
                        raise GapClosedError(message)
                    self.warn(message)
                elif PROGRAM_LATTICES[config.program][0] == 1:
                    result = invariants(angles["theta0"], angles["theta1"])
                    report[label].update({"nu0": result.nu_0, "nupi": result.nu_pi})
            scalar = all(np.isscalar(value) for angles in sides for value in angles.values())
            if scalar and not closed and sides[0] != sides[1]:
                check = same_region(config.program, sides[0], sides[1])
                report["same_region"] = check.same
                report["min_gap"] = None if np.isnan(check.min_gap) else check.min_gap
                if check.same:
                    raise ConfigError(f"outside {sides[0]} and inside {sides[1]} lie in one gapped region, so no boundary forms")
        self.out = report
        return self

    def _site(self, descriptor) -> int:
        return site_index(self.table, descriptor)

    @log
    def prepare(self):
        config = self.config
        sites = [self._site(descriptor) for descriptor in config.init]
        state = WalkerState.superposition(self.table.n_sites, sites, config.weights)
        self.out = state if config.p_s is None else DensityMatrix.pure(state)
        return self

    @log
    def evolve(self):
        config = self.config
        if config.p_s is None:
            self.out = run_program(self.out, self.compiled, config.steps, keep_states=config.keep_states)
        else:
            self.out = evolve_density(self.out, self.compiled, config.steps, config.p_s, config.dephase_per)
        return self

    @log
    def analyze(self):
        config = self.config
        evolved = self.out
        summary = {"name": config.name, "steps": config.steps, "n_sites": self.table.n_sites}
        if isinstance(evolved, Trajectory):
            summary["final_norm"] = float(evolved.norms[-1])
            populations = evolved.probabilities
        else:
            summary["final_trace"] = float(evolved.traces[-1])
            summary["msd"] = mean_square_displacement(evolved.final)
            populations = evolved.diagonals
        summary["final_dimer_sum"] = dimer_sum(populations[-1], self.table).tolist()
        summary["warnings"] = list(self.log.get("warnings", []))
        self.evolved = evolved
        self.out = summary
        return self

    def export(self, out_dir: Union[str, Path]) -> list:
        """
        Write the trajectory, the dimer-summed populations and the summary under `out_dir`.
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        name = self.config.name
        paths = []
        evolved = self.evolved
        if isinstance(evolved, Trajectory):
            frame = evolved.to_frame()
            populations = evolved.probabilities
        else:
            steps, sites = np.indices(evolved.diagonals.shape)
            frame = pd.DataFrame({"step": steps.ravel(), "site": sites.ravel(), "probability": evolved.diagonals.ravel()})
            populations = evolved.diagonals
            heatmap = out_dir / f"{name}_coherence.csv"
            evolved.final.to_frame().to_csv(heatmap, float_format="%.17g")
            paths.append(heatmap)
        trajectory = out_dir / f"{name}_trajectory.csv"
        frame.to_csv(trajectory, index=False, float_format="%.17g")
        paths.append(trajectory)
        dimers = out_dir / f"{name}_dimers.csv"
        cells = np.array(list(np.ndindex(*self.table.spec.cells)))
        per_cell = dimer_sum(populations[-1], self.table).ravel()
        pd.DataFrame({**{f"cell_{'xyz'[a]}": cells[:, a] for a in range(cells.shape[1])}, "probability": per_cell}).to_csv(
            dimers, index=False, float_format="%.17g"
        )
        paths.append(dimers)
        summary = out_dir / f"{name}_summary.json"
        summary.write_text(json.dumps(self.out, indent=2))
        paths.append(summary)
        return paths


@dataclass(frozen=True, eq=False)
class RunResult:
    table: SiteTable
    evolved: object
    summary: dict


def _run(config: ExperimentConfig, strict: bool = False) -> RunResult:
    experiment = Experiment(strict=strict)
    summary = experiment(config)
    summary["validate"] = experiment.log["validate"]["out"]
    return RunResult(experiment.table, experiment.evolved, summary)


# --- 1D --- #
def edge_config_1d(case: str = "transition", cells: int = 201, steps: int = 100, w: float = 0.1) -> ExperimentConfig:
    """
    A sharp angle step at the walker's site. "transition" swaps (θ0, θ1) = (π/10, 4π/10)
    across x = 0; "adiabatic" keeps the left pair on both sides, so no boundary forms.
    """
    left = (math.pi / 10, 4 * math.pi / 10)
    if case == "transition":
        right = (4 * math.pi / 10, math.pi / 10)
    elif case == "adiabatic":
        right = left
    else:
        raise ValueError(f"case should be either 'transition' or 'adiabatic', but got {case}")
    spec = LatticeSpec.chain(cells, a0=1.0, a1=1.0)
    center = cells // 2
    # x measured from the walker, in a0
    origin = center * (spec.a0[0] + spec.a1[0])
    angles = {
        "theta0": AngleProfile(left[0], right[0], w, center=origin),
        "theta1": AngleProfile(left[1], right[1], w, center=origin),
    }
    return ExperimentConfig(f"edge_1d_{case}", spec, "ssh", angles, (((center,), (ODD,)),), steps)


def trapped_fraction(probabilities: np.ndarray, table: SiteTable, origin: float, radius: float = 5.0) -> float:
    """
    P(|x - origin| <= radius), positions in the lattice's length units.
    """
    near = np.abs(table.positions[:, 0] - origin) <= radius
    return float(probabilities[near].sum())


def run_1d_edge(config: Optional[ExperimentConfig] = None, case: str = "transition", radius: float = 5.0) -> RunResult:
    """
    `radius` is measured from the walker's start, in units of a0.
    """
    config = edge_config_1d(case) if config is None else config
    result = _run(config)
    origin = result.table.positions[site_index(result.table, config.init[0]), 0]
    radius = radius * config.lattice.a0[0]
    result.summary["trapped_fraction"] = trapped_fraction(result.evolved.final, result.table, origin, radius)
    return result


# --- 2D --- #
EDGE_2D = ("coined_chern", "coined_simple", "coinless_tetramer", "coinless_dimer_anomalous")


def edge_config_2d(protocol: str, stripe: bool = True) -> ExperimentConfig:
    if protocol in ("coined_chern", "coined_simple"):
        spec = LatticeSpec(2, (8, 10), (1.0, 1.0), (1.0, 1.0), DIMER)
        angles = stripe_angles(2, 4) if stripe else {"theta0": STRIPE_OUTSIDE_2D[0], "theta1": STRIPE_OUTSIDE_2D[1]}
        init = (((2, 5), (EVEN,)), ((4, 5), (EVEN,)))
        return ExperimentConfig(f"edge_2d_{protocol}", spec, protocol, angles, init, 200, BoundaryTopology.periodic(2))
    elif protocol == "coinless_tetramer":
        spec = LatticeSpec(2, (14, 10), (1.0, 1.0), (1.0, 1.0), TETRAMER)
        if stripe:
            angles = stripe_angles(4, 9)
        else:
            angles = {name: value for name, value in zip(("theta_x0", "theta_x1", "theta_y0", "theta_y1"), STRIPE_OUTSIDE_2D * 2)}
        init = (((4, 5), (ODD, ODD)),)
        boundary = BoundaryTopology((OPEN, PERIODIC))
        return ExperimentConfig(f"edge_2d_{protocol}", spec, protocol, angles, init, 209, boundary)
    elif protocol == "coinless_dimer_anomalous":
        spec = LatticeSpec(2, (6, 6), (1.0, 1.0), (1.0, 1.0), DIMER)
        init = (((2, 2), (ODD,)),)
        return ExperimentConfig(f"edge_2d_{protocol}", spec, protocol, {"theta": math.pi / 2}, init, 1)
    raise ValueError(f"protocol should be one of {EDGE_2D}, but got {protocol}")


def period_map(table: SiteTable, compiled: tuple) -> pd.DataFrame:
    """
    where each basis site lands after one period, with the landing weight.
    """
    u = period_matrix(table.n_sites, compiled)
    weights = np.abs(u) ** 2
    landing = weights.argmax(axis=0)
    return pd.DataFrame(
        {
            "site": np.arange(table.n_sites),
            "target": landing,
            "weight": weights[landing, np.arange(table.n_sites)],
            "returned": np.abs(np.diag(u)) > 1 - 1e-10,
        }
    )


def edge_sites(table: SiteTable, config: ExperimentConfig) -> np.ndarray:
    """
    Mask of the sites whose full-hop path over one period uses a pair that the config's
    boundary cuts, found by replaying the program on the closed lattice.
    """
    program = StepProgram.from_product(PROGRAMS[config.program]).bind(config.angles)
    closed = compile_program(program, table, BoundaryTopology.periodic(table.spec.dimension))
    kept = compile_program(program, table, config.boundary)
    position = np.arange(table.n_sites)
    edge = np.zeros(table.n_sites, dtype=bool)
    for whole, cut in zip(closed, kept):
        pairs = whole.pairs.pairs
        partner = np.arange(table.n_sites)
        partner[pairs[:, 0]], partner[pairs[:, 1]] = pairs[:, 1], pairs[:, 0]
        lost = [site for pair in whole.pairs.as_set() - cut.pairs.as_set() for site in pair]
        edge |= np.isin(position, lost)
        position = partner[position]
    return edge


def column_fraction(probabilities: np.ndarray, table: SiteTable, columns: tuple, axis: int = 0) -> float:
    return float(probabilities[np.isin(table.cells[:, axis], columns)].sum())


def run_2d_edge(config: Optional[ExperimentConfig] = None, protocol: str = "coined_simple") -> RunResult:
    config = edge_config_2d(protocol) if config is None else config
    if config.program not in EDGE_2D:
        raise ConfigError(f"protocol should be one of {EDGE_2D}, but got {config.program}")
    if config.lattice.dimension != 2 or config.lattice.unit_kind != PROGRAM_LATTICES[config.program][1]:
        raise ConfigError(f"{config.program} does not run on a 2D lattice of {config.lattice.unit_kind}s")
    result = _run(config)
    stripe = [angle for angle in config.angles.values() if isinstance(angle, StripeProfile)]
    if stripe:
        borders = (int(math.ceil(stripe[0].lo)), int(math.floor(stripe[0].hi)))
        result.summary["border_fraction"] = column_fraction(result.evolved.final, result.table, borders)
    return result


# --- 3D --- #
def edge_config_3d(cells: tuple = (8, 8, 8), steps: int = 200, stripe: bool = True) -> ExperimentConfig:
    spec = LatticeSpec(3, cells, (1.0,) * 3, (1.0,) * 3, DIMER)
    if stripe:
        # (4π/10, π/10) inside 3 ≤ x ≤ 5
        angles = stripe_angles(3, 5, inside=STRIPE_OUTSIDE_2D, outside=STRIPE_INSIDE_2D)
    else:
        angles = {"theta0": STRIPE_INSIDE_2D[0], "theta1": STRIPE_INSIDE_2D[1]}
    init = (((3, 3, 3), (ODD,)), ((5, 3, 3), (ODD,)))
    return ExperimentConfig("edge_3d", spec, "coined_3d", angles, init, steps, BoundaryTopology.periodic(3))


def run_3d_edge(config: Optional[ExperimentConfig] = None, planes: tuple = (3, 5)) -> RunResult:
    config = edge_config_3d() if config is None else config
    result = _run(config)
    result.summary["plane_fraction"] = [
        column_fraction(p, result.table, planes) for p in result.evolved.probabilities
    ]
    return result


def run_3d_coinless_insulator(cells: tuple = (4, 4, 4), theta: float = math.pi / 2) -> RunResult:
    """
    one period of the eight-tessellation program on an open lattice, with the per-site landing map.
    """
    spec = LatticeSpec(3, cells, (1.0,) * 3, (1.0,) * 3, DIMER)
    config = ExperimentConfig("insulator_3d", spec, "insulator_3d", {"theta": theta}, (0,), 1)
    experiment = Experiment()
    summary = experiment(config)
    landing = period_map(experiment.table, experiment.compiled)
    summary["returned"] = int(landing["returned"].sum())
    summary["moved"] = landing.loc[~landing["returned"], "site"].tolist()
    summary["edge"] = np.flatnonzero(edge_sites(experiment.table, config)).tolist()
    return RunResult(experiment.table, landing, summary)


# --- surfaces --- #
def run_surface_walk(
    topology: str = "torus",
    cells: tuple = (4, 4),
    steps: int = 1,
    theta: float = math.pi / 2,
    seam_theta: Optional[float] = None,
    start: tuple = (0, 2),
) -> RunResult:
    """
    U = W_y0 W_y1 W_yb W_x0 W_x1 W_xb on tetramers; `start` is a grid coordinate.
    """
    if topology == "torus":
        seam = BoundaryTopology.torus(2)
    elif topology == "moebius":
        seam = BoundaryTopology.moebius("x")
    elif topology == "klein":
        seam = BoundaryTopology.klein()
    else:
        raise ValueError(f"topology should be one of ('torus', 'moebius', 'klein'), but got {topology}")
    spec = LatticeSpec(2, cells, (1.0, 1.0), (1.0, 1.0), TETRAMER)
    table = build_lattice(spec)
    lookup = {tuple(row): index for index, row in enumerate(table.grid.tolist())}
    angles = {"theta": theta, "theta_seam": theta if seam_theta is None else seam_theta}
    config = ExperimentConfig(f"surface_{topology}", spec, "surface", angles, (lookup[tuple(start)],), steps, seam=seam)
    result = _run(config)
    landing = int(result.evolved.final.argmax())
    result.summary["landing"] = table.grid[landing].tolist()
    return result


# --- decoherence --- #
def decoherence_config(p_s: float, steps: int = 50, cells: int = 51, theta: float = math.pi / 4, start: int = 50) -> ExperimentConfig:
    """
    Hadamard steps (θ = π/4) on an open chain, dephased after every tessellation.
    """
    spec = LatticeSpec.chain(cells, a0=1.0, a1=1.0)
    return ExperimentConfig(f"decoherence_{p_s:g}", spec, "ssh_plain", {"theta0": theta, "theta1": theta}, (start,), steps, p_s=p_s)


def run_decoherence(config: Optional[ExperimentConfig] = None, p_s: float = 0.1) -> RunResult:
    """
    The dephased run next to its noiseless twin: ⟨x²⟩ per step and the coherence length.
    """
    config = decoherence_config(p_s) if config is None else config
    result = _run(config)
    ideal_config = copy(config)
    ideal_config.p_s = 0.0
    ideal = _run(ideal_config)
    center = config.init[0] if isinstance(config.init[0], (int, np.integer)) else result.table.n_sites // 2
    result.summary["gamma_t"] = (np.arange(1, config.steps + 1) * config.p_s).tolist()
    result.summary["msd_series"] = [mean_square_displacement(d, center) for d in result.evolved.diagonals[1:]]
    try:
        fit = coherence_length(result.evolved.final, ideal.evolved.final, center)
        result.summary["coherence_length"] = fit.length
    except FitFailure as e:
        result.summary["coherence_length"] = None
        result.summary["warnings"].append(str(e))
    return result


def run_crossover(
    p_s_values: Optional[np.ndarray] = None, steps: int = 50, reference: float = 0.1, cells: int = 51
) -> pd.DataFrame:
    """
    ⟨x²⟩ after a fixed number of Hadamard steps, one dephased run per P_s, against γt = steps × P_s.
    `scaled` counts lengths in coherence lengths, rescaled to the one at P_s = `reference`.
    """
    p_s_values = np.geomspace(1e-3, 1.0, 25) if p_s_values is None else np.asarray(p_s_values, dtype=float)
    config = decoherence_config(reference, steps, cells, start=cells - 1)
    table = build_lattice(config.lattice)
    program = StepProgram.from_product(PROGRAMS[config.program]).bind(config.angles)
    compiled = compile_program(program, table, config.boundary)
    start = site_index(table, config.init[0])
    state = WalkerState.localized(table.n_sites, start)
    gamma_t, scaled = fixed_time_sweep(state, compiled, steps, p_s_values, reference, center=start)
    return pd.DataFrame(
        {"p_s": p_s_values, "gamma_t": gamma_t, "msd": scaled * (reference / p_s_values) ** 2, "scaled": scaled}
    )
