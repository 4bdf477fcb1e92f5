"""
The Rydberg layer under the walk: exchange interaction, 2π-pulse hops, leakage
to unwanted sites, step budgets and the per-step dephasing budget.
Frequencies are ordinary frequencies in MHz (ω/2π); times are in μs.
"""
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Union
import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import constants
from scipy.linalg import eigh
from scipy.optimize import brentq
from rydwalk.errors import (
    IntegrationError,
    ResonantCollisionError,
    UnreachableFidelityError,
)
from rydwalk.lattice import LatticeSpec, SiteTable, build_lattice, nearest_sites
from rydwalk.modeling_integrator import Integrator
from rydwalk.modeling_expm_integrator import ExpmIntegrator
from rydwalk.modeling_ode_integrator import OdeIntegrator
from rydwalk.protocols import DIMER, ODD, EVEN

GHZ_TO_MHZ = 1000.0
# 4-state pulse basis
PG, PS, SP, GP = 0, 1, 2, 3

# quoted per-step values, reported beside the computed ones
QUOTED_PS = {
    "laser_noise": 1e-4,
    "intermediate_scattering": 2.5e-4,
    "confinement": 2e-4,
    "doppler": 3e-6,
    "trap_scattering": 1e-8,
}
QUOTED_CONFINEMENT_RATIO = 0.1
HEADLINE_STEPS = 210
HEADLINE_SURVIVAL = 0.4
HEADLINE_FIDELITY = 0.97
INIT_FIDELITY = 0.98
DETECTION_FIDELITY = 0.99991


def fetch_integrator(name: str) -> Integrator:
    if name == "expm":
        return ExpmIntegrator()
    elif name == "ode":
        return OdeIntegrator()
    raise ValueError(f"integrator should be either 'expm' or 'ode', but got {name}")


@dataclass(frozen=True)
class RydbergParams:
    n: int = 70
    c3_at_zero: Optional[float] = None  # GHz·μm³
    omega: float = 2.0  # MHz
    delta: Optional[float] = None  # MHz, resonant with a_target when left out
    a_target: float = 3.0  # μm
    gamma_p: float = 1.4  # MHz
    delta_p: float = 600.0  # MHz
    omega_1: float = 60.0  # MHz
    omega_2: float = 40.0  # MHz
    lifetime_exponent: float = -3.0
    tau: Optional[float] = None  # μs
    trap_frequency: float = 150.0  # kHz
    spread: float = 20.0  # nm
    a_min: Optional[float] = None  # nm
    gamma_la: float = 0.5  # kHz
    mass_amu: float = 86.909180527  # Rb-87
    wavelengths: tuple = (420.0, 1013.0)  # nm, counter-propagating legs
    coherence_time: float = 12.0  # s

    def __post_init__(self):
        scale = self.n / 70
        if self.c3_at_zero is None:
            object.__setattr__(self, "c3_at_zero", 8.4 * scale**3)
        if self.tau is None:
            object.__setattr__(self, "tau", 450.0 * scale**self.lifetime_exponent)
        if self.a_min is None:
            object.__setattr__(self, "a_min", 950.0 * scale**2)
        if self.delta is None:
            object.__setattr__(self, "delta", -GHZ_TO_MHZ * self.c3_at_zero / self.a_target**3)
        for name in ("n", "c3_at_zero", "omega", "a_target", "gamma_p", "delta_p", "omega_1",
                     "omega_2", "tau", "trap_frequency", "spread", "a_min", "mass_amu", "coherence_time"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} should be positive, but got {getattr(self, name)}")
        if self.gamma_la < 0:
            raise ValueError(f"gamma_la should be non-negative, but got {self.gamma_la}")
        if self.delta != 0 and self.omega / abs(self.delta) > 0.2:
            warnings.warn(f"Ω/|Δ| = {self.omega / abs(self.delta):.3g} exceeds 0.2; site selectivity degrades")

    @property
    def step_time(self) -> float:
        """
        duration of a resonant 2π pulse, μs.
        """
        return 1.0 / self.omega


@dataclass(frozen=True)
class DipoleComponents:
    """
    spherical components (μ_+, μ_-, μ_z) per atom, in units of a reference moment.
    """

    first: tuple = (0.0, 0.0, 1.0)
    second: tuple = (0.0, 0.0, 1.0)


# --- exchange --- #
def angular_channels(phi: Union[float, np.ndarray]) -> tuple:
    """
    f_1, f_2, f_3 of the dipole-dipole interaction for a pair axis at angle φ to the quantization axis.
    """
    c, s = np.cos(phi), np.sin(phi)
    return (1 - 3 * c**2) / 2, 3 / math.sqrt(2) * s * c, -1.5 * s**2


def _channel_sum(phi, d: DipoleComponents):
    (p1, m1, z1), (p2, m2, z2) = d.first, d.second
    f1, f2, f3 = angular_channels(phi)
    return (
        f1 * (p1 * m2 + m1 * p2 + 2 * z1 * z2)
        + f2 * (p1 * z2 - m1 * z2 + z1 * p2 - z1 * m2)
        + f3 * (p1 * p2 + m1 * m2)
    )


def exchange_strength(
    r: Union[float, np.ndarray],
    phi: Union[float, np.ndarray],
    d: Optional[DipoleComponents] = None,
    params: Optional[RydbergParams] = None,
) -> Union[float, np.ndarray]:
    """
    V = C3(φ) / R³ in MHz, with R in μm. C3(φ) is normalized so that C3(0) = C3_at_zero.
    """
    d = DipoleComponents() if d is None else d
    params = RydbergParams() if params is None else params
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError(f"R should be positive, but got {r}")
    if np.any(r * 1000 < params.a_min):
        warnings.warn(f"R = {np.min(r)} μm is inside the LeRoy radius {params.a_min / 1000:.3g} μm")
    reference = _channel_sum(0.0, d)
    if reference == 0:
        raise ValueError(f"dipoles {d} give no exchange along the quantization axis")
    c3 = params.c3_at_zero * np.real(_channel_sum(phi, d) / reference)
    v = GHZ_TO_MHZ * c3 / r**3
    return float(v) if np.ndim(v) == 0 else v


def exchange_profile(phis: np.ndarray, ns: tuple = (50, 70, 90), r: float = 3.0) -> pd.DataFrame:
    rows = []
    for n in ns:
        params = RydbergParams(n=n)
        for phi, v in zip(phis, exchange_strength(r, np.asarray(phis), params=params)):
            rows.append({"n": n, "phi": float(phi), "V": float(v)})
    return pd.DataFrame(rows)


# --- pulses --- #
@dataclass(frozen=True, eq=False)
class PulseResult:
    theta: float
    max_s_population: float
    duration: float  # μs
    state: np.ndarray = field(repr=False)


def pulse_hamiltonian(params: RydbergParams, v: float, delta_offset: float = 0.0) -> np.ndarray:
    """
    H/ħ in rad/μs over |pg⟩, |ps⟩, |sp⟩, |gp⟩.
    """
    h = np.zeros((4, 4))
    h[PG, PS] = h[PS, PG] = params.omega / 2
    h[SP, GP] = h[GP, SP] = params.omega / 2
    h[PS, SP] = h[SP, PS] = v
    h[PS, PS] = h[SP, SP] = params.delta + delta_offset
    return 2 * np.pi * h


def pulse_dynamics(
    params: RydbergParams,
    v: float,
    delta_offset: float = 0.0,
    integrator: str = "expm",
    duration: Optional[float] = None,
    n_times: int = 401,
    tol: float = 1e-8,
) -> PulseResult:
    """
    Drive |pg⟩ through one 2π pulse of the effective Rabi frequency √(Ω² + δ²), δ = Δ + V + offset.
    θ = arcsin|⟨gp|ψ⟩|; the s-population sums |ps⟩ and |sp⟩.
    """
    detuning = params.delta + v + delta_offset
    duration = 1.0 / math.hypot(params.omega, detuning) if duration is None else duration
    times = np.linspace(0.0, duration, n_times)
    psi0 = np.zeros(4, dtype=complex)
    psi0[PG] = 1.0
    states = fetch_integrator(integrator)(pulse_hamiltonian(params, v, delta_offset), psi0, times)
    norms = np.linalg.norm(states, axis=1)
    if np.max(np.abs(norms - 1)) > tol:
        raise IntegrationError(f"norm drifted by {np.max(np.abs(norms - 1)):.3g} during the pulse")
    s_population = np.abs(states[:, PS]) ** 2 + np.abs(states[:, SP]) ** 2
    final = states[-1]
    theta = math.asin(min(1.0, abs(final[GP])))
    return PulseResult(theta, float(np.max(s_population)), duration, final)


def hop_detuning(theta: float, params: Optional[RydbergParams] = None, v: Optional[float] = None) -> float:
    """
    The detuning offset from the pair resonance that yields a hop angle θ, e.g. π/4 for a Hadamard step.
    """
    if not 0 < theta <= math.pi / 2:
        raise ValueError(f"theta should be in (0, π/2], but got {theta}")
    params = RydbergParams() if params is None else params
    v = -params.delta if v is None else v
    resonant = replace(params, delta=-v)
    if theta == math.pi / 2:
        return 0.0
    return brentq(
        lambda offset: pulse_dynamics(resonant, v, offset).theta - theta,
        0.0,
        20 * params.omega,
        xtol=1e-10,
    )


def _scan_site(params: RydbergParams, r: float, phi: float, integrator: str) -> dict:
    v = exchange_strength(r, phi, params=params)
    return {"distance": r, "phi": phi, "V": v, "max_population": pulse_dynamics(params, v, integrator=integrator).max_s_population}


def site_selectivity_scan(
    table: SiteTable,
    walker: int,
    params: Optional[RydbergParams] = None,
    axis: tuple = (1.0, 0.0, 0.0),
    integrator: str = "expm",
    n_jobs: int = 1,
) -> pd.DataFrame:
    """
    peak s-population of every other site under a laser resonant with the pair at a_target.
    φ is measured from the quantization `axis`.
    """
    params = RydbergParams() if params is None else params
    params = replace(params, delta=-exchange_strength(params.a_target, 0.0, params=params))
    offsets = table.positions - table.positions[walker]
    sites = [i for i in range(table.n_sites) if i != walker]
    distances = np.linalg.norm(offsets[sites], axis=1)
    unit = np.asarray(axis, dtype=float) / np.linalg.norm(axis)
    phis = np.arccos(np.clip(np.abs(offsets[sites] @ unit) / distances, 0.0, 1.0))
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_scan_site)(params, float(r), float(phi), integrator) for r, phi in zip(distances, phis)
    )
    df = pd.DataFrame(rows)
    df.insert(0, "site", sites)
    return df


# --- leakage --- #
@dataclass(frozen=True)
class Leakage:
    infidelity: float
    neighbors: tuple
    detunings: tuple  # V_ij - V_ik, MHz


def _pair_detunings(table: SiteTable, pair: tuple, params: RydbergParams, shell: int) -> tuple:
    i, j = pair
    r_ij = table.positions[j] - table.positions[i]
    v_ij = exchange_strength(np.linalg.norm(r_ij), 0.0, params=params)
    neighbors = nearest_sites(table, i, shell, exclude=(j,))
    r_ik = table.positions[neighbors] - table.positions[i]
    distances = np.linalg.norm(r_ik, axis=1)
    phis = np.arccos(np.clip(r_ik @ r_ij / (distances * np.linalg.norm(r_ij)), -1.0, 1.0))
    v_ik = exchange_strength(distances, phis, params=params)
    detunings = v_ij - np.atleast_1d(v_ik)
    collided = np.abs(detunings) <= 1e-9 * abs(v_ij)
    if np.any(collided):
        raise ResonantCollisionError(f"sites {neighbors[collided].tolist()} are degenerate with pair {pair}")
    return v_ij, neighbors, detunings


def leakage_infidelity(
    table: SiteTable,
    pair: tuple,
    params: Optional[RydbergParams] = None,
    omega: Optional[float] = None,
    shell: int = 8,
) -> Leakage:
    """
    Σ_k (Ω²/4) / (V_ij - V_ik)² over the `shell` sites nearest to the walker at pair[0].
    The quantization axis lies along R_ij.
    """
    params = RydbergParams() if params is None else params
    omega = params.omega if omega is None else omega
    _, neighbors, detunings = _pair_detunings(table, pair, params, shell)
    infidelity = float(np.sum((omega**2 / 4) / detunings**2))
    return Leakage(infidelity, tuple(neighbors.tolist()), tuple(detunings.tolist()))


def numerical_leakage(
    table: SiteTable,
    pair: tuple,
    params: Optional[RydbergParams] = None,
    omega: Optional[float] = None,
    shell: int = 8,
) -> float:
    """
    1 - |⟨G|v⟩|² for the dressed ground state v of the star Hamiltonian that couples
    the walker state to every unwanted excitation with Ω/2.
    """
    params = RydbergParams() if params is None else params
    omega = params.omega if omega is None else omega
    _, _, detunings = _pair_detunings(table, pair, params, shell)
    size = len(detunings) + 1
    h = np.zeros((size, size))
    h[0, 1:] = h[1:, 0] = omega / 2
    h[np.arange(1, size), np.arange(1, size)] = -detunings
    _, vectors = eigh(h)
    overlaps = np.abs(vectors[0]) ** 2
    return float(1 - overlaps.max())


def contrast_lattice(contrast: float, a_x0: float = 1.0, a_other: float = 1.0, cells: tuple = (4, 3, 3)) -> SiteTable:
    """
    3D dimer lattice with a_x1 = a_x0 (1 - contrast).
    """
    a_x1 = a_x0 * (1 - contrast)
    if a_x1 <= 0:
        raise ValueError(f"contrast should be below 1, but got {contrast}")
    return build_lattice(LatticeSpec(3, cells, (a_x0, a_other, a_other), (a_x1, a_other, a_other), DIMER))


def target_pair(table: SiteTable, family: str = "x1") -> tuple:
    center = tuple(n // 2 - 1 if axis == 0 else n // 2 for axis, n in enumerate(table.spec.cells))
    if family == "x0":
        return table.index_of(center, (ODD,)), table.index_of(center, (EVEN,))
    elif family == "x1":
        right = (center[0] + 1, *center[1:])
        return table.index_of(center, (EVEN,)), table.index_of(right, (ODD,))
    raise ValueError(f"family should be either 'x0' or 'x1', but got {family}")


@dataclass(frozen=True)
class ContrastRequirement:
    contrast: float
    omega_over_delta: float
    collision: bool = False


def contrast_requirement(
    fidelity: float,
    contrast: float,
    params: Optional[RydbergParams] = None,
    family: str = "x1",
    a_x0: float = 1.0,
    shell: int = 8,
) -> ContrastRequirement:
    """
    The largest Ω/|Δ| that keeps the leakage of a `family` pair below 1 - fidelity.
    A neighbor degenerate with the target forces Ω/|Δ| to zero.
    """
    if not 0 < fidelity < 1:
        raise ValueError(f"fidelity should be in (0, 1), but got {fidelity}")
    params = RydbergParams() if params is None else params
    table = contrast_lattice(contrast, a_x0)
    pair = target_pair(table, family)
    try:
        v_ij, _, detunings = _pair_detunings(table, pair, params, shell)
    except ResonantCollisionError:
        return ContrastRequirement(contrast, 0.0, collision=True)
    if not len(detunings):
        return ContrastRequirement(contrast, np.inf)

    def excess(ratio: float) -> float:
        omega = ratio * abs(v_ij)
        return float(np.sum((omega**2 / 4) / detunings**2)) - (1 - fidelity)

    upper = 1.0
    while excess(upper) < 0:
        upper *= 2
        if upper > 1e12:
            raise UnreachableFidelityError(f"fidelity {fidelity} at contrast {contrast}")
    return ContrastRequirement(contrast, brentq(excess, 0.0, upper, xtol=1e-14))


def contrast_curve(
    contrasts: np.ndarray, fidelity: float = 0.99, family: str = "x1", params: Optional[RydbergParams] = None
) -> pd.DataFrame:
    """
    required Ω/Δ per contrast; `dip` marks local minima where a neighbor crosses resonance.
    """
    rows = [contrast_requirement(fidelity, float(c), params, family) for c in contrasts]
    df = pd.DataFrame([{"contrast": r.contrast, "omega_over_delta": r.omega_over_delta, "collision": r.collision} for r in rows])
    values = df["omega_over_delta"].to_numpy()
    dip = np.zeros(len(values), dtype=bool)
    dip[1:-1] = (values[1:-1] < values[:-2]) & (values[1:-1] < values[2:])
    df["dip"] = dip
    return df


# --- error budget --- #
def _hadamard_setup(params: RydbergParams) -> tuple[RydbergParams, float, float]:
    v = -params.delta
    resonant = replace(params, delta=-v)
    return resonant, v, hop_detuning(math.pi / 4, resonant, v)


def laser_noise_ps(params: Optional[RydbergParams] = None, gamma_la: Optional[float] = None, integrator: str = "expm") -> float:
    """
    1 - ⟨ψ|ρ|ψ⟩ after a Hadamard step with dephasing √γ_la on the s state of either atom.
    """
    params = RydbergParams() if params is None else params
    gamma_la = params.gamma_la if gamma_la is None else gamma_la  # kHz
    resonant, v, offset = _hadamard_setup(params)
    ideal = pulse_dynamics(resonant, v, offset, integrator=integrator)
    h = pulse_hamiltonian(resonant, v, offset)
    rate = 2 * np.pi * gamma_la / 1000  # rad/μs
    collapse = []
    for s in (PS, SP):
        op = np.zeros((4, 4))
        op[s, s] = math.sqrt(rate)
        collapse.append(op)
    rho0 = np.zeros((4, 4), dtype=complex)
    rho0[PG, PG] = 1.0
    rho = fetch_integrator(integrator).lindblad(h, collapse, rho0, ideal.duration)
    return float(max(0.0, 1 - np.real(ideal.state.conj() @ rho @ ideal.state)))


def detuning_error_ps(
    params: Optional[RydbergParams] = None,
    error: float = 0.0,
    distribution: str = "uniform",
    n_samples: int = 41,
    integrator: str = "expm",
    seed: Optional[int] = None,
) -> float:
    """
    1 - ⟨ψ|ρ̄|ψ⟩ with ρ̄ the average over detuning errors of half-width (or σ) `error`, MHz.
    The average runs over a fixed grid, or over `n_samples` random draws when a seed is given.
    """
    params = RydbergParams() if params is None else params
    if error < 0:
        raise ValueError(f"error should be non-negative, but got {error}")
    if distribution not in ("uniform", "gaussian"):
        raise ValueError(f"distribution should be either 'uniform' or 'gaussian', but got {distribution}")
    if error == 0:
        return 0.0
    resonant, v, offset = _hadamard_setup(params)
    ideal = pulse_dynamics(resonant, v, offset, integrator=integrator)
    if seed is not None:
        rng = np.random.default_rng(seed)
        shifts = rng.uniform(-error, error, n_samples) if distribution == "uniform" else rng.normal(0.0, error, n_samples)
        weights = np.full(n_samples, 1.0 / n_samples)
    elif distribution == "uniform":
        shifts = np.linspace(-error, error, n_samples)
        weights = np.full(n_samples, 1.0 / n_samples)
    else:
        shifts = np.linspace(-3 * error, 3 * error, n_samples)
        weights = np.exp(-0.5 * (shifts / error) ** 2)
        weights /= weights.sum()
    overlaps = [
        abs(ideal.state.conj() @ pulse_dynamics(resonant, v, offset + shift, integrator=integrator, duration=ideal.duration).state) ** 2
        for shift in shifts
    ]
    return float(max(0.0, 1 - np.dot(weights, overlaps)))


def relative_error(ratio: float, params: Optional[RydbergParams] = None) -> float:
    """
    Detuning half-width in MHz of a relative error E/Ω.
    E is taken on the angular scale of the pulse, so the half-width is ratio·Ω/2π.
    """
    params = RydbergParams() if params is None else params
    if ratio < 0:
        raise ValueError(f"ratio should be non-negative, but got {ratio}")
    return ratio * params.omega / (2 * np.pi)


def detuning_error_curve(
    ratios: np.ndarray,
    params: Optional[RydbergParams] = None,
    distribution: str = "uniform",
    integrator: str = "expm",
    seed: Optional[int] = None,
) -> pd.DataFrame:
    """
    P_s against the relative detuning error E/Ω.
    """
    params = RydbergParams() if params is None else params
    rows = []
    for ratio in ratios:
        error = relative_error(float(ratio), params)
        p_s = detuning_error_ps(params, error, distribution, integrator=integrator, seed=seed)
        rows.append({"ratio": float(ratio), "error_mhz": error, "p_s": p_s})
    return pd.DataFrame(rows)


def laser_noise_curve(ratios: np.ndarray, params: Optional[RydbergParams] = None, integrator: str = "expm") -> pd.DataFrame:
    """
    P_s against the relative laser linewidth γ_la/Ω.
    """
    params = RydbergParams() if params is None else params
    rows = []
    for ratio in ratios:
        gamma_la = float(ratio) * params.omega * 1000  # kHz
        rows.append({"ratio": float(ratio), "gamma_la_khz": gamma_la, "p_s": laser_noise_ps(params, gamma_la, integrator)})
    return pd.DataFrame(rows)


def confinement_ratio(params: Optional[RydbergParams] = None) -> float:
    """
    E_V/Ω from the motional spread σ of both atoms: V = C3/R³ averaged over a relative
    coordinate of variance 2σ² along the pair axis shifts by 12|V|(σ/a)².
    """
    params = RydbergParams() if params is None else params
    v = abs(exchange_strength(params.a_target, 0.0, params=params))
    sigma = params.spread / 1000  # μm
    return 12 * v * (sigma / params.a_target) ** 2 / params.omega


def doppler_velocity(params: Optional[RydbergParams] = None) -> float:
    """
    v = √(ħω_tr / 2m) in m/s.
    """
    params = RydbergParams() if params is None else params
    omega_tr = 2 * np.pi * params.trap_frequency * 1e3
    mass = params.mass_amu * constants.physical_constants["atomic mass constant"][0]
    return math.sqrt(constants.hbar * omega_tr / (2 * mass))


def doppler_shift(params: Optional[RydbergParams] = None) -> float:
    """
    k_eff v / 2π in MHz for counter-propagating legs.
    """
    params = RydbergParams() if params is None else params
    first, second = params.wavelengths
    k_over_2pi = abs(1 / (first * 1e-9) - 1 / (second * 1e-9))
    return k_over_2pi * doppler_velocity(params) / 1e6


def error_budget(params: Optional[RydbergParams] = None, integrator: str = "expm", seed: Optional[int] = None) -> list[dict]:
    """
    One row per dephasing source: {source, inputs, p_s, quoted}.
    The detuning rows go through relative_error; `seed` switches their average to random draws.
    """
    params = RydbergParams() if params is None else params
    rows = []
    rows.append({
        "source": "laser_noise",
        "inputs": {"gamma_la_khz": params.gamma_la, "omega_mhz": params.omega},
        "p_s": laser_noise_ps(params, integrator=integrator),
    })
    scattering = math.pi * params.gamma_p / (2 * params.delta_p) * (params.omega_1 / params.omega_2 + params.omega_2 / params.omega_1)
    if not math.isclose(scattering, QUOTED_PS["intermediate_scattering"], rel_tol=0.5):
        warnings.warn(
            f"intermediate scattering formula gives {scattering:.3g}, quoted {QUOTED_PS['intermediate_scattering']:.3g}"
        )
    rows.append({
        "source": "intermediate_scattering",
        "inputs": {"gamma_p": params.gamma_p, "delta_p": params.delta_p, "omega_1": params.omega_1, "omega_2": params.omega_2},
        "p_s": scattering,
    })
    ratio = confinement_ratio(params)
    rows.append({
        "source": "confinement",
        "inputs": {"spread_nm": params.spread, "E_V_over_omega": ratio, "quoted_E_V_over_omega": QUOTED_CONFINEMENT_RATIO},
        "p_s": detuning_error_ps(params, relative_error(ratio, params), integrator=integrator, seed=seed),
    })
    shift_ratio = doppler_shift(params) / params.omega
    rows.append({
        "source": "doppler",
        "inputs": {"velocity_m_per_s": doppler_velocity(params), "shift_over_omega": shift_ratio},
        "p_s": detuning_error_ps(params, relative_error(shift_ratio, params), integrator=integrator, seed=seed),
    })
    rows.append({
        "source": "trap_scattering",
        "inputs": {"step_time_us": params.step_time, "coherence_time_s": params.coherence_time},
        "p_s": params.step_time * 1e-6 / params.coherence_time,
    })
    for row in rows:
        row["quoted"] = QUOTED_PS[row["source"]]
    return rows


# --- step budget --- #
@dataclass(frozen=True)
class StepBudget:
    loss_per_step: float
    steps: int
    survival: float
    max_steps: int  # steps before survival drops below the target
    headline: dict


def step_budget(
    params: Optional[RydbergParams] = None,
    steps: Optional[int] = None,
    loss_model: str = "calibrated",
    population: float = 1.0,
    target_survival: float = HEADLINE_SURVIVAL,
    init_detection: bool = False,
    loss_per_step: Optional[float] = None,
) -> StepBudget:
    """
    survival = exp(-loss_per_step × steps).
    "calibrated" fixes the loss so that survival is 40% after 210(n/70) steps;
    "lifetime" uses step_time / τ × the Rydberg-excited population.
    """
    params = RydbergParams() if params is None else params
    headline_steps = round(HEADLINE_STEPS * params.n / 70)
    steps = headline_steps if steps is None else steps
    if loss_per_step is None:
        if loss_model == "calibrated":
            loss_per_step = -math.log(HEADLINE_SURVIVAL) / headline_steps
        elif loss_model == "lifetime":
            if params.lifetime_exponent < 0:
                warnings.warn(
                    f"τ ∝ n^{params.lifetime_exponent:g} shrinks with n, so the step number cannot grow with n"
                )
            loss_per_step = params.step_time / params.tau * population
        else:
            raise ValueError(f"loss_model should be either 'calibrated' or 'lifetime', but got {loss_model}")
    survival = math.exp(-loss_per_step * steps)
    scale = INIT_FIDELITY * DETECTION_FIDELITY if init_detection else 1.0
    survival *= scale
    if loss_per_step == 0:
        max_steps = np.iinfo(np.int64).max if scale >= target_survival else 0
    else:
        max_steps = max(0, math.floor(math.log(scale / target_survival) / loss_per_step))
    headline = {"steps": headline_steps, "survival": HEADLINE_SURVIVAL, "fidelity": HEADLINE_FIDELITY}
    return StepBudget(loss_per_step, steps, survival, int(max_steps), headline)
