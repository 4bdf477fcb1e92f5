"""
rydwalk run | bands | phase-diagram | error-budget | fidelity | micro | lattice-dump
"""
import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional
import numpy as np
import pandas as pd
from rydwalk import __version__ as VERSION
from rydwalk.errors import (
    ConfigError,
    DensityMatrixError,
    FitFailure,
    GapClosedError,
    IntegrationError,
    LatticeSpecError,
    NumericalToleranceError,
    ProgramError,
    ResonantCollisionError,
    SeamError,
    TessellationError,
    UnreachableFidelityError,
)
from rydwalk.experiments import Experiment
from rydwalk.fetchers import fetch_config, fetch_params, fetch_runtime
from rydwalk.lattice import LatticeSpec, build_lattice
from rydwalk.microphysics import contrast_curve, error_budget, exchange_profile, site_selectivity_scan
from rydwalk.protocols import DIMER
from rydwalk.topology import PROGRAM_LATTICES, band_structure, grid_angles, phase_diagram, quasienergy

FLOAT_FORMAT = "%.17g"
CONFIG_ERRORS = (ConfigError, ValueError, LatticeSpecError, ProgramError, TessellationError, SeamError)
NUMERICAL_ERRORS = (
    NumericalToleranceError,
    IntegrationError,
    FitFailure,
    DensityMatrixError,
    GapClosedError,
    ResonantCollisionError,
    UnreachableFidelityError,
)


@dataclass
class RunManifest:
    command: str
    config_path: str
    config_hash: str
    output_dir: str
    seed: Optional[int]
    workers: int
    version: str = VERSION
    stage_seconds: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def write(self) -> Path:
        path = Path(self.output_dir) / f"manifest_{self.command}.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True))
        return path


def config_hash(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def _write_csv(df: pd.DataFrame, path: Path, manifest: RunManifest) -> Path:
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    manifest.outputs.append(str(path))
    return path


def _manifest(args, payload: bytes) -> RunManifest:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return RunManifest(args.command, str(getattr(args, "config", "") or ""), config_hash(payload), str(out), args.seed, args.workers)


def _flags_payload(args) -> bytes:
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "workers")}
    return json.dumps(flags, sort_keys=True, default=str).encode()


# --- subcommands --- #
def cmd_run(args) -> int:
    payload = Path(args.config).read_bytes() if Path(args.config).exists() else b""
    config = fetch_config(args.config)
    experiment = Experiment(strict=args.strict)
    manifest = _manifest(args, payload)
    start = time.perf_counter()
    experiment.setup().build(config)
    manifest.stage_seconds["build"] = time.perf_counter() - start
    for stage in ("validate", "prepare", "evolve", "analyze"):
        start = time.perf_counter()
        getattr(experiment, stage)()
        manifest.stage_seconds[stage] = time.perf_counter() - start
    manifest.outputs.extend(str(path) for path in experiment.export(args.out))
    manifest.write()
    return 0


def cmd_bands(args) -> int:
    manifest = _manifest(args, _flags_payload(args))
    if args.protocol in ("ssh", "ssh_symmetric_1", "ssh_plain"):
        ks = np.linspace(-np.pi, np.pi, args.grid, endpoint=False)
        rows = []
        for theta1 in args.theta1:
            energies = quasienergy(ks, args.theta0, theta1)
            rows.extend({"theta1": theta1, "k": k, "E_plus": e, "E_minus": -e} for k, e in zip(ks, energies))
        _write_csv(pd.DataFrame(rows), Path(args.out) / "bands.csv", manifest)
    else:
        frames = []
        for theta1 in args.theta1:
            df = band_structure(args.protocol, grid_angles(args.theta0, theta1), args.k_points)
            df.insert(0, "theta1", theta1)
            frames.append(df)
        _write_csv(pd.concat(frames, ignore_index=True), Path(args.out) / "bands.csv", manifest)
    manifest.write()
    return 0


def cmd_phase_diagram(args) -> int:
    if args.grid < 2:
        raise ValueError(f"grid should be at least 2, but got {args.grid}")
    manifest = _manifest(args, _flags_payload(args))
    # open interval keeps the trivial θ = 0 and θ = π lines out of the grid
    thetas = np.linspace(0, np.pi, args.grid + 2)[1:-1]
    start = time.perf_counter()
    df = phase_diagram(thetas, thetas, args.protocol, k_points=args.k_points, n_jobs=args.workers)
    manifest.stage_seconds["phase_diagram"] = time.perf_counter() - start
    _write_csv(df, Path(args.out) / f"phase_diagram_{args.protocol}.csv", manifest)
    manifest.write()
    return 0


def cmd_error_budget(args) -> int:
    manifest = _manifest(args, _flags_payload(args))
    params = fetch_params(**_overrides(args))
    rows = error_budget(params, integrator=args.integrator, seed=args.seed)
    path = Path(args.out) / "error_budget.json"
    path.write_text(json.dumps(rows, indent=2))
    manifest.outputs.append(str(path))
    manifest.write()
    return 0


def cmd_fidelity(args) -> int:
    if not 0 < args.fidelity < 1:
        raise ValueError(f"fidelity should be in (0, 1), but got {args.fidelity}")
    manifest = _manifest(args, _flags_payload(args))
    contrasts = np.linspace(args.contrast_min, args.contrast_max, args.grid)
    df = contrast_curve(contrasts, args.fidelity, args.family, fetch_params(**_overrides(args)))
    _write_csv(df, Path(args.out) / f"fidelity_{args.family}.csv", manifest)
    manifest.write()
    return 0


def cmd_micro(args) -> int:
    manifest = _manifest(args, _flags_payload(args))
    params = fetch_params(**_overrides(args))
    spec = LatticeSpec.chain(args.cells, a0=params.a_target, a1=params.a_target)
    table = build_lattice(spec)
    scan = site_selectivity_scan(table, 0, params, n_jobs=args.workers)
    _write_csv(scan, Path(args.out) / "site_selectivity.csv", manifest)
    profile = exchange_profile(np.linspace(0, np.pi, args.grid), r=params.a_target)
    _write_csv(profile, Path(args.out) / "exchange_profile.csv", manifest)
    manifest.write()
    return 0


def cmd_lattice_dump(args) -> int:
    if args.config:
        payload = Path(args.config).read_bytes() if Path(args.config).exists() else b""
        spec = fetch_config(args.config).lattice
    else:
        payload = _flags_payload(args)
        dimension = len(args.cells)
        spec = LatticeSpec(dimension, tuple(args.cells), (args.a0,) * dimension, (args.a1,) * dimension, args.unit_kind)
    manifest = _manifest(args, payload)
    _write_csv(build_lattice(spec).to_frame(), Path(args.out) / "lattice.csv", manifest)
    manifest.write()
    return 0


def _overrides(args) -> dict:
    overrides = {}
    for name in ("n", "omega", "delta", "gamma_la"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return overrides


def _add_params(parser: argparse.ArgumentParser):
    parser.add_argument("--n", type=int, default=None, help="principal quantum number")
    parser.add_argument("--omega", type=float, default=None, help="Ω/2π in MHz")
    parser.add_argument("--delta", type=float, default=None, help="Δ/2π in MHz")
    parser.add_argument("--gamma-la", dest="gamma_la", type=float, default=None, help="laser linewidth in kHz")


def build_parser() -> argparse.ArgumentParser:
    runtime = fetch_runtime()
    parser = argparse.ArgumentParser(prog="rydwalk", description="Rydberg discrete-time quantum walks")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=runtime["out"])
    common.add_argument("--workers", type=int, default=runtime["workers"])
    common.add_argument("--seed", type=int, default=runtime["seed"], help="draw the detuning-error average at random")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run an experiment config")
    run.add_argument("--config", required=True)
    run.add_argument("--strict", action="store_true", help="fail on phase-border angles")
    run.set_defaults(func=cmd_run)

    bands = sub.add_parser("bands", parents=[common], help="quasi-energy bands")
    bands.add_argument("--protocol", default="ssh", choices=tuple(PROGRAM_LATTICES))
    bands.add_argument("--theta0", type=float, default=math.pi / 4)
    bands.add_argument("--theta1", type=float, nargs="+", default=[math.pi / 8, math.pi / 4, 3 * math.pi / 8])
    bands.add_argument("--grid", type=int, default=256, help="k-points of the closed-form chain bands")
    bands.add_argument("--k-points", dest="k_points", type=int, default=None, help="k-points per axis of any other walk")
    bands.set_defaults(func=cmd_bands)

    phases = sub.add_parser("phase-diagram", parents=[common], help="invariants and gaps over (θ0, θ1)")
    phases.add_argument("--protocol", default="ssh", choices=tuple(PROGRAM_LATTICES))
    phases.add_argument("--grid", type=int, default=50)
    phases.add_argument("--k-points", dest="k_points", type=int, default=None)
    phases.set_defaults(func=cmd_phase_diagram)

    budget = sub.add_parser("error-budget", parents=[common], help="per-step dephasing sources")
    budget.add_argument("--integrator", default="expm", choices=("expm", "ode"))
    _add_params(budget)
    budget.set_defaults(func=cmd_error_budget)

    fidelity = sub.add_parser("fidelity", parents=[common], help="required Ω/Δ against lattice contrast")
    fidelity.add_argument("--fidelity", type=float, default=0.99)
    fidelity.add_argument("--family", default="x1", choices=("x0", "x1"))
    fidelity.add_argument("--contrast-min", dest="contrast_min", type=float, default=-2.0)
    fidelity.add_argument("--contrast-max", dest="contrast_max", type=float, default=0.5)
    fidelity.add_argument("--grid", type=int, default=101)
    _add_params(fidelity)
    fidelity.set_defaults(func=cmd_fidelity)

    micro = sub.add_parser("micro", parents=[common], help="site selectivity and exchange profile")
    micro.add_argument("--cells", type=int, default=4)
    micro.add_argument("--grid", type=int, default=91)
    _add_params(micro)
    micro.set_defaults(func=cmd_micro)

    dump = sub.add_parser("lattice-dump", parents=[common], help="site table as CSV")
    dump.add_argument("--config", default=None)
    dump.add_argument("--cells", type=int, nargs="+", default=[4])
    dump.add_argument("--a0", type=float, default=1.0)
    dump.add_argument("--a1", type=float, default=1.0)
    dump.add_argument("--unit-kind", dest="unit_kind", default=DIMER)
    dump.set_defaults(func=cmd_lattice_dump)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        print(e, file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except CONFIG_ERRORS as e:
        print(e, file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as e:
        print(e, file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
