"""
Site tables and coupling tessellations of the dual-constant lattices.
"""
from dataclasses import dataclass, field
from typing import Optional
import numpy as np
import pandas as pd
from rydwalk.errors import LatticeSpecError, TessellationError, SeamError
from rydwalk.protocols import (
    AXES,
    ODD,
    EVEN,
    DIMER,
    TETRAMER,
    OCTAMER,
    SPLIT_AXES,
    OPEN,
    PERIODIC,
    MOEBIUS_X,
    MOEBIUS_Y,
    KLEIN,
    SEAMS,
    KIND_ALIASES,
)


@dataclass(frozen=True)
class LatticeSpec:
    """
    dimension, cells per axis, intra (a0) and inter (a1) constants per axis in μm.
    Axes that are not split by the unit kind use a0 as their single constant.
    """

    dimension: int
    cells: tuple
    a0: tuple
    a1: tuple
    unit_kind: str = DIMER

    @classmethod
    def chain(cls, cells: int, a0: float = 1.0, a1: float = 2.0) -> "LatticeSpec":
        return cls(1, (cells,), (a0,), (a1,), DIMER)

    @property
    def split_axes(self) -> tuple:
        return SPLIT_AXES[self.unit_kind]

    @property
    def unit_size(self) -> int:
        return 2 ** len(self.split_axes)

    @property
    def n_sites(self) -> int:
        return self.unit_size * int(np.prod(self.cells))


@dataclass(frozen=True)
class BoundaryTopology:
    """
    one rule per axis ({open, periodic}) and an optional seam identification.
    """

    rules: tuple
    seam: Optional[str] = None

    @classmethod
    def open(cls, dimension: int) -> "BoundaryTopology":
        return cls((OPEN,) * dimension)

    @classmethod
    def periodic(cls, dimension: int) -> "BoundaryTopology":
        return cls((PERIODIC,) * dimension)

    @classmethod
    def torus(cls, dimension: int = 2) -> "BoundaryTopology":
        return cls.periodic(dimension)

    @classmethod
    def moebius(cls, axis: str = "x", dimension: int = 2) -> "BoundaryTopology":
        return cls((OPEN,) * dimension, MOEBIUS_X if axis == "x" else MOEBIUS_Y)

    @classmethod
    def klein(cls, dimension: int = 2) -> "BoundaryTopology":
        """Twisted x seam and straight y seam. Two twisted seams would make a projective plane."""
        return cls((OPEN,) * dimension, KLEIN)

    def __post_init__(self):
        if any(rule not in (OPEN, PERIODIC) for rule in self.rules):
            raise ValueError(f"rules should be one of ({OPEN}, {PERIODIC}), but got {self.rules}")
        if self.seam is not None and self.seam not in SEAMS:
            raise ValueError(f"seam should be one of {SEAMS}, but got {self.seam}")

    def is_periodic(self, axis: int) -> bool:
        return axis < len(self.rules) and self.rules[axis] == PERIODIC


@dataclass(frozen=True, eq=False)
class PairSet:
    """
    A disjoint set of site-index pairs, i.e. one coupling tessellation.
    """

    pairs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int))

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=int).reshape(-1, 2)
        object.__setattr__(self, "pairs", pairs)
        sites = pairs.ravel()
        if len(np.unique(sites)) != len(sites):
            raise TessellationError(f"pairs overlap: {pairs.tolist()}")

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(map(tuple, self.pairs.tolist()))

    def as_set(self) -> set:
        """
        order-insensitive view, handy for comparisons.
        """
        return {frozenset(pair) for pair in self}


@dataclass(frozen=True, eq=False)
class SiteTable:
    spec: LatticeSpec
    positions: np.ndarray  # (N, 3) μm
    parities: np.ndarray  # (N, n_split), ODD or EVEN
    cells: np.ndarray  # (N, dimension)
    grid: np.ndarray  # (N, dimension), column index of the site along each axis

    @property
    def n_sites(self) -> int:
        return len(self.positions)

    def index_of(self, cell: tuple, parity: tuple = ()) -> int:
        """
        site index of the given cell coordinate and parity labels (odd=0, even=1).
        """
        cell_index = int(np.ravel_multi_index(tuple(cell), self.spec.cells))
        parity_index = (
            int(np.ravel_multi_index(tuple(parity), (2,) * len(parity))) if parity else 0
        )
        return cell_index * self.spec.unit_size + parity_index

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(
            {
                "index": np.arange(self.n_sites),
                "x": self.positions[:, 0],
                "y": self.positions[:, 1],
                "z": self.positions[:, 2],
            }
        )
        for col, axis in enumerate(self.spec.split_axes):
            df[f"parity_{AXES[axis]}"] = np.where(self.parities[:, col] == ODD, "o", "e")
        return df


def build_lattice(spec: LatticeSpec) -> SiteTable:
    """
    Enumerate the sites row-major over cell coordinates, parity innermost.
    """
    dim = spec.dimension
    if dim not in (1, 2, 3):
        raise LatticeSpecError(f"dimension should be one of (1, 2, 3), but got {dim}")
    if spec.unit_kind not in SPLIT_AXES:
        raise LatticeSpecError(f"unknown unit kind: {spec.unit_kind}")
    if any(axis >= dim for axis in spec.split_axes):
        raise LatticeSpecError(f"{spec.unit_kind} does not fit in {dim} dimensions")
    for name in ("cells", "a0", "a1"):
        if len(getattr(spec, name)) != dim:
            raise LatticeSpecError(f"{name} should have {dim} entries, but got {getattr(spec, name)}")
    if any(int(n) <= 0 for n in spec.cells):
        raise LatticeSpecError(f"every axis needs at least one cell, but got {spec.cells}")
    if any(a <= 0 for a in spec.a0) or any(a <= 0 for a in spec.a1):
        raise LatticeSpecError(f"lattice constants should be positive, but got a0={spec.a0}, a1={spec.a1}")

    n_split = len(spec.split_axes)
    cells = np.array(list(np.ndindex(*spec.cells)), dtype=int).reshape(-1, dim)
    parities = np.array(list(np.ndindex(*((2,) * n_split))), dtype=int).reshape(-1, n_split)
    # parity innermost
    cell_rows = np.repeat(cells, len(parities), axis=0)
    parity_rows = np.tile(parities, (len(cells), 1))

    positions = np.zeros((len(cell_rows), 3))
    grid = np.zeros_like(cell_rows)
    for axis in range(dim):
        if axis in spec.split_axes:
            parity = parity_rows[:, spec.split_axes.index(axis)]
            positions[:, axis] = cell_rows[:, axis] * (spec.a0[axis] + spec.a1[axis]) + parity * spec.a0[axis]
            grid[:, axis] = 2 * cell_rows[:, axis] + parity
        else:
            positions[:, axis] = cell_rows[:, axis] * spec.a0[axis]
            grid[:, axis] = cell_rows[:, axis]
    return SiteTable(spec, positions, parity_rows, cell_rows, grid)


# --- tessellations --- #
def _resolve_kind(table: SiteTable, kind: str) -> list[tuple[int, int, tuple]]:
    """
    kind -> list of (axis-of-parity, from parity, to parity, cell offset) rules.
    """
    spec = table.spec
    kind = KIND_ALIASES.get(kind, kind)
    dim = spec.dimension
    if len(kind) < 2 or kind[-1] not in "01" or any(a not in AXES[:dim] for a in kind[:-1]):
        raise TessellationError(f"{kind} is not a tessellation of a {dim}D lattice")
    family, sub = kind[:-1], int(kind[-1])
    axes = [AXES.index(a) for a in family]
    if spec.unit_kind == DIMER:
        # the diagonal families pair odd with even along the x-split, one cell down in y and z
        if axes[0] != 0 or len(set(axes)) != len(axes):
            raise TessellationError(f"{kind} is not defined on a lattice of dimers")
        offset = np.zeros(dim, dtype=int)
        for axis in axes[1:]:
            offset[axis] = -1
        if sub == 0:
            return [(0, ODD, EVEN, tuple(offset))]
        offset[0] = 1
        return [(0, EVEN, ODD, tuple(offset))]
    # Kronecker lattices split every axis; only single-axis families exist
    if len(axes) != 1 or axes[0] not in spec.split_axes:
        raise TessellationError(f"{kind} is not defined on a lattice of {spec.unit_kind}s")
    axis = axes[0]
    offset = np.zeros(dim, dtype=int)
    if sub == 0:
        return [(spec.split_axes.index(axis), ODD, EVEN, tuple(offset))]
    offset[axis] = 1
    return [(spec.split_axes.index(axis), EVEN, ODD, tuple(offset))]


def tessellation_pairs(
    table: SiteTable, kind: str, topology: Optional[BoundaryTopology] = None
) -> PairSet:
    """
    The matching of one tessellation kind, e.g. H0/x0 (intra-dimer), H1/x1 (inter-dimer),
    xy0, xy1, xz0, xz1 on dimer lattices, y0, y1, z0, z1 on Kronecker lattices.
    Open axes leave end sites unpaired; periodic axes wrap.
    """
    spec = table.spec
    topology = topology or BoundaryTopology.open(spec.dimension)
    cells = np.asarray(spec.cells)
    pairs = []
    for parity_col, source, target, offset in _resolve_kind(table, kind):
        sources = np.flatnonzero(table.parities[:, parity_col] == source)
        target_cells = table.cells[sources] + np.asarray(offset)
        keep = np.ones(len(sources), dtype=bool)
        for axis in range(spec.dimension):
            outside = (target_cells[:, axis] < 0) | (target_cells[:, axis] >= cells[axis])
            if topology.is_periodic(axis):
                target_cells[:, axis] %= cells[axis]
            else:
                keep &= ~outside
        sources, target_cells = sources[keep], target_cells[keep]
        target_parities = table.parities[sources].copy()
        target_parities[:, parity_col] = target
        cell_index = np.ravel_multi_index(target_cells.T, spec.cells)
        parity_index = (
            np.ravel_multi_index(target_parities.T, (2,) * target_parities.shape[1])
            if target_parities.shape[1]
            else 0
        )
        targets = cell_index * spec.unit_size + parity_index
        pairs.append(np.stack([sources, targets], axis=1))
    return PairSet(np.concatenate(pairs) if pairs else np.zeros((0, 2), dtype=int))


def seam_pairs(table: SiteTable, topology: BoundaryTopology, axis: str = "x") -> PairSet:
    """
    Long-range boundary pairs joined during the boundary step across `axis`.
    A twisted seam joins (last, j) with (first, L-1-j); a straight one joins (last, j) with (first, j).
    """
    spec = table.spec
    if spec.dimension == 1:
        raise SeamError("a 1D lattice has no seam")
    a = AXES.index(axis)
    if a >= spec.dimension:
        raise SeamError(f"axis {axis} does not exist on a {spec.dimension}D lattice")
    twisted = (topology.seam, axis) in {(MOEBIUS_X, "x"), (MOEBIUS_Y, "y"), (KLEIN, "x")}
    straight = topology.is_periodic(a) or (topology.seam, axis) == (KLEIN, "y")
    if not (twisted or straight):
        return PairSet()
    grid = table.grid
    extent = grid.max(axis=0) + 1
    lookup = {tuple(row): index for index, row in enumerate(grid.tolist())}
    mirror = 1 if a == 0 else 0
    pairs = []
    for index in np.flatnonzero(grid[:, a] == extent[a] - 1):
        partner = grid[index].copy()
        partner[a] = 0
        if twisted:
            partner[mirror] = extent[mirror] - 1 - partner[mirror]
        pairs.append((int(index), lookup[tuple(partner.tolist())]))
    return PairSet(np.array(pairs, dtype=int).reshape(-1, 2))


def nearest_sites(table: SiteTable, site: int, count: int, exclude: tuple = ()) -> np.ndarray:
    """
    the `count` sites closest to `site`, ties (to 1e-9 μm) broken by index.
    """
    distances = np.round(np.linalg.norm(table.positions - table.positions[site], axis=1), 9)
    order = np.lexsort((np.arange(table.n_sites), distances))
    skip = {site, *exclude}
    return np.array([i for i in order if i not in skip][:count], dtype=int)
