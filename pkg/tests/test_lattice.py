import numpy as np
import pytest
from rydwalk.errors import LatticeSpecError, SeamError, TessellationError
from rydwalk.lattice import (
    BoundaryTopology,
    LatticeSpec,
    PairSet,
    build_lattice,
    nearest_sites,
    seam_pairs,
    tessellation_pairs,
)
from rydwalk.protocols import EVEN, ODD, TETRAMER


@pytest.fixture(scope="module")
def chain():
    return build_lattice(LatticeSpec.chain(3, a0=1.0, a1=2.0))


@pytest.fixture(scope="module")
def tetramers():
    return build_lattice(LatticeSpec(2, (2, 2), (1.0, 1.0), (2.0, 2.0), TETRAMER))


@pytest.fixture(scope="module")
def dimers_2d():
    return build_lattice(LatticeSpec(2, (2, 2), (1.0, 1.0), (2.0, 1.0)))


def test_chain_positions(chain):
    assert chain.n_sites == 6
    assert chain.positions[:, 0].tolist() == [0.0, 1.0, 3.0, 4.0, 6.0, 7.0]
    assert chain.parities[:, 0].tolist() == [ODD, EVEN] * 3
    assert chain.grid[:, 0].tolist() == list(range(6))


def test_index_of(chain, tetramers):
    assert chain.index_of((1,), (EVEN,)) == 3
    assert tetramers.index_of((1, 0), (EVEN, ODD)) == 10


def test_to_frame(chain):
    df = chain.to_frame()
    assert list(df.columns) == ["index", "x", "y", "z", "parity_x"]
    assert df["parity_x"].tolist() == ["o", "e"] * 3


def test_intra_and_inter_pairs(chain):
    assert tessellation_pairs(chain, "H0").as_set() == {frozenset(p) for p in [(0, 1), (2, 3), (4, 5)]}
    assert tessellation_pairs(chain, "x1").as_set() == {frozenset(p) for p in [(1, 2), (3, 4)]}


def test_periodic_wraps(chain):
    pairs = tessellation_pairs(chain, "x1", BoundaryTopology.periodic(1))
    assert pairs.as_set() == {frozenset(p) for p in [(1, 2), (3, 4), (5, 0)]}


def test_diagonal_pairs(dimers_2d):
    # odd (i, j) with even (i, j - 1); even (i, j) with odd (i + 1, j - 1)
    assert tessellation_pairs(dimers_2d, "xy0").as_set() == {frozenset((2, 1)), frozenset((6, 5))}
    assert tessellation_pairs(dimers_2d, "xy1").as_set() == {frozenset((3, 4))}


def test_xyz_pairs():
    table = build_lattice(LatticeSpec(3, (2, 2, 2), (1.0,) * 3, (1.0,) * 3))
    open_pairs = tessellation_pairs(table, "xyz1")
    # even (0, 1, 1) with odd (1, 0, 0)
    assert open_pairs.as_set() == {frozenset((table.index_of((0, 1, 1), (EVEN,)), table.index_of((1, 0, 0), (ODD,))))}
    closed = tessellation_pairs(table, "xyz1", BoundaryTopology.periodic(3))
    assert len(closed) == 8
    assert len(tessellation_pairs(table, "xyz0", BoundaryTopology.periodic(3))) == 8
    with pytest.raises(TessellationError):
        tessellation_pairs(table, "yz0")


def test_kronecker_pairs(tetramers):
    y0 = tessellation_pairs(tetramers, "y0")
    assert len(y0) == 8
    assert frozenset((0, 1)) in y0.as_set()
    # every tessellation is a matching
    for kind in ("x0", "x1", "y0", "y1"):
        sites = tessellation_pairs(tetramers, kind, BoundaryTopology.periodic(2)).pairs.ravel()
        assert len(np.unique(sites)) == len(sites)


def test_unknown_kinds(chain, dimers_2d):
    with pytest.raises(TessellationError):
        tessellation_pairs(chain, "xy0")
    with pytest.raises(TessellationError):
        tessellation_pairs(dimers_2d, "y0")


def test_overlapping_pairs():
    with pytest.raises(TessellationError):
        PairSet(np.array([[0, 1], [1, 2]]))


def test_invalid_specs():
    with pytest.raises(LatticeSpecError):
        build_lattice(LatticeSpec(4, (2, 2, 2, 2), (1,) * 4, (1,) * 4))
    with pytest.raises(LatticeSpecError):
        build_lattice(LatticeSpec.chain(0))
    with pytest.raises(LatticeSpecError):
        build_lattice(LatticeSpec.chain(3, a0=-1.0))
    with pytest.raises(LatticeSpecError):
        build_lattice(LatticeSpec(1, (3,), (1.0,), (1.0,), TETRAMER))


def test_invalid_topology():
    with pytest.raises(ValueError):
        BoundaryTopology(("closed",))
    with pytest.raises(ValueError):
        BoundaryTopology(("open", "open"), "torus")


def test_moebius_seam_is_twisted(tetramers):
    pairs = seam_pairs(tetramers, BoundaryTopology.moebius("x"), "x")
    assert len(pairs) == 4
    assert frozenset((10, 5)) in pairs.as_set()


def test_torus_seam_is_straight(tetramers):
    pairs = seam_pairs(tetramers, BoundaryTopology.torus(), "x")
    assert frozenset((10, 0)) in pairs.as_set()


def test_klein_seams(tetramers):
    klein = BoundaryTopology.klein()
    # one twisted seam and one straight seam
    assert frozenset((10, 5)) in seam_pairs(tetramers, klein, "x").as_set()
    assert frozenset((5, 0)) in seam_pairs(tetramers, klein, "y").as_set()


def test_open_has_no_seam(tetramers):
    assert len(seam_pairs(tetramers, BoundaryTopology.open(2), "x")) == 0


def test_chain_has_no_seam(chain):
    with pytest.raises(SeamError):
        seam_pairs(chain, BoundaryTopology.periodic(1), "x")


def test_nearest_sites(chain):
    assert nearest_sites(chain, 0, 2).tolist() == [1, 2]
    assert nearest_sites(chain, 0, 2, exclude=(1,)).tolist() == [2, 3]


def test_nearest_sites_break_ties_by_index():
    table = build_lattice(LatticeSpec(2, (2, 3), (1.0, 1.0), (2.3, 1.0)))
    walker = table.index_of((1, 1), (EVEN,))
    # one x0 partner and two y neighbors, all at 1
    assert nearest_sites(table, walker, 3).tolist() == [7, 8, 11]
