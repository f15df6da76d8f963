import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thinpart.discretization import assemble, build_grid, strip
from thinpart.eigensolver import lowest_eigenpairs
from thinpart.errors import DegenerateInput, InvalidArgument, InvalidPartition
from thinpart.nodal import (
    NeighborGraph, courant_sharp_check, homotopy_class, is_bipartite, neighbor_graph,
    nodal_domains, sign_alternation_holds,
)


def _square(n=64):
    g = build_grid(strip(1.0), n, n)
    theta, y = g.coordinates()
    return g, theta, y


def test_angular_mode_domains():
    g, theta, _ = _square()
    res = nodal_domains(np.cos(2 * np.pi * 3 * theta), g)
    assert res.count == 6
    assert sign_alternation_holds(res)


def test_transverse_modes_on_thin_strip():
    g = build_grid(strip(0.8), 64, 40)
    _, y = g.coordinates()
    assert nodal_domains(np.cos(2 * np.pi * y / 0.8)).count == 3
    assert nodal_domains(np.cos(np.pi * y / 0.8)).count == 2


def test_diagonal_eigenfunction_has_three_domains():
    # cos 2 pi x - cos 2 pi y on the unit-width cylinder: nodal set along the two diagonals
    g, theta, y = _square()
    res = nodal_domains(np.cos(2 * np.pi * theta) - np.cos(2 * np.pi * y), g)
    assert res.count == 3
    assert sorted(res.signs.tolist()) == [-1, 1, 1] or sorted(res.signs.tolist()) == [-1, -1, 1]


def test_dead_band_and_degenerate_input():
    with pytest.raises(DegenerateInput):
        nodal_domains(np.zeros((4, 8)))
    u = np.ones((4, 8))
    u[:, 4] = 1e-12
    assert nodal_domains(u).count == 1


def test_periodicity_matters():
    u = np.ones((4, 8))
    u[:, 3:5] = -1
    assert nodal_domains(u).count == 2
    assert nodal_domains(u, periodic=False).count == 3


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_random_fields_alternate_sign(seed):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((6, 16))
    res = nodal_domains(u)
    assert sign_alternation_holds(res)
    assert set(np.unique(res.labels)) == set(range(res.count))


def test_neighbor_graph_of_sectors():
    labels = np.repeat(np.repeat(np.arange(3), 4)[None, :], 5, axis=0)
    g = neighbor_graph(labels)
    assert g.is_complete() and g.is_cycle()
    assert not is_bipartite(g)[0]
    four = np.repeat(np.repeat(np.arange(4), 4)[None, :], 5, axis=0)
    g4 = neighbor_graph(four)
    assert g4.is_cycle() and is_bipartite(g4)[0]


def test_bands_make_a_path():
    labels = np.repeat(np.arange(3), 2)[:, None] * np.ones((1, 8), int)
    g = neighbor_graph(labels)
    assert g.is_path() and not g.is_cycle()
    assert "0 1 8" in g.edge_list_text()


def test_min_faces_threshold():
    labels = np.zeros((4, 8), int)
    labels[0, 0] = 1
    labels[1:, 4:] = 2
    g = neighbor_graph(labels)
    assert g.edges[(0, 1)] == 3         # right, below and across the periodic seam
    assert (0, 1) not in neighbor_graph(labels, min_faces=4).edges


def test_neighbor_graph_requires_all_labels():
    with pytest.raises(InvalidPartition):
        neighbor_graph(np.zeros((3, 8), int), k=2)


def test_courant_check_double_cover():
    op = assemble(build_grid(strip(0.3, degree=2), 128, 12))
    cc = courant_sharp_check(op, 6)
    assert cc.cluster == [6, 7]
    assert cc.witness and cc.max_count == 6
    with pytest.raises(InvalidArgument):
        courant_sharp_check(op, 0)


def test_courant_bound_on_simple_eigenvalues():
    op = assemble(build_grid(strip(0.7), 64, 28))
    pairs = lowest_eigenpairs(op, 4)
    # lambda_2 = pi^2 / b^2 is simple for 1/2 < b < 1
    assert nodal_domains(op.to_grid(pairs[1].vector)).count <= 2


def test_homotopy_class():
    g = build_grid(strip(0.2), 32, 4)
    theta, t = g.coordinates()
    assert homotopy_class((theta > 0.1) & (theta < 0.4), g) == "contractible"
    assert homotopy_class(t < 0.1, g) == "noncontractible"
    with pytest.raises(InvalidArgument):
        homotopy_class((theta < 0.1) | ((theta > 0.5) & (theta < 0.6)), g)


def test_neighbor_graph_object():
    g = NeighborGraph(3, {(0, 1): 4, (1, 2): 4})
    assert g.neighbors(1) == [0, 2] and g.is_path()
