import numpy as np
import pytest

from oracles import t_exact_covers
from tetrosense.errors import IceGraphError, ParameterError, SearchFailure
from tetrosense.icegraph import (IceGraph, count_valid, generate_geared, icegraph_to_layout,
                                 icegraph_validate, in_degrees, layout_to_icegraph, n_edges, n_nodes,
                                 node_positions)
from tetrosense.tiling import ShapeClass, is_t_shape, layout_t4x4, validate_layout

# regression constants from exhaustive enumeration
K_VALID_4 = 6
K_VALID_8 = 90
PINWHEEL_BITS = (0, 1, 0, 1)


def test_lattice_sizes():
    for cell in (4, 8, 12):
        assert n_edges(cell) == (cell // 2) ** 2
        assert n_nodes(cell) == cell * cell // 8
        assert len(node_positions(cell)) == n_nodes(cell)
    # degree 4 at every node: each edge has two endpoints
    assert 2 * n_edges(8) == 4 * n_nodes(8)


def test_k_valid_cell4():
    assert count_valid(4) == K_VALID_4
    assert 1 <= K_VALID_4 <= 16


@pytest.mark.slow
def test_k_valid_cell8():
    assert count_valid(8) == K_VALID_8


def test_pinwheel_graph():
    g = layout_to_icegraph(layout_t4x4())
    assert g.arrows == PINWHEEL_BITS
    assert icegraph_validate(g)
    assert icegraph_to_layout(g).cell_sets() == layout_t4x4().cell_sets()


def test_imbalanced_node_is_invalid():
    # an orientation whose node 0 receives all four arrows
    g = None
    for code in range(16):
        cand = IceGraph.from_int(4, code)
        if in_degrees(cand)[0] == 4:
            g = cand
            break
    assert g is not None
    assert not icegraph_validate(g)
    with pytest.raises(IceGraphError):
        icegraph_to_layout(g)


def test_all_cell4_graphs_are_torus_tilings():
    torus = set(t_exact_covers(4, torus=True))
    layouts = []
    for code in range(16):
        g = IceGraph.from_int(4, code)
        if icegraph_validate(g):
            lay = icegraph_to_layout(g)
            assert validate_layout(lay).ok
            assert lay.cell_sets() in torus
            assert layout_to_icegraph(lay) == g
            layouts.append(lay.cell_sets())
    assert len(set(layouts)) == K_VALID_4


def test_roundtrip_cell8_sample():
    rng = np.random.default_rng(5)
    found = 0
    while found < 5:
        g = IceGraph(8, tuple(rng.integers(0, 2, 16)))
        if not icegraph_validate(g):
            continue
        found += 1
        lay = icegraph_to_layout(g)
        assert validate_layout(lay).ok
        assert lay.n_groups == 16
        assert all(is_t_shape(grp.offsets(8)) for grp in lay.groups)
        assert layout_to_icegraph(lay) == g


def test_malformed_graphs():
    with pytest.raises(IceGraphError):
        IceGraph(4, (0, 1, 0))
    with pytest.raises(IceGraphError):
        IceGraph(4, (0, 1, 2, 0))
    with pytest.raises(IceGraphError):
        IceGraph(6, (0,) * 9)


def test_generate_geared_deterministic():
    a = generate_geared(8, seed=3, max_tries=1 << 17)
    b = generate_geared(8, seed=3, max_tries=1 << 17)
    assert a == b and a.cell_sets() == b.cell_sets()
    assert a.shape_class is ShapeClass.T and a.n_groups == 16
    assert validate_layout(a).ok


def test_generate_cell4():
    lay = generate_geared(4, seed=0, max_tries=64)
    assert validate_layout(lay).ok


def test_generate_failure_and_errors():
    with pytest.raises(SearchFailure) as exc:
        generate_geared(8, seed=1, max_tries=1)
    assert exc.value.tries == 1
    with pytest.raises(ParameterError, match="unsupported cell size"):
        generate_geared(16, seed=0, max_tries=10)
    with pytest.raises(ParameterError):
        generate_geared(8, seed=0, max_tries=0)
