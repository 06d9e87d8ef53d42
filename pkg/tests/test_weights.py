import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from reyesi import io
from reyesi.exceptions import IslandUnit, NotStandardized, SelfEdge, UnknownLabel
from reyesi.weights import SpatialWeights, from_edge_list, lattice_weights, row_standardize, weight_summaries


def test_rook_3x3_cardinalities():
    card = lattice_weights(3, 3, "rook").cardinalities
    assert card[4] == 4
    assert card[[0, 2, 6, 8]].tolist() == [2, 2, 2, 2]


def test_queen_3x3_cardinalities():
    card = lattice_weights(3, 3, "queen").cardinalities
    assert card[4] == 8
    assert card[[0, 2, 6, 8]].tolist() == [3, 3, 3, 3]


def test_queen_2x2_is_complete():
    np.testing.assert_array_equal(lattice_weights(2, 2, "queen").to_dense(), 1 - np.eye(4))


@pytest.mark.parametrize("criterion", ["queen", "rook"])
@pytest.mark.parametrize("shape", [(2, 2), (2, 5), (3, 3), (4, 7), (10, 10)])
def test_lattice_matches_dense_oracle(shape, criterion):
    w = lattice_weights(*shape, criterion)
    np.testing.assert_array_equal(w.to_dense(), oracles.grid_dense(*shape, criterion))
    assert w.is_symmetric_structure()


def test_lattice_rejects_degenerate_grid():
    with pytest.raises(ValueError):
        lattice_weights(1, 5)


def test_edge_list_isolated_unit():
    w = from_edge_list([("A", "B")], ["A", "B", "C"])
    assert w.islands.tolist() == [2]


def test_edge_list_duplicates_collapse():
    w = from_edge_list([("A", "B"), ("B", "A"), ("A", "B")], ["A", "B"])
    np.testing.assert_array_equal(w.to_dense(), [[0, 1], [1, 0]])


def test_edge_list_errors_name_the_label():
    with pytest.raises(UnknownLabel, match="'Z'"):
        from_edge_list([("A", "Z")], ["A", "B"])
    with pytest.raises(SelfEdge, match="'A'"):
        from_edge_list([("A", "A")], ["A", "B"])


def test_bundled_department_adjacency():
    sample = io.read_compositions(io.fixture_path("departments.csv"))
    edges = io.read_edge_list(io.fixture_path("departments_edges.csv"))
    w = row_standardize(from_edge_list(edges, sample.ids))
    assert w.n == 33
    assert w.is_symmetric_structure()
    np.testing.assert_allclose(w.row_sums, 1.0, atol=1e-12)


def test_rook_corner_row_standardized():
    w = row_standardize(lattice_weights(3, 3, "rook"))
    row = w.to_dense()[0]
    assert sorted(row[row > 0].tolist()) == [0.5, 0.5]


def test_island_policy_error_names_unit():
    w = from_edge_list([("A", "B")], ["A", "B", "C"])
    with pytest.raises(IslandUnit, match="'C'"):
        row_standardize(w)


def test_island_policy_drop_unit():
    w = from_edge_list([("A", "B"), ("B", "C")], ["A", "B", "C", "D"])
    out = row_standardize(w, "drop_unit")
    assert out.ids == ["A", "B", "C"]
    assert out.meta["dropped_units"] == ["D"]
    assert out.s0 == pytest.approx(3, abs=1e-10)


def test_self_edge_in_matrix():
    with pytest.raises(SelfEdge):
        SpatialWeights(np.eye(3))


def test_explicit_zeros_not_stored():
    m = np.array([[0, 1.0, 0], [1.0, 0, 0], [0, 0, 0]])
    assert SpatialWeights(m).nnz == 2


def test_summaries_require_standardization():
    with pytest.raises(NotStandardized):
        weight_summaries(lattice_weights(3, 3))


def test_standardized_s0_is_n():
    w = row_standardize(lattice_weights(5, 4, "queen"))
    assert abs(weight_summaries(w).s0 - w.n) <= 1e-10 * w.n


def test_equal_weight_row_c_i():
    w = row_standardize(lattice_weights(3, 3, "queen"))
    np.testing.assert_allclose(weight_summaries(w).c, 1 / w.cardinalities, rtol=1e-14)


def test_2x2_queen_cross_terms_dense_oracle():
    w = row_standardize(lattice_weights(2, 2, "queen"))
    W = w.to_dense()
    ref = W @ W.T
    np.fill_diagonal(ref, 0)
    np.testing.assert_allclose(weight_summaries(w).cross.toarray(), ref, atol=1e-15)
    # every pair shares the other two units as neighbors: 2 * (1/3)^2
    np.testing.assert_allclose(ref[0, 1], 2 / 9)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.integers(2, 10), st.sampled_from(["queen", "rook"]))
def test_summaries_match_dense_oracle(rows, cols, criterion):
    w = row_standardize(lattice_weights(rows, cols, criterion))
    W = oracles.row_standardize_dense(oracles.grid_dense(rows, cols, criterion))
    s = weight_summaries(w)
    np.testing.assert_allclose(w.to_dense(), W, atol=1e-12)
    assert np.abs(w.row_sums - 1).max() <= 1e-12
    assert abs(s.s0 - W.sum()) <= 1e-12 * w.n
    np.testing.assert_allclose(s.c, (W**2).sum(axis=1), atol=1e-12)
    cross = W @ W.T
    np.fill_diagonal(cross, 0)
    np.testing.assert_allclose(s.cross.toarray(), cross, atol=1e-12)
    assert (s.c >= 0).all() and (s.cross.data >= 0).all()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)).filter(lambda e: e[0] != e[1]), max_size=30))
def test_edge_lists_are_symmetric(pairs):
    ids = [f"u{k}" for k in range(10)]
    w = from_edge_list([(ids[a], ids[b]) for a, b in pairs], ids)
    assert w.is_symmetric_structure()
    assert (w.to_dense() == w.to_dense().T).all()
    if w.islands.size < w.n:
        out = row_standardize(w, "drop_unit")
        np.testing.assert_allclose(out.row_sums, 1, atol=1e-12)
        assert out.s0 == pytest.approx(out.n, abs=1e-10 * out.n)
