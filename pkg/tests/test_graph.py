import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dagctrl.errors import CycleError, DimensionError
from dagctrl.graph import (
    BlockDims,
    InfoGraph,
    block_submatrix,
    relabel_topological,
    relatives,
    selector,
    transitive_closure,
)

from ._oracles import closure_by_paths


def adj_from_edges(n, edges):
    a = np.eye(n, dtype=bool)
    for src, dst in edges:
        a[dst, src] = True
    return a


class TestTransitiveClosure:
    def test_chain_adds_skip_edge(self):
        a = adj_from_edges(3, [(0, 1), (1, 2)])
        closed = transitive_closure(a)
        assert closed[2, 0]  # 0 -> 2 forced by transitivity

    def test_tree_closure_adds_root_to_leaf(self):
        a = adj_from_edges(5, [(0, 1), (0, 2), (0, 3), (3, 4)])
        closed = transitive_closure(a)
        assert closed[4, 0]  # 0 -> 4 through 3

    def test_identity_stays_identity(self):
        a = np.eye(4, dtype=bool)
        assert np.array_equal(transitive_closure(a), a)

    def test_idempotent(self):
        a = adj_from_edges(4, [(0, 1), (1, 2), (2, 3)])
        once = transitive_closure(a)
        assert np.array_equal(transitive_closure(once), once)

    def test_cycle_rejected(self):
        a = adj_from_edges(3, [(0, 1), (1, 2), (2, 0)])
        with pytest.raises(CycleError):
            transitive_closure(a)

    def test_two_cycle_rejected(self):
        a = adj_from_edges(2, [(0, 1), (1, 0)])
        with pytest.raises(CycleError):
            transitive_closure(a)

    def test_non_square_rejected(self):
        with pytest.raises(DimensionError):
            transitive_closure(np.ones((2, 3), dtype=bool))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**30))
    def test_matches_path_enumeration_and_monotone(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 7))
        a = np.eye(n, dtype=bool)
        for i in range(n):
            for j in range(i):
                if rng.uniform() < 0.4:
                    a[i, j] = True  # lower triangular, guaranteed acyclic
        closed = transitive_closure(a)
        assert np.array_equal(closed, closure_by_paths(a))
        # adding an edge never removes a closure edge
        options = np.argwhere(~closed)
        if options.size:
            i, j = options[rng.integers(len(options))]
            if not closed[j, i]:  # keep it acyclic
                grown = a.copy()
                grown[i, j] = True
                bigger = transitive_closure(grown)
                assert np.all(bigger | ~closed)


class TestRelabel:
    def test_upper_edge_swaps(self):
        a = np.eye(2, dtype=bool)
        a[0, 1] = True  # agent 0 receives from agent 1
        perm, relabeled = relabel_topological(a)
        assert perm == (1, 0)
        assert not np.triu(relabeled, 1).any()

    def test_lower_triangular_is_identity(self):
        a = adj_from_edges(3, [(0, 1), (0, 2)])
        perm, relabeled = relabel_topological(a)
        assert perm == (0, 1, 2)
        assert np.array_equal(relabeled, transitive_closure(a))

    def test_tree_in_topological_order_keeps_labels(self):
        a = adj_from_edges(5, [(0, 1), (0, 2), (0, 3), (3, 4)])
        perm, _ = relabel_topological(a)
        assert perm == (0, 1, 2, 3, 4)

    def test_ties_break_by_original_index(self):
        # 2 -> 0 and 2 -> 1; 0 and 1 incomparable, so order is 2, 0, 1
        a = adj_from_edges(3, [(2, 0), (2, 1)])
        perm, relabeled = relabel_topological(a)
        assert perm == (1, 2, 0)
        assert not np.triu(relabeled, 1).any()

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**30))
    def test_random_permutation_recovers_triangular(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 7))
        a = np.eye(n, dtype=bool)
        for i in range(n):
            for j in range(i):
                if rng.uniform() < 0.5:
                    a[i, j] = True
        p = rng.permutation(n)
        scrambled = a[np.ix_(p, p)]
        _, relabeled = relabel_topological(scrambled)
        assert not np.triu(relabeled, 1).any()
        two_step = (relabeled.astype(int) @ relabeled.astype(int)) > 0
        assert np.array_equal(two_step, relabeled)


@pytest.fixture(scope="module")
def tree():
    return InfoGraph.from_edges(5, [(0, 1), (0, 2), (0, 3), (3, 4)])


class TestRelatives:

    def test_descendants_of_fork_node(self, tree):
        assert tree.descendants(3) == (3, 4)

    def test_strict_ancestors_of_leaf(self, tree):
        assert tree.strict_ancestors(4) == (0, 3)

    def test_root_reaches_everyone(self, tree):
        assert tree.descendants(0) == (0, 1, 2, 3, 4)

    def test_relatives_bundle(self, tree):
        rel = relatives(tree, 3)
        assert rel.descendants == (3, 4)
        assert rel.ancestors == (0, 3)
        assert rel.strict_descendants == (4,)
        assert rel.strict_ancestors == (0,)

    def test_self_membership_and_symmetry(self, tree):
        for i in range(5):
            assert i in tree.descendants(i)
            assert i in tree.ancestors(i)
            for j in tree.descendants(i):
                assert i in tree.ancestors(j)

    def test_out_of_range(self, tree):
        with pytest.raises(IndexError):
            tree.descendants(5)
        with pytest.raises(IndexError):
            tree.ancestors(-1)

    def test_adjacency_inverse_is_integer_and_exact(self, tree):
        inv = tree.adjacency_inverse()
        assert inv.dtype.kind == "i"
        assert np.all(np.diag(inv) == 1)
        prod = tree.adj.astype(float) @ inv
        assert np.allclose(prod, np.eye(5), atol=1e-12)


class TestSelector:
    def test_single_block_column(self):
        np.testing.assert_array_equal(selector((1, 1), [1]), [[0.0], [1.0]])

    def test_full_selection_is_identity(self):
        np.testing.assert_array_equal(selector((2, 1), [0, 1]), np.eye(3))

    def test_empty_selection(self):
        assert selector((2, 3), []).shape == (5, 0)

    def test_orthonormal_columns(self):
        s = selector((2, 3, 1), [0, 2])
        np.testing.assert_allclose(s.T @ s, np.eye(3))

    def test_matches_dense_oracle(self):
        from ._oracles import dense_selector

        dims, idx = (2, 1, 3), (0, 2)
        np.testing.assert_array_equal(selector(dims, idx), dense_selector(dims, idx))

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            selector((1, 1), [2])


class TestBlockSubmatrix:
    def test_identity_off_diagonal_is_zero(self):
        np.testing.assert_array_equal(
            block_submatrix(np.eye(3), (1, 1, 1), [0], (1, 1, 1), [1, 2]),
            [[0.0, 0.0]],
        )

    def test_scalar_blocks_pick_row_and_columns(self):
        x = np.arange(25.0).reshape(5, 5)
        ones = (1,) * 5
        np.testing.assert_array_equal(
            block_submatrix(x, ones, [1], ones, [3, 4]), [[8.0, 9.0]]
        )

    def test_full_selection_returns_everything(self):
        x = np.arange(12.0).reshape(3, 4)
        got = block_submatrix(x, (2, 1), [0, 1], (3, 1), [0, 1])
        np.testing.assert_array_equal(got, x)

    def test_equals_selector_sandwich(self):
        rng = np.random.default_rng(0)
        dims_r, dims_c = (2, 3, 1), (1, 2, 2)
        x = rng.normal(size=(6, 5))
        rows, cols = (0, 2), (1, 2)
        direct = block_submatrix(x, dims_r, rows, dims_c, cols)
        sandwich = selector(dims_r, rows).T @ x @ selector(dims_c, cols)
        np.testing.assert_allclose(direct, sandwich)

    def test_nonconforming_partition(self):
        with pytest.raises(DimensionError):
            block_submatrix(np.eye(3), (2, 2), [0], (1, 1, 1), [0])


class TestBlockDims:
    def test_totals_and_offsets(self):
        dims = BlockDims(n=(2, 3), m=(1, 1), p=(1, 2), q=(2, 2))
        assert dims.total_n == 5 and dims.n_agents == 2
        np.testing.assert_array_equal(BlockDims.offsets(dims.n), [0, 2, 5])

    def test_positivity_enforced(self):
        with pytest.raises(ValueError):
            BlockDims(n=(0, 1), m=(1, 1), p=(1, 1), q=(1, 1))

    def test_ragged_lengths_rejected(self):
        with pytest.raises(DimensionError):
            BlockDims(n=(1, 1), m=(1,), p=(1, 1), q=(1, 1))


class TestInfoGraphConstruction:
    def test_from_edges_out_of_range(self):
        with pytest.raises(IndexError):
            InfoGraph.from_edges(2, [(0, 2)])

    def test_requires_lower_triangular(self):
        a = np.eye(2, dtype=bool)
        a[0, 1] = True
        with pytest.raises(ValueError):
            InfoGraph(2, a, (0, 1))

    def test_original_order_round_trip(self):
        a = np.eye(2, dtype=bool)
        a[0, 1] = True  # needs the swap
        g = InfoGraph.from_adjacency(a)
        order = g.original_order()
        assert tuple(g.perm[k] for k in order) == (0, 1)
