import numpy as np
import pytest

from wisdomdyn import (
    NotStronglyConnectedError,
    WeightedDigraph,
    ZeroRowError,
    centrality,
    from_edges,
    has_self_loops,
    is_strongly_connected,
    laplacian,
    row_normalize,
)
from wisdomdyn.experiments import SOCIAL_EDGES

from conftest import random_digraph

REFERENCE_MU = np.array([1 / 8, 3 / 16, 1 / 8, 1 / 4, 3 / 16, 1 / 8])


def social_graph():
    return from_edges(SOCIAL_EDGES, n=6, undirected=True)


def brute_force_strongly_connected(w: np.ndarray) -> bool:
    """Boolean Floyd-Warshall closure: the independent reachability oracle."""
    n = w.shape[0]
    reach = (w > 0) | np.eye(n, dtype=bool)
    for k in range(n):
        reach = reach | (reach[:, k][:, None] & reach[k, :][None, :])
    return bool(reach.all())


class TestWeightedDigraph:
    def test_rejects_negative_weights(self):
        with pytest.raises(ValueError):
            WeightedDigraph([[0.0, -1.0], [1.0, 0.0]])

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            WeightedDigraph(np.ones((2, 3)))

    def test_immutable_after_construction(self):
        g = WeightedDigraph(np.ones((2, 2)))
        with pytest.raises(ValueError):
            g.weights[0, 0] = 5.0


class TestFromEdges:
    def test_directed_orientation(self):
        # edge (1, 2): agent 1 influences agent 2, so row 2 column 1
        g = from_edges([(1, 2)], n=2)
        assert g.weights[1, 0] == 1.0
        assert g.weights[0, 1] == 0.0

    def test_undirected_inserts_both_directions(self):
        g = from_edges([(1, 2, 3.0)], n=2, undirected=True)
        assert g.weights[0, 1] == 3.0 and g.weights[1, 0] == 3.0

    def test_self_loops_added_uniformly(self):
        g = from_edges([(1, 2)], n=3, undirected=True, self_loops=2.0)
        assert np.all(np.diag(g.weights) == 2.0)

    def test_bad_node_id_rejected(self):
        with pytest.raises(ValueError):
            from_edges([(1, 7)], n=3)


class TestStrongConnectivity:
    def test_reference_social_graph_is_connected(self):
        assert is_strongly_connected(social_graph())

    def test_single_node(self):
        assert is_strongly_connected(WeightedDigraph([[0.0]]))

    def test_one_way_pair_is_not(self):
        assert not is_strongly_connected(from_edges([(1, 2)], n=2))

    def test_agrees_with_floyd_warshall_oracle(self):
        rng = np.random.default_rng(7)
        outcomes = set()
        for _ in range(400):
            n = int(rng.integers(2, 9))
            g = random_digraph(rng, n, density=float(rng.uniform(0.15, 0.7)))
            expected = brute_force_strongly_connected(g.weights)
            assert is_strongly_connected(g) == expected
            outcomes.add(expected)
        assert outcomes == {True, False}  # both branches exercised


class TestSelfLoops:
    def test_identity_matrix(self):
        assert has_self_loops(WeightedDigraph(np.eye(3)))

    def test_zero_diagonal(self):
        assert not has_self_loops(WeightedDigraph(np.array([[0.0, 1.0], [1.0, 0.0]])))

    def test_reference_learning_graph(self, reference):
        assert has_self_loops(reference.learning_graph)
        assert not has_self_loops(reference.social_graph)


class TestLaplacian:
    def test_zero_weights_give_zero_laplacian(self):
        assert np.all(laplacian(WeightedDigraph(np.zeros((3, 3)))) == 0.0)

    def test_two_node_example(self):
        lap = laplacian(WeightedDigraph(np.array([[0.0, 1.0], [1.0, 0.0]])))
        assert np.array_equal(lap, np.array([[1.0, -1.0], [-1.0, 1.0]]))

    def test_self_loops_cancel(self):
        w = np.array([[2.0, 1.0], [1.0, 3.0]])
        w_noloop = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert np.array_equal(laplacian(WeightedDigraph(w)), laplacian(WeightedDigraph(w_noloop)))

    def test_row_sums_exact_for_integer_weights(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 10))
            w = rng.integers(0, 5, size=(n, n)).astype(float)
            lap = laplacian(WeightedDigraph(w))
            assert np.all(lap.sum(axis=1) == 0.0)
            assert np.all(lap @ np.ones(n) == 0.0)

    def test_row_sums_vanish_to_ulp_for_real_weights(self):
        # exact zero is not representable for arbitrary reals; the residual
        # must stay below one ulp of the row weight mass
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(2, 12))
            g = random_digraph(rng, n, density=0.6)
            lap = laplacian(g)
            bound = 4 * np.finfo(float).eps * (1.0 + g.weights.sum(axis=1))
            assert np.all(np.abs(lap.sum(axis=1)) <= bound)


class TestRowNormalize:
    def test_simple_example(self):
        g = row_normalize(WeightedDigraph(np.array([[0.0, 2.0], [4.0, 0.0]])))
        assert np.array_equal(g.weights, np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_stochastic_matrix_unchanged(self):
        w = np.array([[0.5, 0.5], [0.25, 0.75]])
        assert np.array_equal(row_normalize(WeightedDigraph(w)).weights, w)

    def test_reference_graph_scales_by_degree(self):
        g = social_graph()
        degrees = np.array([2.0, 3.0, 2.0, 4.0, 3.0, 2.0])
        assert np.array_equal(g.weights.sum(axis=1), degrees)
        normalized = row_normalize(g)
        assert np.allclose(normalized.weights * degrees[:, None], g.weights, atol=0)

    def test_zero_row_rejected(self):
        with pytest.raises(ZeroRowError):
            row_normalize(from_edges([(1, 2)], n=2))


class TestCentrality:
    def test_symmetric_graph_gives_uniform(self):
        rng = np.random.default_rng(2)
        for n in (2, 4, 7):
            w = rng.uniform(0.1, 2.0, (n, n))
            w = w + w.T
            np.fill_diagonal(w, 0.0)
            mu = centrality(WeightedDigraph(w))
            assert np.allclose(mu.mu, 1.0 / n, atol=1e-12)

    def test_row_normalized_reference_graph(self):
        mu = centrality(row_normalize(social_graph()))
        assert np.max(np.abs(mu.mu - REFERENCE_MU)) < 1e-10

    def test_raw_reference_graph_is_uniform(self):
        mu = centrality(social_graph())
        assert np.allclose(mu.mu, 1.0 / 6, atol=1e-12)

    def test_directed_three_cycle_uniform(self):
        g = from_edges([(1, 2), (2, 3), (3, 1)], n=3)
        assert np.allclose(centrality(g).mu, 1.0 / 3, atol=1e-12)

    def test_disconnected_graph_raises(self):
        with pytest.raises(NotStronglyConnectedError):
            centrality(from_edges([(1, 2)], n=2))

    def test_positive_normalized_small_residual(self):
        rng = np.random.default_rng(3)
        from conftest import random_strongly_connected

        for _ in range(50):
            n = int(rng.integers(2, 9))
            g = random_strongly_connected(rng, n)
            mu = centrality(g)
            assert np.all(mu.mu > 0)
            assert abs(mu.mu.sum() - 1.0) <= 1e-12
            assert np.max(np.abs(laplacian(g).T @ mu.mu)) <= 1e-10

    def test_scale_invariance(self):
        rng = np.random.default_rng(4)
        from conftest import random_strongly_connected

        for c in (0.001, 3.0, 250.0):
            g = random_strongly_connected(rng, 6)
            scaled = WeightedDigraph(c * g.weights)
            assert np.allclose(centrality(g).mu, centrality(scaled).mu, atol=1e-10)
