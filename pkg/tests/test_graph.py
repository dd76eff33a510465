import numpy as np
import pytest

from conftest import graph_from_edges, random_connected_graph
from oracles import bfs_reference
from pastel.errors import (
    EmptyGraph,
    InconsistentNodeCount,
    InsufficientClassMembers,
    InvalidParams,
    ParseError,
)
from pastel.graph import (
    Graph,
    SbmParams,
    bfs_distances,
    bfs_distances_multi,
    diameter,
    generate_sbm,
    load_graph,
    normalized_adjacency,
    sample_split,
    save_graph,
)


class TestGraphModel:
    def test_rejects_asymmetric_adjacency(self):
        adj = np.array([[0.0, 1.0], [0.5, 0.0]])
        with pytest.raises(InvalidParams):
            Graph(adjacency=adj, features=np.zeros((2, 1)))

    def test_rejects_nonzero_diagonal(self):
        with pytest.raises(InvalidParams):
            Graph(adjacency=np.eye(2), features=np.zeros((2, 1)))

    def test_rejects_feature_row_mismatch(self):
        from pastel.errors import ShapeMismatch

        with pytest.raises(ShapeMismatch):
            Graph(adjacency=np.zeros((2, 2)), features=np.zeros((3, 1)))

    def test_edges_upper_triangle(self, path3):
        assert path3.edges().tolist() == [[0, 1], [1, 2]]
        assert path3.num_edges() == 2


class TestSbm:
    def test_extreme_probabilities_give_two_cliques(self):
        g, labels = generate_sbm(SbmParams(n=6, c=2, p=1.0, q=0.0), seed=0)
        assert g.num_edges() == 6  # two disjoint triangles
        assert labels.tolist() == [0, 0, 0, 1, 1, 1]
        assert not g.adj_bool[:3, 3:].any()

    def test_edgeless(self):
        g, _ = generate_sbm(SbmParams(n=5, c=1, p=0.0, q=0.0), seed=0)
        assert g.num_edges() == 0

    def test_rejects_q_above_p(self):
        with pytest.raises(InvalidParams):
            SbmParams(n=10, c=2, p=0.1, q=0.2)

    def test_rejects_more_communities_than_nodes(self):
        with pytest.raises(InvalidParams):
            SbmParams(n=3, c=4, p=0.5, q=0.1)

    def test_intra_edge_count_within_3_sigma(self):
        params = SbmParams(n=3000, c=6, p=0.5, q=0.005)
        g, labels = generate_sbm(params, seed=1)
        same = labels[:, None] == labels[None, :]
        intra = int(np.count_nonzero(np.triu(g.adj_bool & same, k=1)))
        pairs = sum(
            s * (s - 1) // 2 for s in np.bincount(labels)
        )
        mean = pairs * params.p
        sigma = np.sqrt(pairs * params.p * (1 - params.p))
        assert abs(intra - mean) <= 3 * sigma

    def test_q_zero_is_block_diagonal_under_community_order(self):
        g, labels = generate_sbm(SbmParams(n=40, c=3, p=0.5, q=0.0), seed=3)
        cross = labels[:, None] != labels[None, :]
        assert not (g.adj_bool & cross).any()

    def test_deterministic_under_seed(self):
        p = SbmParams(n=50, c=2, p=0.3, q=0.05)
        g1, l1 = generate_sbm(p, seed=9)
        g2, l2 = generate_sbm(p, seed=9)
        assert np.array_equal(g1.adjacency, g2.adjacency)
        assert np.array_equal(g1.features, g2.features)
        assert np.array_equal(l1, l2)

    def test_remainder_spread(self):
        params = SbmParams(n=7, c=3, p=1.0, q=0.0)
        sizes = np.bincount(params.community_of())
        assert sizes.tolist() == [3, 2, 2]


class TestBfs:
    def test_path_graph(self, path3):
        assert bfs_distances(path3, 0).tolist() == [0, 1, 2]

    def test_isolated_source(self):
        g = graph_from_edges(3, [(1, 2)])
        assert bfs_distances(g, 0).tolist() == [0, -1, -1]

    def test_cycle5(self):
        g = graph_from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])
        assert sorted(bfs_distances(g, 0).tolist()) == [0, 1, 1, 2, 2]

    def test_matches_reference_on_random_graphs(self, rng):
        for _ in range(10):
            g = random_connected_graph(rng, int(rng.integers(4, 30)))
            src = int(rng.integers(g.n))
            assert np.array_equal(
                bfs_distances(g, src), bfs_reference(g.adjacency, src)
            )

    def test_triangle_inequality_on_sampled_triples(self, rng):
        g = random_connected_graph(rng, 25)
        dist = bfs_distances_multi(g, np.arange(g.n))
        for _ in range(200):
            u, v, w = rng.integers(0, g.n, 3)
            assert dist[u, w] <= dist[u, v] + dist[v, w]


class TestDiameter:
    def test_path3(self, path3):
        assert diameter(path3) == 2

    def test_complete_graph(self):
        g = graph_from_edges(5, [(i, j) for i in range(5) for j in range(i + 1, 5)])
        assert diameter(g) == 1

    def test_two_components_take_per_component_max(self):
        g = graph_from_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5)])
        assert diameter(g) == 2

    def test_edgeless_raises(self):
        g = graph_from_edges(3, [])
        with pytest.raises(EmptyGraph):
            diameter(g)

    def test_matches_all_pairs_oracle(self, rng):
        for _ in range(5):
            g = random_connected_graph(rng, int(rng.integers(5, 50)), extra=0.1)
            oracle = max(
                bfs_reference(g.adjacency, s).max() for s in range(g.n)
            )
            assert diameter(g) == oracle


class TestNormalizedAdjacency:
    def test_single_edge_gives_half_everywhere(self):
        g = graph_from_edges(2, [(0, 1)])
        assert np.allclose(normalized_adjacency(g), 0.5)

    def test_edgeless_gives_identity(self):
        g = graph_from_edges(3, [])
        assert np.array_equal(normalized_adjacency(g), np.eye(3))

    def test_exactly_symmetric(self, rng):
        g = random_connected_graph(rng, 20)
        a = normalized_adjacency(g)
        assert np.array_equal(a, a.T)


class TestSampleSplit:
    def test_all_members_labeled_when_per_class_is_size(self):
        g = graph_from_edges(4, [(0, 1), (2, 3)])
        labels = np.array([0, 0, 1, 1])
        split = sample_split(g, labels, per_class=2, seed=0)
        assert split.train_mask.all()

    def test_paper_scale_count(self):
        g = graph_from_edges(700, [(i, i + 1) for i in range(699)])
        labels = np.arange(700) % 7
        split = sample_split(g, labels, per_class=20, seed=0)
        assert split.labeled.size == 140

    def test_deterministic(self):
        g = graph_from_edges(30, [(i, i + 1) for i in range(29)])
        labels = np.arange(30) % 3
        s1 = sample_split(g, labels, per_class=4, seed=5)
        s2 = sample_split(g, labels, per_class=4, seed=5)
        assert np.array_equal(s1.train_mask, s2.train_mask)
        assert np.array_equal(s1.val_mask, s2.val_mask)

    def test_insufficient_members(self):
        g = graph_from_edges(4, [(0, 1)])
        with pytest.raises(InsufficientClassMembers):
            sample_split(g, np.array([0, 0, 0, 1]), per_class=2, seed=0)

    def test_masks_partition_the_graph(self):
        g = graph_from_edges(40, [(i, i + 1) for i in range(39)])
        labels = np.arange(40) % 4
        split = sample_split(g, labels, per_class=3, seed=1)
        counts = (
            split.train_mask.astype(int)
            + split.val_mask.astype(int)
            + split.test_mask.astype(int)
        )
        assert np.array_equal(counts, np.ones(40, dtype=int))


class TestFileIO:
    def test_two_line_edge_file(self, tmp_path):
        path = tmp_path / "g.edges"
        path.write_text("0 1\n1 2\n")
        g, labels = load_graph(path)
        assert g.n == 3 and g.num_edges() == 2
        assert labels is None

    def test_duplicate_directions_collapse(self, tmp_path):
        path = tmp_path / "g.edges"
        path.write_text("0 1 1\n1 0 1\n")
        g, _ = load_graph(path)
        assert g.num_edges() == 1
        assert g.adjacency[0, 1] == 1.0

    def test_comments_and_weights(self, tmp_path):
        path = tmp_path / "g.edges"
        path.write_text("# comment\n0 1 2.5  # trailing\n\n")
        g, _ = load_graph(path)
        assert g.adjacency[0, 1] == 2.5

    def test_sparse_ids_densified(self, tmp_path):
        path = tmp_path / "g.edges"
        path.write_text("5 9\n9 12\n")
        g, _ = load_graph(path)
        assert g.n == 3 and g.num_edges() == 2

    def test_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "g.edges"
        path.write_text("0 1\nbogus line here\n")
        with pytest.raises(ParseError) as err:
            load_graph(path)
        assert err.value.line == 2

    def test_feature_row_count_mismatch(self, tmp_path):
        edges = tmp_path / "g.edges"
        edges.write_text("0 1\n1 2\n")
        feats = tmp_path / "g.features.csv"
        feats.write_text("1.0\n2.0\n")
        with pytest.raises(InconsistentNodeCount):
            load_graph(edges, feats)

    def test_round_trip_bit_exact(self, tmp_path, rng):
        g = random_connected_graph(rng, 15)
        adj = g.adjacency * (1.0 + rng.random((15, 15)))
        adj = (adj + adj.T) / 2
        np.fill_diagonal(adj, 0.0)
        g = Graph(adjacency=adj, features=rng.standard_normal((15, 4)))
        labels = rng.integers(0, 3, 15)
        paths = [tmp_path / n for n in ("a.edges", "a.feat.csv", "a.lab.csv")]
        save_graph(g, *paths, labels=labels)
        g2, labels2 = load_graph(*paths)
        assert np.array_equal(g.adjacency, g2.adjacency)
        assert np.array_equal(g.features, g2.features)
        assert np.array_equal(labels, labels2)
        # save again: identical bytes
        paths2 = [tmp_path / n for n in ("b.edges", "b.feat.csv", "b.lab.csv")]
        save_graph(g2, *paths2, labels=labels2)
        for p1, p2 in zip(paths, paths2):
            assert p1.read_bytes() == p2.read_bytes()
