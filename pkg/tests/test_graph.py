import numpy as np
import pytest
from numpy.testing import assert_allclose

from netlasso import errors, graph


def check_gossip_invariants(w, g):
    W = w.W
    assert np.max(np.abs(W - W.T)) <= 1e-12
    assert np.max(np.abs(W.sum(axis=1) - 1.0)) <= 1e-12
    w.validate_against(g)
    if g.connected:
        assert w.rho < 1.0
    else:
        assert w.rho == pytest.approx(1.0)


class TestBuildTopology:
    def test_complete_m4(self):
        g = graph.build_topology("complete", 4)
        assert len(g.edges) == 6
        assert g.connected

    def test_path_m3(self):
        g = graph.build_topology("path", 3)
        assert g.edges == frozenset({(0, 1), (1, 2)})

    def test_erdos_renyi_deterministic(self):
        g1 = graph.build_topology("erdos_renyi", 20, p=0.1, seed=7)
        g2 = graph.build_topology("erdos_renyi", 20, p=0.1, seed=7)
        assert g1.edges == g2.edges
        assert g1.connected

    def test_erdos_renyi_other_seed_differs(self):
        g1 = graph.build_topology("erdos_renyi", 20, p=0.3, seed=1)
        g2 = graph.build_topology("erdos_renyi", 20, p=0.3, seed=2)
        assert g1.edges != g2.edges

    def test_grid2d(self):
        g = graph.build_topology("grid2d", 9)
        assert g.connected
        assert len(g.edges) == 12  # 2 * side * (side - 1)

    def test_grid2d_rejects_non_square(self):
        with pytest.raises(errors.ConfigError):
            graph.build_topology("grid2d", 8)

    def test_invalid_p(self):
        with pytest.raises(errors.ConfigError):
            graph.build_topology("erdos_renyi", 5, p=0.0)
        with pytest.raises(errors.ConfigError):
            graph.build_topology("erdos_renyi", 5, p=1.5)
        with pytest.raises(errors.ConfigError):
            graph.build_topology("erdos_renyi", 5)  # p required

    def test_p_rejected_for_deterministic_kinds(self):
        with pytest.raises(errors.ConfigError):
            graph.build_topology("path", 5, p=0.3)

    def test_star_edges(self):
        g = graph.build_topology("star", 4)
        assert g.edges == frozenset({(0, 1), (0, 2), (0, 3)})


class TestMetropolis:
    def test_path_m2(self):
        g = graph.build_topology("path", 2)
        w = graph.metropolis_weights(g)
        assert_allclose(w.W, [[0.5, 0.5], [0.5, 0.5]])
        check_gossip_invariants(w, g)

    def test_star_m3(self):
        # center node 0 has degree 2
        g = graph.build_topology("star", 3)
        w = graph.metropolis_weights(g)
        assert w.W[0, 1] == pytest.approx(1 / 3)
        assert w.W[0, 2] == pytest.approx(1 / 3)
        assert w.W[0, 0] == pytest.approx(1 / 3)
        check_gossip_invariants(w, g)

    def test_path_m3_rows_sum_exactly_one(self):
        g = graph.build_topology("path", 3)
        w = graph.metropolis_weights(g)
        assert list(w.W.sum(axis=1)) == [1.0, 1.0, 1.0]

    def test_disconnected_rejected(self):
        g = graph.Graph(m=2, edges=frozenset(), kind="path")
        with pytest.raises(errors.DisconnectedGraphError):
            graph.metropolis_weights(g)


class TestLazyMetropolis:
    def test_path_m3_matrix(self):
        g = graph.build_topology("path", 3)
        w = graph.lazy_metropolis_weights(g)
        expected = [[0.75, 0.25, 0.0], [0.25, 0.5, 0.25], [0.0, 0.25, 0.75]]
        assert_allclose(w.W, expected)
        check_gossip_invariants(w, g)

    def test_path_m3_rho(self):
        # dense eigensolver oracle: eigenvalues {1, 3/4, 1/4}
        g = graph.build_topology("path", 3)
        w = graph.lazy_metropolis_weights(g)
        assert abs(w.rho - 0.75) <= 1e-9

    def test_complete_m2(self):
        g = graph.build_topology("complete", 2)
        w = graph.lazy_metropolis_weights(g)
        assert_allclose(w.W, [[0.5, 0.5], [0.5, 0.5]])
        assert w.rho == pytest.approx(0.0, abs=1e-12)

    def test_laziness(self):
        for kind, m in [("path", 6), ("star", 5), ("grid2d", 9)]:
            g = graph.build_topology(kind, m)
            w = graph.lazy_metropolis_weights(g)
            assert w.lambda_min >= -1e-12


class TestUniformAverage:
    def test_m20_rho_zero(self):
        assert graph.uniform_average_matrix(20).rho == 0.0

    def test_m1(self):
        w = graph.uniform_average_matrix(1)
        assert_allclose(w.W, [[1.0]])
        assert w.rho == 0.0

    def test_m3_row_sums(self):
        w = graph.uniform_average_matrix(3)
        assert_allclose(w.W.sum(axis=1), 1.0, atol=1e-12)


class TestSpectralGap:
    def test_uniform_m5(self):
        assert graph.spectral_gap(graph.uniform_average_matrix(5).W) <= 1e-12

    def test_lazy_path_m3(self):
        g = graph.build_topology("path", 3)
        w = graph.lazy_metropolis_weights(g)
        assert abs(graph.spectral_gap(w) - 0.75) <= 1e-9

    def test_disconnected_two_nodes(self):
        # no edges: W = I, non-mixing
        w = graph.GossipMatrix.from_matrix(np.eye(2))
        assert w.rho == pytest.approx(1.0)
        assert not w.mixing


class TestInvariantsAndProperties:
    @pytest.mark.parametrize("kind,m,p", [
        ("complete", 6, None), ("star", 7, None), ("path", 5, None),
        ("grid2d", 16, None), ("erdos_renyi", 12, 0.4),
    ])
    def test_generated_matrices_comply(self, kind, m, p):
        g = graph.build_topology(kind, m, p=p, seed=3)
        for rule in (graph.metropolis_weights, graph.lazy_metropolis_weights):
            check_gossip_invariants(rule(g), g)

    def test_consensus_kernel(self):
        # V theta = 0 iff all blocks equal
        rng = np.random.default_rng(0)
        g = graph.build_topology("erdos_renyi", 8, p=0.5, seed=11)
        W = graph.metropolis_weights(g).W
        d = 5
        x = rng.standard_normal(d)
        consensual = np.tile(x, (8, 1))
        v_cons = consensual - W @ consensual
        assert np.linalg.norm(v_cons) <= 1e-10 * np.linalg.norm(consensual)
        scattered = rng.standard_normal((8, d))
        v_scat = scattered - W @ scattered
        assert np.linalg.norm(v_scat) > 1e-6
        assert graph.consensus_quadratic(consensual, W) <= 1e-12
        assert graph.consensus_quadratic(scattered, W) > 1e-6

    def test_path_mixing_superlinear_complete_constant(self):
        def inv_gap(kind, m):
            g = graph.build_topology(kind, m)
            return 1.0 / (1.0 - graph.metropolis_weights(g).rho)

        path = [inv_gap("path", m) for m in (4, 8, 16)]
        assert path[1] / path[0] > 2.0
        assert path[2] / path[1] > 2.0
        complete = [inv_gap("complete", m) for m in (4, 8, 16)]
        assert max(complete) / min(complete) < 1.5


class TestExports:
    def test_edge_list(self, tmp_path):
        g = graph.build_topology("path", 3)
        out = tmp_path / "edges.txt"
        graph.export_edge_list(g, out)
        assert out.read_text() == "1 2\n2 3\n"

    def test_gossip_csv(self, tmp_path):
        w = graph.uniform_average_matrix(2)
        out = tmp_path / "w.csv"
        graph.export_gossip_csv(w, out)
        rows = [line.split(",") for line in out.read_text().splitlines()]
        assert [[float(x) for x in row] for row in rows] == [[0.5, 0.5]] * 2
