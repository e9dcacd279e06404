import numpy as np
import pytest

from snlgame import (
    complementary_function,
    complementary_grad_tau,
    complementary_grad_x,
    conjugate_edge_potential,
    dual_range_box,
    duality_map,
    duality_map_inverse,
    edge_potential,
    edge_squared_distances,
    grounded_laplacian,
    position_hessian,
    position_hessian_fd_gap,
    potential,
)

from oracles import fd_gradient, fd_hessian


def random_active_tau(rng, edges, scale=1.0):
    tau = scale * rng.standard_normal(edges.q)
    tau[~edges.active] = 0.0
    return tau


class TestEdgeSquaredDistances:
    def test_three_four_five(self, single_ss):
        net, edges = single_ss
        xi = edge_squared_distances(np.array([[0.0, 0.0], [3.0, 4.0]]), net, edges)
        assert xi[0] == pytest.approx(25.0)

    def test_truth_reproduces_measurements(self, random_rigid_10):
        net, edges = random_rigid_10
        xi = edge_squared_distances(net.ground_truth, net, edges)
        np.testing.assert_array_equal(xi, edges.dsq)

    def test_trilateration_at_origin(self, trilateration):
        net, edges = trilateration
        xi = edge_squared_distances(np.array([[0.0, 0.0]]), net, edges)
        np.testing.assert_allclose(xi[:3], [0.0, 1.0, 1.0])
        np.testing.assert_allclose(xi[3:], [1.0, 1.0, 2.0])  # anchor pairs are constants


class TestEdgePotential:
    def test_zero_at_measurements(self, random_rigid_10):
        _, edges = random_rigid_10
        assert edge_potential(edges.dsq, edges) == 0.0

    def test_single_edge_plugin(self, single_ss):
        _, edges = single_ss
        assert edge_potential(np.array([2.0]), edges) == pytest.approx(1.0)

    def test_composition_is_shared_arithmetic(self, trilateration):
        net, edges = trilateration
        x = np.array([[0.0, 0.0]])
        xi = edge_squared_distances(x, net, edges)
        assert edge_potential(xi, edges) == potential(x, net, edges)
        assert edge_potential(xi, edges) == pytest.approx(0.296875)

    def test_composition_exact_on_random_points(self, random_rigid_10):
        net, edges = random_rigid_10
        rng = np.random.default_rng(0)
        for _ in range(25):
            x = rng.random((net.n_free, 2))
            xi = edge_squared_distances(x, net, edges)
            assert edge_potential(xi, edges) == potential(x, net, edges)


class TestDualityMap:
    def test_zero_at_measurements(self, random_rigid_10):
        _, edges = random_rigid_10
        np.testing.assert_array_equal(duality_map(edges.dsq, edges), 0.0)

    def test_plugin(self, single_ss):
        _, edges = single_ss
        assert duality_map(np.array([2.0]), edges)[0] == pytest.approx(2.0)

    def test_round_trip(self, random_rigid_10):
        _, edges = random_rigid_10
        rng = np.random.default_rng(1)
        for _ in range(100):
            xi = rng.random(edges.q) * 3.0
            back = duality_map_inverse(duality_map(xi, edges), edges)
            assert np.max(np.abs(back - xi)) <= 1e-12 * max(1.0, np.max(np.abs(xi)))


class TestConjugate:
    def test_zero_at_zero(self, random_rigid_10):
        _, edges = random_rigid_10
        assert conjugate_edge_potential(np.zeros(edges.q), edges) == 0.0

    def test_plugin(self, single_ss):
        _, edges = single_ss
        assert conjugate_edge_potential(np.array([2.0]), edges) == pytest.approx(3.0)

    def test_fenchel_equality_hand_case(self, single_ss):
        _, edges = single_ss
        xi = np.array([2.0])
        tau = duality_map(xi, edges)
        lhs = float(xi @ tau)
        assert lhs - edge_potential(xi, edges) - conjugate_edge_potential(tau, edges) == pytest.approx(0.0, abs=1e-15)
        assert lhs == pytest.approx(4.0)

    def test_fenchel_equality_random(self, random_rigid_10):
        _, edges = random_rigid_10
        rng = np.random.default_rng(2)
        for _ in range(100):
            xi = rng.random(edges.q) * 4.0
            tau = duality_map(xi, edges)
            lhs = float(xi @ tau)
            gap = abs(lhs - edge_potential(xi, edges) - conjugate_edge_potential(tau, edges))
            assert gap <= 1e-9 * (1.0 + abs(lhs))

    def test_convex_in_tau(self, random_rigid_10):
        _, edges = random_rigid_10
        rng = np.random.default_rng(3)
        for _ in range(20):
            a, b = rng.standard_normal((2, edges.q))
            mid = conjugate_edge_potential(0.5 * (a + b), edges)
            avg = 0.5 * (
                conjugate_edge_potential(a, edges) + conjugate_edge_potential(b, edges)
            )
            assert mid <= avg + 1e-10 * (1.0 + abs(avg))


class TestComplementaryFunction:
    def test_zero_dual_gives_zero(self, random_rigid_10):
        net, edges = random_rigid_10
        rng = np.random.default_rng(4)
        for _ in range(5):
            x = rng.random((net.n_free, 2))
            assert complementary_function(x, np.zeros(edges.q), net, edges) == 0.0

    def test_single_edge_plugin(self, single_ss):
        net, edges = single_ss
        x = np.array([[0.0, 0.0], [np.sqrt(2.0), 0.0]])
        val = complementary_function(x, np.array([2.0]), net, edges)
        assert val == pytest.approx(1.0)  # 2*(2-1) - 4/4

    def test_total_complementarity(self, random_rigid_10):
        net, edges = random_rigid_10
        rng = np.random.default_rng(5)
        for _ in range(100):
            x = rng.random((net.n_free, 2))
            xi = edge_squared_distances(x, net, edges)
            tau = duality_map(xi, edges)
            p = potential(x, net, edges)
            gap = abs(complementary_function(x, tau, net, edges) - p)
            assert gap <= 1e-9 * (1.0 + abs(p))

    def test_concave_in_tau_exactly_quadratic(self, random_rigid_10):
        net, edges = random_rigid_10
        rng = np.random.default_rng(6)
        x = rng.random((net.n_free, 2))
        for _ in range(20):
            a = random_active_tau(rng, edges)
            b = random_active_tau(rng, edges)
            mid = complementary_function(x, 0.5 * (a + b), net, edges)
            avg = 0.5 * (
                complementary_function(x, a, net, edges)
                + complementary_function(x, b, net, edges)
            )
            gap_expected = np.sum((a - b)[edges.active] ** 2) / 16.0
            assert mid - avg == pytest.approx(gap_expected, rel=1e-9, abs=1e-12)

    def test_midpoint_convex_in_x_on_feasible_duals(self, random_rigid_10):
        net, edges = random_rigid_10
        rng = np.random.default_rng(7)
        for _ in range(20):
            tau = np.abs(random_active_tau(rng, edges))  # nonneg => PSD Laplacian
            a = rng.random((net.n_free, 2))
            b = rng.random((net.n_free, 2))
            mid = complementary_function(0.5 * (a + b), tau, net, edges)
            avg = 0.5 * (
                complementary_function(a, tau, net, edges)
                + complementary_function(b, tau, net, edges)
            )
            assert mid <= avg + 1e-10


class TestComplementaryGradients:
    def test_grad_x_zero_dual(self, random_rigid_10):
        net, edges = random_rigid_10
        rng = np.random.default_rng(8)
        x = rng.random((net.n_free, 2))
        np.testing.assert_array_equal(
            complementary_grad_x(x, np.zeros(edges.q), net, edges), 0.0
        )

    def test_grad_x_single_sa_plugin(self, single_sa):
        net, edges = single_sa
        g = complementary_grad_x(np.array([[1.0, 0.0]]), np.array([2.0]), net, edges)
        np.testing.assert_allclose(g, [[4.0, 0.0]])

    def test_grad_x_matches_fd(self, random_rigid_10):
        net, edges = random_rigid_10
        rng = np.random.default_rng(9)
        for _ in range(10):
            x = rng.random((net.n_free, 2))
            tau = random_active_tau(rng, edges)
            g = complementary_grad_x(x, tau, net, edges)
            fd = fd_gradient(lambda v: complementary_function(v, tau, net, edges), x)
            assert np.max(np.abs(g - fd)) <= 1e-6 * max(1.0, np.max(np.abs(g)))

    def test_grad_tau_vanishes_on_duality_manifold(self, random_rigid_10):
        net, edges = random_rigid_10
        rng = np.random.default_rng(10)
        x = rng.random((net.n_free, 2))
        tau = duality_map(edge_squared_distances(x, net, edges), edges)
        g = complementary_grad_tau(x, tau, net, edges)
        assert np.max(np.abs(g)) <= 1e-12

    def test_grad_tau_plugin(self, single_ss):
        net, edges = single_ss
        x = np.array([[0.0, 0.0], [np.sqrt(2.0), 0.0]])
        g = complementary_grad_tau(x, np.zeros(1), net, edges)
        assert g[0] == pytest.approx(1.0)

    def test_grad_tau_matches_fd(self, random_rigid_10):
        net, edges = random_rigid_10
        rng = np.random.default_rng(11)
        for _ in range(10):
            x = rng.random((net.n_free, 2))
            tau = random_active_tau(rng, edges)
            g = complementary_grad_tau(x, tau, net, edges)
            fd = fd_gradient(lambda t: complementary_function(x, t, net, edges), tau)
            fd[~edges.active] = 0.0  # pinned slots carry no variation
            assert np.max(np.abs(g - fd)) <= 1e-6 * max(1.0, np.max(np.abs(g)))

    def test_anchor_anchor_slots_stay_zero(self, trilateration):
        net, edges = trilateration
        rng = np.random.default_rng(12)
        tau = rng.standard_normal(edges.q)
        g = complementary_grad_tau(np.array([[0.3, 0.7]]), tau, net, edges)
        np.testing.assert_array_equal(g[~edges.active], 0.0)


class TestGroundedLaplacian:
    def test_two_node_ss_edge(self, single_ss):
        net, edges = single_ss
        L = grounded_laplacian(np.array([2.0]), net, edges)
        np.testing.assert_allclose(L, [[2.0, -2.0], [-2.0, 2.0]])
        Q = position_hessian(np.array([2.0]), net, edges)
        np.testing.assert_allclose(np.linalg.eigvalsh(Q), [0.0, 0.0, 8.0, 8.0], atol=1e-12)

    def test_single_sa_edge(self, single_sa):
        net, edges = single_sa
        L = grounded_laplacian(np.array([3.0]), net, edges)
        np.testing.assert_allclose(L, [[3.0]])
        Q = position_hessian(np.array([3.0]), net, edges)
        np.testing.assert_allclose(Q, 6.0 * np.eye(2))

    def test_zero_dual(self, random_rigid_10):
        net, edges = random_rigid_10
        L = grounded_laplacian(np.zeros(edges.q), net, edges)
        np.testing.assert_array_equal(L, 0.0)

    def test_linear_in_tau(self, random_rigid_10):
        net, edges = random_rigid_10
        rng = np.random.default_rng(13)
        a, b = rng.standard_normal((2, edges.q))
        La = grounded_laplacian(a, net, edges)
        Lb = grounded_laplacian(b, net, edges)
        Lab = grounded_laplacian(2.0 * a - 3.0 * b, net, edges)
        np.testing.assert_allclose(Lab, 2.0 * La - 3.0 * Lb, atol=1e-12)


class TestHessianGap:
    def test_zero_dual(self, two_sensors_one_anchor):
        net, edges = two_sensors_one_anchor
        gap = position_hessian_fd_gap(
            np.array([[0.2, 0.2], [0.7, 0.4]]), np.zeros(edges.q), net, edges
        )
        assert gap <= 1e-4

    def test_position_free(self, two_sensors_one_anchor):
        net, edges = two_sensors_one_anchor
        rng = np.random.default_rng(14)
        tau = rng.standard_normal(edges.q)
        for _ in range(2):
            x = rng.random((2, 2))
            assert position_hessian_fd_gap(x, tau, net, edges) <= 1e-4

    def test_single_ss_pattern(self, single_ss):
        net, edges = single_ss
        tau = np.array([2.0])
        x = np.array([[0.1, 0.2], [0.9, 0.4]])
        H = position_hessian(tau, net, edges)
        fd = fd_hessian(
            lambda v: complementary_function(v, tau, net, edges), x
        )
        np.testing.assert_allclose(fd, H, atol=1e-4)
        np.testing.assert_allclose(H[0, :], [4.0, 0.0, -4.0, 0.0])


class TestDualRangeBox:
    def test_unit_boxes_trilateration(self, trilateration):
        net, edges = trilateration
        box = dual_range_box(net, edges)
        # anchor-anchor slots pinned
        np.testing.assert_array_equal(box[3:], 0.0)
        np.testing.assert_allclose(box[:3, 0], -2.0 * edges.dsq[:3])
        assert np.all(box[:3, 1] > 0.0)

    def test_contains_duality_image_of_box_points(self, random_rigid_10):
        net, edges = random_rigid_10
        box = dual_range_box(net, edges)
        rng = np.random.default_rng(15)
        for _ in range(50):
            x = rng.random((net.n_free, 2))
            tau = duality_map(edge_squared_distances(x, net, edges), edges)
            assert np.all(tau >= box[:, 0] - 1e-12)
            assert np.all(tau <= box[:, 1] + 1e-12)
