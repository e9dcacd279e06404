import numpy as np
import pytest

from snlgame import (
    dual_range_box,
    grounded_laplacian,
    is_dual_feasible,
    position_hessian,
    project_box,
    project_dual_feasible,
)

from oracles import grid_project_dual


class TestProjectBox:
    def test_clamp(self):
        box = np.array([[0.0, 1.0], [0.0, 1.0]])
        np.testing.assert_allclose(project_box(np.array([1.5, -0.2]), box), [1.0, 0.0])

    def test_interior_unchanged(self):
        box = np.array([[0.0, 1.0], [0.0, 1.0]])
        v = np.array([0.3, 0.8])
        np.testing.assert_array_equal(project_box(v, box), v)
        np.testing.assert_array_equal(project_box(project_box(v, box), box),
                                      project_box(v, box))

    def test_nonexpansive(self):
        rng = np.random.default_rng(0)
        box = np.array([[0.0, 1.0], [-1.0, 2.0], [0.5, 0.6]])
        for _ in range(1000):
            u, v = rng.standard_normal((2, 3)) * 3.0
            pu, pv = project_box(u, box), project_box(v, box)
            assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-15

    def test_profile_shape(self):
        boxes = np.array([[[0.0, 1.0], [0.0, 1.0]], [[0.0, 2.0], [0.0, 2.0]]])
        x = np.array([[1.4, -0.1], [1.4, -0.1]])
        out = project_box(x, boxes)
        np.testing.assert_allclose(out, [[1.0, 0.0], [1.4, 0.0]])


class TestMembership:
    def test_nonnegative_is_feasible(self, two_sensors_one_anchor):
        net, edges = two_sensors_one_anchor
        rng = np.random.default_rng(1)
        tau = np.abs(rng.standard_normal(edges.q)) * 0.1
        assert is_dual_feasible(tau, net, edges)

    def test_single_ss_negative_infeasible(self, single_ss):
        net, edges = single_ss
        assert not is_dual_feasible(np.array([-1.0]), net, edges)
        L = grounded_laplacian(np.array([-1.0]), net, edges)
        np.testing.assert_allclose(np.linalg.eigvalsh(L), [-2.0, 0.0], atol=1e-12)

    def test_zero_on_boundary(self, random_rigid_10):
        net, edges = random_rigid_10
        assert is_dual_feasible(np.zeros(edges.q), net, edges)

    def test_outside_range_box_infeasible(self, single_sa):
        net, edges = single_sa
        box = dual_range_box(net, edges)
        tau = np.array([box[0, 1] + 1.0])
        assert not is_dual_feasible(tau, net, edges)

    def test_spectrum_shortcut_matches_full_hessian(self):
        # eigenvalue signs of the full position Hessian match the Laplacian's
        from conftest import rigid_instance

        for seed in range(3):
            net, edges = rigid_instance(4, 3, 1.0, seed=seed)  # nN = 8 <= 12
            rng = np.random.default_rng(seed)
            tau = rng.standard_normal(edges.q)
            tau[~edges.active] = 0.0
            wl = np.linalg.eigvalsh(grounded_laplacian(tau, net, edges))
            wq = np.linalg.eigvalsh(position_hessian(tau, net, edges))
            assert (wl[0] >= -1e-12) == (wq[0] >= -1e-12)
            assert wq[0] == pytest.approx(2.0 * wl[0], rel=1e-9, abs=1e-12)


class TestProjectDualFeasible:
    def test_feasible_point_returned_unchanged(self, two_sensors_one_anchor):
        net, edges = two_sensors_one_anchor
        tau0 = np.array([0.05, 0.02, 0.01])
        rep = project_dual_feasible(tau0, net, edges)
        np.testing.assert_array_equal(rep.projected, tau0)
        assert rep.iterations == 1
        assert rep.converged
        assert rep.infeasibility_before == 0.0

    def test_single_ss_negative_projects_to_zero(self, single_ss):
        net, edges = single_ss
        rep = project_dual_feasible(np.array([-1.0]), net, edges)
        assert rep.projected[0] == pytest.approx(0.0, abs=1e-9)
        assert rep.infeasibility_before == pytest.approx(2.0)
        assert rep.converged

    def test_single_sa_psd_binds_before_box(self, single_sa):
        net, edges = single_sa
        box = dual_range_box(net, edges)
        assert box[0, 0] == pytest.approx(-2.0)  # d^2 = 1
        rep = project_dual_feasible(np.array([-3.0]), net, edges)
        assert rep.projected[0] == pytest.approx(0.0, abs=1e-9)

    def test_box_ceiling_binds(self, single_sa):
        net, edges = single_sa
        box = dual_range_box(net, edges)
        rep = project_dual_feasible(np.array([box[0, 1] + 5.0]), net, edges)
        assert rep.projected[0] == pytest.approx(box[0, 1], abs=1e-12)

    def test_idempotent(self, two_sensors_one_anchor):
        net, edges = two_sensors_one_anchor
        rng = np.random.default_rng(2)
        for _ in range(20):
            tau0 = rng.standard_normal(edges.q)
            once = project_dual_feasible(tau0, net, edges).projected
            twice = project_dual_feasible(once, net, edges).projected
            assert np.max(np.abs(twice - once)) <= 1e-8

    def test_output_feasible(self, random_rigid_10):
        net, edges = random_rigid_10
        rng = np.random.default_rng(3)
        for _ in range(10):
            tau0 = rng.standard_normal(edges.q)
            rep = project_dual_feasible(tau0, net, edges)
            assert rep.converged
            assert is_dual_feasible(rep.projected, net, edges, tol=1e-7)

    def test_nonexpansive_sampled(self, two_sensors_one_anchor):
        net, edges = two_sensors_one_anchor
        rng = np.random.default_rng(4)
        for _ in range(50):
            u, v = 0.3 * rng.standard_normal((2, edges.q))
            pu = project_dual_feasible(u, net, edges, tol=1e-10, max_iter=5000).projected
            pv = project_dual_feasible(v, net, edges, tol=1e-10, max_iter=5000).projected
            assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-8

    def test_matches_grid_oracle_single_edge(self, single_ss):
        net, edges = single_ss
        rng = np.random.default_rng(5)
        for _ in range(5):
            tau0 = 2.0 * rng.standard_normal(1)
            mine = project_dual_feasible(tau0, net, edges).projected
            ref = grid_project_dual(tau0, net, edges)
            assert np.max(np.abs(mine - ref)) <= 1e-4

    def test_matches_grid_oracle_three_edges(self, two_sensors_one_anchor):
        net, edges = two_sensors_one_anchor
        assert edges.q == 3
        rng = np.random.default_rng(6)
        for _ in range(5):
            tau0 = 0.5 * rng.standard_normal(3)
            mine = project_dual_feasible(tau0, net, edges, tol=1e-10, max_iter=5000).projected
            ref = grid_project_dual(tau0, net, edges)
            assert np.max(np.abs(mine - ref)) <= 1e-4

    def test_nonneg_mode_is_feasible_and_cheap(self, two_sensors_one_anchor):
        net, edges = two_sensors_one_anchor
        rng = np.random.default_rng(7)
        for _ in range(10):
            tau0 = rng.standard_normal(edges.q)
            rep = project_dual_feasible(tau0, net, edges, nonneg_only=True)
            assert rep.iterations == 1
            assert is_dual_feasible(rep.projected, net, edges)
            assert np.all(rep.projected >= 0.0)

    def test_validates_arguments(self, single_ss):
        net, edges = single_ss
        with pytest.raises(ValueError):
            project_dual_feasible(np.zeros(1), net, edges, tol=0.0)
        with pytest.raises(ValueError):
            project_dual_feasible(np.zeros(1), net, edges, max_iter=0)
