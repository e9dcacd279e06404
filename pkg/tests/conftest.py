import warnings

import numpy as np
import pytest

from snlgame import SensorNetwork, build_edge_set, generate_random_instance
from snlgame.errors import DisconnectedNodeWarning


@pytest.fixture
def trilateration():
    """One free node at (0.25, 0.25) ranged by three anchors; complete graph."""
    net = SensorNetwork(
        dimension=2,
        anchor_positions=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        sensing_radius=2.0,
        ground_truth=np.array([[0.25, 0.25]]),
    )
    return net, build_edge_set(net)


@pytest.fixture
def single_ss():
    """Exactly one sensor-sensor edge (d^2 = 1); the lone anchor is out of range."""
    net = SensorNetwork(
        dimension=2,
        anchor_positions=np.array([[50.0, 50.0]]),
        sensing_radius=1.5,
        ground_truth=np.array([[0.0, 0.0], [1.0, 0.0]]),
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DisconnectedNodeWarning)
        edges = build_edge_set(net)
    return net, edges


@pytest.fixture
def single_sa():
    """Exactly one sensor-anchor edge, anchor at the origin, d^2 = 1."""
    net = SensorNetwork(
        dimension=2,
        anchor_positions=np.array([[0.0, 0.0]]),
        sensing_radius=1.5,
        ground_truth=np.array([[1.0, 0.0]]),
    )
    return net, build_edge_set(net)


@pytest.fixture
def two_sensors_one_anchor():
    """SS edge plus two SA edges: the smallest instance with a 2x2 Laplacian."""
    net = SensorNetwork(
        dimension=2,
        anchor_positions=np.array([[0.5, 0.4]]),
        sensing_radius=0.9,
        ground_truth=np.array([[0.2, 0.3], [0.8, 0.35]]),
    )
    return net, build_edge_set(net)


@pytest.fixture
def random_rigid_10():
    """A 10-player rigid instance used by the property suites."""
    net, edges = rigid_instance(10, 4, 1.0, seed=7)
    return net, edges


def rigid_instance(n_free, n_anchors, radius, seed):
    from snlgame import passes_rigidity_screen

    for attempt in range(50):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            net = generate_random_instance(2, n_free, n_anchors, radius, seed * 100 + attempt)
            edges = build_edge_set(net)
        if passes_rigidity_screen(net, edges):
            return net, edges
    raise RuntimeError("no rigid instance found")
