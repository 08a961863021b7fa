import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coronawsn.topology import (
    NetworkConfig,
    Node,
    apportion,
    build_topology,
    coverage_map,
    coverage_probability,
    coverage_rate,
    deploy_nodes,
    pixel_covered,
)


def test_default_field():
    topo = build_topology(NetworkConfig())
    assert len(topo.coronas) == 3
    assert topo.beta == 50.0
    assert len(topo.regions) == 9
    assert topo.regions[0].area == pytest.approx(math.pi * 50.0**2, rel=1e-12)
    assert topo.bs_position == (0.0, 0.0)


def test_four_coronas():
    topo = build_topology(NetworkConfig(diameter=400))
    assert len(topo.coronas) == 4
    assert len(topo.regions) == 13


@pytest.mark.parametrize("diameter", [300, 400, 500])
def test_area_identity(diameter):
    topo = build_topology(NetworkConfig(diameter=diameter))
    total = math.pi * (diameter / 2) ** 2
    assert abs(sum(r.area for r in topo.regions) - total) <= 1e-9 * total
    assert abs(sum(c.area for c in topo.coronas) - total) <= 1e-9 * total


@pytest.mark.parametrize("diameter", [300, 400, 500, 700])
def test_spans_partition_and_two_lower_neighbours(diameter):
    topo = build_topology(NetworkConfig(diameter=diameter))
    for a in range(2, len(topo.coronas) + 1):
        regs = topo.regions_in(a)
        assert sum(r.span for r in regs) == pytest.approx(2 * math.pi, rel=1e-12)
        if a == 2:
            assert all(r.lower_neighbors == () for r in regs)
            continue
        for r in regs:
            assert len(r.lower_neighbors) == 2
            # brute-force angular overlap with the lower corona
            hits = []
            for low in topo.regions_in(a - 1):
                mids = r.start_angle + r.span * (np.arange(1, 200) / 200)
                rel = (mids - low.start_angle) % (2 * math.pi)
                if np.any(rel < low.span - 1e-9):
                    hits.append(low.id)
            assert tuple(sorted(hits)) == r.lower_neighbors


def test_invalid_configs():
    with pytest.raises(ValueError):
        build_topology(NetworkConfig(diameter=100))  # one corona
    with pytest.raises(ValueError):
        build_topology(NetworkConfig(inner_fraction=1.0))
    with pytest.raises(ValueError):
        build_topology(NetworkConfig(node_count=8, diameter=24))


def test_apportion():
    assert apportion(80, 8) == [10] * 8
    assert apportion(7, 8) == [1] * 7 + [0]
    assert apportion(10, 3) == [4, 3, 3]
    assert apportion(5, 0) == []


def test_deploy_default_counts_and_containment():
    cfg = NetworkConfig(seed=3)
    topo = build_topology(cfg)
    nodes = deploy_nodes(topo, cfg)
    counts = np.bincount([n.region_id for n in nodes], minlength=9)
    assert counts.tolist() == [20] + [10] * 8
    assert [n.id for n in nodes] == list(range(100))
    for n in nodes:
        assert topo.regions[n.region_id].contains(*n.position)
        assert n.residual_energy == 0.5 and n.alive


def test_deploy_tiny_network_leaves_one_region_empty(caplog):
    cfg = NetworkConfig(node_count=9, diameter=27)
    topo = build_topology(cfg)
    nodes = deploy_nodes(topo, cfg)
    counts = np.bincount([n.region_id for n in nodes], minlength=9)
    assert counts[0] == 2
    assert sorted(counts[1:].tolist()) == [0] + [1] * 7
    assert "no nodes" in caplog.text


def test_deploy_is_seeded():
    cfg = NetworkConfig(seed=11)
    topo = build_topology(cfg)
    a = [n.position for n in deploy_nodes(topo, cfg)]
    b = [n.position for n in deploy_nodes(topo, cfg)]
    c = [n.position for n in deploy_nodes(topo, NetworkConfig(seed=12))]
    assert a == b and a != c


def _node(x, y, h, i=0):
    return Node(i, (x, y), 0, 0.5, h)


def test_pixel_covered_examples():
    assert pixel_covered(_node(0, 0, 10), (3, 4)) == 1
    assert pixel_covered(_node(0, 0, 10), (10, 1)) == 0
    assert pixel_covered(_node(0, 0, 10), (6, 8)) == 1  # exactly on the edge


def test_coverage_probability_examples():
    assert coverage_probability([_node(0, 0, 10), _node(100, 0, 10)], (1, 1)) == 1.0
    assert coverage_probability([_node(50, 0, 10), _node(100, 0, 10)], (1, 1)) == 0.0


def test_coverage_probability_any_of_oracle():
    rng = np.random.default_rng(0)
    for _ in range(100):
        nodes = [_node(*rng.uniform(-150, 150, 2), rng.uniform(5, 60), i) for i in range(20)]
        for pixel in rng.uniform(-150, 150, (20, 2)):
            direct = any(math.dist(n.position, pixel) <= n.sensing_radius for n in nodes)
            assert coverage_probability(nodes, pixel) == float(direct)


def test_coverage_rate_examples():
    topo = build_topology(NetworkConfig())
    assert coverage_rate([_node(0, 0, 150)], topo, 128) == pytest.approx(1.0, abs=1 / 128)
    assert coverage_rate([_node(0, 0, 75)], topo, 128) == pytest.approx(0.25, abs=0.02)
    dead = _node(0, 0, 150)
    dead.alive = False
    assert coverage_rate([dead], topo) == 0.0
    assert coverage_rate([], topo) == 0.0
    with pytest.raises(ValueError):
        coverage_rate([], topo, 8)


def test_coverage_map_agrees_with_rate():
    cfg = NetworkConfig(seed=5)
    topo = build_topology(cfg)
    nodes = deploy_nodes(topo, cfg)
    m = coverage_map(nodes, topo, 64)
    assert np.nanmean(m) == pytest.approx(coverage_rate(nodes, topo, 64), abs=1e-12)
    assert np.isnan(m[0, 0])


def test_topology_json_round_trip():
    import json

    d = json.loads(build_topology(NetworkConfig()).dumps())
    assert len(d["regions"]) == 9
    assert d["beta"] == 50.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-150, 150), st.floats(-150, 150), st.floats(0, 80)), min_size=1, max_size=8),
       st.tuples(st.floats(-150, 150), st.floats(-150, 150)))
def test_de_morgan_property(specs, pixel):
    nodes = [_node(x, y, h, i) for i, (x, y, h) in enumerate(specs)]
    miss = np.prod([1 - pixel_covered(n, pixel) for n in nodes])
    assert coverage_probability(nodes, pixel) == 1 - miss
