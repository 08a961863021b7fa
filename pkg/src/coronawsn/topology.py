"""Circular field geometry: coronas, staggered sensing regions, node deployment
and the binary-disc coverage model.

Region 0 is the undivided innermost corona around the base station. Outer
coronas are cut into equal angular sectors; every other corona is rotated by
half a sector so that a region borders exactly two regions of the corona below.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class NetworkConfig:
    node_count: int = 100
    diameter: float = 300.0
    corona_count: int | None = None  # None -> round(diameter / node_count)
    regions_per_corona: int = 4
    inner_fraction: float = 0.2
    sensing_radius: float = 25.0
    seed: int = 0

    @property
    def coronas(self) -> int:
        if self.corona_count is not None:
            return int(self.corona_count)
        return int(round(self.diameter / self.node_count))

    def validate(self):
        eta = self.coronas
        if eta < 2:
            raise ValueError(f"need at least 2 coronas, got {eta}")
        if not 0.0 < self.inner_fraction < 1.0:
            raise ValueError("inner_fraction must lie in (0, 1)")
        if self.regions_per_corona < 1:
            raise ValueError("regions_per_corona must be >= 1")
        if self.node_count < self.regions_per_corona * (eta - 1) + 1:
            raise ValueError("too few nodes for the number of regions")
        if self.diameter <= 0 or self.sensing_radius < 0:
            raise ValueError("diameter must be positive, sensing_radius non-negative")


@dataclass(frozen=True)
class Corona:
    index: int  # 1-based, 1 = around the base station
    inner: float
    outer: float

    @property
    def area(self) -> float:
        return math.pi * (self.outer**2 - self.inner**2)


@dataclass(frozen=True)
class SensingRegion:
    id: int
    corona_index: int
    start_angle: float
    span: float
    inner: float
    outer: float
    lower_neighbors: tuple[int, ...] = ()

    @property
    def area(self) -> float:
        return 0.5 * self.span * (self.outer**2 - self.inner**2)

    @property
    def center(self) -> tuple[float, float]:
        if self.corona_index == 1:
            return (0.0, 0.0)
        r = 0.5 * (self.inner + self.outer)
        a = self.start_angle + 0.5 * self.span
        return (r * math.cos(a), r * math.sin(a))

    def contains(self, x: float, y: float, tol: float = 1e-9) -> bool:
        r = math.hypot(x, y)
        if r < self.inner - tol or r > self.outer + tol:
            return False
        if self.corona_index == 1:
            return True
        rel = (math.atan2(y, x) - self.start_angle) % TWO_PI
        return rel <= self.span + tol or rel >= TWO_PI - tol


@dataclass(frozen=True)
class Topology:
    diameter: float
    beta: float
    coronas: tuple[Corona, ...]
    regions: tuple[SensingRegion, ...]
    bs_position: tuple[float, float] = (0.0, 0.0)

    @property
    def radius(self) -> float:
        return 0.5 * self.diameter

    def regions_in(self, corona_index: int) -> list[SensingRegion]:
        return [r for r in self.regions if r.corona_index == corona_index]

    def to_dict(self) -> dict:
        return {
            "diameter": self.diameter,
            "beta": self.beta,
            "bs_position": list(self.bs_position),
            "coronas": [asdict(c) for c in self.coronas],
            "regions": [
                {**asdict(r), "lower_neighbors": list(r.lower_neighbors), "center": list(r.center)}
                for r in self.regions
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass
class Node:
    id: int
    position: tuple[float, float]
    region_id: int
    residual_energy: float
    sensing_radius: float = 25.0
    alive: bool = True
    is_cluster_head: bool = False


def build_topology(config: NetworkConfig) -> Topology:
    config.validate()
    eta = config.coronas
    beta = config.diameter / (2.0 * eta)
    n_sec = config.regions_per_corona
    sector = TWO_PI / n_sec

    coronas = tuple(Corona(a, (a - 1) * beta, a * beta) for a in range(1, eta + 1))
    regions = [SensingRegion(0, 1, 0.0, TWO_PI, 0.0, beta)]
    for a in range(2, eta + 1):
        offset = 0.5 * sector * ((a - 2) % 2)
        first_id = len(regions)
        for j in range(n_sec):
            lower: tuple[int, ...] = ()
            if a >= 3:
                # lower corona is rotated by half a sector the other way
                prev_first = first_id - n_sec
                if offset > 0:
                    lower = (prev_first + j, prev_first + (j + 1) % n_sec)
                else:
                    lower = (prev_first + (j - 1) % n_sec, prev_first + j)
                lower = tuple(sorted(lower))
            regions.append(
                SensingRegion(
                    id=first_id + j,
                    corona_index=a,
                    start_angle=offset + j * sector,
                    span=sector,
                    inner=coronas[a - 1].inner,
                    outer=coronas[a - 1].outer,
                    lower_neighbors=lower,
                )
            )
    return Topology(config.diameter, beta, coronas, tuple(regions))


def apportion(total: int, parts: int) -> list[int]:
    """Largest-remainder split of ``total`` into ``parts`` equal quotas; ties go to
    the lower index."""
    if parts <= 0:
        return []
    quota = total / parts
    counts = [int(math.floor(quota))] * parts
    remainders = [quota - c for c in counts]
    left = total - sum(counts)
    for i in sorted(range(parts), key=lambda i: (-remainders[i], i))[:left]:
        counts[i] += 1
    return counts


def _sample_in_region(rng: np.random.Generator, region: SensingRegion, n: int) -> np.ndarray:
    # area-uniform radius in the annulus, uniform angle in the sector
    r = np.sqrt(rng.uniform(region.inner**2, region.outer**2, size=n))
    a = region.start_angle + rng.uniform(0.0, region.span, size=n)
    return np.column_stack([r * np.cos(a), r * np.sin(a)])


def deploy_nodes(
    topology: Topology, config: NetworkConfig, initial_energy: float = 0.5
) -> list[Node]:
    rng = np.random.default_rng(config.seed)
    n_inner = int(round(config.inner_fraction * config.node_count))
    outer = topology.regions[1:]
    counts = [n_inner] + apportion(config.node_count - n_inner, len(outer))

    nodes: list[Node] = []
    for region, count in zip(topology.regions, counts):
        if count == 0:
            log.warning("region %d received no nodes", region.id)
            continue
        for x, y in _sample_in_region(rng, region, count):
            nodes.append(
                Node(
                    id=len(nodes),
                    position=(float(x), float(y)),
                    region_id=region.id,
                    residual_energy=float(initial_energy),
                    sensing_radius=config.sensing_radius,
                )
            )
    return nodes


# --- coverage -----------------------------------------------------------------


def pixel_covered(node: Node, pixel) -> int:
    a, b = pixel
    i, j = node.position
    return int((a - i) ** 2 + (b - j) ** 2 <= node.sensing_radius**2)


def coverage_probability(nodes, pixel) -> float:
    """Probability that at least one node covers ``pixel``: 1 - prod(1 - P_i)."""
    miss = 1.0
    for node in nodes:
        miss *= 1.0 - pixel_covered(node, pixel)
    return 1.0 - miss


def _disc_grid(topology: Topology, grid_resolution: int) -> np.ndarray:
    r = topology.radius
    step = 2.0 * r / grid_resolution
    ticks = -r + step * (np.arange(grid_resolution) + 0.5)
    xx, yy = np.meshgrid(ticks, ticks)
    inside = xx**2 + yy**2 <= r * r
    return np.column_stack([xx[inside], yy[inside]])


def coverage_map(nodes, topology: Topology, grid_resolution: int) -> np.ndarray:
    """Per-pixel coverage probability on a square grid; NaN outside the disc."""
    r = topology.radius
    step = 2.0 * r / grid_resolution
    ticks = -r + step * (np.arange(grid_resolution) + 0.5)
    xx, yy = np.meshgrid(ticks, ticks)
    miss = np.ones_like(xx)
    for node in nodes:
        if not node.alive:
            continue
        i, j = node.position
        miss *= 1.0 - ((xx - i) ** 2 + (yy - j) ** 2 <= node.sensing_radius**2)
    out = 1.0 - miss
    out[xx**2 + yy**2 > r * r] = np.nan
    return out


def coverage_rate(nodes, topology: Topology, grid_resolution: int = 128) -> float:
    """Fraction of the disc covered by at least one alive node, on a pixel grid."""
    if grid_resolution < 16:
        raise ValueError("grid_resolution must be >= 16")
    pts = _disc_grid(topology, grid_resolution)
    alive = [n for n in nodes if n.alive]
    if not alive:
        return 0.0
    pos = np.array([n.position for n in alive])
    rad2 = np.array([n.sensing_radius**2 for n in alive])
    covered = np.zeros(len(pts), dtype=bool)
    for chunk in range(0, len(alive), 64):
        d2 = ((pts[:, None, :] - pos[None, chunk : chunk + 64, :]) ** 2).sum(axis=2)
        covered |= (d2 <= rad2[None, chunk : chunk + 64]).any(axis=1)
    return float(covered.mean())
