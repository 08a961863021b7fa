"""Round-based lifetime simulation.

Two protocols share the same energy bookkeeping:

* ``proposed``: layer-controlled cluster-head election (inner coronas first)
  and 3-tier forwarding: member -> CH, CH -> lower-corona CH, corona-2 CH -> BS.
* ``leach``: classic probabilistic self-election with direct CH -> BS uplinks.

Node state lives in flat numpy arrays (:class:`NetworkState`) so a full
8000-round run stays cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .radio import RadioParams, agg_energy, rx_energy, tx_energy, tx_energy_array
from .topology import NetworkConfig, Node, Topology, build_topology, deploy_nodes

BS = -1  # receiver id used for the base station

PROTOCOLS = ("proposed", "leach")


@dataclass(frozen=True)
class ProtocolParams:
    packet_bits: int = 4000
    ch_energy_quantile: float = 0.05
    initial_energy: float = 0.5
    leach_p: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.ch_energy_quantile <= 1.0:
            raise ValueError("ch_energy_quantile must lie in (0, 1]")
        if self.packet_bits <= 0:
            raise ValueError("packet_bits must be positive")
        if self.initial_energy < 0:
            raise ValueError("initial_energy must be non-negative")
        if not 0.0 < self.leach_p <= 1.0:
            raise ValueError("leach_p must lie in (0, 1]")


@dataclass
class NetworkState:
    positions: np.ndarray  # (L, 2)
    energy: np.ndarray  # (L,)
    alive: np.ndarray  # (L,) bool
    region: np.ndarray  # (L,) int

    @classmethod
    def from_nodes(cls, nodes: list[Node]) -> "NetworkState":
        order = sorted(nodes, key=lambda n: n.id)
        if [n.id for n in order] != list(range(len(order))):
            raise ValueError("node ids must be 0..L-1")
        return cls(
            positions=np.array([n.position for n in order], dtype=float).reshape(-1, 2),
            energy=np.array([n.residual_energy for n in order], dtype=float),
            alive=np.array([n.alive for n in order], dtype=bool),
            region=np.array([n.region_id for n in order], dtype=int),
        )

    def copy(self) -> "NetworkState":
        return NetworkState(
            self.positions.copy(), self.energy.copy(), self.alive.copy(), self.region.copy()
        )

    def __len__(self):
        return len(self.energy)


@dataclass
class RoundState:
    round_index: int
    ch_assignment: dict[int, int]
    alive: np.ndarray
    energy_ledger: np.ndarray
    edges: list[tuple[int, int, int]] = field(default_factory=list)  # (sender, receiver, tier)


@dataclass
class SimReport:
    protocol: str
    seed: int
    fnd: int | None
    adt: int | None
    alive_series: list[int]
    energy_series: list[float]
    ch_series: list[int]
    initial_energy: float
    consumed_series: list[float]  # cumulative ledger total after each round

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "seed": self.seed,
            "fnd": self.fnd,
            "adt": self.adt,
            "rounds": len(self.alive_series),
            "initial_energy": self.initial_energy,
            "final_alive": self.alive_series[-1] if self.alive_series else None,
            "final_residual_joules": self.energy_series[-1] if self.energy_series else None,
        }

    def csv_rows(self) -> list[str]:
        rows = ["round,alive,total_residual_joules,ch_count"]
        for r, (a, e, c) in enumerate(zip(self.alive_series, self.energy_series, self.ch_series), 1):
            rows.append(f"{r},{a},{e:.12g},{c}")
        return rows


# --- election ---------------------------------------------------------------


def _region_members(state: NetworkState, n_regions: int) -> list[np.ndarray]:
    return [np.flatnonzero(state.region == r) for r in range(n_regions)]


def _shortlist(ids: np.ndarray, energy: np.ndarray, quantile: float) -> np.ndarray:
    m = max(1, math.ceil(quantile * len(ids)))
    order = np.lexsort((ids, -energy))
    return ids[order[:m]]


def _closest(ids: np.ndarray, dist: np.ndarray) -> int:
    return int(ids[np.lexsort((ids, dist))[0]])


def elect_cluster_heads(
    state: NetworkState, topology: Topology, params: ProtocolParams, members=None
) -> dict[int, int]:
    """Return ``{region_id: node_id}`` for every region that has an alive node.

    Coronas are processed inside-out: corona-2 winners are the shortlisted
    node closest to the region centre, higher coronas pick the shortlisted node
    with the smallest summed distance to the CHs already elected in the two
    regions they border below. Corona 1 never gets a CH.
    """
    if members is None:
        members = _region_members(state, len(topology.regions))
    chs: dict[int, int] = {}
    for region in sorted(topology.regions, key=lambda r: (r.corona_index, r.id)):
        if region.corona_index == 1:
            continue
        ids = members[region.id]
        ids = ids[state.alive[ids]]
        if len(ids) == 0:
            continue
        short = _shortlist(ids, state.energy[ids], params.ch_energy_quantile)
        pts = state.positions[short]
        anchors = [state.positions[chs[n]] for n in region.lower_neighbors if n in chs]
        if region.corona_index == 2 or not anchors:
            # no elected CH below to anchor on: fall back to the region centre
            anchors = [np.asarray(region.center)]
        dist = sum(np.hypot(*(pts - a).T) for a in anchors)
        chs[region.id] = _closest(short, np.atleast_1d(dist))
    return chs


# --- bookkeeping helpers ----------------------------------------------------


class _Ledger:
    """Debits energy and tracks nodes that ran dry this round."""

    def __init__(self, state: NetworkState):
        self.state = state
        self.spent = np.zeros(len(state))
        self.failed = np.zeros(len(state), dtype=bool)

    def pay(self, node: int, cost: float) -> bool:
        if self.failed[node]:
            return False
        if cost > self.state.energy[node]:
            self.failed[node] = True
            return False
        self.state.energy[node] -= cost
        self.spent[node] += cost
        return True

    def pay_many(self, nodes: np.ndarray, costs: np.ndarray) -> np.ndarray:
        ok = (costs <= self.state.energy[nodes]) & ~self.failed[nodes]
        self.failed[nodes[~ok]] = True
        paid = nodes[ok]
        self.state.energy[paid] -= costs[ok]
        self.spent[paid] += costs[ok]
        return ok

    def receive(self, node: int, packets: int, cost: float) -> int:
        """Charge reception of up to ``packets`` packets; returns how many fit."""
        if packets <= 0 or self.failed[node]:
            return 0
        n = min(packets, int(self.state.energy[node] // cost)) if cost > 0 else packets
        while n > 0 and n * cost > self.state.energy[node]:
            n -= 1
        if n < packets:
            self.failed[node] = True
        if n:
            self.state.energy[node] -= n * cost
            self.spent[node] += n * cost
        return n


def _nearest_target(
    state: NetworkState, src: np.ndarray, cand: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """For each sender pick the closest candidate CH (ties -> lower node id).

    ``cand`` is an (n_src, k) matrix of node ids, -1 where no candidate exists.
    Returns (receiver ids or BS, distance).
    """
    valid = cand >= 0
    diff = state.positions[np.where(valid, cand, 0)] - state.positions[src][:, None, :]
    dist = np.where(valid, np.hypot(diff[..., 0], diff[..., 1]), np.inf)
    key = np.where(valid, cand, np.iinfo(np.int64).max)
    # lexicographic argmin over (dist, id)
    order = np.lexsort((key, dist), axis=1)[:, 0]
    pick = cand[np.arange(len(src)), order]
    d = dist[np.arange(len(src)), order]
    none = ~valid.any(axis=1)
    d_bs = np.hypot(*state.positions[src].T)
    pick = np.where(none, BS, pick)
    d = np.where(none, d_bs, d)
    return pick, d


def _finish_round(state: NetworkState, ledger: _Ledger, radio: RadioParams, k: int):
    floor = tx_energy(radio, k, 0.0)
    dying = state.alive & (ledger.failed | (state.energy < floor))
    state.alive &= ~dying


# --- proposed protocol ------------------------------------------------------


def route_data(
    state: NetworkState,
    topology: Topology,
    ch_assignment: dict[int, int],
    radio: RadioParams,
    params: ProtocolParams,
    record_edges: bool = False,
) -> RoundState:
    """Move one round of data to the BS and debit every hop.

    Energy is debited in place on ``state``; nodes that could not cover a
    charge are marked dead once the round is over.
    """
    k = params.packet_bits
    ledger = _Ledger(state)
    edges: list[tuple[int, int, int]] = []
    regions = topology.regions
    ch_nodes = set(ch_assignment.values())

    # tier 1: members -> own CH or a CH of a bordered lower region; corona 1 -> BS
    senders = np.array(
        [i for i in np.flatnonzero(state.alive) if i not in ch_nodes], dtype=int
    )
    received = {ch: 0 for ch in ch_nodes}
    if len(senders):
        cand = np.full((len(senders), 3), -1, dtype=int)
        for row, i in enumerate(senders):
            reg = regions[state.region[i]]
            if reg.corona_index == 1:
                continue
            cand[row, 0] = ch_assignment.get(reg.id, -1)
            for col, low in enumerate(reg.lower_neighbors, start=1):
                cand[row, col] = ch_assignment.get(low, -1)
        dest, dist = _nearest_target(state, senders, cand)
        ok = ledger.pay_many(senders, tx_energy_array(radio, k, dist))
        for i, j, sent in zip(senders, dest, ok):
            if not sent:
                continue
            if j != BS:
                received[int(j)] += 1
            if record_edges:
                edges.append((int(i), int(j), 1))

    rx_cost = rx_energy(radio, k)
    inbox = {ch: 0 for ch in ch_nodes}  # packets actually accepted
    for ch, n in received.items():
        inbox[ch] += ledger.receive(ch, n, rx_cost)

    # tier 2 (outermost corona first), then tier 3 from corona 2
    for corona in range(len(topology.coronas), 1, -1):
        for reg in topology.regions_in(corona):
            ch = ch_assignment.get(reg.id)
            if ch is None:
                continue
            if inbox[ch] and not ledger.pay(ch, agg_energy(radio, k, inbox[ch])):
                continue
            lower = [ch_assignment[n] for n in reg.lower_neighbors if n in ch_assignment]
            if lower:
                d = [math.dist(state.positions[ch], state.positions[c]) for c in lower]
                target = min(zip(d, lower))[1]
                dist = min(d)
            else:
                target, dist = BS, math.hypot(*state.positions[ch])
            if not ledger.pay(ch, tx_energy(radio, k, dist)):
                continue
            if target != BS:
                inbox[target] += ledger.receive(target, 1, rx_cost)
            if record_edges:
                edges.append((ch, target, 2 if corona >= 3 else 3))

    _finish_round(state, ledger, radio, k)
    return RoundState(0, dict(ch_assignment), state.alive.copy(), ledger.spent, edges)


# --- LEACH baseline ---------------------------------------------------------


class LeachElection:
    """Probabilistic CH self-election with rotation over ``1/p`` rounds."""

    def __init__(self, n_nodes: int, p: float, rng: np.random.Generator):
        self.p = p
        self.epoch = max(1, int(round(1.0 / p)))
        self.rng = rng
        self.eligible = np.ones(n_nodes, dtype=bool)

    def elect(self, round_index: int, alive: np.ndarray) -> np.ndarray:
        r = round_index % self.epoch
        if r == 0:
            self.eligible[:] = True
        draw = self.rng.random(len(alive))
        denom = 1.0 - self.p * r
        threshold = self.p / denom if denom > 0 else 1.0
        heads = alive & self.eligible & (draw < threshold)
        self.eligible &= ~heads
        return np.flatnonzero(heads)


def leach_baseline_round(
    state: NetworkState,
    heads: np.ndarray,
    radio: RadioParams,
    params: ProtocolParams,
    record_edges: bool = False,
) -> RoundState:
    """One LEACH data round given the self-elected ``heads``."""
    k = params.packet_bits
    ledger = _Ledger(state)
    edges: list[tuple[int, int, int]] = []
    heads = np.asarray(heads, dtype=int)
    is_head = np.zeros(len(state), dtype=bool)
    is_head[heads] = True
    senders = np.flatnonzero(state.alive & ~is_head)

    inbox = {int(h): 0 for h in heads}
    if len(senders):
        cand = np.broadcast_to(heads, (len(senders), len(heads))) if len(heads) else np.full((len(senders), 1), -1)
        dest, dist = _nearest_target(state, senders, np.asarray(cand))
        ok = ledger.pay_many(senders, tx_energy_array(radio, k, dist))
        counts: dict[int, int] = {}
        for i, j, sent in zip(senders, dest, ok):
            if not sent:
                continue
            if j != BS:
                counts[int(j)] = counts.get(int(j), 0) + 1
            if record_edges:
                edges.append((int(i), int(j), 1))
        rx_cost = rx_energy(radio, k)
        for h, n in counts.items():
            inbox[h] = ledger.receive(h, n, rx_cost)

    for h in map(int, heads):
        if inbox[h] and not ledger.pay(h, agg_energy(radio, k, inbox[h])):
            continue
        if ledger.pay(h, tx_energy(radio, k, math.hypot(*state.positions[h]))) and record_edges:
            edges.append((h, BS, 3))

    _finish_round(state, ledger, radio, k)
    chs = {i: int(h) for i, h in enumerate(heads)}
    return RoundState(0, chs, state.alive.copy(), ledger.spent, edges)


# --- driver -----------------------------------------------------------------


def initial_state(config: NetworkConfig, params: ProtocolParams) -> tuple[Topology, NetworkState]:
    topology = build_topology(config)
    nodes = deploy_nodes(topology, config, params.initial_energy)
    state = NetworkState.from_nodes(nodes)
    return topology, state


def iter_rounds(
    config: NetworkConfig,
    params: ProtocolParams,
    radio: RadioParams,
    protocol: str = "proposed",
    max_rounds: int = 8000,
    record_edges: bool = False,
    state: NetworkState | None = None,
    topology: Topology | None = None,
) -> Iterator[tuple[RoundState, NetworkState]]:
    """Yield ``(RoundState, NetworkState)`` after every round until the network
    is dead or ``max_rounds`` is reached."""
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}; expected one of {PROTOCOLS}")
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    if state is None or topology is None:
        topology, state = initial_state(config, params)
    members = _region_members(state, len(topology.regions))
    leach = None
    if protocol == "leach":
        rng = np.random.default_rng([config.seed, 0x1EAC])
        leach = LeachElection(len(state), params.leach_p, rng)

    for r in range(1, max_rounds + 1):
        if leach is None:
            chs = elect_cluster_heads(state, topology, params, members)
            rs = route_data(state, topology, chs, radio, params, record_edges)
        else:
            heads = leach.elect(r - 1, state.alive)
            rs = leach_baseline_round(state, heads, radio, params, record_edges)
        rs.round_index = r
        yield rs, state
        if not state.alive.any():
            break


def run_simulation(
    config: NetworkConfig,
    params: ProtocolParams,
    radio: RadioParams,
    protocol: str = "proposed",
    max_rounds: int = 8000,
) -> SimReport:
    topology, state = initial_state(config, params)
    n = len(state)
    initial = float(state.energy.sum())
    alive_series: list[int] = []
    energy_series: list[float] = []
    ch_series: list[int] = []
    consumed: list[float] = []
    total = 0.0
    fnd = adt = None
    for rs, st in iter_rounds(
        config, params, radio, protocol, max_rounds, state=state, topology=topology
    ):
        alive = int(st.alive.sum())
        total += float(rs.energy_ledger.sum())
        alive_series.append(alive)
        energy_series.append(float(st.energy.sum()))
        ch_series.append(len(rs.ch_assignment))
        consumed.append(total)
        if fnd is None and alive < n:
            fnd = rs.round_index
        if adt is None and alive == 0:
            adt = rs.round_index
    return SimReport(
        protocol, config.seed, fnd, adt, alive_series, energy_series, ch_series, initial, consumed
    )
