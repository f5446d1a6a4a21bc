"""In-process simulation of the coordinator and blackboard models.

Only bits are simulated: sites run in the same process and the ledger records
what each message would cost.  Sending an edge costs two vertex ids plus one
64-bit weight; a blackboard posting is charged once, however many sites read it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputError
from .graph import WeightedGraph
from .sparsify import _splitmix64

REAL_BITS = 64
COUNT_BITS = 64
LEDGER_COLUMNS = (
    "protocol", "s", "seed", "uplink_bits", "downlink_bits", "broadcast_bits", "total_bits", "rounds",
)


@dataclass(frozen=True)
class CostModel:
    n: int
    real_bits: int = REAL_BITS
    count_bits: int = COUNT_BITS

    @property
    def vertex_bits(self) -> int:
        return max(1, math.ceil(math.log2(self.n))) if self.n > 1 else 1

    @property
    def edge_bits(self) -> int:
        return 2 * self.vertex_bits + self.real_bits

    def point_bits(self, dim: int, weighted: bool = False) -> int:
        return (dim + int(weighted)) * self.real_bits

    def describe(self) -> dict:
        return {
            "vertex_bits": self.vertex_bits,
            "edge_bits": self.edge_bits,
            "real_bits": self.real_bits,
            "count_bits": self.count_bits,
        }


@dataclass(frozen=True)
class EdgeShard:
    site: int
    edge_ids: np.ndarray  # indices into the global canonical edge list
    graph: WeightedGraph


class CommLedger:
    """Per-site uplink/downlink counters, blackboard bits and a round counter.

    Every charge is also appended to ``events`` so the total can be audited.
    """

    DIRECTIONS = ("up", "down", "board")

    def __init__(self, s: int, cost: CostModel):
        if s < 1:
            raise InputError("need at least one site")
        self.s = s
        self.cost = cost
        self.uplink = np.zeros(s, dtype=np.int64)
        self.downlink = np.zeros(s, dtype=np.int64)
        self.broadcast = 0
        self.rounds = 0
        self.events: list[tuple] = []

    def charge_bits(self, site: int, bits: int, direction: str, label: str = ""):
        bits = int(bits)
        if bits < 0:
            raise InputError("cannot charge a negative amount")
        if direction not in self.DIRECTIONS:
            raise InputError(f"unknown direction {direction!r}")
        if bits == 0:
            return self
        if direction == "up":
            self.uplink[site] += bits
        elif direction == "down":
            self.downlink[site] += bits
        else:
            self.broadcast += bits
        self.events.append((self.rounds, site, direction, bits, label))
        return self

    def charge_edges(self, site: int, count: int, direction: str = "up", label: str = "edges"):
        return self.charge_bits(site, int(count) * self.cost.edge_bits, direction, label)

    def charge_scalars(self, site: int, count: int, direction: str = "up", label: str = "scalars"):
        return self.charge_bits(site, int(count) * self.cost.count_bits, direction, label)

    def post_broadcast(self, bits: int, site: int = -1, label: str = "post"):
        return self.charge_bits(site, bits, "board", label)

    def next_round(self):
        self.rounds += 1
        return self

    @property
    def uplink_bits(self) -> int:
        return int(self.uplink.sum())

    @property
    def downlink_bits(self) -> int:
        return int(self.downlink.sum())

    @property
    def total_bits(self) -> int:
        return self.uplink_bits + self.downlink_bits + int(self.broadcast)

    def audit(self) -> bool:
        return sum(e[3] for e in self.events) == self.total_bits

    def row(self, protocol: str, seed) -> dict:
        return {
            "protocol": protocol,
            "s": self.s,
            "seed": seed,
            "uplink_bits": self.uplink_bits,
            "downlink_bits": self.downlink_bits,
            "broadcast_bits": int(self.broadcast),
            "total_bits": self.total_bits,
            "rounds": self.rounds,
        }


# module-level spellings of the ledger operations
def charge_edges(ledger: CommLedger, site: int, count: int, direction: str = "up") -> CommLedger:
    return ledger.charge_edges(site, count, direction)


def charge_scalars(ledger: CommLedger, site: int, count: int, direction: str = "up") -> CommLedger:
    return ledger.charge_scalars(site, count, direction)


def post_broadcast(ledger: CommLedger, bits: int) -> CommLedger:
    return ledger.post_broadcast(bits)


PARTITION_STRATEGIES = ("random", "round_robin", "by_vertex")


def partition_edges(g: WeightedGraph, s: int, strategy: str = "random", seed=0) -> list[EdgeShard]:
    """Split the edge list across ``s`` sites.

    ``by_vertex`` sends every edge to the site chosen by hashing its lower
    endpoint, so each site holds whole stars.
    """
    if s < 1:
        raise ConfigError("need at least one site")
    if strategy == "random":
        site = np.random.default_rng(seed).integers(0, s, g.m)
    elif strategy == "round_robin":
        site = np.arange(g.m) % s
    elif strategy == "by_vertex":
        salt = np.uint64(int(np.random.SeedSequence(seed).generate_state(1, np.uint64)[0]))
        site = (_splitmix64(g.u.astype(np.uint64) ^ salt) % np.uint64(s)).astype(np.int64)
    else:
        raise ConfigError(f"unknown partition strategy {strategy!r}")
    shards = []
    for i in range(s):
        ids = np.flatnonzero(site == i)
        shards.append(EdgeShard(i, ids, g.subgraph(ids)))
    return shards


def reassemble(shards) -> WeightedGraph:
    shards = list(shards)
    n = shards[0].graph.n
    u = np.concatenate([sh.graph.u for sh in shards])
    v = np.concatenate([sh.graph.v for sh in shards])
    w = np.concatenate([sh.graph.w for sh in shards])
    return WeightedGraph(n, u, v, w)
