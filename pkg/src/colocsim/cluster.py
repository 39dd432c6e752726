"""Simulated serverless cluster: nodes, function hosts, TTL lifecycle and the event log.

Resources are homogeneous host slots. A node holds at most ``capacity`` live
function hosts, and at most one host per function. Every state change is
appended to an :class:`EventLog`, which is the only input the metrics need.
"""

from __future__ import annotations

import csv
import io
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

PLACE = "PLACE"
WARM_EXEC = "WARM_EXEC"
EVICT = "EVICT"
EVENT_KINDS = (PLACE, WARM_EXEC, EVICT)

DEFAULT_TTL = 20
LOG_HEADER = ("tick", "event", "function_id", "owner", "node_id", "cold")


class PlacementOverflow(RuntimeError):
    """A host was placed on a node without room for it (scheduler bug)."""


class ClusterFull(RuntimeError):
    """No node can accept the requested placement."""


@dataclass(frozen=True)
class FunctionSpec:
    """A deployable function owned by one user.

    ``packages`` maps package name to declared size and keeps insertion order.
    """

    function_id: str
    owner: str
    app_id: str | None = None
    packages: tuple[tuple[str, int], ...] = ()
    resource_demand: int = 1

    def __post_init__(self):
        if self.resource_demand < 1:
            raise ValueError(f"resource_demand must be >= 1, got {self.resource_demand}")
        if isinstance(self.packages, dict):
            object.__setattr__(self, "packages", tuple(self.packages.items()))
        else:
            object.__setattr__(self, "packages", tuple((str(n), int(s)) for n, s in self.packages))

    @property
    def largest_package(self) -> str:
        """Name of the largest declared package; ties go to the lexicographically smallest name."""
        if not self.packages:
            raise ValueError(f"function {self.function_id!r} declares no packages")
        return min(self.packages, key=lambda p: (-p[1], p[0]))[0]


@dataclass
class HostRecord:
    function_id: str
    owner: str
    node_id: int
    expires_at: int
    born_tick: int
    demand: int = 1
    _cluster: "ClusterState | None" = field(default=None, repr=False, compare=False)

    @property
    def ttl_remaining(self) -> int:
        return self.expires_at - self._cluster.clock


class LogEntry(NamedTuple):
    tick: int
    event: str
    function_id: str
    owner: str
    node_id: int
    cold: bool


class EventLog:
    """Append-only record of placements, warm executions and evictions."""

    def __init__(self, entries: Iterable[LogEntry] = ()):
        self.entries: list[LogEntry] = [LogEntry(*e) for e in entries]

    def append(self, tick, event, function_id, owner, node_id, cold):
        self.entries.append(LogEntry(tick, event, function_id, owner, node_id, cold))

    def __iter__(self) -> Iterator[LogEntry]:
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def count(self, event: str) -> int:
        return sum(1 for e in self.entries if e.event == event)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LOG_HEADER)
        for e in self.entries:
            w.writerow((e.tick, e.event, e.function_id, e.owner, e.node_id, int(e.cold)))
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "EventLog":
        rows = csv.reader(io.StringIO(text))
        header = next(rows, None)
        if tuple(header or ()) != LOG_HEADER:
            raise ValueError(f"bad event log header: {header!r}")
        entries = []
        for lineno, row in enumerate(rows, start=2):
            if not row:
                continue
            tick, event, fid, owner, node, cold = row
            if event not in EVENT_KINDS:
                raise ValueError(f"line {lineno}: unknown event {event!r}")
            entries.append(LogEntry(int(tick), event, fid, owner, int(node), cold == "1"))
        return cls(entries)

    @classmethod
    def read_csv(cls, path) -> "EventLog":
        with open(path, newline="") as fh:
            return cls.from_csv(fh.read())


class CountingLog:
    """Drop-in log for large sweeps: keeps per-event counts, not entries."""

    def __init__(self):
        self.counts = dict.fromkeys(EVENT_KINDS, 0)

    def append(self, tick, event, function_id, owner, node_id, cold):
        self.counts[event] += 1

    def count(self, event: str) -> int:
        return self.counts.get(event, 0)

    def __len__(self):
        return sum(self.counts.values())


class NodeState:
    __slots__ = ("node_id", "capacity", "used", "hosts", "user_counts")

    def __init__(self, node_id: int, capacity: int):
        self.node_id = node_id
        self.capacity = capacity
        self.used = 0
        self.hosts: dict[str, HostRecord] = {}
        self.user_counts: Counter = Counter()

    @property
    def resident_hosts(self) -> list[HostRecord]:
        return list(self.hosts.values())

    @property
    def user_set(self) -> set:
        return set(self.user_counts)

    @property
    def free(self) -> int:
        return self.capacity - self.used

    def __repr__(self):
        return f"NodeState(node_id={self.node_id}, used={self.used}/{self.capacity}, users={len(self.user_counts)})"


def check_resource(node: NodeState, demand: int = 1) -> bool:
    """True iff ``node`` has at least ``demand`` free slots."""
    if demand < 1:
        raise ValueError(f"demand must be >= 1, got {demand}")
    return node.capacity - node.used >= demand


class ClusterState:
    """Mutable cluster state; single-threaded by design."""

    def __init__(self, n_nodes: int, capacity: int = 1024, ttl: int = DEFAULT_TTL, log: EventLog | None = None):
        if n_nodes < 1:
            raise ValueError(f"n_nodes must be >= 1, got {n_nodes}")
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        if ttl < 1:
            raise ValueError(f"ttl must be >= 1, got {ttl}")
        self.nodes = [NodeState(i, capacity) for i in range(n_nodes)]
        self.ttl = ttl
        self.clock = 0
        self.log = log if log is not None else EventLog()
        # function_id -> {node_id: HostRecord}
        self.function_hosts: dict[str, dict[int, HostRecord]] = defaultdict(dict)
        # owner -> {node_id: live host count}
        self.user_nodes: dict[str, Counter] = defaultdict(Counter)
        self._expiry: dict[int, list[HostRecord]] = defaultdict(list)
        # distinct active users per node, mirrors len(node.user_counts)
        self.variety = [0] * n_nodes
        self.listeners: list = []

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def hosts_of(self, function_id: str) -> dict[int, HostRecord]:
        return self.function_hosts.get(function_id) or {}

    def has_host(self, function_id: str, node_id: int) -> bool:
        hosts = self.function_hosts.get(function_id)
        return bool(hosts) and node_id in hosts

    def live_hosts(self) -> Iterator[HostRecord]:
        for node in self.nodes:
            yield from node.hosts.values()

    def place_host(self, node_id: int, spec: FunctionSpec, ttl: int | None = None) -> HostRecord:
        """Create a cold host for ``spec`` on ``node_id`` and log a PLACE."""
        node = self.nodes[node_id]
        if node.capacity - node.used < spec.resource_demand:
            raise PlacementOverflow(
                f"node {node_id} has {node.free} free slots, {spec.function_id!r} needs {spec.resource_demand}")
        if spec.function_id in node.hosts:
            raise PlacementOverflow(f"{spec.function_id!r} already has a live host on node {node_id}")
        ttl = self.ttl if ttl is None else ttl
        rec = HostRecord(spec.function_id, spec.owner, node_id, self.clock + ttl, self.clock,
                         spec.resource_demand, self)
        node.hosts[spec.function_id] = rec
        node.used += spec.resource_demand
        if spec.owner not in node.user_counts:
            self.variety[node_id] += 1
        node.user_counts[spec.owner] += 1
        self.function_hosts[spec.function_id][node_id] = rec
        self.user_nodes[spec.owner][node_id] += 1
        self._expiry[rec.expires_at].append(rec)
        self.log.append(self.clock, PLACE, spec.function_id, spec.owner, node_id, True)
        for listener in self.listeners:
            listener.on_place(rec)
        return rec

    def touch_or_miss(self, node_id: int, function_id: str, ttl: int | None = None) -> str:
        """Refresh a live host and log WARM_EXEC; return ``"warm"``, or ``"cold"`` if absent."""
        rec = self.nodes[node_id].hosts.get(function_id)
        if rec is None:
            return "cold"
        ttl = self.ttl if ttl is None else ttl
        rec.expires_at = self.clock + ttl
        self._expiry[rec.expires_at].append(rec)
        self.log.append(self.clock, WARM_EXEC, function_id, rec.owner, node_id, False)
        return "warm"

    def _evict(self, rec: HostRecord) -> None:
        node = self.nodes[rec.node_id]
        del node.hosts[rec.function_id]
        node.used -= rec.demand
        node.user_counts[rec.owner] -= 1
        if not node.user_counts[rec.owner]:
            del node.user_counts[rec.owner]
            self.variety[rec.node_id] -= 1
        fh = self.function_hosts[rec.function_id]
        del fh[rec.node_id]
        if not fh:
            del self.function_hosts[rec.function_id]
        un = self.user_nodes[rec.owner]
        un[rec.node_id] -= 1
        if not un[rec.node_id]:
            del un[rec.node_id]
            if not un:
                del self.user_nodes[rec.owner]
        self.log.append(self.clock, EVICT, rec.function_id, rec.owner, rec.node_id, False)
        for listener in self.listeners:
            listener.on_evict(rec)

    def tick(self) -> list[tuple[str, int]]:
        """Advance one round: every TTL drops by one and hosts reaching zero are evicted."""
        now = self.clock + 1
        # buckets hold stale entries for hosts touched since; keep each live record once
        due = {id(r): r for r in self._expiry.pop(now, ())
               if r.expires_at == now and self.nodes[r.node_id].hosts.get(r.function_id) is r}
        due = sorted(due.values(), key=lambda r: (r.node_id, r.function_id)) if len(due) > 1 else list(due.values())
        evicted = []
        for rec in due:
            self._evict(rec)
            evicted.append((rec.function_id, rec.node_id))
        self.clock += 1
        return evicted

    def drain(self) -> int:
        """Tick until no host is live; returns the number of ticks taken."""
        n = 0
        while any(node.hosts for node in self.nodes):
            self.tick()
            n += 1
        return n

    def check_invariants(self) -> None:
        """Raise AssertionError if internal bookkeeping disagrees with the resident hosts."""
        for node in self.nodes:
            assert node.used == sum(r.demand for r in node.hosts.values())
            assert node.used <= node.capacity, f"node {node.node_id} over capacity"
            assert set(node.user_counts) == {r.owner for r in node.hosts.values()}
            assert self.variety[node.node_id] == len(node.user_counts)
            for rec in node.hosts.values():
                assert rec.ttl_remaining > 0
        n_hosts = sum(len(n.hosts) for n in self.nodes)
        assert n_hosts == sum(len(h) for h in self.function_hosts.values())


def replay(log: EventLog) -> Counter:
    """Rebuild the multiset of resident (function_id, owner, node_id) from a log."""
    live: Counter = Counter()
    for e in log:
        key = (e.function_id, e.owner, e.node_id)
        if e.event == PLACE:
            live[key] += 1
        elif e.event == EVICT:
            if live[key] <= 0:
                raise ValueError(f"EVICT without PLACE at tick {e.tick}: {key}")
            live[key] -= 1
            if not live[key]:
                del live[key]
    return live


def resident_multiset(cluster: ClusterState) -> Counter:
    return Counter((r.function_id, r.owner, r.node_id) for r in cluster.live_hosts())
