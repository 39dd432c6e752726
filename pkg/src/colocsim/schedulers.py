"""Placement policies: Random, Helper, OpenWhisk sharding, PASch and Double-Dip.

Every policy exposes ``schedule(spec, cluster, rng) -> SchedulingDecision``.
The decision names the node that runs the invocation and whether that is a
cold start; applying it to the cluster is the caller's job (see
:class:`colocsim.simulation.Simulation`). Policies keep their own state
(``*_`` attributes) and are reset with :meth:`reset`.
"""

from __future__ import annotations

import bisect
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator

from .cluster import ClusterFull, ClusterState, FunctionSpec

HASH_NAME = "fnv1a64+fmix64"
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def stable_hash(key: str) -> int:
    """64-bit FNV-1a of the UTF-8 bytes of ``key`` followed by the murmur3 finalizer.

    Identical across runs and platforms. The finalizer spreads keys that differ
    only in their last characters across the whole ring.
    """
    h = _FNV_OFFSET
    for b in key.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    h ^= h >> 33
    h = (h * 0xFF51AFD7ED558CCD) & _MASK64
    h ^= h >> 33
    h = (h * 0xC4CEB9FE1A85EC53) & _MASK64
    h ^= h >> 33
    return h


class SchedulingDecision(NamedTuple):
    node_id: int
    cold: bool


def _fits(cluster: ClusterState, node_id: int, spec: FunctionSpec) -> bool:
    node = cluster.nodes[node_id]
    return node.capacity - node.used >= spec.resource_demand


def _decide(cluster, node_id, spec) -> SchedulingDecision:
    return SchedulingDecision(node_id, not cluster.has_host(spec.function_id, node_id))


def _random_node(cluster, rng, accept, tries=64):
    """Uniform draw among nodes satisfying ``accept``; rejection sampling, then an exact scan."""
    n = cluster.n_nodes
    for _ in range(tries):
        i = int(rng.integers(n))
        if accept(i):
            return i
    candidates = [i for i in range(n) if accept(i)]
    if not candidates:
        return None
    return candidates[int(rng.integers(len(candidates)))]


class Scheduler(BaseEstimator):
    name = "base"

    def reset(self):
        for attr in [a for a in vars(self) if a.endswith("_") and not a.startswith("_")]:
            delattr(self, attr)
        return self

    def schedule(self, spec: FunctionSpec, cluster: ClusterState, rng) -> SchedulingDecision:
        raise NotImplementedError


class RandomScheduler(Scheduler):
    """Each invocation goes to a uniformly random node that can run it."""

    name = "random"

    def schedule(self, spec, cluster, rng):
        return random_schedule(spec, cluster, rng)


def random_schedule(spec: FunctionSpec, cluster: ClusterState, rng) -> SchedulingDecision:
    fid = spec.function_id

    def ok(i):
        return cluster.has_host(fid, i) or _fits(cluster, i, spec)

    node = _random_node(cluster, rng, ok)
    if node is None:
        raise ClusterFull(f"no node can run {fid!r}")
    return _decide(cluster, node, spec)


class _HelperFunctionState:
    __slots__ = ("base", "round", "served")

    def __init__(self):
        self.base = None
        self.round = -1
        self.served: dict[int, int] = {}


class HelperScheduler(Scheduler):
    """Base-server placement with load-driven scale-out.

    A function's first host goes on a uniformly random base server, which is
    remembered: after all hosts expire the function restarts there. Each live
    host serves at most ``scale_r`` invocations per round, filled in placement
    order. An invocation that finds every host saturated spawns one new host on
    a uniformly random node that does not already hold the function.
    """

    name = "helper"

    def __init__(self, scale_r=10):
        self.scale_r = scale_r

    def schedule(self, spec, cluster, rng):
        if self.scale_r < 1:
            raise ValueError(f"scale_r must be >= 1, got {self.scale_r}")
        if not hasattr(self, "functions_"):
            self.functions_ = {}
        fid = spec.function_id
        st = self.functions_.get(fid)
        if st is None:
            st = self.functions_[fid] = _HelperFunctionState()
        if st.round != cluster.clock:
            st.round = cluster.clock
            st.served = {}
        hosts = cluster.hosts_of(fid)
        if not hosts:
            if st.base is not None and _fits(cluster, st.base, spec):
                node = st.base
            else:
                node = _random_node(cluster, rng, lambda i: _fits(cluster, i, spec))
                if node is None:
                    raise ClusterFull(f"no node can run {fid!r}")
                if st.base is None:
                    st.base = node
            st.served[node] = 1
            return SchedulingDecision(node, True)
        for node in hosts:
            if st.served.get(node, 0) < self.scale_r:
                st.served[node] = st.served.get(node, 0) + 1
                return SchedulingDecision(node, False)
        node = _random_node(cluster, rng, lambda i: i not in hosts and _fits(cluster, i, spec))
        if node is None:
            # nowhere to scale out: overload the least-served live host
            node = min(hosts, key=lambda i: st.served.get(i, 0))
            st.served[node] += 1
            return SchedulingDecision(node, False)
        st.served[node] = 1
        return SchedulingDecision(node, True)


class OpenWhiskScheduler(Scheduler):
    """Hash-seeded home list per function, scanned in order.

    The home list is a permutation of all node ids seeded by the function
    name's hash. The first node on it that already runs the function or has
    room wins. There is no load-driven scale-out.
    """

    name = "openwhisk"

    def home_list(self, function_id: str, n_nodes: int) -> np.ndarray:
        if not hasattr(self, "home_lists_"):
            self.home_lists_ = {}
        key = (function_id, n_nodes)
        perm = self.home_lists_.get(key)
        if perm is None:
            gen = np.random.Generator(np.random.PCG64(stable_hash(function_id)))
            perm = self.home_lists_[key] = gen.permutation(n_nodes).tolist()
        return perm

    def schedule(self, spec, cluster, rng=None):
        fid = spec.function_id
        hosts = cluster.hosts_of(fid)
        for node in self.home_list(fid, cluster.n_nodes):
            if node in hosts:
                return SchedulingDecision(node, False)
            if _fits(cluster, node, spec):
                return SchedulingDecision(node, True)
        raise ClusterFull(f"no node can run {fid!r}")


def openwhisk_schedule(spec, cluster, state: OpenWhiskScheduler) -> SchedulingDecision:
    return state.schedule(spec, cluster)


class HashRing:
    """Consistent hash ring with a fixed number of virtual points per node."""

    def __init__(self, node_ids, points_per_node=100):
        if points_per_node < 1:
            raise ValueError("points_per_node must be >= 1")
        self.points_per_node = points_per_node
        pts = []
        for node in node_ids:
            for i in range(points_per_node):
                pts.append((stable_hash(f"node-{node}#{i}"), node))
        pts.sort()
        self._hashes = [h for h, _ in pts]
        self._nodes = [n for _, n in pts]

    def __len__(self):
        return len(self._hashes)

    def _start(self, key: str) -> int:
        i = bisect.bisect_left(self._hashes, stable_hash(key))
        return 0 if i == len(self._hashes) else i

    def lookup(self, key: str) -> int:
        """Node owning the first ring point at or after ``hash(key)``, wrapping around."""
        return self._nodes[self._start(key)]

    def walk(self, key: str):
        """Distinct nodes in clockwise order starting from ``lookup(key)``."""
        start = self._start(key)
        seen = set()
        n = len(self._nodes)
        for j in range(n):
            node = self._nodes[(start + j) % n]
            if node not in seen:
                seen.add(node)
                yield node


@lru_cache(maxsize=16)
def _shared_ring(n_nodes: int, points_per_node: int) -> HashRing:
    # rings are immutable after construction, so simulations may share them
    return HashRing(range(n_nodes), points_per_node)


class PASchScheduler(Scheduler):
    """Package-aware placement: hash the largest package onto a consistent hash ring.

    When the ring node is full, the walk continues clockwise to the next node
    with room.
    """

    name = "pasch"

    def __init__(self, points_per_node=100):
        self.points_per_node = points_per_node

    def ring(self, n_nodes: int) -> HashRing:
        return _shared_ring(n_nodes, self.points_per_node)

    def schedule(self, spec, cluster, rng=None):
        key = spec.largest_package
        hosts = cluster.hosts_of(spec.function_id)
        for node in self.ring(cluster.n_nodes).walk(key):
            if node in hosts:
                return SchedulingDecision(node, False)
            if _fits(cluster, node, spec):
                return SchedulingDecision(node, True)
        raise ClusterFull(f"no node can run {spec.function_id!r}")


def pasch_schedule(spec, cluster, state: PASchScheduler) -> SchedulingDecision:
    return state.schedule(spec, cluster)


def find_least_user_variety_host(cluster: ClusterState, demand: int = 1) -> int:
    """Node with the fewest distinct active users among those with ``demand`` free slots.

    Ties go to the lowest node id.
    """
    variety = cluster.variety
    best = min(variety)
    i = variety.index(best)
    node = cluster.nodes[i]
    if node.capacity - node.used >= demand:
        return i
    # the emptiest node is full; fall back to a filtered scan
    big = len(cluster.user_nodes) + 1
    variety = [len(nd.user_counts) if nd.capacity - nd.used >= demand else big for nd in cluster.nodes]
    best = min(variety)
    if best == big:
        raise ClusterFull(f"no node has {demand} free slots")
    return variety.index(best)


def doubledip_schedule(spec: FunctionSpec, cluster: ClusterState) -> SchedulingDecision:
    """Prefer the first node (by id) where the owner is already active; else least user variety.

    A node where the function itself is warm needs no new slot, so it counts as
    having room.
    """
    hosts = cluster.function_hosts.get(spec.function_id) or ()
    active = cluster.user_nodes.get(spec.owner)
    if active:
        for node in (sorted(active) if len(active) > 1 else active):
            if node in hosts:
                return SchedulingDecision(node, False)
            if _fits(cluster, node, spec):
                return SchedulingDecision(node, True)
    node = find_least_user_variety_host(cluster, spec.resource_demand)
    return SchedulingDecision(node, node not in hosts)


class DoubleDipScheduler(Scheduler):
    """Soft per-user isolation: stay on nodes the user already occupies."""

    name = "doubledip"

    def schedule(self, spec, cluster, rng=None):
        return doubledip_schedule(spec, cluster)


SCHEDULERS = {
    cls.name: cls
    for cls in (RandomScheduler, HelperScheduler, OpenWhiskScheduler, PASchScheduler, DoubleDipScheduler)
}


def make_scheduler(name: str, **params) -> Scheduler:
    try:
        cls = SCHEDULERS[name]
    except KeyError:
        raise ValueError(f"unknown scheduler {name!r}; expected one of {sorted(SCHEDULERS)}") from None
    accepted = cls().get_params()
    return cls(**{k: v for k, v in params.items() if k in accepted})
