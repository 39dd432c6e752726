"""Co-location and cost metrics computed from event logs.

AE (attacker efficiency) is the fraction of attacker host placements that
ever share a node with a live victim host; PA (placement accuracy) is the
same fraction for victim host placements. Denominators count PLACE events,
so warm re-use of an already co-located host is not counted twice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cluster import EVICT, PLACE, WARM_EXEC, EventLog


class EmptyDenominator(ValueError):
    pass


class EmptyList(ValueError):
    pass


@dataclass
class ColocationCounts:
    attacker_placements: int = 0
    victim_placements: int = 0
    colocation_events: int = 0
    attacker_colocated: int = 0
    victim_colocated: int = 0
    # one flag per victim placement, in placement order
    victim_flags: list = field(default_factory=list)
    nodes: set = field(default_factory=set)


@dataclass
class MetricsReport:
    ae: float | None
    pa: float | None
    max_pa: float | None
    warm_start_ratio: float | None = None
    counts: ColocationCounts | None = None

    @property
    def colocated(self) -> bool:
        return bool(self.counts and self.counts.colocation_events)


def _ratio(num, den):
    return num / den if den else None


def colocation_counts(log: EventLog, attacker_ids, victim_ids, windows: int = 10):
    """Scan ``log`` once; return counts plus the tick of every victim placement."""
    attackers, victims = set(attacker_ids), set(victim_ids)
    if attackers & victims:
        raise ValueError(f"owners cannot be both attacker and victim: {sorted(attackers & victims)}")
    # node -> {function_id: placement index}
    live = {"a": {}, "v": {}}
    flags = {"a": [], "v": []}
    victim_ticks = []
    c = ColocationCounts()
    for e in log:
        if e.owner in attackers:
            role, other = "a", "v"
        elif e.owner in victims:
            role, other = "v", "a"
        else:
            continue
        if e.event == PLACE:
            idx = len(flags[role])
            flags[role].append(False)
            if role == "v":
                victim_ticks.append(e.tick)
            others = live[other].get(e.node_id)
            if others:
                c.colocation_events += 1
                c.nodes.add(e.node_id)
                flags[role][idx] = True
                for j in others.values():
                    flags[other][j] = True
            live[role].setdefault(e.node_id, {})[e.function_id] = idx
        elif e.event == EVICT:
            node_live = live[role].get(e.node_id)
            if node_live is not None:
                node_live.pop(e.function_id, None)
                if not node_live:
                    del live[role][e.node_id]
    c.attacker_placements = len(flags["a"])
    c.victim_placements = len(flags["v"])
    c.attacker_colocated = sum(flags["a"])
    c.victim_colocated = sum(flags["v"])
    c.victim_flags = flags["v"]
    return c, victim_ticks


def _max_window_pa(flags, ticks, first_tick, last_tick, windows):
    if not flags:
        return None
    span = max(last_tick - first_tick + 1, 1)
    hit = [0] * windows
    tot = [0] * windows
    for f, t in zip(flags, ticks):
        w = min((t - first_tick) * windows // span, windows - 1)
        tot[w] += 1
        hit[w] += f
    return max(h / n for h, n in zip(hit, tot) if n)


def compute_ae_pa(log: EventLog, attacker_ids, victim_ids, windows: int = 10) -> MetricsReport:
    """AE, PA and the maximum per-window PA over ``windows`` equal tick windows.

    Undefined ratios (no placements of that role) are reported as ``None``.
    """
    if windows < 1:
        raise ValueError("windows must be >= 1")
    c, vticks = colocation_counts(log, attacker_ids, victim_ids)
    first = log[0].tick if len(log) else 0
    last = log[len(log) - 1].tick if len(log) else 0
    return MetricsReport(
        ae=_ratio(c.attacker_colocated, c.attacker_placements),
        pa=_ratio(c.victim_colocated, c.victim_placements),
        max_pa=_max_window_pa(c.victim_flags, vticks, first, last, windows),
        counts=c,
    )


def any_colocation(log: EventLog, attacker_ids, victim_ids) -> bool:
    c, _ = colocation_counts(log, attacker_ids, victim_ids)
    return c.colocation_events > 0


def success_rate(outcomes) -> float:
    """Fraction of experiments that achieved co-location.

    Accepts booleans or objects with a ``colocated`` attribute.
    """
    outcomes = list(outcomes)
    if not outcomes:
        raise EmptyList("success_rate needs at least one outcome")
    hits = sum(bool(getattr(o, "colocated", o)) for o in outcomes)
    return hits / len(outcomes)


def warm_start_ratio(log: EventLog) -> float:
    """WARM_EXEC / (WARM_EXEC + PLACE).

    A host evicted and later re-placed on the same node counts as cold again.
    """
    warm, cold = log.count(WARM_EXEC), log.count(PLACE)
    if warm + cold == 0:
        raise EmptyDenominator("log has no executions")
    return warm / (warm + cold)


class ColocationTracker:
    """Incremental AE/PA bookkeeping fed by cluster callbacks during a simulation.

    Attach with ``cluster.listeners.append(tracker)``. The result must agree
    with :func:`compute_ae_pa` run on the finished log.
    """

    def __init__(self, attacker_ids, victim_ids):
        self.attackers = set(attacker_ids)
        self.victims = set(victim_ids)
        self.counts = ColocationCounts()
        self._live = {}  # node_id -> {"a": {id(rec): index}, "v": {...}}
        self._flags = {"a": [], "v": []}

    def _role(self, owner):
        if owner in self.attackers:
            return "a"
        if owner in self.victims:
            return "v"
        return None

    def on_place(self, rec):
        role = self._role(rec.owner)
        if role is None:
            return
        other = "v" if role == "a" else "a"
        node = self._live.setdefault(rec.node_id, {"a": {}, "v": {}})
        idx = len(self._flags[role])
        self._flags[role].append(bool(node[other]))
        if node[other]:
            self.counts.colocation_events += 1
            self.counts.nodes.add(rec.node_id)
            for j in node[other].values():
                self._flags[other][j] = True
        node[role][id(rec)] = idx

    def on_evict(self, rec):
        role = self._role(rec.owner)
        if role is None:
            return
        self._live[rec.node_id][role].pop(id(rec), None)

    @property
    def colocated(self) -> bool:
        return self.counts.colocation_events > 0

    def report(self) -> MetricsReport:
        c = self.counts
        c.attacker_placements = len(self._flags["a"])
        c.victim_placements = len(self._flags["v"])
        c.attacker_colocated = sum(self._flags["a"])
        c.victim_colocated = sum(self._flags["v"])
        c.victim_flags = list(self._flags["v"])
        return MetricsReport(ae=_ratio(c.attacker_colocated, c.attacker_placements),
                             pa=_ratio(c.victim_colocated, c.victim_placements),
                             max_pa=None, counts=c)
