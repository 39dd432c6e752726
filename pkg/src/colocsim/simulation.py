"""Round-based simulation engine tying a policy to a cluster."""

from __future__ import annotations

import numpy as np

from .cluster import DEFAULT_TTL, ClusterState, FunctionSpec
from .schedulers import Scheduler, SchedulingDecision, make_scheduler

RNG_NAME = "numpy.PCG64 via SeedSequence(seed, spawn_key=(run_index,))"


def make_rng(seed: int, run_index: int = 0, stream: int = 0) -> np.random.Generator:
    """Independent, reproducible generator for one run of an experiment."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(run_index), int(stream)))
    return np.random.Generator(np.random.PCG64(ss))


class Simulation:
    """One simulated cluster driven by one scheduling policy.

    Invocations submitted during a round are processed first-come-first-serve;
    :meth:`end_round` then ticks the cluster clock.
    """

    def __init__(self, scheduler: Scheduler | str, n_nodes=1000, capacity=1024, ttl=DEFAULT_TTL,
                 rng=None, seed=0, log=None, **scheduler_params):
        if isinstance(scheduler, str):
            scheduler = make_scheduler(scheduler, **scheduler_params)
        self.scheduler = scheduler.reset()
        self.cluster = ClusterState(n_nodes, capacity, ttl, log=log)
        self.rng = rng if rng is not None else make_rng(seed)

    @property
    def log(self):
        return self.cluster.log

    @property
    def clock(self) -> int:
        return self.cluster.clock

    def invoke(self, spec: FunctionSpec) -> SchedulingDecision:
        cluster = self.cluster
        decision = self.scheduler.schedule(spec, cluster, self.rng)
        if decision.cold:
            cluster.place_host(decision.node_id, spec)
        elif cluster.touch_or_miss(decision.node_id, spec.function_id) != "warm":
            raise AssertionError(f"{self.scheduler.name} routed {spec.function_id!r} warm to "
                                 f"node {decision.node_id} without a live host")
        return decision

    def end_round(self):
        return self.cluster.tick()

    def run_round(self, invocations) -> list[SchedulingDecision]:
        decisions = [self.invoke(spec) for spec in invocations]
        self.end_round()
        return decisions

    def idle(self, rounds: int) -> None:
        for _ in range(rounds):
            self.cluster.tick()
