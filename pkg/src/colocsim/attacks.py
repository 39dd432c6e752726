"""Attack planning and execution.

``select_strategy`` maps an inferred feature matrix (plus what the attacker
knows about the victim) to one of four strategies:

* ``M1``: many identically configured functions with different names.
* ``M2``: one function hit with a burst of invocations every round.
* ``M3_1``: functions declaring the victim's own packages.
* ``M3_2``: functions declaring many different packages.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cluster import EventLog, FunctionSpec
from .fingerprint import FeatureMatrix
from .metrics import colocation_counts

STRATEGIES = ("M1", "M2", "M3_1", "M3_2")
ATTACKER_PACKAGES = (("attack-runtime", 50), ("attack-util", 5))
DEFAULT_CATALOG_SIZE = 256


class UnknownVictimPackages(ValueError):
    pass


def package_catalog(size=DEFAULT_CATALOG_SIZE):
    """Synthetic package universe: ``pkg-000`` ... with sizes 10 .. 10+size-1 MB."""
    return [(f"pkg-{i:03d}", 10 + i) for i in range(size)]


@dataclass
class VictimKnowledge:
    knows_packages: bool = False
    packages: tuple | None = None
    victim_function: FunctionSpec | None = None

    def __post_init__(self):
        if self.knows_packages and self.packages is None:
            if self.victim_function is None:
                raise ValueError("knows_packages needs a package set or the victim function")
            self.packages = tuple(self.victim_function.packages)
        if not self.knows_packages:
            self.packages = None


@dataclass
class AttackPlan:
    strategy: str
    accounts: int
    functions: list
    schedule: list  # (round, function_id, burst_size)
    packages: tuple = ()
    seed: int | None = None

    @property
    def owners(self) -> set:
        return {f.owner for f in self.functions}

    @property
    def k(self) -> int:
        return len(self.functions) if self.strategy != "M2" else self.schedule[0][2]

    def spec(self, function_id) -> FunctionSpec:
        for f in self.functions:
            if f.function_id == function_id:
                return f
        raise KeyError(function_id)


@dataclass
class AttackOutcome:
    colocated: bool
    colocated_nodes: set = field(default_factory=set)
    log: EventLog | None = None


def select_strategy(features: FeatureMatrix, vk: VictimKnowledge | None = None):
    """Pick a strategy from the inferred features; returns ``(strategy, hints)``."""
    vk = vk or VictimKnowledge()
    hints = {"multi_account": bool(features.f4_account_locality),
             "multi_function": bool(features.f1_invocation_locality)}
    f5 = features.f5_config_locality
    if f5 == "package" and vk.knows_packages:
        return "M3_1", hints
    if f5 is not None:
        return "M3_2", hints
    if features.f2_auto_scaling:
        # bursts work, but spreading over distinct functions covers more servers
        hints["alternative"] = "M1"
        return "M2", hints
    return "M1", hints


def generate_plan(strategy, k, vk=None, rng=None, rounds=1, accounts=1, prefix="attacker",
                  catalog_size=DEFAULT_CATALOG_SIZE) -> AttackPlan:
    """Concrete functions and per-round invocation schedule for ``strategy``."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if rounds < 1 or accounts < 1:
        raise ValueError("rounds and accounts must be >= 1")
    vk = vk or VictimKnowledge()
    owners = [f"{prefix}{a}" for a in range(accounts)]
    packages: tuple = ()
    if strategy == "M1":
        functions = [FunctionSpec(f"{prefix}-m1-{i}", owners[i % accounts], packages=ATTACKER_PACKAGES)
                     for i in range(k)]
        schedule = [(r, f.function_id, 1) for r in range(rounds) for f in functions]
    elif strategy == "M2":
        functions = [FunctionSpec(f"{prefix}-m2", owners[0], packages=ATTACKER_PACKAGES)]
        schedule = [(r, functions[0].function_id, k) for r in range(rounds)]
    elif strategy == "M3_1":
        if not vk.knows_packages:
            raise UnknownVictimPackages("M3_1 needs the victim's package list")
        packages = tuple(vk.packages)
        # variants of one function, all carrying the victim's dependencies
        fid = f"{prefix}-m3"
        functions = [FunctionSpec(fid, owners[i % accounts], app_id=f"{fid}-v{i}", packages=packages)
                     for i in range(k)]
        schedule = [(r, fid, 1) for r in range(rounds) for _ in functions]
    else:
        catalog = package_catalog(catalog_size)
        if k > len(catalog):
            raise ValueError(f"k={k} exceeds the package catalog ({len(catalog)})")
        if rng is None:
            raise ValueError("M3_2 draws packages at random and needs an rng")
        picks = sorted(int(i) for i in rng.choice(len(catalog), size=k, replace=False))
        packages = tuple(catalog[i] for i in picks)
        functions = [FunctionSpec(f"{prefix}-m3v-{i}", owners[i % accounts],
                                  packages=((catalog[j][0], 10_000),) + ATTACKER_PACKAGES)
                     for i, j in enumerate(picks)]
        schedule = [(r, f.function_id, 1) for r in range(rounds) for f in functions]
    return AttackPlan(strategy, accounts, functions, schedule, packages)


def plan_to_config(plan: AttackPlan, seed=None) -> str:
    seed = plan.seed if seed is None else seed
    rounds = 1 + max(r for r, _, _ in plan.schedule)
    lines = [f"strategy = {plan.strategy}", f"k = {plan.k}", f"accounts = {plan.accounts}",
             f"rounds = {rounds}", f"seed = {'' if seed is None else seed}",
             f"packages = {','.join(f'{n}:{sz}' for n, sz in plan.packages)}"]
    return "\n".join(lines) + "\n"


def plan_from_config(text: str) -> AttackPlan:
    """Rebuild a plan from :func:`plan_to_config` output."""
    kv = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            key, _, value = line.partition("=")
            kv[key.strip()] = value.strip()
    strategy, k = kv["strategy"], int(kv["k"])
    accounts, rounds = int(kv.get("accounts", 1)), int(kv.get("rounds", 1))
    pkgs = []
    for item in filter(None, kv.get("packages", "").split(",")):
        name, _, size = item.partition(":")
        pkgs.append((name, int(size)))
    seed = int(kv["seed"]) if kv.get("seed") else None
    if strategy == "M3_1":
        plan = generate_plan(strategy, k, VictimKnowledge(True, tuple(pkgs)), rounds=rounds, accounts=accounts)
    elif strategy == "M3_2":
        plan = generate_plan(strategy, k, rng=_FixedChoice([n for n, _ in pkgs]), rounds=rounds,
                             accounts=accounts)
    else:
        plan = generate_plan(strategy, k, rounds=rounds, accounts=accounts)
    plan.seed = seed
    return plan


class _FixedChoice:
    """Stands in for an rng so M3_2 plans rebuild with their recorded packages."""

    def __init__(self, names):
        catalog = {p: i for i, (p, _) in enumerate(package_catalog(DEFAULT_CATALOG_SIZE))}
        self.idx = [catalog[p] for p in names]

    def choice(self, n, size, replace=False):
        return list(self.idx[:size])


def make_victim(rng, run_id="0", n_packages=3, catalog_size=DEFAULT_CATALOG_SIZE, owner="victim"):
    """Victim function with a random name and a random package set drawn from the catalog."""
    catalog = package_catalog(catalog_size)
    picks = rng.choice(len(catalog), size=n_packages, replace=False)
    tag = int(rng.integers(1 << 32))
    return FunctionSpec(f"victim-{run_id}-{tag:08x}", owner, packages=tuple(catalog[int(i)] for i in picks))


def execute_attack(plan: AttackPlan, sim, victim: FunctionSpec, rounds=None, victim_burst=1,
                   warmup=1, victim_owners=None) -> AttackOutcome:
    """Run victim and attacker invocations round by round; co-location is read off the log.

    The victim runs alone for ``warmup`` rounds so it has a live host when
    the attack begins. Within each attack round the victim's invocations are
    submitted before the attacker's.
    """
    if rounds is None:
        rounds = 1 + max(r for r, _, _ in plan.schedule)
    by_round: dict[int, list] = {}
    for r, fid, burst in plan.schedule:
        by_round.setdefault(r, []).append((plan.spec(fid), burst))
    for _ in range(warmup):
        for _ in range(victim_burst):
            sim.invoke(victim)
        sim.end_round()
    for r in range(rounds):
        for _ in range(victim_burst):
            sim.invoke(victim)
        for spec, burst in by_round.get(r, ()):
            for _ in range(burst):
                sim.invoke(spec)
        sim.end_round()
    counts, _ = colocation_counts(sim.log, plan.owners, victim_owners or {victim.owner})
    return AttackOutcome(counts.colocation_events > 0, set(counts.nodes), sim.log)
