"""Experiment configs, seeded multi-run recipes and CSV reporting.

A config is flat ``key = value`` text; list-valued keys take comma lists and
``#`` starts a comment. Each recipe fills in its own defaults, so a config
only needs the keys it changes::

    experiment = doubledip_eval
    n_attackers = 5, 10, 20
    runs = 200

Run ``i`` of an experiment draws from ``make_rng(seed, i)``, so every cell of
a sweep sees the same victim and background workload in run ``i``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
import statistics
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import oracle
from ._validation import check_choice, check_int, check_nonempty, check_probability
from .attacks import STRATEGIES, VictimKnowledge, execute_attack, generate_plan, make_victim
from .cluster import CountingLog, EventLog, FunctionSpec
from .fingerprint import ProtocolConfig, infer_features, run_protocol
from .metrics import ColocationTracker, compute_ae_pa, warm_start_ratio
from .schedulers import SCHEDULERS
from .simulation import RNG_NAME, Simulation, make_rng

EXPERIMENTS = ("fingerprint", "attack", "transfer_matrix", "doubledip_eval", "warmstart_cost", "oracle_sweep")
AGGREGATE_HEADER = ("scheduler", "strategy", "k", "ae", "pa", "max_pa", "warm_start_ratio", "success_rate",
                    "runs", "seed", "config_hash")
RUN_HEADER = ("scheduler", "strategy", "k", "run", "ae", "pa", "max_pa", "warm_start_ratio", "colocated",
              "seed", "config_hash")
FEATURE_HEADER = ("scheduler", "run", "f1", "f2", "f3", "f4", "f5", "seed", "config_hash")
ORACLE_HEADER = ("n", "alpha", "beta", "r", "p", "e_colocated", "mc_mean", "mc_se", "p_invocation_locality",
                 "p_autoscaling", "p_config_locality", "seed", "config_hash")
VICTIM_OWNER = "victim"


class ConfigError(ValueError):
    pass


_STR, _INT, _FLOAT, _BOOL = "str", "int", "float", "bool"
_STRS, _INTS = "str list", "int list"

# key -> (kind, help)
FIELD_INFO = {
    "experiment": (_STR, "recipe to run: " + ", ".join(EXPERIMENTS)),
    "n_nodes": (_INT, "cluster size"),
    "node_capacity": (_INT, "host slots per node"),
    "ttl": (_INT, "rounds an idle host survives"),
    "scheduler": (_STRS, "scheduler names: " + ", ".join(SCHEDULERS)),
    "strategy": (_STRS, "attack strategies: " + ", ".join(STRATEGIES)),
    "k_functions": (_INTS, "attack sizes k (functions, or burst size for M2)"),
    "n_attackers": (_INTS, "attacker counts for doubledip_eval"),
    "runs": (_INT, "independent runs per cell"),
    "rounds": (_INT, "attack rounds, or workload rounds for warmstart_cost"),
    "seed": (_INT, "master seed"),
    "out_dir": (_STR, "directory for CSV output (empty: no files)"),
    "knows_packages": (_BOOL, "attacker knows the victim's packages (needed by M3_1)"),
    "victim_packages": (_INT, "packages declared by the victim"),
    "save_logs": (_BOOL, "write one event log CSV per run"),
    "check_invariants": (_BOOL, "verify cluster bookkeeping after every run"),
    "phase_invocations": (_INT, "fingerprint invocations per probe phase"),
    "attempts": (_INT, "attack attempts per attacker (doubledip_eval)"),
    "attempt_spacing": (_FLOAT, "rounds between consecutive attempts (doubledip_eval)"),
    "attack_start": (_INT, "round of the first attempt (doubledip_eval)"),
    "background_users": (_INT, "benign single-function users (doubledip_eval)"),
    "background_rate": (_FLOAT, "per-round invocation probability of a benign function"),
    "victim_period": (_INT, "rounds between victim load peaks (doubledip_eval)"),
    "victim_peak": (_INT, "victim invocations in a peak round (doubledip_eval)"),
    "early_stop": (_BOOL, "end a doubledip_eval run at its first co-location"),
    "users": (_INT, "users in the warmstart_cost workload"),
    "functions_per_user": (_INT, "functions per user (warmstart_cost)"),
    "invocations": (_INT, "total invocations (warmstart_cost)"),
    "zipf": (_FLOAT, "popularity exponent over functions (warmstart_cost)"),
    "alpha": (_INTS, "attacker placements for oracle_sweep"),
    "beta": (_INTS, "victim placements for oracle_sweep"),
    "scale_r": (_INT, "invocations per scale-out for oracle_sweep"),
    "locality_p": (_FLOAT, "locality hit probability for oracle_sweep"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "attack"
    n_nodes: int = 1000
    node_capacity: int = 1024
    ttl: int = 20
    scheduler: tuple = ("helper",)
    strategy: tuple = ("M1",)
    k_functions: tuple = (1, 5, 10, 20, 50, 100)
    n_attackers: tuple = (5, 10, 20, 30, 50)
    runs: int = 50
    rounds: int = 5
    seed: int = 0
    out_dir: str = ""
    knows_packages: bool = True
    victim_packages: int = 3
    save_logs: bool = False
    check_invariants: bool = False
    phase_invocations: int = 2000
    attempts: int = 10
    attempt_spacing: float = 2.0
    attack_start: int = 40
    background_users: int = 200
    background_rate: float = 0.12
    victim_period: int = 160
    victim_peak: int = 15
    early_stop: bool = True
    users: int = 50
    functions_per_user: int = 6
    invocations: int = 5000
    zipf: float = 1.0
    alpha: tuple = (1, 2, 5, 10, 20, 50, 100)
    beta: tuple = (1,)
    scale_r: int = 10
    locality_p: float = 0.3

    @classmethod
    def defaults(cls, experiment="attack"):
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown {experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
        return replace(cls(experiment=experiment), **RECIPE_DEFAULTS[experiment])

    def validate(self):
        try:
            check_choice("experiment", self.experiment, EXPERIMENTS)
            for name in ("n_nodes", "node_capacity", "ttl", "runs", "rounds", "phase_invocations", "attempts",
                         "background_users", "victim_period", "victim_peak", "users", "functions_per_user",
                         "invocations", "scale_r", "victim_packages"):
                check_int(name, getattr(self, name), 1)
            check_int("seed", self.seed, 0)
            check_int("attack_start", self.attack_start, 0)
            for name in ("scheduler", "strategy", "k_functions", "n_attackers", "alpha", "beta"):
                check_nonempty(name, getattr(self, name))
            for s in self.scheduler:
                check_choice("scheduler", s, SCHEDULERS)
            for s in self.strategy:
                check_choice("strategy", s, STRATEGIES)
            for name in ("k_functions", "n_attackers"):
                for v in getattr(self, name):
                    check_int(name, v, 1)
            for name in ("alpha", "beta"):
                for v in getattr(self, name):
                    check_int(name, v, 0)
            check_probability("background_rate", self.background_rate)
            check_probability("locality_p", self.locality_p)
            if self.attempt_spacing <= 0:
                raise ValueError(f"attempt_spacing must be > 0, got {self.attempt_spacing}")
            if self.zipf < 0:
                raise ValueError(f"zipf must be >= 0, got {self.zipf}")
            if self.experiment == "warmstart_cost" and self.users * self.functions_per_user > 10**6:
                raise ValueError("warmstart_cost workload has too many functions")
            if "M3_1" in self.strategy and not self.knows_packages and self.experiment != "fingerprint":
                raise ValueError("strategy M3_1 needs knows_packages = true")
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        return self

    def to_text(self, include_out_dir=True) -> str:
        lines = []
        for f in fields(self):
            if f.name == "out_dir" and not include_out_dir:
                continue
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    @property
    def config_hash(self) -> str:
        """Digest of every setting that can change results (the output directory cannot)."""
        return hashlib.sha256(self.to_text(include_out_dir=False).encode()).hexdigest()[:12]


RECIPE_DEFAULTS = {
    "fingerprint": dict(scheduler=("random", "helper", "openwhisk", "pasch"), runs=1),
    "attack": dict(),
    "transfer_matrix": dict(scheduler=("random", "helper", "openwhisk", "pasch"), strategy=STRATEGIES,
                            k_functions=(20,)),
    "doubledip_eval": dict(scheduler=("doubledip", "helper"), n_nodes=100, runs=1000),
    "warmstart_cost": dict(scheduler=("helper", "doubledip", "openwhisk"), n_nodes=50, node_capacity=4,
                           rounds=500, runs=100),
    "oracle_sweep": dict(runs=10_000),
}


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(str(x) for x in v)
    return str(v)


def _convert(kind, raw):
    if kind == _STR:
        return raw
    if kind == _INT:
        return int(raw)
    if kind == _FLOAT:
        return float(raw)
    if kind == _BOOL:
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"expected true or false, got {raw!r}")
    items = [x.strip() for x in raw.split(",")]
    if any(not x for x in items):
        raise ValueError(f"empty item in list {raw!r}")
    return tuple(int(x) for x in items) if kind == _INTS else tuple(items)


def parse_assignments(text):
    """``{key: (raw value, line number)}`` from config text, rejecting unknown or repeated keys."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if key not in FIELD_INFO:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: {key!r} already set on line {out[key][1]}")
        out[key] = (value, lineno)
    return out


def parse_config(text: str, overrides=None) -> ExperimentConfig:
    """Strict parse of config text; ``overrides`` maps key to raw string and wins over the text."""
    kv = parse_assignments(text)
    for key, value in (overrides or {}).items():
        if key not in FIELD_INFO:
            raise ConfigError(f"override: unknown key {key!r}")
        kv[key] = (str(value), None)
    experiment = kv.get("experiment", ("attack", None))[0]
    cfg = ExperimentConfig.defaults(experiment)
    values = {}
    for key, (raw, lineno) in kv.items():
        where = f"line {lineno}" if lineno else "override"
        try:
            values[key] = _convert(FIELD_INFO[key][0], raw)
        except ValueError as exc:
            raise ConfigError(f"{where}: {key}: {exc}") from None
    return replace(cfg, **values).validate()


def load_config(path, overrides=None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), overrides)


def config_help() -> str:
    base = ExperimentConfig()
    width = max(map(len, FIELD_INFO))
    lines = []
    for key, (kind, text) in FIELD_INFO.items():
        lines.append(f"  {key:<{width}}  {text} [{kind}; default {_format_value(getattr(base, key))}]")
    lines.append("  recipe defaults override the above:")
    for exp, over in RECIPE_DEFAULTS.items():
        if over:
            lines.append(f"    {exp}: " + "; ".join(f"{k} = {_format_value(v)}" for k, v in over.items()))
    return "\n".join(lines)


@dataclass
class RunRow:
    scheduler: str
    strategy: str
    k: int | None
    run: int
    ae: float | None = None
    pa: float | None = None
    max_pa: float | None = None
    warm_start_ratio: float | None = None
    colocated: bool | None = None


@dataclass
class Aggregate:
    scheduler: str
    strategy: str
    k: int | None
    runs: int
    means: dict = field(default_factory=dict)
    ses: dict = field(default_factory=dict)

    @property
    def success_rate(self):
        return self.means.get("success_rate")


@dataclass
class RunReport:
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)
    features: list = field(default_factory=list)  # fingerprint: (scheduler, run, FeatureMatrix)
    oracle_rows: list = field(default_factory=list)

    def cell(self, scheduler, strategy=None, k=None) -> Aggregate:
        for a in self.aggregates:
            if a.scheduler == scheduler and (strategy is None or a.strategy == strategy) and (k is None or a.k == k):
                return a
        raise KeyError((scheduler, strategy, k))

    def success_rates(self):
        return {(a.scheduler, a.strategy, a.k): a.success_rate for a in self.aggregates}


def _mean_se(values):
    vals = [float(v) for v in values if v is not None]
    if not vals:
        return None, None
    mean = math.fsum(vals) / len(vals)
    se = statistics.stdev(vals) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
    return mean, se


def aggregate_rows(rows, runs_expected=None):
    """Group rows by (scheduler, strategy, k) in first-seen order; means and standard errors per metric."""
    groups = {}
    for r in rows:
        groups.setdefault((r.scheduler, r.strategy, r.k), []).append(r)
    out = []
    for (sched, strat, k), rs in groups.items():
        agg = Aggregate(sched, strat, k, len(rs))
        for name in ("ae", "pa", "max_pa", "warm_start_ratio"):
            agg.means[name], agg.ses[name] = _mean_se(getattr(r, name) for r in rs)
        agg.means["success_rate"], agg.ses["success_rate"] = _mean_se(
            None if r.colocated is None else int(r.colocated) for r in rs)
        out.append(agg)
    return out


# ---------------------------------------------------------------- recipes

def _simulation(cfg, scheduler, rng, keep_log=True):
    log = EventLog() if keep_log else CountingLog()
    return Simulation(scheduler, n_nodes=cfg.n_nodes, capacity=cfg.node_capacity, ttl=cfg.ttl, rng=rng, log=log)


def _finish(cfg, sim, log_sink, name):
    if cfg.check_invariants:
        sim.cluster.check_invariants()
    if log_sink is not None and isinstance(sim.log, EventLog):
        log_sink(name, sim.log)


def attack_run(cfg, scheduler, strategy, k, run_index, log_sink=None) -> RunRow:
    rng = make_rng(cfg.seed, run_index)
    victim = make_victim(rng, run_index, n_packages=cfg.victim_packages, owner=VICTIM_OWNER)
    vk = VictimKnowledge(cfg.knows_packages, victim_function=victim) if cfg.knows_packages else VictimKnowledge()
    plan = generate_plan(strategy, k, vk, rng, rounds=cfg.rounds)
    sim = _simulation(cfg, scheduler, rng)
    outcome = execute_attack(plan, sim, victim)
    rep = compute_ae_pa(sim.log, plan.owners, {victim.owner})
    _finish(cfg, sim, log_sink, f"{scheduler}_{strategy}_k{k}_run{run_index}")
    return RunRow(scheduler, strategy, k, run_index, rep.ae, rep.pa, rep.max_pa, warm_start_ratio(sim.log),
                  outcome.colocated)


def doubledip_run(cfg, scheduler, n_attackers, run_index, log_sink=None) -> RunRow:
    """One run of the defence evaluation: a periodically busy victim, benign churn, staggered attackers.

    The victim is invoked every round from round 0, with a burst of
    ``victim_peak`` invocations once per ``victim_period`` rounds at a random
    phase. Each benign user has one function whose invocation gaps are
    geometric with rate ``background_rate``. Attempt ``j`` (attacker
    ``j % A``) deploys a fresh function at round ``attack_start + j *
    attempt_spacing``; attacker functions are then kept warm until the end.
    """
    rng = make_rng(cfg.seed, run_index)
    ttl = cfg.ttl
    keep_log = cfg.save_logs and log_sink is not None
    sim = _simulation(cfg, scheduler, rng, keep_log=keep_log)
    victim = FunctionSpec(f"victim-{run_index}", VICTIM_OWNER)
    owners = [f"attacker{a}" for a in range(n_attackers)]
    tracker = ColocationTracker(owners, [VICTIM_OWNER])
    sim.cluster.listeners.append(tracker)

    total = cfg.attempts * n_attackers
    horizon = cfg.attack_start + math.ceil(total * cfg.attempt_spacing) + ttl
    period = cfg.victim_period
    phase = int(rng.integers(period))
    keep_alive = ttl - 1
    due = {}
    for u, t0 in enumerate(rng.geometric(cfg.background_rate, cfg.background_users) - 1):
        due.setdefault(int(t0), []).append(FunctionSpec(f"bg{u}", f"user{u}"))
    gaps = []
    j = 0
    for t in range(horizon):
        for _ in range(cfg.victim_peak if (t + phase) % period == 0 else 1):
            sim.invoke(victim)
        while j < total and t >= cfg.attack_start + j * cfg.attempt_spacing:
            a = j % n_attackers
            spec = FunctionSpec(f"attacker{a}-f{j // n_attackers}", owners[a])
            sim.invoke(spec)
            due.setdefault(t + keep_alive, []).append(spec)
            j += 1
        for spec in due.pop(t, ()):
            sim.invoke(spec)
            if spec.owner.startswith("attacker"):
                gap = keep_alive
            else:
                if not gaps:
                    gaps = rng.geometric(cfg.background_rate, 4096).tolist()
                gap = gaps.pop()
            due.setdefault(t + gap, []).append(spec)
        sim.end_round()
        if cfg.early_stop and tracker.colocated:
            break
    _finish(cfg, sim, log_sink, f"{scheduler}_A{n_attackers}_run{run_index}")
    # AE/PA of a run cut short at its first hit say little, so only success is reported
    return RunRow(scheduler, "-", n_attackers, run_index, colocated=tracker.colocated)


def warmstart_workload(cfg, rng):
    """Functions plus the (round, function index) schedule shared by every scheduler in a run."""
    fns = [FunctionSpec(f"u{u}-f{i}", f"u{u}") for u in range(cfg.users) for i in range(cfg.functions_per_user)]
    w = 1.0 / np.arange(1, len(fns) + 1) ** cfg.zipf
    w = w[rng.permutation(len(fns))]
    w /= w.sum()
    picks = rng.choice(len(fns), size=cfg.invocations, p=w)
    rounds = np.sort(rng.integers(cfg.rounds, size=cfg.invocations))
    return fns, list(zip(rounds.tolist(), picks.tolist()))


def warmstart_run(cfg, scheduler, run_index, log_sink=None) -> RunRow:
    rng = make_rng(cfg.seed, run_index)
    fns, schedule = warmstart_workload(cfg, rng)
    sim = _simulation(cfg, scheduler, rng, keep_log=cfg.save_logs and log_sink is not None)
    i = 0
    for r in range(cfg.rounds):
        while i < len(schedule) and schedule[i][0] == r:
            sim.invoke(fns[schedule[i][1]])
            i += 1
        sim.end_round()
    _finish(cfg, sim, log_sink, f"{scheduler}_warmstart_run{run_index}")
    return RunRow(scheduler, "-", cfg.users, run_index, warm_start_ratio=warm_start_ratio(sim.log))


def monte_carlo_e_colocated(n, alpha, beta, runs, rng):
    """Mean and standard error of the co-located node count under the Random scheduler.

    Each run places ``alpha`` attacker and ``beta`` victim invocations in one
    round of a cluster whose TTL is one round, so the next run starts empty.
    """
    sim = Simulation("random", n_nodes=n, capacity=max(alpha + beta, 1), ttl=1, rng=rng, log=CountingLog())
    attackers = [FunctionSpec(f"a{i}", "attacker") for i in range(alpha)]
    victims = [FunctionSpec(f"v{i}", VICTIM_OWNER) for i in range(beta)]
    cluster = sim.cluster
    counts = np.empty(runs)
    for run in range(runs):
        for spec in attackers:
            sim.invoke(spec)
        for spec in victims:
            sim.invoke(spec)
        a_nodes = cluster.user_nodes.get("attacker", {})
        v_nodes = cluster.user_nodes.get(VICTIM_OWNER, {})
        counts[run] = len(a_nodes.keys() & v_nodes.keys())
        sim.end_round()
    se = counts.std(ddof=1) / math.sqrt(runs) if runs > 1 else 0.0
    return float(counts.mean()), float(se)


def _fingerprint(cfg, report):
    pcfg = ProtocolConfig(phase_invocations=cfg.phase_invocations)
    for sched in cfg.scheduler:
        for i in range(cfg.runs):
            sim = _simulation(cfg, sched, make_rng(cfg.seed, i))
            report.features.append((sched, i, infer_features(run_protocol(sim, pcfg))))


def _oracle_sweep(cfg, report):
    n = cfg.n_nodes
    point = 0
    for a in cfg.alpha:
        for b in cfg.beta:
            mean, se = monte_carlo_e_colocated(n, a, b, cfg.runs, make_rng(cfg.seed, point))
            point += 1
            report.oracle_rows.append(dict(
                n=n, alpha=a, beta=b, r=cfg.scale_r, p=cfg.locality_p,
                e_colocated=oracle.e_colocated_random(n, a, b), mc_mean=mean, mc_se=se,
                p_invocation_locality=oracle.p_colocate_invocation_locality(n, a),
                p_autoscaling=oracle.p_colocate_autoscaling(n, a, cfg.scale_r),
                p_config_locality=oracle.p_colocate_config_locality(a, cfg.locality_p)))


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> RunReport:
    """Run every cell of ``cfg`` for ``cfg.runs`` runs; write CSVs when an output directory is given."""
    cfg.validate()
    out_dir = out_dir or cfg.out_dir or None
    report = RunReport(cfg)
    log_sink = None
    if cfg.save_logs and out_dir:
        log_dir = os.path.join(out_dir, "logs")
        os.makedirs(log_dir, exist_ok=True)

        def log_sink(name, log):
            log.write_csv(os.path.join(log_dir, name + ".csv"))

    exp = cfg.experiment
    if exp == "fingerprint":
        _fingerprint(cfg, report)
    elif exp == "oracle_sweep":
        _oracle_sweep(cfg, report)
    elif exp in ("attack", "transfer_matrix"):
        for sched in cfg.scheduler:
            for strat in cfg.strategy:
                for k in cfg.k_functions:
                    report.rows += [attack_run(cfg, sched, strat, k, i, log_sink) for i in range(cfg.runs)]
    elif exp == "doubledip_eval":
        for sched in cfg.scheduler:
            for a in cfg.n_attackers:
                report.rows += [doubledip_run(cfg, sched, a, i, log_sink) for i in range(cfg.runs)]
    elif exp == "warmstart_cost":
        for sched in cfg.scheduler:
            report.rows += [warmstart_run(cfg, sched, i, log_sink) for i in range(cfg.runs)]
    report.aggregates = aggregate_rows(report.rows)
    if out_dir:
        write_report(report, out_dir)
    return report


# ---------------------------------------------------------------- output

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def aggregate_csv(report: RunReport) -> str:
    cfg = report.config
    rows = [(a.scheduler, a.strategy, a.k, a.means["ae"], a.means["pa"], a.means["max_pa"],
             a.means["warm_start_ratio"], a.success_rate, a.runs, cfg.seed, cfg.config_hash)
            for a in report.aggregates]
    return _csv_text(AGGREGATE_HEADER, rows)


def runs_csv(report: RunReport) -> str:
    cfg = report.config
    rows = [(r.scheduler, r.strategy, r.k, r.run, r.ae, r.pa, r.max_pa, r.warm_start_ratio, r.colocated,
             cfg.seed, cfg.config_hash) for r in report.rows]
    return _csv_text(RUN_HEADER, rows)


def features_csv(report: RunReport) -> str:
    cfg = report.config
    rows = [(s, i, *fm.as_row(), cfg.seed, cfg.config_hash) for s, i, fm in report.features]
    return _csv_text(FEATURE_HEADER, rows)


def oracle_csv(report: RunReport) -> str:
    cfg = report.config
    rows = [tuple(r[h] for h in ORACLE_HEADER[:-2]) + (cfg.seed, cfg.config_hash) for r in report.oracle_rows]
    return _csv_text(ORACLE_HEADER, rows)


def manifest_text(cfg: ExperimentConfig) -> str:
    """Config echo that :func:`parse_config` reads back; provenance lines are comments."""
    head = [f"# rng = {RNG_NAME}", f"# config_hash = {cfg.config_hash}"]
    return "\n".join(head) + "\n" + cfg.to_text()


def primary_csv(report: RunReport) -> str:
    """The CSV that best summarises the experiment (what the CLI prints)."""
    exp = report.config.experiment
    if exp == "fingerprint":
        return features_csv(report)
    if exp == "oracle_sweep":
        return oracle_csv(report)
    return aggregate_csv(report)


def write_report(report: RunReport, out_dir) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    files = {"manifest.txt": manifest_text(report.config)}
    exp = report.config.experiment
    if exp == "fingerprint":
        files["features.csv"] = features_csv(report)
    elif exp == "oracle_sweep":
        files["oracle.csv"] = oracle_csv(report)
    else:
        files["aggregate.csv"] = aggregate_csv(report)
        files["runs.csv"] = runs_csv(report)
    paths = []
    for name, text in files.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        paths.append(path)
    return paths


def recompute_metrics(log_paths, attacker_prefix="attacker", victim_owner=VICTIM_OWNER, windows=10) -> str:
    """AE, PA, max PA and warm-start ratio for each saved event log, as CSV."""
    rows = []
    for path in log_paths:
        log = EventLog.read_csv(path)
        owners = {e.owner for e in log}
        attackers = {o for o in owners if o.startswith(attacker_prefix)}
        rep = compute_ae_pa(log, attackers, {victim_owner}, windows)
        warm = warm_start_ratio(log) if len(log) else None
        rows.append((os.path.basename(path), rep.ae, rep.pa, rep.max_pa, warm, int(rep.colocated)))
    return _csv_text(("log", "ae", "pa", "max_pa", "warm_start_ratio", "colocated"), rows)
