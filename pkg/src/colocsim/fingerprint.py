"""Three-phase scheduler fingerprinting and feature inference.

The probe deploys a function, invokes it under increasing load (phase 1),
waits for every host to expire, invokes it alternately with a renamed copy
(phase 2), waits again, and finally invokes variants that differ along one
configuration axis (phase 3). Each execution reports a server fingerprint,
which :func:`update_trace` turns into dense server ids. :class:`FeatureInference`
reads the five locality features off the three traces.
"""

from __future__ import annotations

import csv
import io
import statistics
from dataclasses import dataclass, field

from sklearn.base import BaseEstimator

from .cluster import FunctionSpec
from .simulation import Simulation

F5_CHOICES = (None, "package", "app")
TRACE_HEADER = ("phase", "invocation_idx", "function_id", "server_id")


class InsufficientTrace(ValueError):
    pass


@dataclass
class ServerRecord:
    """Fingerprint -> server id, ids handed out densely from 1 in discovery order."""

    ids: dict = field(default_factory=dict)
    next_id: int = 1

    def __len__(self):
        return len(self.ids)


@dataclass
class PhaseTrace:
    phase: int
    entries: list = field(default_factory=list)  # (invocation_idx, function_id, server_id)
    # phase 3 only: function_id -> value of the varied configuration attribute
    groups: dict = field(default_factory=dict)
    axis: str | None = None

    def __len__(self):
        return len(self.entries)

    def servers(self, function_id=None) -> list[int]:
        return [s for _, f, s in self.entries if function_id is None or f == function_id]


def update_trace(record: ServerRecord, trace: list, fingerprint) -> int:
    """Map ``fingerprint`` to a server id (allocating one if unseen) and append it to ``trace``."""
    sid = record.ids.get(fingerprint)
    if sid is None:
        sid = record.ids[fingerprint] = record.next_id
        record.next_id += 1
    trace.append(sid)
    return sid


@dataclass
class ProtocolConfig:
    phase_invocations: int = 2000
    drain_len: int | None = None  # defaults to the cluster TTL
    n_variants: int = 8
    variants_per_group: int = 2
    locality_axis: str = "package"
    owner: str = "prober"

    def validate(self, ttl):
        if self.phase_invocations < 1:
            raise ValueError("phase_invocations must be >= 1")
        if self.locality_axis not in ("package", "app"):
            raise ValueError(f"locality_axis must be 'package' or 'app', got {self.locality_axis!r}")
        if self.n_variants < 2 or self.variants_per_group < 1:
            raise ValueError("need n_variants >= 2 and variants_per_group >= 1")
        drain = ttl if self.drain_len is None else self.drain_len
        if drain < ttl:
            raise ValueError(f"drain_len {drain} is shorter than the TTL {ttl}; hosts would survive")
        return drain


def ramp_bursts(total: int) -> list[int]:
    """Per-round invocation counts 1, 2, 3, ... summing exactly to ``total``."""
    bursts, k = [], 1
    while total > 0:
        b = min(k, total)
        bursts.append(b)
        total -= b
        k += 1
    return bursts


def _probe_function(name, owner, packages, app_id=None):
    return FunctionSpec(name, owner, app_id=app_id or name, packages=packages)


def make_probe_functions(cfg: ProtocolConfig):
    """phi0, its renamed copy phi1, and the phase-3 variants with their group labels."""
    base_pkgs = (("probe-runtime", 40), ("probe-base", 10))
    phi0 = _probe_function("phi0", cfg.owner, base_pkgs, app_id="app-0")
    phi1 = _probe_function("phi1", cfg.owner, base_pkgs, app_id="app-1")
    variants, groups = [], {}
    for v in range(cfg.n_variants):
        g = v // cfg.variants_per_group
        name = f"phi0-v{v}"
        if cfg.locality_axis == "package":
            spec = _probe_function(name, cfg.owner, ((f"probe-pkg-{g}", 100),) + base_pkgs, app_id=f"app-v{v}")
        else:
            spec = _probe_function(name, cfg.owner, base_pkgs, app_id=f"app-g{g}")
        variants.append(spec)
        groups[name] = f"{cfg.locality_axis}-{g}"
    return phi0, phi1, variants, groups


def run_protocol(sim: Simulation, cfg: ProtocolConfig | None = None) -> list[PhaseTrace]:
    """Drive the three probe phases against ``sim`` and return one trace per phase.

    The server fingerprint is the node id the cluster reports for each
    execution; ids in the traces come from a single :class:`ServerRecord`.
    """
    cfg = cfg or ProtocolConfig()
    drain = cfg.validate(sim.cluster.ttl)
    phi0, phi1, variants, groups = make_probe_functions(cfg)
    record = ServerRecord()
    traces = []
    schedules = [
        lambda i: phi0,
        lambda i: (phi0, phi1)[i % 2],
        lambda i: variants[i % len(variants)],
    ]
    for phase, pick in enumerate(schedules, start=1):
        trace = PhaseTrace(phase)
        if phase == 3:
            trace.groups, trace.axis = dict(groups), cfg.locality_axis
        ids: list[int] = []
        idx = 0
        for burst in ramp_bursts(cfg.phase_invocations):
            for _ in range(burst):
                spec = pick(idx)
                node = sim.invoke(spec).node_id
                sid = update_trace(record, ids, node)
                trace.entries.append((idx, spec.function_id, sid))
                idx += 1
            sim.end_round()
        sim.idle(drain)
        traces.append(trace)
    return traces


def _jaccard(a, b):
    a, b = set(a), set(b)
    return len(a & b) / len(a | b) if a | b else 0.0


def _run_lengths(seq):
    runs, prev, n = [], object(), 0
    for s in seq:
        if s == prev:
            n += 1
        else:
            if n:
                runs.append(n)
            prev, n = s, 1
    if n:
        runs.append(n)
    return runs


@dataclass(frozen=True)
class FeatureMatrix:
    f1_invocation_locality: bool
    f2_auto_scaling: bool
    f3_cold_start_same_location: bool
    f4_account_locality: bool
    f5_config_locality: str | None

    def as_row(self):
        mark = {True: "Y", False: "N"}
        return (mark[self.f1_invocation_locality], mark[self.f2_auto_scaling],
                mark[self.f3_cold_start_same_location], mark[self.f4_account_locality],
                self.f5_config_locality or "N")


class FeatureInference(BaseEstimator):
    """Infer F1-F5 from the three probe traces.

    Parameters
    ----------
    locality_threshold : float
        F1 requires phase 1 to touch at most this fraction of distinct servers
        per invocation.
    min_run_length : float
        F1 also requires the median run of consecutive same-server executions
        to be at least this long.
    n_windows : int
        Phase 1 is split into this many equal windows; F2 needs the cumulative
        server count to grow across at least ``min_growth_steps`` boundaries.
    overlap_threshold : float
        Jaccard overlap at which two server sets count as "the same set"
        (F4 and the within-group half of F5).
    separation_threshold : float
        Mean cross-group Jaccard overlap below which groups count as separated.
    """

    def __init__(self, locality_threshold=0.05, min_run_length=2, n_windows=4, min_growth_steps=2,
                 overlap_threshold=0.5, separation_threshold=0.1):
        self.locality_threshold = locality_threshold
        self.min_run_length = min_run_length
        self.n_windows = n_windows
        self.min_growth_steps = min_growth_steps
        self.overlap_threshold = overlap_threshold
        self.separation_threshold = separation_threshold

    def fit(self, traces, y=None):
        traces = list(traces)
        if len(traces) != 3 or any(len(t) == 0 for t in traces):
            raise InsufficientTrace("need three non-empty phase traces")
        p1, p2, p3 = traces
        s1 = p1.servers()

        distinct = len(set(s1))
        runs = _run_lengths(s1)
        f1 = (distinct <= self.locality_threshold * len(s1)
              and statistics.median(runs) >= self.min_run_length)

        growth = 0
        w = len(s1) / self.n_windows
        prev = None
        for k in range(1, self.n_windows + 1):
            seen = len(set(s1[: round(k * w)]))
            if prev is not None and seen > prev:
                growth += 1
            prev = seen
        f2 = f1 and growth >= self.min_growth_steps

        first_fn = p1.entries[0][1]
        p2_first = [s for _, f, s in p2.entries if f == first_fn]
        f3 = bool(p2_first) and p2_first[0] == p1.entries[0][2]

        fns2 = list(dict.fromkeys(f for _, f, _ in p2.entries))
        if len(fns2) >= 2:
            same_user = _jaccard(p2.servers(fns2[0]), p2.servers(fns2[1])) >= self.overlap_threshold
        else:
            same_user = False
        sets3 = {f: set(p3.servers(f)) for f in dict.fromkeys(f for _, f, _ in p3.entries)}
        names3 = list(sets3)
        pairs3 = [(a, b) for i, a in enumerate(names3) for b in names3[i + 1:]]
        collapse = bool(pairs3) and statistics.fmean(
            _jaccard(sets3[a], sets3[b]) for a, b in pairs3) >= self.overlap_threshold
        f4 = f1 and same_user and collapse

        f5 = None
        if p3.groups and pairs3:
            within = [_jaccard(sets3[a], sets3[b]) for a, b in pairs3 if p3.groups.get(a) == p3.groups.get(b)]
            across = [_jaccard(sets3[a], sets3[b]) for a, b in pairs3 if p3.groups.get(a) != p3.groups.get(b)]
            if (within and across and statistics.fmean(within) >= self.overlap_threshold
                    and statistics.fmean(across) <= self.separation_threshold):
                f5 = p3.axis
        self.features_ = FeatureMatrix(f1, f2, f3, f4, f5)
        self.diagnostics_ = {
            "phase1_distinct": distinct, "phase1_median_run": statistics.median(runs),
            "phase1_growth_steps": growth, "phase2_overlap": same_user, "phase3_collapse": collapse,
        }
        return self

    def predict(self, traces) -> FeatureMatrix:
        return self.fit(traces).features_


def infer_features(traces, **params) -> FeatureMatrix:
    return FeatureInference(**params).predict(traces)


def traces_to_csv(traces) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for t in traces:
        for idx, fid, sid in t.entries:
            w.writerow((t.phase, idx, fid, sid))
    return buf.getvalue()


def traces_from_csv(text: str, groups=None, axis=None) -> list[PhaseTrace]:
    rows = csv.reader(io.StringIO(text))
    if tuple(next(rows, ())) != TRACE_HEADER:
        raise ValueError("bad trace header")
    traces = {p: PhaseTrace(p) for p in (1, 2, 3)}
    for row in rows:
        if row:
            phase, idx, fid, sid = row
            traces[int(phase)].entries.append((int(idx), fid, int(sid)))
    if groups:
        traces[3].groups, traces[3].axis = dict(groups), axis
    return [traces[1], traces[2], traces[3]]


def fingerprint_scheduler(scheduler, n_nodes=1000, capacity=1024, ttl=20, seed=0, cfg=None, **params):
    """Run the probe against a fresh simulation and infer its features."""
    sim = Simulation(scheduler, n_nodes=n_nodes, capacity=capacity, ttl=ttl, seed=seed, **params)
    traces = run_protocol(sim, cfg)
    return traces, infer_features(traces)
