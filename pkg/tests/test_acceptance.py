"""Acceptance checks, one test per criterion, each at its stated tolerance and time budget."""

import importlib
import statistics
from itertools import product

import pytest

from colocsim import oracle
from colocsim.harness import monte_carlo_e_colocated, parse_config, run_experiment
from colocsim.simulation import make_rng

TABLE_II = {
    "random": ("N", "N", "N", "N", "N"),
    "helper": ("Y", "Y", "Y", "N", "N"),
    "openwhisk": ("Y", "N", "Y", "N", "N"),
    "pasch": ("Y", "N", "Y", "N", "package"),
}
DD_TARGETS = {5: 0.056, 10: 0.118, 20: 0.203, 30: 0.260, 50: 0.306}
HELPER_TARGETS = {5: 0.495, 10: 0.781}
ZERO_CELLS = [("openwhisk", "M2"), ("openwhisk", "M3_1"), ("pasch", "M1"), ("pasch", "M2")]


def test_1_feature_table(criterion):
    c = criterion("1 feature matrix")
    rep = run_experiment(parse_config("experiment = fingerprint"))
    got = {s: fm.as_row() for s, _, fm in rep.features}
    ok = got == TABLE_II and c.elapsed < 30
    c.check(ok, " ".join(f"{s}={''.join(x[0] for x in row)}" for s, row in got.items()))


def test_2_doubledip_defence(criterion):
    c = criterion("2 defence success rates")
    rep = run_experiment(parse_config("experiment = doubledip_eval"))
    dd = {a: rep.cell("doubledip", k=a).success_rate for a in DD_TARGETS}
    hp = {a: rep.cell("helper", k=a).success_rate for a in DD_TARGETS}
    dd_ok = all(abs(dd[a] - t) <= 0.05 for a, t in DD_TARGETS.items())
    hp_ok = all(abs(hp[a] - t) <= 0.07 for a, t in HELPER_TARGETS.items())
    hp_ok = hp_ok and all(hp[a] >= 0.99 for a in (20, 30, 50))
    detail = (f"doubledip {[round(dd[a], 3) for a in DD_TARGETS]} helper {[round(hp[a], 3) for a in DD_TARGETS]}")
    c.check(dd_ok and hp_ok and c.elapsed < 300, detail)


def test_3_transfer_zero_cells(criterion):
    c = criterion("3 transfer zeros")
    rep = run_experiment(parse_config("experiment = transfer_matrix\nruns = 50"))
    hits = {cell: sum(bool(r.colocated) for r in rep.rows if (r.scheduler, r.strategy) == cell)
            for cell in ZERO_CELLS}
    ok = all(v == 0 for v in hits.values()) and c.elapsed < 120
    c.check(ok, ", ".join(f"{s}x{m}={v}/50" for (s, m), v in hits.items()))


def test_4_package_targeting(criterion):
    c = criterion("4 PASch x M3_1")
    rep = run_experiment(parse_config("scheduler = pasch\nstrategy = M3_1\nk_functions = 1, 10\nruns = 500\n"
                                      "knows_packages = true\nn_nodes = 1000"))
    rates = {a.k: a.success_rate for a in rep.aggregates}
    c.check(all(r >= 0.99 for r in rates.values()), f"success by k {rates}")


def _enumerated(n, a, b):
    total = count = 0
    for xs in product(range(n), repeat=a):
        s = set(xs)
        for ys in product(range(n), repeat=b):
            total += len(s & set(ys))
            count += 1
    return total / count


def test_5_oracle_vs_monte_carlo(criterion):
    c = criterion("5 oracle agreement")
    parts, ok = [], True
    for i, (n, a, b) in enumerate([(10, 5, 5), (100, 20, 1), (1000, 64, 1)]):
        mean, se = monte_carlo_e_colocated(n, a, b, 10_000, make_rng(0, i))
        exact = oracle.e_colocated_random(n, a, b)
        z = abs(mean - exact) / se
        ok &= z <= 3
        parts.append(f"N={n}: mc {mean:.4f} vs {exact:.4f} ({z:.2f} SE)")
    worst = max(abs(oracle.e_colocated_random(n, a, b) - _enumerated(n, a, b)) / max(_enumerated(n, a, b), 1e-300)
                for n in range(1, 5) for a in range(4) for b in range(4) if _enumerated(n, a, b) > 0)
    ok &= worst <= 1e-12
    parts.append(f"enumeration max rel err {worst:.1e}")
    c.check(ok, "; ".join(parts))


def _autoscaling_below(n, a, r):
    lo, hi = oracle.p_colocate_autoscaling(n, a, r), oracle.p_colocate_invocation_locality(n, a)
    if hi < 1.0:
        return lo < hi
    # both round to 1.0; compare log miss probabilities instead
    return oracle.k_log(n, a / r) > oracle.k_log(n, a)


def test_6_autoscaling_penalty(criterion):
    c = criterion("6 auto-scaling ordering")
    analytic = all(_autoscaling_below(n, a, r)
                   for n in (10, 100, 1000, 10**6) for a in (1, 2, 10, 100, 1000) for r in (2, 5, 10, 50))
    rep = run_experiment(parse_config("scheduler = helper\nstrategy = M1, M2\nk_functions = 100\nruns = 200"))
    m1, m2 = rep.cell("helper", "M1").success_rate, rep.cell("helper", "M2").success_rate
    c.check(analytic and m2 < m1, f"analytic grid ok={analytic}; helper M1 {m1:.3f} > M2 {m2:.3f}")


def test_7_warm_start_cost(criterion):
    c = criterion("7 warm-start ordering")
    rep = run_experiment(parse_config("experiment = warmstart_cost"))
    w = {a.scheduler: a.means["warm_start_ratio"] for a in rep.aggregates}
    h, d, o = w["helper"], w["doubledip"], w["openwhisk"]
    ok = h >= d >= o and h - d <= 0.02 and c.elapsed < 120
    c.check(ok, f"helper {h:.4f} >= doubledip {d:.4f} >= openwhisk {o:.4f}, gap {h - d:.4f}")


PROPERTY_TESTS = [
    ("test_cluster", "test_random_op_sequences_keep_invariants"),
    ("test_schedulers", "test_doubledip_argmin_membership"),
    ("test_schedulers", "test_pasch_decision_depends_only_on_largest_package"),
    ("test_fingerprint", "test_update_trace_dense_and_idempotent"),
    ("test_metrics", "test_tracker_matches_log"),
]


def test_8_property_suites(criterion):
    c = criterion("8 properties + scatter AE")
    failed = []
    for mod, name in PROPERTY_TESTS:
        try:
            getattr(importlib.import_module(mod), name)()
        except Exception as exc:  # noqa: BLE001 - report every failing suite
            failed.append(f"{name}: {type(exc).__name__}")
    rep = run_experiment(parse_config("scheduler = openwhisk, helper, pasch\nstrategy = M1, M3_2\n"
                                      "k_functions = 20\nruns = 200"))
    medians = {}
    for sched, strat in (("openwhisk", "M1"), ("helper", "M1"), ("pasch", "M3_2")):
        medians[f"{sched}x{strat}"] = statistics.median(
            r.ae for r in rep.rows if (r.scheduler, r.strategy) == (sched, strat))
    ok = not failed and all(m < 0.15 for m in medians.values())
    c.check(ok, f"{len(PROPERTY_TESTS) - len(failed)}/{len(PROPERTY_TESTS)} property suites green; "
                f"median AE {medians}" + (f"; failed {failed}" if failed else ""))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
