import pytest

from colocsim.attacks import (ATTACKER_PACKAGES, UnknownVictimPackages, VictimKnowledge, execute_attack,
                              generate_plan, make_victim, package_catalog, plan_from_config, plan_to_config,
                              select_strategy)
from colocsim.cluster import FunctionSpec
from colocsim.fingerprint import FeatureMatrix
from colocsim.schedulers import PASchScheduler
from colocsim.simulation import Simulation, make_rng

PASCH_ROW = FeatureMatrix(True, False, True, False, "package")
HELPER_ROW = FeatureMatrix(True, True, True, False, None)
RANDOM_ROW = FeatureMatrix(False, False, False, False, None)


def victim(pkgs=(("numpy-like", 300), ("six", 1))):
    return FunctionSpec("victim-fn", "victim", packages=pkgs)


def test_select_strategy_table():
    assert select_strategy(PASCH_ROW, VictimKnowledge(True, victim_function=victim()))[0] == "M3_1"
    assert select_strategy(PASCH_ROW)[0] == "M3_2"
    strategy, hints = select_strategy(HELPER_ROW)
    assert strategy == "M2" and hints["alternative"] == "M1" and hints["multi_function"]
    assert select_strategy(RANDOM_ROW)[0] == "M1"
    assert select_strategy(FeatureMatrix(True, False, False, True, None))[1]["multi_account"]


def test_m3_1_plan_keys_to_victim_package():
    plan = generate_plan("M3_1", 4, VictimKnowledge(True, victim_function=victim()))
    assert len(plan.functions) == 4
    assert {f.largest_package for f in plan.functions} == {"numpy-like"}


def test_m2_plan_bursts():
    plan = generate_plan("M2", 50, rounds=3)
    assert plan.schedule == [(r, plan.functions[0].function_id, 50) for r in range(3)]
    assert plan.k == 50


def test_m1_plan_distinct_names_same_config():
    plan = generate_plan("M1", 5, accounts=2)
    assert len({f.function_id for f in plan.functions}) == 5
    assert {f.packages for f in plan.functions} == {ATTACKER_PACKAGES}
    assert plan.owners == {"attacker0", "attacker1"}


def test_m3_2_plan_distinct_packages():
    plan = generate_plan("M3_2", 30, rng=make_rng(1))
    keys = [f.largest_package for f in plan.functions]
    assert len(set(keys)) == 30
    assert set(keys) <= {p for p, _ in package_catalog()}


def test_plan_errors():
    with pytest.raises(UnknownVictimPackages):
        generate_plan("M3_1", 3)
    with pytest.raises(ValueError):
        generate_plan("M9", 3)
    with pytest.raises(ValueError):
        generate_plan("M1", 0)
    with pytest.raises(ValueError):
        generate_plan("M3_2", 3)
    with pytest.raises(ValueError):
        generate_plan("M3_2", 300, rng=make_rng(0))
    with pytest.raises(ValueError):
        VictimKnowledge(True)


def test_plan_determinism_and_config_roundtrip():
    a = generate_plan("M3_2", 10, rng=make_rng(7), rounds=4)
    b = generate_plan("M3_2", 10, rng=make_rng(7), rounds=4)
    assert a == b
    for plan in (a, generate_plan("M1", 3, rounds=2), generate_plan("M2", 9),
                 generate_plan("M3_1", 2, VictimKnowledge(True, victim_function=victim()))):
        back = plan_from_config(plan_to_config(plan, seed=3))
        assert back.functions == plan.functions and back.schedule == plan.schedule and back.seed == 3


def test_m3_1_lands_on_ring_lookup():
    for run in range(20):
        v = make_victim(make_rng(2, run), run)
        sched = PASchScheduler()
        sim = Simulation(sched, n_nodes=1000)
        plan = generate_plan("M3_1", 3, VictimKnowledge(True, victim_function=v))
        outcome = execute_attack(plan, sim, v)
        target = sched.ring(1000).lookup(v.largest_package)
        assert outcome.colocated and outcome.colocated_nodes == {target}


def test_single_node_always_colocates():
    v = victim()
    for strategy in ("M1", "M2", "M3_2"):
        sim = Simulation("random", n_nodes=1)
        plan = generate_plan(strategy, 2, rng=make_rng(0))
        assert execute_attack(plan, sim, v).colocated


def test_pasch_m1_never_colocates_with_distinct_key():
    v = victim()
    for k in (1, 10, 50):
        sim = Simulation("pasch", n_nodes=1000)
        assert not execute_attack(generate_plan("M1", k, rounds=3), sim, v).colocated


def _success(scheduler, k, runs=500, n=100):
    hits = 0
    for run in range(runs):
        rng = make_rng(13, run)
        v = make_victim(rng, run)
        sim = Simulation(scheduler, n_nodes=n, rng=rng)
        hits += execute_attack(generate_plan("M1", k, rng=rng, prefix=f"a{run}-"), sim, v).colocated
    return hits / runs


@pytest.mark.parametrize("scheduler", ["random", "openwhisk"])
def test_m1_success_non_decreasing_in_k(scheduler):
    rates = [_success(scheduler, k) for k in (1, 5, 20)]
    se = 0.5 / 500 ** 0.5
    for lo, hi in zip(rates, rates[1:]):
        assert hi >= lo - 2 * se
    assert rates[-1] > rates[0]


def test_make_victim_varies_names():
    names = {make_victim(make_rng(0, i), i).function_id for i in range(10)}
    assert len(names) == 10
