from dataclasses import replace

import numpy as np
import pytest

from imgplace import load_example5
from imgplace.continuous import (INITIAL, RECOVERY, STEADY, Budgets, WorkflowState, cr_placement,
                                 partition_ok_ko, workflow_step)
from imgplace.eligibility import StorageExceeded, TransferUnsatisfied, check_eligible
from imgplace.exact import solve_oipp
from imgplace.model import ContainerImage, DirectLink, Infrastructure, Placement, ProblemInstance, RegistryNode
from imgplace.scenario import ChurnConfig, GeneratorConfig, generate_instance, image_group, step_churn

OPTIMUM = Placement.of({"alpine": ["edge2"], "ubuntu": ["edge2", "edge5"], "nginx": ["edge2", "edge3", "edge5"]})
REDIS = ContainerImage("redis", 149, 60)


@pytest.fixture
def ex5():
    return load_example5()


def _without(inst, node):
    return ProblemInstance(inst.infrastructure.without_nodes([node]), inst.images, inst.max_replicas)


def _plus(inst, img):
    return ProblemInstance(inst.infrastructure, inst.images + (img,), inst.max_replicas)


def test_node_failure_shrinks_replica_set(ex5):
    inst = _without(ex5, "edge3")
    out = partition_ok_ko(OPTIMUM, inst)
    assert out.ko_images == [] and out.replicas_lost == 1
    assert out.ok_placement["nginx"] == frozenset({"edge2", "edge5"})
    res = cr_placement(OPTIMUM, inst)
    assert res.cost == pytest.approx(212.0, abs=1e-6) and res.migrated == set()


def test_new_image_goes_ko(ex5):
    inst = _plus(_without(ex5, "edge3"), REDIS)
    current = OPTIMUM.restricted(["alpine", "ubuntu"]).merged(Placement.of({"nginx": ["edge2", "edge5"]}))
    out = partition_ok_ko(current, inst)
    assert out.ko_images == ["redis"]
    assert all(isinstance(v, TransferUnsatisfied) for v in out.reasons["redis"])
    res = cr_placement(current, inst)
    assert res.cost == pytest.approx(331.2, abs=1e-6)
    assert res.migrated == {"redis"}
    assert res.placement["redis"] == frozenset({"edge2", "edge5"})
    for img in ("alpine", "ubuntu", "nginx"):
        assert res.placement[img] == current[img]
    assert res.placement.provenance == {"alpine": "kept", "ubuntu": "kept", "nginx": "kept", "redis": "new"}


def test_unchanged_instance(ex5):
    out = partition_ok_ko(OPTIMUM, ex5)
    assert out.ko_images == [] and out.ok_placement == OPTIMUM
    res = cr_placement(OPTIMUM, ex5)
    assert res.placement == OPTIMUM and res.migrated == set()


def test_all_ko_fails(ex5):
    nodes = {n: replace(v, storage=0.0) for n, v in ex5.nodes.items()}
    inst = ProblemInstance(Infrastructure(nodes, ex5.infrastructure.links), ex5.images, 3)
    out = partition_ok_ko(OPTIMUM, inst)
    assert sorted(out.ko_images) == ["alpine", "nginx", "ubuntu"]
    assert cr_placement(OPTIMUM, inst, outcome=out) is None


def test_greedy_scan_is_order_dependent(ex5):
    # edge5 shrinks to fit only one of nginx (192) / ubuntu (69) + alpine
    nodes = dict(ex5.nodes)
    nodes["edge5"] = replace(nodes["edge5"], storage=200.0)
    inst = ProblemInstance(Infrastructure(nodes, ex5.infrastructure.links), ex5.images, 3)
    out = partition_ok_ko(OPTIMUM, inst)
    assert out.ko_images == ["ubuntu"]
    assert any(isinstance(v, StorageExceeded) for v in out.reasons["ubuntu"])
    other = partition_ok_ko(OPTIMUM, inst, scan_order=["alpine", "ubuntu", "nginx"])
    assert other.ko_images == ["nginx"]


def test_lower_replica_cap_sends_image_ko(ex5):
    inst = ProblemInstance(ex5.infrastructure, ex5.images, 2)
    assert partition_ok_ko(OPTIMUM, inst).ko_images == ["nginx"]


def _random_changes(seed, steps=12):
    inst = generate_instance(GeneratorConfig(n_nodes=25, seed=seed, storage_distribution=[(1.0, 4000.0)]),
                             image_group(4))
    rng = np.random.default_rng(seed)
    base = inst
    out = []
    for _ in range(steps):
        base, visible, _ = step_churn(base, ChurnConfig(p_node_failure=0.1), rng)
        out.append(visible)
    return inst, out


@pytest.mark.parametrize("seed", range(8))
def test_partition_and_stability_invariants(seed):
    inst, sequence = _random_changes(seed)
    current = solve_oipp(inst, 5).placement
    for new in sequence:
        out = partition_ok_ko(current, new)
        ok_ids = set(out.ok_placement.images())
        assert ok_ids | set(out.ko_images) == {i.id for i in new.images}
        assert not ok_ids & set(out.ko_images)
        assert check_eligible(out.ok_placement, new, scope=ok_ids).eligible
        assert all(out.reasons[i] for i in out.ko_images)
        res = cr_placement(current, new, outcome=out)
        if res is None:
            current = solve_oipp(new, 5).placement
            if current is None:
                break
            continue
        assert check_eligible(res.placement, new).eligible
        assert res.migrated <= set(out.ko_images)
        for i in ok_ids:
            assert res.placement[i] == frozenset(n for n in current[i] if n in new.nodes)
        current = res.placement


def test_workflow_phases(ex5):
    state = workflow_step(WorkflowState(), ex5)
    assert state.phase == STEADY and state.last["path"] == "exact"
    assert state.last["cost"] == pytest.approx(308.0, abs=1e-6)
    same = workflow_step(state, ex5)
    assert same.current == state.current and same.last["path"] == "heuristic" and same.last["migrations"] == 0
    nodes = {n: replace(v, storage=1.0) for n, v in ex5.nodes.items()}
    dead = ProblemInstance(Infrastructure(nodes, ex5.infrastructure.links), ex5.images, 3)
    broken = workflow_step(same, dead)
    assert broken.phase == RECOVERY and broken.current is None and broken.last["status"] == "infeasible"
    back = workflow_step(broken, ex5)
    assert back.phase == STEADY and back.last["path"] == "exact"
    assert workflow_step(WorkflowState(), dead).phase == INITIAL


def test_workflow_epoch_counter_and_budgets(ex5):
    state = WorkflowState()
    for _ in range(3):
        state = workflow_step(state, ex5, Budgets(0.5, 1.0))
    assert state.epoch == 3


def test_heuristic_failure_falls_back_to_exact():
    # y only fits on a, which x occupies; keeping x fixed cannot work, but
    # moving x to b can
    nodes = [RegistryNode("a", 10, 0.1), RegistryNode("b", 7, 0.5)]
    links = [DirectLink("a", "b", 1, 1000), DirectLink("b", "a", 1, 1000)]
    x, y = ContainerImage("x", 3, 10), ContainerImage("y", 8, 10)
    before = ProblemInstance(Infrastructure.build(nodes, links), (x,), 1)
    state = workflow_step(WorkflowState(), before)
    assert state.current == Placement.of({"x": ["a"]})
    after = ProblemInstance(before.infrastructure, (x, y), 1)
    nxt = workflow_step(state, after)
    assert nxt.last["heuristic_status"] == "fail" and nxt.last["path"] == "exact"
    assert nxt.current == Placement.of({"x": ["b"], "y": ["a"]})
    assert nxt.last["migrated"] == ["x", "y"]
    assert nxt.current.provenance == {"x": "migrated", "y": "new"}
