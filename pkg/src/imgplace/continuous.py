"""Adapting an existing placement to a changed instance.

``partition_ok_ko`` keeps every image whose surviving replicas are still
eligible, scanning images largest first and accumulating storage;
``cr_placement`` re-places only the rest with the heuristic, and
``workflow_step`` falls back to the exact solver whenever that fails.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

from .eligibility import (ReplicaCapExceeded, StorageExceeded, TransferUnsatisfied, cost,
                          transfer_times_ok)
from .exact import (DEFAULT_DEADLINE as EXACT_DEADLINE, OPTIMAL,
                    TIMEOUT_WITH_INCUMBENT, solve_oipp)
from .heuristic import DEFAULT_DEADLINE as HEURISTIC_DEADLINE
from .heuristic import SearchBudget, SearchTimeout, order_images, order_nodes, solve_ipp
from .model import Placement, ProblemInstance

INITIAL, STEADY, RECOVERY = "initial", "steady", "recovery"


@dataclass
class CrOutcome:
    ok_placement: Placement
    ko_images: list[str]
    reasons: dict[str, list] = field(default_factory=dict)
    replicas_lost: int = 0


@dataclass
class CrResult:
    placement: Placement
    cost: float
    migrated: set[str]
    outcome: CrOutcome


def partition_ok_ko(current: Placement, new_inst: ProblemInstance, scan_order=None) -> CrOutcome:
    """Split the images of ``new_inst`` into still-eligible (kept verbatim,
    minus replicas on vanished nodes) and invalidated ones.

    Images absent from ``current`` are invalidated with a transfer violation
    at every node. The scan is greedy in ``scan_order`` (default: largest
    first), so the kept set is maximal only with respect to that order.
    """
    if scan_order is None:
        scan_order = [i.id for i in order_images(new_inst.images)]
    nodes = new_inst.nodes
    used = {n: 0.0 for n in nodes}
    ok: dict[str, frozenset[str]] = {}
    ko: list[str] = []
    reasons: dict[str, list] = {}
    lost = 0
    for img_id in scan_order:
        img = new_inst.image(img_id)
        if img_id not in current:
            ko.append(img_id)
            reasons[img_id] = [TransferUnsatisfied(img_id, n) for n in nodes]
            continue
        old = current[img_id]
        hosts = frozenset(n for n in old if n in nodes)
        lost += len(old) - len(hosts)
        found = []
        if len(hosts) > new_inst.max_replicas:
            found.append(ReplicaCapExceeded(img_id, len(hosts), new_inst.max_replicas))
        probe = Placement({img_id: hosts})
        for dst, good in transfer_times_ok(img, probe, new_inst).items():
            if not good:
                found.append(TransferUnsatisfied(img_id, dst))
        for n in sorted(hosts):
            if used[n] + img.size > nodes[n].storage:
                found.append(StorageExceeded(n, used[n] + img.size, nodes[n].storage))
        if found:
            ko.append(img_id)
            reasons[img_id] = found
            continue
        ok[img_id] = hosts
        for n in hosts:
            used[n] += img.size
    ok_placement = Placement(ok, {i: "kept" for i in ok})
    return CrOutcome(ok_placement, ko, reasons, lost)


def _provenance(new: Placement, previous: Placement, surviving) -> dict[str, str]:
    prov = {}
    for img_id, hosts in new.assignments.items():
        if img_id not in previous:
            prov[img_id] = "new"
        elif hosts == frozenset(n for n in previous[img_id] if n in surviving):
            prov[img_id] = "kept"
        else:
            prov[img_id] = "migrated"
    return prov


def changed_images(new: Placement, previous: Placement | None, surviving) -> set[str]:
    """Images whose replica set differs from their surviving previous one."""
    if previous is None:
        return set(new.assignments)
    return {i for i, tag in _provenance(new, previous, surviving).items() if tag != "kept"}


def cr_placement(current: Placement, new_inst: ProblemInstance, budget: SearchBudget | None = None,
                 outcome: CrOutcome | None = None) -> CrResult | None:
    """Keep the eligible part of ``current`` and heuristically place the rest.

    Returns None when nothing can be kept (every image invalidated) or the
    heuristic cannot extend the kept part; raises SearchTimeout on timeout.
    """
    if outcome is None:
        outcome = partition_ok_ko(current, new_inst)
    all_ids = [i.id for i in new_inst.images]
    if all_ids and sorted(outcome.ko_images) == sorted(all_ids):
        return None
    budget = budget or SearchBudget(HEURISTIC_DEADLINE)
    budget = replace(budget, image_order=outcome.ko_images,
                     node_order=budget.node_order or order_nodes(new_inst))
    if outcome.ko_images:
        res = solve_ipp(new_inst, outcome.ok_placement, budget)
        if res is None:
            return None
        placement = res.placement
    else:
        placement = outcome.ok_placement
    placement = Placement(placement.assignments, _provenance(placement, current, new_inst.nodes))
    migrated = changed_images(placement, current, new_inst.nodes)
    return CrResult(placement, cost(placement, new_inst), migrated, outcome)


@dataclass
class WorkflowState:
    phase: str = INITIAL
    current: Placement | None = None
    epoch: int = 0
    last: dict = field(default_factory=dict)


@dataclass
class Budgets:
    heuristic: float | None = HEURISTIC_DEADLINE
    exact: float | None = EXACT_DEADLINE


def _exact(new_inst, budgets):
    res = solve_oipp(new_inst, budgets.exact)
    if res.status in (OPTIMAL, TIMEOUT_WITH_INCUMBENT):
        return res.placement, res.status
    return None, res.status


def workflow_step(state: WorkflowState, new_inst: ProblemInstance, budgets: Budgets | None = None) -> WorkflowState:
    """Advance the adapt-or-reoptimise loop by one monitoring period.

    Without a current placement the exact solver runs; otherwise the kept/
    invalidated split is re-placed heuristically, with an exact from-scratch
    solve when that fails. ``last`` records what happened for logging.
    """
    budgets = budgets or Budgets()
    t0 = time.perf_counter()
    epoch = state.epoch + 1
    record = {"epoch": epoch, "n_ko": 0, "migrations": 0, "replicas_lost": 0, "reasons": {}}
    previous = state.current
    placement = None
    if previous is None:
        placement, status = _exact(new_inst, budgets)
        record.update(path="exact", status=status)
        if placement is not None:
            record["migrations"] = len(placement)
    else:
        outcome = partition_ok_ko(previous, new_inst)
        record.update(n_ko=len(outcome.ko_images), replicas_lost=outcome.replicas_lost,
                      reasons={k: [type(v).__name__ for v in vs] for k, vs in outcome.reasons.items()})
        hb = SearchBudget(budgets.heuristic, order_nodes(new_inst), outcome.ko_images)
        try:
            res = cr_placement(previous, new_inst, hb, outcome)
            status = "ok" if res is not None else "fail"
        except SearchTimeout:
            res, status = None, "timeout"
        if res is not None:
            placement = res.placement
            record.update(path="heuristic", status=status, migrations=len(res.migrated),
                          migrated=sorted(res.migrated))
        else:
            placement, ex_status = _exact(new_inst, budgets)
            record.update(path="exact", status=ex_status, heuristic_status=status)
            if placement is not None:
                migrated = changed_images(placement, previous, new_inst.nodes)
                placement = Placement(placement.assignments, _provenance(placement, previous, new_inst.nodes))
                record.update(migrations=len(migrated), migrated=sorted(migrated))
    record["elapsed_ms"] = (time.perf_counter() - t0) * 1000
    if placement is not None:
        record["cost"] = cost(placement, new_inst)
        return WorkflowState(STEADY, placement, epoch, record)
    record["cost"] = None
    phase = INITIAL if state.phase == INITIAL else RECOVERY
    # keep the stale placement out of the state: it is not eligible any more
    return WorkflowState(phase, None, epoch, record)


declace_step = workflow_step
