"""Eligibility checks (replica cap, transfer budgets, storage), cost and allocation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

from .model import Allocation, ContainerImage, Placement, ProblemInstance
from .network import transfer_time


@dataclass(frozen=True)
class ReplicaCapExceeded:
    image: str
    replicas: int
    cap: int


@dataclass(frozen=True)
class TransferUnsatisfied:
    image: str
    node: str


@dataclass(frozen=True)
class StorageExceeded:
    node: str
    used: float
    capacity: float


Violation = Union[ReplicaCapExceeded, TransferUnsatisfied, StorageExceeded]


@dataclass
class EligibilityReport:
    violations: list = field(default_factory=list)

    @property
    def eligible(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.eligible


def replica_cap_ok(p: Placement, max_replicas: int) -> bool:
    return all(len(nodes) <= max_replicas for nodes in p.assignments.values())


def transfer_times_ok(img: ContainerImage, p: Placement, inst: ProblemInstance, e2e=None) -> dict[str, bool]:
    """Per destination node: does it host ``img`` or can it pull it within budget?"""
    e2e = inst.e2e if e2e is None else e2e
    hosts = [n for n in p.get(img.id) if n in inst.nodes]
    result = {}
    for dst in inst.nodes:
        ok = False
        for src in hosts:
            t = transfer_time(img, src, dst, e2e)
            if t is not None and t <= img.max_transfer_time:
                ok = True
                break
        result[dst] = ok
    return result


def _used(p: Placement, inst: ProblemInstance, scope=None) -> dict[str, float]:
    used = {n: 0.0 for n in inst.nodes}
    for img_id, nodes in p.assignments.items():
        if scope is not None and img_id not in scope:
            continue
        size = inst.image(img_id).size
        for n in nodes:
            if n in used:
                used[n] += size
    return used


def storage_ok(p: Placement, inst: ProblemInstance) -> dict[str, bool]:
    used = _used(p, inst)
    return {n: used[n] <= inst.nodes[n].storage for n in inst.nodes}


def check_eligible(p: Placement, inst: ProblemInstance, scope: Iterable[str] | None = None) -> EligibilityReport:
    """All violations of the three eligibility conditions over ``scope``
    (default: every image of the instance). Unplaced in-scope images fail
    the transfer condition at every node."""
    scope_ids = [i.id for i in inst.images] if scope is None else list(scope)
    scope_set = set(scope_ids)
    report = EligibilityReport()
    e2e = inst.e2e
    for img_id in scope_ids:
        nodes = p.get(img_id)
        if len(nodes) > inst.max_replicas:
            report.violations.append(ReplicaCapExceeded(img_id, len(nodes), inst.max_replicas))
    for img_id in scope_ids:
        img = inst.image(img_id)
        for dst, ok in transfer_times_ok(img, p, inst, e2e).items():
            if not ok:
                report.violations.append(TransferUnsatisfied(img_id, dst))
    used = _used(p, inst, scope_set)
    for n, node in inst.nodes.items():
        if used[n] > node.storage:
            report.violations.append(StorageExceeded(n, used[n], node.storage))
    return report


def cost(p: Placement, inst: ProblemInstance) -> float:
    total = 0.0
    for img_id, nodes in p.assignments.items():
        size = inst.image(img_id).size
        for n in nodes:
            total += size * inst.nodes[n].unit_cost
    return total


def allocated_storage(p: Placement, inst: ProblemInstance) -> Allocation:
    per_node: dict[str, list[tuple[str, float]]] = {n: [] for n in inst.nodes}
    for img_id, nodes in p.assignments.items():
        size = inst.image(img_id).size
        for n in sorted(nodes):
            per_node.setdefault(n, []).append((img_id, size))
    return Allocation(per_node)
