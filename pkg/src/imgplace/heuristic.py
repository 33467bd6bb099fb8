"""Depth-first replica placement with iterative deepening on the replica bound.

The search reproduces chronological backtracking over ``member/2``: for the
image at hand, replicas are added one at a time in node order until every
node can pull the image in time, and failures further down the image list
backtrack into earlier choices. Two bookkeeping devices keep it tractable
without changing which placement is found first:

* a replica set already visited for the current image is not expanded
  again (re-visits can only reproduce solutions already tried);
* a suffix of the image list that failed from a given residual-storage
  state is not searched again from an equivalent state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ._compiled import Compiled, Deadline, SearchTimeout, iter_bits
from .eligibility import allocated_storage, cost
from .model import Allocation, ContainerImage, Placement, ProblemInstance
from .network import mean_outgoing_bandwidth

DEFAULT_DEADLINE = 6.0

__all__ = [
    "SearchBudget",
    "IPPResult",
    "SearchTimeout",
    "order_images",
    "order_nodes",
    "replica_placement",
    "image_placement",
    "solve_ipp",
]


@dataclass
class SearchBudget:
    deadline: float | None = DEFAULT_DEADLINE  # seconds; None disables the timeout
    node_order: list[str] | None = None
    image_order: list[str] | None = None

    def __post_init__(self):
        if self.deadline is not None and self.deadline <= 0:
            raise ValueError("deadline must be positive")

    @classmethod
    def ordered(cls, inst: ProblemInstance, deadline: float | None = DEFAULT_DEADLINE) -> "SearchBudget":
        """Budget using the fail-first image order and fail-last node order."""
        return cls(deadline, order_nodes(inst), [i.id for i in order_images(inst.images)])


@dataclass
class IPPResult:
    placement: Placement
    cost: float
    replicas_used: int
    allocation: Allocation = field(repr=False)


def order_images(images: Iterable[ContainerImage]) -> list[ContainerImage]:
    return sorted(images, key=lambda i: (-i.size, i.id))


def order_nodes(inst: ProblemInstance) -> list[str]:
    e2e = inst.e2e

    def key(node_id):
        node = inst.nodes[node_id]
        return (node.unit_cost, -mean_outgoing_bandwidth(node_id, e2e), -node.storage, node_id)

    return sorted(inst.nodes, key=key)


class _DepthFirst:
    def __init__(self, comp: Compiled, base_used: Sequence[float], r: int, deadline: Deadline):
        self.c = comp
        self.used = list(base_used)
        self.r = r
        self.deadline = deadline
        self.choice = [0] * len(comp.images)
        self.failed: set = set()
        sizes = comp.sizes
        self.suffix = [sum(sizes[k:]) for k in range(len(sizes) + 1)]

    def replica_sets(self, k: int):
        c = self.c
        size = c.sizes[k]
        row = c.cover[k]
        full = c.full
        used, cap = self.used, c.cap
        fits = [cap[b] - used[b] >= size for b in range(c.n)]
        seen: set[int] = set()
        check = self.deadline.check

        def extend(hosts, covered, left):
            check()
            if covered == full:
                yield hosts
                return
            if left == 0:
                return
            for b in range(c.n):
                bit = 1 << b
                if hosts & bit or not fits[b]:
                    continue
                nxt = hosts | bit
                if nxt in seen:
                    continue
                seen.add(nxt)
                yield from extend(nxt, covered | row[b], left - 1)

        yield from extend(0, 0, self.r)

    def _state_key(self, k):
        bound = self.suffix[k]
        return (k, tuple(
            res if res < bound else math.inf
            for res in (cap - u for cap, u in zip(self.c.cap, self.used))
        ))

    def search(self, k: int = 0) -> bool:
        if k == len(self.c.images):
            return True
        key = self._state_key(k)
        if key in self.failed:
            return False
        size = self.c.sizes[k]
        for hosts in self.replica_sets(k):
            bits = list(iter_bits(hosts))
            saved = [self.used[b] for b in bits]
            for b in bits:
                self.used[b] += size
            self.choice[k] = hosts
            if self.search(k + 1):
                return True
            for b, v in zip(bits, saved):
                self.used[b] = v
        self.failed.add(key)
        return False

    def placement(self) -> dict[str, frozenset[str]]:
        return {img.id: frozenset(self.c.nodes_of(m)) for img, m in zip(self.c.images, self.choice)}


def _to_place(inst: ProblemInstance, partial: Placement, image_order) -> list[str]:
    order = image_order if image_order is not None else [i.id for i in inst.images]
    return [i for i in order if i not in partial]


def _run(inst, partial, image_ids, r, budget, deadline):
    comp = Compiled(inst, budget.node_order, image_ids)
    if image_ids and comp.n == 0:
        return None
    dfs = _DepthFirst(comp, comp.used_by(partial), r, deadline)
    if not dfs.search():
        return None
    new = dfs.placement()
    prov = {i: "new" for i in new}
    return partial.merged(Placement(new, prov))


def replica_placement(img_id: str, partial: Placement, r: int, inst: ProblemInstance,
                      budget: SearchBudget | None = None) -> Placement | None:
    """First extension of ``partial`` with at most ``r`` replicas of one image."""
    budget = budget or SearchBudget()
    return _run(inst, partial, [img_id], r, budget, Deadline(budget.deadline))


def image_placement(images: Sequence[str], partial: Placement, r: int, inst: ProblemInstance,
                    budget: SearchBudget | None = None) -> Placement | None:
    """Place ``images`` in the given order on top of ``partial``, at most ``r``
    replicas each. None when the search space is exhausted; raises
    SearchTimeout when the budget runs out."""
    budget = budget or SearchBudget()
    return _run(inst, partial, [i for i in images if i not in partial], r, budget, Deadline(budget.deadline))


def solve_ipp(inst: ProblemInstance, partial: Placement | None = None,
              budget: SearchBudget | None = None) -> IPPResult | None:
    """Iterative deepening: replica bound 1, 2, ..., max_replicas; the first
    total eligible placement found wins."""
    budget = budget or SearchBudget()
    partial = partial or Placement()
    deadline = Deadline(budget.deadline)
    image_ids = _to_place(inst, partial, budget.image_order)
    if not image_ids:
        return IPPResult(partial, cost(partial, inst), 1, allocated_storage(partial, inst))
    comp = Compiled(inst, budget.node_order, image_ids)
    if comp.n == 0:
        return None
    base_used = comp.used_by(partial)
    for r in range(1, inst.max_replicas + 1):
        dfs = _DepthFirst(comp, base_used, r, deadline)
        if dfs.search():
            new = dfs.placement()
            placed = partial.merged(Placement(new, {i: "new" for i in new}))
            return IPPResult(placed, cost(placed, inst), r, allocated_storage(placed, inst))
    return None
