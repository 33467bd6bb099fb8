"""Cost-optimal placement by branch-and-bound.

Images are placed largest first. For each image a replica set is built as a
weighted set cover of the destination nodes: branch on the uncovered
destination with the fewest usable coverers, trying coverers cheapest first
and excluding each tried coverer from its later siblings, so every replica
set is generated at most once. A subtree is pruned when

    cost so far + bound(current image) + sum of bounds(unplaced images)

exceeds the incumbent. The bound of an image is the larger of its
stand-alone optimal cover cost and size x max over destinations of the
cheapest coverer that still has room for it.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable

from ._compiled import Compiled, Deadline, SearchTimeout, iter_bits
from .eligibility import cost as placement_cost
from .model import COST_TOL, Placement, ProblemInstance

DEFAULT_DEADLINE = 25.0

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
TIMEOUT_WITH_INCUMBENT = "timeout_with_incumbent"
TIMEOUT_NO_INCUMBENT = "timeout_no_incumbent"


@dataclass
class ExactResult:
    status: str
    placement: Placement | None = None
    cost: float | None = None
    proof_gap: float = math.inf
    lower_bound: float = 0.0
    incumbent_trace: list[float] = field(default_factory=list, repr=False)
    nodes_explored: int = 0
    elapsed: float = 0.0

    @property
    def found(self) -> bool:
        return self.placement is not None


class _Search:
    def __init__(self, comp: Compiled, max_replicas: int, deadline: Deadline, base_used=None):
        self.c = comp
        self.R = max_replicas
        self.deadline = deadline
        K, n = len(comp.images), comp.n
        self.residual = [cap - u for cap, u in zip(comp.cap, base_used or [0.0] * n)]
        self.cand = []
        self.coverers = []  # [j][d] -> mask of candidate nodes covering d
        self.by_cost = []  # [j][d] -> candidate coverers of d, cheapest first
        order = sorted(range(n), key=lambda k: (comp.unit_cost[k], comp.node_ids[k]))
        for j in range(K):
            size = comp.sizes[j]
            cand = 0
            for k in range(n):
                if comp.cap[k] >= size:
                    cand |= 1 << k
            self.cand.append(cand)
            cov = [0] * n
            for src in iter_bits(cand):
                for d in iter_bits(comp.cover[j][src]):
                    cov[d] |= 1 << src
            self.coverers.append(cov)
            self.by_cost.append([[k for k in order if cov[d] >> k & 1] for d in range(n)])
        self.standalone = [0.0] * K
        self._maxmin_cache: dict = {}
        self.best_cost = math.inf
        self.best_key = None
        self.best_choice = None
        self.choice = [0] * K
        self.trace: list[float] = []
        self.expanded = 0

    # -- bounds ---------------------------------------------------------
    def _fits(self, size: float) -> int:
        m = 0
        for k, res in enumerate(self.residual):
            if res >= size:
                m |= 1 << k
        return m

    def maxmin(self, j: int, allowed: int, covered: int = 0) -> float:
        """size x max over uncovered destinations of the cheapest allowed coverer."""
        worst = 0.0
        uc = self.c.unit_cost
        cov = self.coverers[j]
        by_cost = self.by_cost[j]
        for d in iter_bits(self.c.full & ~covered):
            if not cov[d] & allowed:
                return math.inf
            for k in by_cost[d]:
                if allowed >> k & 1:
                    if uc[k] > worst:
                        worst = uc[k]
                    break
        return self.c.sizes[j] * worst

    def image_bound(self, j: int) -> float:
        allowed = self.cand[j] & self._fits(self.c.sizes[j])
        key = (j, allowed)
        v = self._maxmin_cache.get(key)
        if v is None:
            v = self._maxmin_cache[key] = self.maxmin(j, allowed)
        return max(v, self.standalone[j])

    def rest_bound(self, k: int) -> float:
        total = 0.0
        for j in range(k, len(self.c.images)):
            total += self.image_bound(j)
            if total == math.inf:
                break
        return total

    # -- search ---------------------------------------------------------
    def run(self):
        if len(self.c.images) == 0:
            self._record(0.0)
            return
        self._image(0, 0.0)

    def _record(self, total: float):
        key = None
        if total < self.best_cost - COST_TOL:
            better = True
        elif total <= self.best_cost + COST_TOL:
            key = self._key(self.choice)
            better = key < self.best_key
        else:
            better = False
        if better:
            self.best_cost = total
            self.best_key = key if key is not None else self._key(self.choice)
            self.best_choice = list(self.choice)
            self.trace.append(total)

    def _key(self, choice):
        return sorted((img.id, self.c.node_ids[b]) for img, m in zip(self.c.images, choice) for b in iter_bits(m))

    def _image(self, k: int, base: float):
        if k == len(self.c.images):
            self._record(base)
            return
        allowed = self.cand[k] & self._fits(self.c.sizes[k])
        self._cover(k, 0, 0, allowed, 0, base, self.rest_bound(k + 1))

    def _cover(self, k, hosts, covered, allowed, count, acc, rest):
        self.deadline.check()
        self.expanded += 1
        c = self.c
        if covered == c.full:
            self.choice[k] = hosts
            self._image(k + 1, acc)
            return
        if count == self.R:
            return
        size = c.sizes[k]
        cov = self.coverers[k]
        by_cost = self.by_cost[k]
        uc = c.unit_cost
        best_d, best_cnt, worst = -1, None, 0.0
        for d in iter_bits(c.full & ~covered):
            m = cov[d] & allowed
            if not m:
                return
            cnt = m.bit_count()
            if best_cnt is None or cnt < best_cnt:
                best_d, best_cnt = d, cnt
            for j in by_cost[d]:
                if m >> j & 1:
                    if uc[j] > worst:
                        worst = uc[j]
                    break
        if acc + size * worst + rest > self.best_cost + COST_TOL:
            return
        for j in by_cost[best_d]:
            if not allowed >> j & 1:
                continue
            bit = 1 << j
            allowed &= ~bit
            saved = self.residual[j]
            self.residual[j] = saved - size
            nxt_rest = rest
            if k + 1 < len(c.images):
                nxt_rest = self.rest_bound(k + 1)
            self._cover(k, hosts | bit, covered | c.cover[k][j], allowed, count + 1,
                        acc + size * uc[j], nxt_rest)
            self.residual[j] = saved

    def placement(self) -> Placement | None:
        if self.best_choice is None:
            return None
        return Placement(
            {img.id: frozenset(self.c.nodes_of(m)) for img, m in zip(self.c.images, self.best_choice)},
            {img.id: "new" for img in self.c.images},
        )


def _standalone_bounds(comp: Compiled, max_replicas: int, deadline: Deadline, budget_s: float | None):
    """Optimal cover cost of each image alone (storage ignored except per-node
    fit). Falls back to 0 for an image whose sub-search runs out of time."""
    out = []
    for j in range(len(comp.images)):
        sub = comp.only(j)
        limit = None if budget_s is None else budget_s / (4 * max(1, len(comp.images)))
        local = Deadline(limit)
        if deadline.limit is not None and (local.limit is None or local.limit > deadline.limit):
            local.limit = deadline.limit
        s = _Search(sub, max_replicas, local)
        try:
            s.run()
            out.append(s.best_cost)
        except SearchTimeout:
            deadline.check()
            out.append(0.0)
    return out


def lower_bound(partial: Placement, remaining: Iterable[str], inst: ProblemInstance) -> float:
    """Admissible bound on any eligible extension of ``partial`` over
    ``remaining``: partial cost plus, per remaining image, size times the
    largest over destinations of the cheapest node able to serve it that
    still has room for it. ``inf`` when some destination cannot be served."""
    ids = list(remaining)
    base = placement_cost(partial, inst)
    if not ids:
        return base
    comp = Compiled(inst, None, ids)
    if comp.n == 0:
        return math.inf
    s = _Search(comp, inst.max_replicas, Deadline(None), comp.used_by(partial))
    return base + s.rest_bound(0)


def solve_oipp(inst: ProblemInstance, deadline: float | None = DEFAULT_DEADLINE) -> ExactResult:
    t0 = time.perf_counter()
    dl = Deadline(deadline)
    order = [i.id for i in sorted(inst.images, key=lambda i: (-i.size, i.id))]
    if order and not inst.nodes:
        return ExactResult(INFEASIBLE, elapsed=time.perf_counter() - t0)
    comp = Compiled(inst, None, order)
    search = None
    root_lb = 0.0
    try:
        standalone = _standalone_bounds(comp, inst.max_replicas, dl, deadline)
        search = _Search(comp, inst.max_replicas, dl)
        search.standalone = standalone
        root_lb = search.rest_bound(0)
        if root_lb < math.inf:
            search.run()
    except SearchTimeout:
        elapsed = time.perf_counter() - t0
        if search is None or search.best_choice is None:
            return ExactResult(TIMEOUT_NO_INCUMBENT, lower_bound=root_lb, elapsed=elapsed,
                               nodes_explored=search.expanded if search else 0)
        return ExactResult(TIMEOUT_WITH_INCUMBENT, search.placement(), search.best_cost,
                           max(0.0, search.best_cost - root_lb), root_lb, search.trace,
                           search.expanded, elapsed)
    elapsed = time.perf_counter() - t0
    if search.best_choice is None:
        return ExactResult(INFEASIBLE, lower_bound=root_lb, elapsed=elapsed, nodes_explored=search.expanded)
    return ExactResult(OPTIMAL, search.placement(), search.best_cost, 0.0, root_lb, search.trace,
                       search.expanded, elapsed)
