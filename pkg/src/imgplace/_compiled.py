"""Bitmask view of an instance shared by the search procedures.

Bit ``k`` of a mask stands for ``node_ids[k]``. ``cover[j][k]`` is the set of
destinations that can pull image ``j`` from node ``k`` within its budget
(always including ``k`` itself).
"""
from __future__ import annotations

import time

from .model import Placement, ProblemInstance


class SearchTimeout(Exception):
    """Raised when a search exceeds its wall-clock budget."""


class Deadline:
    __slots__ = ("limit",)

    def __init__(self, seconds: float | None):
        self.limit = None if seconds is None else time.perf_counter() + seconds

    def check(self):
        if self.limit is not None and time.perf_counter() > self.limit:
            raise SearchTimeout()


class Compiled:
    def __init__(self, inst: ProblemInstance, node_order=None, image_order=None):
        self.inst = inst
        self.node_ids = list(node_order) if node_order is not None else list(inst.nodes)
        self.index = {n: k for k, n in enumerate(self.node_ids)}
        self.n = len(self.node_ids)
        self.full = (1 << self.n) - 1
        self.cap = [inst.nodes[n].storage for n in self.node_ids]
        self.unit_cost = [inst.nodes[n].unit_cost for n in self.node_ids]
        self.images = [inst.image(i) for i in image_order] if image_order is not None else list(inst.images)
        self.sizes = [img.size for img in self.images]
        e2e = inst.e2e
        self.cover = []
        for img in self.images:
            row = []
            for src in self.node_ids:
                mask = 0
                for k, dst in enumerate(self.node_ids):
                    if dst == src:
                        mask |= 1 << k
                        continue
                    link = e2e.get((src, dst))
                    if link is not None and img.size * 8 / link.bandwidth + link.latency / 1000 <= img.max_transfer_time:
                        mask |= 1 << k
                row.append(mask)
            self.cover.append(row)

    def only(self, j: int) -> "Compiled":
        """View restricted to image ``j``."""
        sub = object.__new__(Compiled)
        sub.__dict__.update(self.__dict__)
        sub.images = [self.images[j]]
        sub.sizes = [self.sizes[j]]
        sub.cover = [self.cover[j]]
        return sub

    def mask_of(self, nodes) -> int:
        m = 0
        for n in nodes:
            k = self.index.get(n)
            if k is not None:
                m |= 1 << k
        return m

    def nodes_of(self, mask: int) -> list[str]:
        return [self.node_ids[k] for k in range(self.n) if mask >> k & 1]

    def covered(self, j: int, hosts: int) -> int:
        c = 0
        row = self.cover[j]
        while hosts:
            low = hosts & -hosts
            c |= row[low.bit_length() - 1]
            hosts ^= low
        return c

    def used_by(self, p: Placement) -> list[float]:
        used = [0.0] * self.n
        for img_id, nodes in p.assignments.items():
            size = self.inst.image(img_id).size
            for node in nodes:
                k = self.index.get(node)
                if k is not None:
                    used[k] += size
        return used


def iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low
