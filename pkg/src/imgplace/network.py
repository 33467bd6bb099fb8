"""End-to-end link derivation and image transfer times."""
from __future__ import annotations

import csv
import heapq
import io
from dataclasses import dataclass

from .model import ContainerImage, Infrastructure


@dataclass(frozen=True)
class EndToEndLink:
    src: str
    dst: str
    latency: float  # ms, summed along the path
    bandwidth: float  # Mbps, bottleneck of the path


def _dijkstra(src: str, adj: dict[str, list]) -> dict[str, tuple[float, float]]:
    # labels are (latency, -bottleneck): among minimum-latency paths keep the widest
    best: dict[str, tuple[float, float]] = {src: (0.0, -float("inf"))}
    done: set[str] = set()
    heap = [(0.0, -float("inf"), src)]
    while heap:
        lat, negbw, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, link in adj.get(u, ()):
            if v in done:
                continue
            cand = (lat + link.latency, max(negbw, -link.bandwidth))
            if v not in best or cand < best[v]:
                best[v] = cand
                heapq.heappush(heap, (cand[0], cand[1], v))
    del best[src]
    return best


def derive_e2e(infra: Infrastructure) -> dict[tuple[str, str], EndToEndLink]:
    """Latency-shortest path for every ordered reachable pair, with the bottleneck
    bandwidth of that path. Ties on latency go to the wider path."""
    adj: dict[str, list] = {}
    for (a, b), link in sorted(infra.links.items()):
        adj.setdefault(a, []).append((b, link))
    table = {}
    for src in sorted(infra.nodes):
        for dst, (lat, negbw) in sorted(_dijkstra(src, adj).items()):
            table[(src, dst)] = EndToEndLink(src, dst, lat, -negbw)
    return table


def transfer_time(img: ContainerImage, src: str, dst: str, e2e) -> float | None:
    """Seconds to pull ``img`` from ``src`` to ``dst``; None when unreachable."""
    if src == dst:
        return 0.0
    link = e2e.get((src, dst))
    if link is None:
        return None
    return img.size * 8 / link.bandwidth + link.latency / 1000


def mean_outgoing_bandwidth(node_id: str, e2e) -> float:
    bws = [link.bandwidth for (s, _), link in e2e.items() if s == node_id]
    return sum(bws) / len(bws) if bws else 0.0


def e2e_to_csv(e2e) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["src", "dst", "latency_ms", "bandwidth_mbps"])
    for key in sorted(e2e):
        link = e2e[key]
        w.writerow([link.src, link.dst, repr(link.latency), repr(link.bandwidth)])
    return buf.getvalue()
