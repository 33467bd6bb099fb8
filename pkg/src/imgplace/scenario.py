"""Random Barabasi-Albert infrastructures and epoch-wise churn."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .model import ContainerImage, DirectLink, Infrastructure, ProblemInstance, RegistryNode

# (id, size MB, max transfer time s)
TABLE1 = [
    ("busybox", 4, 15), ("memcached", 126, 30), ("nginx", 192, 60), ("mariadb", 387, 120),
    ("alpine", 8, 15), ("traefik", 148, 30), ("httpd", 195, 60), ("postgres", 438, 120),
    ("ubuntu", 69, 15), ("redis", 149, 30), ("rabbitmq", 201, 60), ("mysql", 621, 120),
]
_TABLE1 = {name: ContainerImage(name, float(s), float(m)) for name, s, m in TABLE1}
I1 = ("busybox", "memcached", "nginx", "mariadb")
I2 = ("alpine", "traefik", "httpd", "postgres")
I3 = ("ubuntu", "redis", "rabbitmq", "mysql")
IMAGE_GROUPS = {4: I1, 8: I1 + I2, 12: I1 + I2 + I3}


def table1_images(names=None) -> list[ContainerImage]:
    names = [n for n, _, _ in TABLE1] if names is None else names
    return [_TABLE1[n] for n in names]


def image_group(count: int) -> list[ContainerImage]:
    """The 4-, 8- or 12-image experiment set."""
    return table1_images(IMAGE_GROUPS[count])


@dataclass
class GeneratorConfig:
    n_nodes: int = 25
    ba_m: int = 3
    seed: int = 0
    storage_distribution: list = field(
        default_factory=lambda: [(0.1, 2000.0), (0.5, 4000.0), (0.2, 8000.0), (0.2, 16000.0)])
    latency_range: tuple = (1, 10)  # ms, integer-valued draws
    bandwidth_range: tuple = (25, 1000)  # Mbps, integer-valued draws
    cost_range: tuple = (0.1, 1.0)  # currency / MB, rounded to 3 decimals
    replica_cap: int = 15
    extra_nodes: int = 3

    def validate(self):
        if self.ba_m < 1 or self.n_nodes < self.ba_m + 4:
            raise ValueError("need n_nodes >= ba_m + 4")
        probs = [p for p, _ in self.storage_distribution]
        if any(p < 0 for p in probs) or abs(sum(probs) - 1) > 1e-9:
            raise ValueError("storage probabilities must sum to 1")
        for lo, hi in (self.latency_range, self.bandwidth_range, self.cost_range):
            if not 0 < lo <= hi:
                raise ValueError("ranges must be positive and ordered")
        if self.replica_cap < 1:
            raise ValueError("replica_cap must be >= 1")


@dataclass
class ChurnConfig:
    p_node_failure: float = 0.05
    p_qos_variation: float = 0.5
    qos_factor: float = 0.15
    p_image_variation: float = 0.1
    image_factor: float = 0.05
    epochs: int = 1000
    seed: int = 0
    asymmetric: bool = False

    def validate(self):
        for p in (self.p_node_failure, self.p_qos_variation, self.p_image_variation):
            if not 0 <= p <= 1:
                raise ValueError("probabilities must lie in [0, 1]")
        for f in (self.qos_factor, self.image_factor):
            if not 0 < f < 1:
                raise ValueError("variation factors must lie in (0, 1)")


def barabasi_albert_edges(n: int, m: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Preferential attachment from an (m+1)-clique; each newcomer links to m
    distinct existing vertices drawn proportionally to degree."""
    edges = [(a, b) for a in range(m + 1) for b in range(a + 1, m + 1)]
    degree = np.zeros(n)
    degree[: m + 1] = m
    for v in range(m + 1, n):
        p = degree[:v] / degree[:v].sum()
        targets = rng.choice(v, size=m, replace=False, p=p)
        for t in sorted(int(t) for t in targets):
            edges.append((t, v))
            degree[t] += 1
        degree[v] = m
    return edges


def _connected(vertices, edges) -> bool:
    vertices = list(vertices)
    if not vertices:
        return True
    adj = {v: [] for v in vertices}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen, stack = {vertices[0]}, [vertices[0]]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(vertices)


def generate_instance(cfg: GeneratorConfig, images, log: list | None = None,
                      max_attempts: int = 1000) -> ProblemInstance:
    """BA graph on n+3 vertices with the three oldest vertices removed,
    regenerated with seed+1 until the remainder is connected."""
    cfg.validate()
    seed = cfg.seed
    for _ in range(max_attempts):
        rng = np.random.default_rng(seed)
        total = cfg.n_nodes + cfg.extra_nodes
        edges = barabasi_albert_edges(total, cfg.ba_m, rng)
        edges = [(a, b) for a, b in edges if a >= cfg.extra_nodes and b >= cfg.extra_nodes]
        if _connected(range(cfg.extra_nodes, total), edges):
            break
        if log is not None:
            log.append({"event": "regenerate", "seed": seed, "reason": "disconnected"})
        seed += 1
    else:
        raise ValueError(f"no connected topology after {max_attempts} attempts")
    probs = np.array([p for p, _ in cfg.storage_distribution])
    values = [v for _, v in cfg.storage_distribution]
    nodes = []
    for v in range(cfg.n_nodes):
        storage = float(values[int(rng.choice(len(values), p=probs))])
        unit_cost = round(float(rng.uniform(*cfg.cost_range)), 3)
        nodes.append(RegistryNode(f"n{v}", storage, unit_cost))
    links = []
    for a, b in sorted(edges):
        lat = float(rng.integers(cfg.latency_range[0], cfg.latency_range[1] + 1))
        bw = float(rng.integers(cfg.bandwidth_range[0], cfg.bandwidth_range[1] + 1))
        na, nb = f"n{a - cfg.extra_nodes}", f"n{b - cfg.extra_nodes}"
        links.append(DirectLink(na, nb, lat, bw))
        links.append(DirectLink(nb, na, lat, bw))
    return ProblemInstance(Infrastructure.build(nodes, links), tuple(images), cfg.replica_cap)


def _vary(rng, factor):
    return float(rng.uniform(-factor, factor))


def step_churn(base: ProblemInstance, cfg: ChurnConfig, rng: np.random.Generator):
    """One epoch of churn.

    ``base`` holds every node, including any that failed last epoch, with
    its persistent attributes. Returns ``(new_base, visible, events)`` where
    ``visible`` is ``new_base`` minus the nodes failed for this epoch.
    Storage, QoS and size variations compound across epochs.
    """
    events = []
    node_ids = sorted(base.nodes)
    failed = [n for n in node_ids if rng.random() < cfg.p_node_failure]
    for n in failed:
        events.append({"type": "node_failure", "node": n})

    nodes = dict(base.nodes)
    for n in node_ids:
        if rng.random() < cfg.p_qos_variation:
            u = _vary(rng, cfg.qos_factor)
            old = nodes[n]
            nodes[n] = replace(old, storage=old.storage * (1 + u))
            events.append({"type": "storage", "node": n, "factor": u})

    links = dict(base.infrastructure.links)
    if cfg.asymmetric:
        groups = [[key] for key in sorted(links)]
    else:
        pairs = sorted({tuple(sorted(key)) for key in links})
        groups = [[k for k in (p, p[::-1]) if k in links] for p in pairs]
    for group in groups:
        if rng.random() < cfg.p_qos_variation:
            u = _vary(rng, cfg.qos_factor)
            for key in group:
                old = links[key]
                links[key] = replace(old, latency=old.latency * (1 + u), bandwidth=old.bandwidth * (1 - u))
            events.append({"type": "qos", "link": list(group[0]), "factor": u})

    images = []
    for img in base.images:
        if rng.random() < cfg.p_image_variation:
            v = _vary(rng, cfg.image_factor)
            img = replace(img, size=img.size * (1 + v))
            events.append({"type": "image_size", "image": img.id, "factor": v})
        images.append(img)

    new_base = ProblemInstance(Infrastructure(nodes, links), tuple(images), base.max_replicas)
    visible = ProblemInstance(new_base.infrastructure.without_nodes(failed), new_base.images,
                              base.max_replicas)
    return new_base, visible, events


class ChurnProcess:
    """Iterates churn epochs from an initial instance with one seeded RNG stream."""

    def __init__(self, initial: ProblemInstance, cfg: ChurnConfig):
        cfg.validate()
        self.cfg = cfg
        self.base = initial
        self.rng = np.random.default_rng(cfg.seed)
        self.epoch = 0

    def step(self):
        self.epoch += 1
        self.base, visible, events = step_churn(self.base, self.cfg, self.rng)
        return visible, events

    def __iter__(self):
        for _ in range(self.cfg.epochs):
            yield self.step()
