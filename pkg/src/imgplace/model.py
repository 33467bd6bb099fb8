"""Domain types and the fact/JSON instance formats.

Instances are written as Prolog-style facts::

    image(alpine,8,30).
    node(cloud,1024000,0.7).
    link(cloud,edge1,20,50).
    maxReplicas(3).

or as a JSON document with the same fields. Placements serialize as a list
of ``at(Image,Node)`` terms.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

COST_TOL = 1e-6


class ParseError(ValueError):
    """Malformed instance text; ``line`` is 1-based (None when not line-bound)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self.message = message
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class SyntaxParseError(ParseError):
    pass


class DuplicateIdError(ParseError):
    pass


class UnknownEndpointError(ParseError):
    pass


class MissingMaxReplicasError(ParseError):
    pass


class InvalidValueError(ParseError):
    pass


@dataclass(frozen=True)
class ContainerImage:
    id: str
    size: float  # MB
    max_transfer_time: float  # s

    def __post_init__(self):
        if not self.size > 0:
            raise ValueError(f"image {self.id}: size must be positive")
        if not self.max_transfer_time > 0:
            raise ValueError(f"image {self.id}: max transfer time must be positive")


@dataclass(frozen=True)
class RegistryNode:
    id: str
    storage: float  # MB
    unit_cost: float  # currency / MB / month

    def __post_init__(self):
        if self.storage < 0 or self.unit_cost < 0:
            raise ValueError(f"node {self.id}: storage and cost must be non-negative")


@dataclass(frozen=True)
class DirectLink:
    src: str
    dst: str
    latency: float  # ms
    bandwidth: float  # Mbps

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError(f"self loop on {self.src}")
        if not (self.latency > 0 and self.bandwidth > 0):
            raise ValueError(f"link {self.src}->{self.dst}: latency and bandwidth must be positive")


@dataclass(frozen=True)
class Infrastructure:
    """Nodes and directed links. The end-to-end table is derived on first use."""

    nodes: Mapping[str, RegistryNode]
    links: Mapping[tuple[str, str], DirectLink] = field(default_factory=dict)

    @classmethod
    def build(cls, nodes: Iterable[RegistryNode], links: Iterable[DirectLink] = ()) -> "Infrastructure":
        node_map: dict[str, RegistryNode] = {}
        for n in nodes:
            if n.id in node_map:
                raise ValueError(f"duplicate node id {n.id}")
            node_map[n.id] = n
        link_map: dict[tuple[str, str], DirectLink] = {}
        for link in links:
            if link.src not in node_map or link.dst not in node_map:
                raise ValueError(f"link {link.src}->{link.dst} has an unknown endpoint")
            link_map[(link.src, link.dst)] = link
        return cls(node_map, link_map)

    @cached_property
    def e2e(self):
        from .network import derive_e2e

        return derive_e2e(self)

    def without_nodes(self, removed: Iterable[str]) -> "Infrastructure":
        gone = set(removed)
        return Infrastructure(
            {k: v for k, v in self.nodes.items() if k not in gone},
            {k: v for k, v in self.links.items() if k[0] not in gone and k[1] not in gone},
        )


@dataclass(frozen=True)
class ProblemInstance:
    infrastructure: Infrastructure
    images: tuple[ContainerImage, ...]
    max_replicas: int

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))
        if self.max_replicas < 1:
            raise ValueError("max_replicas must be >= 1")
        ids = [i.id for i in self.images]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate image ids")

    @property
    def nodes(self) -> Mapping[str, RegistryNode]:
        return self.infrastructure.nodes

    @property
    def e2e(self):
        return self.infrastructure.e2e

    @cached_property
    def image_map(self) -> dict[str, ContainerImage]:
        return {i.id: i for i in self.images}

    def image(self, image_id: str) -> ContainerImage:
        return self.image_map[image_id]


@dataclass(frozen=True)
class Placement:
    """Image id -> frozenset of node ids, plus a per-image provenance tag
    (``kept``, ``migrated`` or ``new``) used only for reporting."""

    assignments: Mapping[str, frozenset[str]] = field(default_factory=dict)
    provenance: Mapping[str, str] = field(default_factory=dict, compare=False)

    @classmethod
    def of(cls, mapping: Mapping[str, Iterable[str]], provenance: Mapping[str, str] | None = None) -> "Placement":
        return cls({k: frozenset(v) for k, v in mapping.items()}, dict(provenance or {}))

    def __getitem__(self, image_id: str) -> frozenset[str]:
        return self.assignments[image_id]

    def get(self, image_id: str, default=frozenset()) -> frozenset[str]:
        return self.assignments.get(image_id, default)

    def __contains__(self, image_id: str) -> bool:
        return image_id in self.assignments

    def __len__(self) -> int:
        return len(self.assignments)

    def images(self) -> list[str]:
        return list(self.assignments)

    def pairs(self) -> list[tuple[str, str]]:
        """Sorted (image, node) pairs; also the tie-break key between placements."""
        return sorted((i, n) for i, ns in self.assignments.items() for n in ns)

    def replica_count(self) -> int:
        return sum(len(v) for v in self.assignments.values())

    def is_total(self, inst: ProblemInstance) -> bool:
        return set(self.assignments) == {i.id for i in inst.images}

    def restricted(self, image_ids: Iterable[str]) -> "Placement":
        keep = set(image_ids)
        return Placement(
            {k: v for k, v in self.assignments.items() if k in keep},
            {k: v for k, v in self.provenance.items() if k in keep},
        )

    def merged(self, other: "Placement") -> "Placement":
        return Placement({**self.assignments, **other.assignments}, {**self.provenance, **other.provenance})


@dataclass
class Allocation:
    per_node: dict[str, list[tuple[str, float]]]

    def total(self, node_id: str) -> float:
        return sum(s for _, s in self.per_node.get(node_id, ()))

    @property
    def totals(self) -> dict[str, float]:
        return {n: self.total(n) for n in self.per_node}


# ---------------------------------------------------------------------------
# facts format

_FACT = re.compile(r"^([a-zA-Z]\w*)\s*\((.*)\)\s*\.$")
_ATOM = re.compile(r"^[a-z][A-Za-z0-9_]*$")
_ARITY = {"image": 3, "node": 3, "link": 4, "maxReplicas": 1}


def format_number(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def format_atom(s: str) -> str:
    if _ATOM.match(s):
        return s
    return "'" + s.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _split_args(body: str, lineno: int) -> list[str]:
    args, cur, quoted, i = [], [], False, 0
    while i < len(body):
        ch = body[i]
        if quoted:
            if ch == "\\" and i + 1 < len(body):
                cur.append(body[i + 1])
                i += 2
                continue
            if ch == "'":
                quoted = False
            cur.append(ch)
        elif ch == "'":
            quoted = True
            cur.append(ch)
        elif ch == ",":
            args.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
        i += 1
    if quoted:
        raise SyntaxParseError("unterminated quoted atom", lineno)
    args.append("".join(cur).strip())
    return args


def _strip_comment(line: str) -> str:
    quoted, escaped = False, False
    for i, ch in enumerate(line):
        if escaped:
            escaped = False
        elif quoted and ch == "\\":
            escaped = True
        elif ch == "'":
            quoted = not quoted
        elif ch == "%" and not quoted:
            return line[:i]
    return line


def _atom(tok: str, lineno: int) -> str:
    if len(tok) >= 2 and tok[0] == tok[-1] == "'":
        return tok[1:-1]
    if not re.match(r"^[A-Za-z0-9_]+$", tok):
        raise SyntaxParseError(f"bad identifier {tok!r}", lineno)
    return tok


def _number(tok: str, lineno: int, what: str) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise SyntaxParseError(f"{what}: not a number {tok!r}", lineno) from None
    if not math.isfinite(x) and x != math.inf:
        raise InvalidValueError(f"{what}: not a number", lineno)
    if x < 0:
        raise InvalidValueError(f"{what}: negative value {tok}", lineno)
    return x


def _split_facts(line: str, lineno: int) -> list[str]:
    chunks, cur, depth, quoted, escaped = [], [], 0, False, False
    for ch in line:
        cur.append(ch)
        if escaped:
            escaped = False
        elif quoted and ch == "\\":
            escaped = True
        elif quoted:
            quoted = ch != "'"
        elif ch == "'":
            quoted = True
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "." and depth == 0:
            chunks.append("".join(cur).strip())
            cur = []
    rest = "".join(cur).strip()
    if rest:
        raise SyntaxParseError(f"malformed fact {rest!r} (missing final '.')", lineno)
    return chunks


def _parse_facts(text: str) -> list[tuple[str, list[str], int]]:
    facts = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        raw = raw.rstrip("\r")
        line = _strip_comment(raw).strip()
        if not line:
            continue
        # several facts may share a line
        for chunk in _split_facts(line, lineno):
            m = _FACT.match(chunk)
            if not m:
                raise SyntaxParseError(f"malformed fact {chunk!r}", lineno)
            facts.append((m.group(1), _split_args(m.group(2), lineno), lineno))
    return facts


def _assemble(images, nodes, links, max_r) -> ProblemInstance:
    """images/nodes/links: lists of (record, line); max_r: (value, line) or None."""
    node_map: dict[str, RegistryNode] = {}
    for n, line in nodes:
        if n.id in node_map:
            raise DuplicateIdError(f"duplicate node id {n.id}", line)
        node_map[n.id] = n
    img_ids: set[str] = set()
    for img, line in images:
        if img.id in img_ids:
            raise DuplicateIdError(f"duplicate image id {img.id}", line)
        img_ids.add(img.id)
    link_map: dict[tuple[str, str], DirectLink] = {}
    for link, line in links:
        for end in (link.src, link.dst):
            if end not in node_map:
                raise UnknownEndpointError(f"link endpoint {end} is not a declared node", line)
        if (link.src, link.dst) in link_map:
            raise DuplicateIdError(f"duplicate link {link.src}->{link.dst}", line)
        link_map[(link.src, link.dst)] = link
    if max_r is None:
        raise MissingMaxReplicasError("missing maxReplicas fact")
    return ProblemInstance(Infrastructure(node_map, link_map), tuple(i for i, _ in images), max_r)


def _build(cls, lineno, *args):
    try:
        return cls(*args)
    except ValueError as exc:
        raise InvalidValueError(str(exc), lineno) from None


def parse_instance(text: str, format: str = "facts") -> ProblemInstance:
    if format == "json":
        return _parse_json_instance(text)
    if format != "facts":
        raise ValueError(f"unknown format {format!r}")
    images, nodes, links = [], [], []
    max_r = None
    for name, args, lineno in _parse_facts(text):
        arity = _ARITY.get(name)
        if arity is None:
            raise SyntaxParseError(f"unknown predicate {name}", lineno)
        if len(args) != arity:
            raise SyntaxParseError(f"{name} expects {arity} arguments, got {len(args)}", lineno)
        if name == "image":
            images.append((_build(ContainerImage, lineno, _atom(args[0], lineno),
                                  _number(args[1], lineno, "size"),
                                  _number(args[2], lineno, "max transfer time")), lineno))
        elif name == "node":
            nodes.append((_build(RegistryNode, lineno, _atom(args[0], lineno),
                                 _number(args[1], lineno, "storage"),
                                 _number(args[2], lineno, "cost")), lineno))
        elif name == "link":
            links.append((_build(DirectLink, lineno, _atom(args[0], lineno), _atom(args[1], lineno),
                                 _number(args[2], lineno, "latency"),
                                 _number(args[3], lineno, "bandwidth")), lineno))
        else:
            if max_r is not None:
                raise DuplicateIdError("maxReplicas declared twice", lineno)
            r = _number(args[0], lineno, "maxReplicas")
            if not r.is_integer() or r < 1:
                raise InvalidValueError("maxReplicas must be a positive integer", lineno)
            max_r = int(r)
    return _assemble(images, nodes, links, max_r)


def _parse_json_instance(text: str) -> ProblemInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SyntaxParseError(exc.msg, exc.lineno) from None
    if not isinstance(doc, dict):
        raise SyntaxParseError("top level must be an object")

    def num(rec, key, what):
        v = rec.get(key)
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise SyntaxParseError(f"{what}: missing or non-numeric {key!r}")
        if v < 0:
            raise InvalidValueError(f"{what}: negative {key}")
        return float(v)

    try:
        images = [(_build(ContainerImage, None, str(r["id"]), num(r, "size", "image"),
                          num(r, "max", "image")), None) for r in doc.get("images", [])]
        nodes = [(_build(RegistryNode, None, str(r["id"]), num(r, "storage", "node"),
                         num(r, "cost", "node")), None) for r in doc.get("nodes", [])]
        links = [(_build(DirectLink, None, str(r["src"]), str(r["dst"]), num(r, "latency", "link"),
                         num(r, "bandwidth", "link")), None) for r in doc.get("links", [])]
    except (KeyError, TypeError) as exc:
        raise SyntaxParseError(f"malformed record: {exc}") from None
    max_r = doc.get("maxReplicas")
    if max_r is not None:
        if not isinstance(max_r, int) or isinstance(max_r, bool) or max_r < 1:
            raise InvalidValueError("maxReplicas must be a positive integer")
    return _assemble(images, nodes, links, max_r)


def serialize_instance(inst: ProblemInstance, format: str = "facts") -> str:
    nodes = sorted(inst.nodes.values(), key=lambda n: n.id)
    links = sorted(inst.infrastructure.links.values(), key=lambda link: (link.src, link.dst))
    if format == "json":
        doc = {
            "images": [{"id": i.id, "size": i.size, "max": i.max_transfer_time} for i in inst.images],
            "nodes": [{"id": n.id, "storage": n.storage, "cost": n.unit_cost} for n in nodes],
            "links": [{"src": link.src, "dst": link.dst, "latency": link.latency,
                       "bandwidth": link.bandwidth} for link in links],
            "maxReplicas": inst.max_replicas,
        }
        return json.dumps(doc, indent=2) + "\n"
    if format != "facts":
        raise ValueError(f"unknown format {format!r}")
    out = []
    for i in inst.images:
        out.append(f"image({format_atom(i.id)},{format_number(i.size)},{format_number(i.max_transfer_time)}).")
    for n in nodes:
        out.append(f"node({format_atom(n.id)},{format_number(n.storage)},{format_number(n.unit_cost)}).")
    for link in links:
        out.append(f"link({format_atom(link.src)},{format_atom(link.dst)},"
                   f"{format_number(link.latency)},{format_number(link.bandwidth)}).")
    out.append(f"maxReplicas({inst.max_replicas}).")
    return "\n".join(out) + "\n"


def serialize_placement(p: Placement, format: str = "facts") -> str:
    if format == "json":
        doc = {i: sorted(p.assignments[i]) for i in sorted(p.assignments)}
        return json.dumps(doc, sort_keys=True) + "\n"
    terms = [f"at({format_atom(i)}, {format_atom(n)})" for i, n in p.pairs()]
    return "[" + ", ".join(terms) + "]\n"


_AT = re.compile(r"at\(\s*('(?:[^'\\]|\\.)*'|[A-Za-z0-9_]+)\s*,\s*('(?:[^'\\]|\\.)*'|[A-Za-z0-9_]+)\s*\)")


def parse_placement(text: str, format: str = "facts") -> Placement:
    if format == "json":
        doc = json.loads(text)
        return Placement.of({str(k): [str(n) for n in v] for k, v in doc.items()})
    body = text.strip()
    if body.startswith("P ="):
        body = body[3:].strip()
    body = body.rstrip(".").strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise SyntaxParseError("placement must be a list of at/2 terms")
    inner = body[1:-1].strip()
    mapping: dict[str, set[str]] = {}
    pos = 0
    while inner[pos:].strip():
        m = _AT.match(inner, pos)
        if not m:
            raise SyntaxParseError(f"malformed at/2 term near {inner[pos:pos + 30]!r}")
        img, node = (_unquote(g) for g in m.groups())
        mapping.setdefault(img, set()).add(node)
        pos = m.end()
        rest = inner[pos:].lstrip()
        if rest.startswith(","):
            pos = len(inner) - len(rest) + 1
        while pos < len(inner) and inner[pos].isspace():
            pos += 1
    return Placement.of(mapping)


def _unquote(tok: str) -> str:
    if tok.startswith("'"):
        return re.sub(r"\\(.)", r"\1", tok[1:-1])
    return tok
