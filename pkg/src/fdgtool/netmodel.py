"""Capacitated acyclic network model.

A network is a directed acyclic graph with named nodes and edges, a list of
independent sources placed at nodes, and a list of sinks, each demanding a
subset of the sources.  Source nodes have no incoming edges and sink nodes
have no outgoing edges.  Edge capacities are exact rationals: everything
downstream (reduction rules, the entropy LP) compares capacities exactly,
so floats are never allowed in.

The JSON wire format is strict: unknown keys are rejected unless they start
with an underscore, which marks a comment.  Edge order in the file is
preserved because it fixes the variable ordering used by every other module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources


class NetworkFormatError(ValueError):
    """Malformed JSON or a document that does not match the network schema."""


class InvalidNetworkError(ValueError):
    """A schema-valid document that violates network invariants."""

    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    cap: Fraction


@dataclass(frozen=True)
class Source:
    index: int
    at: str


@dataclass(frozen=True)
class Sink:
    at: str
    demands: tuple[int, ...]


@dataclass(frozen=True)
class Network:
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    sources: tuple[Source, ...]
    sinks: tuple[Sink, ...]

    def edge(self, edge_id: str) -> Edge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(f"unknown edge id: {edge_id!r}")

    def source_indices(self) -> tuple[int, ...]:
        return tuple(s.index for s in self.sources)

    def sources_at(self, node: str) -> tuple[Source, ...]:
        return tuple(s for s in self.sources if s.at == node)

    def unit_capacities(self) -> bool:
        return all(e.cap == 1 for e in self.edges)


def _parse_cap(text) -> Fraction:
    if not isinstance(text, str):
        raise NetworkFormatError(
            f"capacity must be a string (decimal or p/q), got {text!r}")
    try:
        cap = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise NetworkFormatError(f"bad capacity {text!r}: {exc}") from None
    return cap


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    for key in obj:
        if key not in allowed and not key.startswith("_"):
            raise NetworkFormatError(f"unknown key {key!r} in {where}")


def _require(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise NetworkFormatError(f"missing key {key!r} in {where}")
    value = obj[key]
    if not isinstance(value, kind):
        raise NetworkFormatError(
            f"key {key!r} in {where} must be {kind.__name__}, got {type(value).__name__}")
    return value


def parse_network(text: str) -> Network:
    """Parse a JSON document into a validated Network.

    Raises NetworkFormatError for malformed JSON or schema problems and
    InvalidNetworkError when the document parses but violates an invariant
    (the exception carries the full violation list).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise NetworkFormatError("top-level JSON value must be an object")
    _check_keys(doc, {"nodes", "edges", "sources", "sinks"}, "network document")

    nodes = _require(doc, "nodes", list, "network document")
    if not all(isinstance(n, str) for n in nodes):
        raise NetworkFormatError("node ids must be strings")

    edges = []
    for i, rec in enumerate(_require(doc, "edges", list, "network document")):
        where = f"edges[{i}]"
        if not isinstance(rec, dict):
            raise NetworkFormatError(f"{where} must be an object")
        _check_keys(rec, {"id", "tail", "head", "cap"}, where)
        edges.append(Edge(
            id=_require(rec, "id", str, where),
            tail=_require(rec, "tail", str, where),
            head=_require(rec, "head", str, where),
            cap=_parse_cap(_require(rec, "cap", str, where)),
        ))

    sources = []
    for i, rec in enumerate(_require(doc, "sources", list, "network document")):
        where = f"sources[{i}]"
        if not isinstance(rec, dict):
            raise NetworkFormatError(f"{where} must be an object")
        _check_keys(rec, {"index", "at"}, where)
        index = _require(rec, "index", int, where)
        if isinstance(index, bool):
            raise NetworkFormatError(f"key 'index' in {where} must be int")
        sources.append(Source(index=index, at=_require(rec, "at", str, where)))

    sinks = []
    for i, rec in enumerate(_require(doc, "sinks", list, "network document")):
        where = f"sinks[{i}]"
        if not isinstance(rec, dict):
            raise NetworkFormatError(f"{where} must be an object")
        _check_keys(rec, {"at", "demands"}, where)
        demands = _require(rec, "demands", list, where)
        if not all(isinstance(d, int) and not isinstance(d, bool) for d in demands):
            raise NetworkFormatError(f"demands in {where} must be integers")
        sinks.append(Sink(at=_require(rec, "at", str, where),
                          demands=tuple(sorted(set(demands)))))

    net = Network(nodes=tuple(nodes), edges=tuple(edges),
                  sources=tuple(sources), sinks=tuple(sinks))
    violations = validate(net)
    if violations:
        raise InvalidNetworkError(violations)
    return net


def serialize_network(net: Network) -> str:
    """Render a Network back to its canonical JSON form (round-trips exactly)."""
    doc = {
        "nodes": list(net.nodes),
        "edges": [{"id": e.id, "tail": e.tail, "head": e.head, "cap": str(e.cap)}
                  for e in net.edges],
        "sources": [{"index": s.index, "at": s.at} for s in net.sources],
        "sinks": [{"at": t.at, "demands": list(t.demands)} for t in net.sinks],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def validate(net: Network) -> list[str]:
    """Return all invariant violations, in a deterministic order.

    An empty list means the network is valid.  Violations are data, not
    exceptions: callers that need a hard failure use parse_network or raise
    InvalidNetworkError themselves.
    """
    violations = []
    node_set = set()
    for n in net.nodes:
        if n in node_set:
            violations.append(f"duplicate node id {n!r}")
        node_set.add(n)

    if not net.sources:
        violations.append("network has no sources")
    if not net.sinks:
        violations.append("network has no sinks")

    edge_ids = set()
    for e in net.edges:
        if e.id in edge_ids:
            violations.append(f"duplicate edge id {e.id!r}")
        edge_ids.add(e.id)
        if e.id in node_set:
            violations.append(f"edge id {e.id!r} collides with a node id")
        if e.tail not in node_set:
            violations.append(f"edge {e.id!r}: unknown tail node {e.tail!r}")
        if e.head not in node_set:
            violations.append(f"edge {e.id!r}: unknown head node {e.head!r}")
        if e.tail == e.head:
            violations.append(f"edge {e.id!r}: self-loop at node {e.tail!r}")
        if e.cap < 0:
            violations.append(f"edge {e.id!r}: negative capacity {e.cap}")

    indices = [s.index for s in net.sources]
    if net.sources and sorted(indices) != list(range(1, len(indices) + 1)):
        violations.append(
            f"source indices must be exactly 1..{len(indices)}, got {sorted(indices)}")
    source_nodes = set()
    for s in net.sources:
        if s.at not in node_set:
            violations.append(f"source {s.index}: unknown node {s.at!r}")
            continue
        source_nodes.add(s.at)
        incoming = [e.id for e in net.edges if e.head == s.at]
        if incoming:
            violations.append(
                f"In(S) nonempty: source {s.index} at node {s.at!r} "
                f"has incoming edges {incoming}")

    known_indices = set(indices)
    sink_nodes = set()
    for t in net.sinks:
        if t.at not in node_set:
            violations.append(f"sink at unknown node {t.at!r}")
            continue
        if t.at in sink_nodes:
            violations.append(f"duplicate sink node {t.at!r}")
        sink_nodes.add(t.at)
        if t.at in source_nodes:
            violations.append(f"node {t.at!r} hosts both a source and a sink")
        outgoing = [e.id for e in net.edges if e.tail == t.at]
        if outgoing:
            violations.append(
                f"Out(T) nonempty: sink node {t.at!r} has outgoing edges {outgoing}")
        if not t.demands:
            violations.append(f"sink {t.at!r}: empty demand set")
        for d in t.demands:
            if d not in known_indices:
                violations.append(f"sink {t.at!r}: unknown source {d}")

    if not _has_topological_order(net):
        violations.append("cycle detected")
    return violations


def _has_topological_order(net: Network) -> bool:
    try:
        topological_order(net)
    except ValueError:
        return False
    return True


def topological_order(net: Network) -> list[str]:
    """Kahn topological order of the nodes, stable in node-list order."""
    indeg = {n: 0 for n in net.nodes}
    for e in net.edges:
        if e.head in indeg and e.tail in indeg:
            indeg[e.head] += 1
    ready = [n for n in net.nodes if indeg[n] == 0]
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for e in net.edges:
            if e.tail == n and e.head in indeg:
                indeg[e.head] -= 1
                if indeg[e.head] == 0:
                    ready.append(e.head)
    if len(order) != len(net.nodes):
        raise ValueError("cycle detected")
    return order


def in_edges(net: Network, x: str) -> list[str]:
    """Edges entering a node, or In(E) for an edge id (edges into Tail(E))."""
    if x in set(net.nodes):
        return [e.id for e in net.edges if e.head == x]
    for e in net.edges:
        if e.id == x:
            return [f.id for f in net.edges if f.head == e.tail]
    raise KeyError(f"unknown node or edge id: {x!r}")


def out_edges(net: Network, x: str) -> list[str]:
    """Edges leaving a node, or Out(E) for an edge id (edges out of Head(E))."""
    if x in set(net.nodes):
        return [e.id for e in net.edges if e.tail == x]
    for e in net.edges:
        if e.id == x:
            return [f.id for f in net.edges if f.tail == e.head]
    raise KeyError(f"unknown node or edge id: {x!r}")


@dataclass(frozen=True)
class Weights:
    """Nonnegative per-source objective weights, keyed by source index.

    Missing indices count as weight zero.
    """
    w: tuple[tuple[int, Fraction], ...]

    @classmethod
    def of(cls, mapping) -> "Weights":
        items = []
        for k, v in sorted(dict(mapping).items()):
            v = Fraction(v)
            if v < 0:
                raise ValueError(f"negative weight {v} for source {k}")
            items.append((int(k), v))
        return cls(w=tuple(items))

    @classmethod
    def parse(cls, text: str) -> "Weights":
        """Parse the CLI form 'w1,w2,...' (positional by source index)."""
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if not parts:
            raise ValueError("empty weight list")
        return cls.of({i + 1: Fraction(p) for i, p in enumerate(parts)})

    def get(self, index: int) -> Fraction:
        for k, v in self.w:
            if k == index:
                return v
        return Fraction(0)

    def check_against(self, net: Network) -> None:
        known = set(net.source_indices())
        for k, _ in self.w:
            if k not in known:
                raise ValueError(f"weight for unknown source index {k}")


FIXTURE_NAMES = (
    "butterfly",
    "two_unicast_side",
    "two_unicast_chain",
    "parallel_relay",
    "fano",
    "single_edge",
)


def fixture_text(name: str) -> str:
    """Raw JSON text of a bundled example network."""
    if name not in FIXTURE_NAMES:
        raise KeyError(f"unknown fixture {name!r}; have {FIXTURE_NAMES}")
    return resources.files("fdgtool.fixtures").joinpath(f"{name}.json").read_text()


def load_fixture(name: str) -> Network:
    """Parse one of the bundled example networks."""
    return parse_network(fixture_text(name))
