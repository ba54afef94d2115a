"""Undirected potential network, masked shortest paths and per-pair subnetworks."""

import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.csgraph import csgraph_from_dense, dijkstra

from core.errors import ValidationError

# d_S(w) = +inf for unreachable pairs; never replaced by a large finite number
UNREACHABLE = math.inf
DIST_TOL = 1e-9


@dataclass(frozen=True)
class Edge:
    id: int
    u: int
    v: int
    cost: float
    length: float

    @property
    def endpoints(self) -> Tuple[int, int]:
        return (self.u, self.v)


@dataclass(frozen=True)
class Arc:
    """Directed copy of an edge; arcs 2k and 2k+1 come from edge k."""

    id: int
    tail: int
    head: int
    edge: int
    length: float

    @property
    def mate(self) -> int:
        return self.id ^ 1


@dataclass(frozen=True)
class Network:
    labels: Tuple[int, ...]
    node_cost: Tuple[float, ...]
    edges: Tuple[Edge, ...]
    arcs: Tuple[Arc, ...]
    incident: Tuple[Tuple[int, ...], ...]
    out_arcs: Tuple[Tuple[int, ...], ...]
    in_arcs: Tuple[Tuple[int, ...], ...]
    total_cost: float

    @property
    def n_nodes(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    @cached_property
    def _index(self) -> Dict[int, int]:
        return {label: i for i, label in enumerate(self.labels)}

    @cached_property
    def _edge_lookup(self) -> Dict[Tuple[int, int], int]:
        lookup = {}
        for e in self.edges:
            lookup[(e.u, e.v)] = e.id
            lookup[(e.v, e.u)] = e.id
        return lookup

    def index_of(self, label: int) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ValidationError(f"unknown node label {label}") from None

    def edge_between(self, i: int, j: int) -> Optional[int]:
        return self._edge_lookup.get((i, j))

    def edge_by_labels(self, a: int, b: int) -> int:
        edge_id = self.edge_between(self.index_of(a), self.index_of(b))
        if edge_id is None:
            raise ValidationError(f"no edge between nodes {a} and {b}")
        return edge_id

    def arc_between(self, i: int, j: int) -> Optional[int]:
        edge_id = self.edge_between(i, j)
        if edge_id is None:
            return None
        arc = self.arcs[2 * edge_id]
        return arc.id if arc.tail == i else arc.mate

    def edge_labels(self, edge_id: int) -> Tuple[int, int]:
        e = self.edges[edge_id]
        return (self.labels[e.u], self.labels[e.v])

    @cached_property
    def edge_costs(self) -> np.ndarray:
        return np.array([e.cost for e in self.edges], dtype=float)

    @cached_property
    def node_costs(self) -> np.ndarray:
        return np.array(self.node_cost, dtype=float)

    def distance_matrix(self, edge_mask: Optional[Iterable[int]] = None) -> np.ndarray:
        """All-pairs distances over the masked edges; unreachable entries are inf."""
        dense = np.full((self.n_nodes, self.n_nodes), np.inf)
        edge_ids = range(self.n_edges) if edge_mask is None else edge_mask
        for edge_id in edge_ids:
            e = self.edges[edge_id]
            if e.length < dense[e.u, e.v]:
                dense[e.u, e.v] = e.length
                dense[e.v, e.u] = e.length
        graph = csgraph_from_dense(dense, null_value=np.inf)
        return dijkstra(graph, directed=False)

    @cached_property
    def distances(self) -> np.ndarray:
        """Full-network distance matrix d_N."""
        return self.distance_matrix()


@dataclass(frozen=True)
class Subgraph:
    built_nodes: FrozenSet[int] = field(default_factory=frozenset)
    built_edges: FrozenSet[int] = field(default_factory=frozenset)

    @classmethod
    def from_edges(cls, network: Network, edge_ids: Iterable[int]) -> "Subgraph":
        """Edge set plus exactly the endpoints it needs."""
        edges = frozenset(edge_ids)
        nodes = set()
        for edge_id in edges:
            nodes.update(network.edges[edge_id].endpoints)
        return cls(frozenset(nodes), edges)

    def validate(self, network: Network) -> None:
        for edge_id in self.built_edges:
            if not 0 <= edge_id < network.n_edges:
                raise ValidationError(f"built edge {edge_id} not in network")
            e = network.edges[edge_id]
            for end in e.endpoints:
                if end not in self.built_nodes:
                    raise ValidationError(
                        f"built edge {network.edge_labels(edge_id)} has unbuilt endpoint {network.labels[end]}")
        for node in self.built_nodes:
            if not 0 <= node < network.n_nodes:
                raise ValidationError(f"built node {node} not in network")

    def union(self, other: "Subgraph") -> "Subgraph":
        return Subgraph(self.built_nodes | other.built_nodes, self.built_edges | other.built_edges)


@dataclass(frozen=True)
class ShortestPath:
    length: float
    nodes: Tuple[int, ...] = ()
    arcs: Tuple[int, ...] = ()

    @property
    def reachable(self) -> bool:
        return not math.isinf(self.length)


@dataclass(frozen=True)
class PairSubnetwork:
    pair_id: int
    nodes: FrozenSet[int]
    edges: FrozenSet[int]
    arcs: FrozenSet[int]

    @property
    def is_empty(self) -> bool:
        return not self.arcs


def _field(raw: Any, name: str, position: int) -> Any:
    if isinstance(raw, Mapping):
        return raw.get(name)
    if isinstance(raw, Sequence) and len(raw) > position:
        return raw[position]
    return None


def _as_number(value: Any, what: str, kind=float):
    try:
        return kind(value)
    except (TypeError, ValueError, OverflowError):
        raise ValidationError(f"{what} is not a number: {value!r}") from None


def build_network(raw_nodes: Iterable[Any], raw_edges: Iterable[Any]) -> Network:
    """Validate raw records and derive arcs and adjacency.

    Nodes are ``{"id", "cost"}`` mappings or ``(id, cost)`` tuples; edges are
    ``{"u", "v", "cost", "length"}`` mappings or ``(u, v, cost[, length])``
    tuples. A missing length defaults to the edge cost. Internal node indices
    follow the sorted order of the external ids.
    """
    node_records = []
    for raw in raw_nodes:
        label = _field(raw, "id", 0)
        cost = _field(raw, "cost", 1)
        if label is None or cost is None:
            raise ValidationError(f"node record {raw!r} needs id and cost")
        cost = _as_number(cost, f"cost of node {label}")
        if not math.isfinite(cost) or cost < 0:
            raise ValidationError(f"node {label} has invalid cost {cost}")
        node_records.append((_as_number(label, "node id", int), cost))

    node_records.sort()
    labels = tuple(label for label, _ in node_records)
    if len(set(labels)) != len(labels):
        raise ValidationError("duplicate node id")
    index = {label: i for i, label in enumerate(labels)}

    edges: List[Edge] = []
    seen = set()
    for raw in raw_edges:
        a = _field(raw, "u", 0)
        b = _field(raw, "v", 1)
        cost = _field(raw, "cost", 2)
        length = _field(raw, "length", 3)
        if a is None or b is None or cost is None:
            raise ValidationError(f"edge record {raw!r} needs u, v and cost")
        a, b = _as_number(a, "edge endpoint", int), _as_number(b, "edge endpoint", int)
        if a not in index or b not in index:
            raise ValidationError(f"edge {{{a},{b}}} has an endpoint outside the node set")
        if a == b:
            raise ValidationError(f"edge {{{a},{b}}} is a self-loop")
        key = (min(a, b), max(a, b))
        if key in seen:
            raise ValidationError(f"duplicate edge {{{a},{b}}}")
        seen.add(key)
        cost = _as_number(cost, f"cost of edge {{{a},{b}}}")
        length = cost if length is None else _as_number(length, f"length of edge {{{a},{b}}}")
        if not math.isfinite(cost) or cost < 0:
            raise ValidationError(f"edge {{{a},{b}}} has invalid cost {cost}")
        if not math.isfinite(length) or length < 0:
            raise ValidationError(f"edge {{{a},{b}}} has invalid length {length}")
        edges.append(Edge(len(edges), index[a], index[b], cost, length))

    n = len(labels)
    arcs: List[Arc] = []
    incident: List[List[int]] = [[] for _ in range(n)]
    out_arcs: List[List[int]] = [[] for _ in range(n)]
    in_arcs: List[List[int]] = [[] for _ in range(n)]
    for e in edges:
        forward = Arc(2 * e.id, e.u, e.v, e.id, e.length)
        backward = Arc(2 * e.id + 1, e.v, e.u, e.id, e.length)
        arcs.extend((forward, backward))
        incident[e.u].append(e.id)
        incident[e.v].append(e.id)
        for arc in (forward, backward):
            out_arcs[arc.tail].append(arc.id)
            in_arcs[arc.head].append(arc.id)

    total = sum(c for _, c in node_records) + sum(e.cost for e in edges)
    return Network(
        labels=labels,
        node_cost=tuple(c for _, c in node_records),
        edges=tuple(edges),
        arcs=tuple(arcs),
        incident=tuple(tuple(x) for x in incident),
        out_arcs=tuple(tuple(x) for x in out_arcs),
        in_arcs=tuple(tuple(x) for x in in_arcs),
        total_cost=total,
    )


def shortest_path(network: Network, edge_mask: Optional[Iterable[int]],
                  origin: int, dest: int) -> ShortestPath:
    """Label-setting search over the masked edges.

    Among equal-length paths the lexicographically smallest node sequence wins,
    so the result does not depend on heap internals. ``edge_mask=None`` means
    every edge.
    """
    allowed = None if edge_mask is None else frozenset(edge_mask)
    heap: List[Tuple[float, Tuple[int, ...], Tuple[int, ...]]] = [(0.0, (origin,), ())]
    settled = set()
    while heap:
        dist, nodes, arcs = heapq.heappop(heap)
        node = nodes[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == dest:
            return ShortestPath(dist, nodes, arcs)
        for arc_id in network.out_arcs[node]:
            arc = network.arcs[arc_id]
            if arc.head in settled:
                continue
            if allowed is not None and arc.edge not in allowed:
                continue
            heapq.heappush(heap, (dist + arc.length, nodes + (arc.head,), arcs + (arc_id,)))
    return ShortestPath(UNREACHABLE)


def pair_subnetwork(network: Network, pair_id: int, origin: int, dest: int,
                    utility: float) -> PairSubnetwork:
    """Distance-sum filter: keep arc (i,j) iff d(s,i) + d_a + d(j,t) <= u."""
    dist = network.distances
    from_origin = dist[origin]
    to_dest = dist[dest]
    kept_arcs = set()
    for arc in network.arcs:
        if from_origin[arc.tail] + arc.length + to_dest[arc.head] <= utility + DIST_TOL:
            kept_arcs.add(arc.id)
    kept_edges = {network.arcs[a].edge for a in kept_arcs}
    kept_nodes = {origin, dest}
    for a in kept_arcs:
        kept_nodes.add(network.arcs[a].tail)
        kept_nodes.add(network.arcs[a].head)
    return PairSubnetwork(pair_id, frozenset(kept_nodes), frozenset(kept_edges), frozenset(kept_arcs))


def subgraph_cost(network: Network, subgraph: Subgraph) -> float:
    subgraph.validate(network)
    return (sum(network.node_cost[i] for i in subgraph.built_nodes)
            + sum(network.edges[e].cost for e in subgraph.built_edges))


def is_budget_feasible(network: Network, subgraph: Subgraph, alpha: float,
                       budget: Optional[float] = None) -> bool:
    limit = alpha * network.total_cost if budget is None else budget
    return subgraph_cost(network, subgraph) <= limit + DIST_TOL
