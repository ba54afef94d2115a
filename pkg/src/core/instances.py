"""Instances: random planar generation, JSON file format and embedded fixtures."""

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import networkx as nx
import numpy as np
from scipy.spatial import Delaunay, QhullError

from config.settings import Config
from core.errors import InstanceFormatError, ValidationError
from core.graph_core import Network, PairSubnetwork, build_network, pair_subnetwork
from utils.file_manager import file_manager


@dataclass(frozen=True)
class ODPair:
    id: int
    origin: int
    dest: int
    demand: float
    utility: float

    def validate(self) -> None:
        if self.origin == self.dest:
            raise ValidationError(f"pair {self.id} has identical origin and destination")
        if not self.demand > 0:
            raise ValidationError(f"pair {self.id} has non-positive demand {self.demand}")
        if not self.utility > 0:
            raise ValidationError(f"pair {self.id} has non-positive utility {self.utility}")


@dataclass(frozen=True)
class Instance:
    network: Network
    pairs: Tuple[ODPair, ...]
    alpha: float
    budget_override: Optional[float] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValidationError(f"alpha must lie in (0,1], got {self.alpha}")
        if not self.pairs:
            raise ValidationError("instance has no O/D pairs")
        seen = set()
        for pair in self.pairs:
            pair.validate()
            for node in (pair.origin, pair.dest):
                if not 0 <= node < self.network.n_nodes:
                    raise ValidationError(f"pair {pair.id} references unknown node {node}")
            key = (pair.origin, pair.dest)
            if key in seen:
                raise ValidationError(f"duplicate O/D pair {self.network.labels[pair.origin]}->{self.network.labels[pair.dest]}")
            seen.add(key)
        if self.budget_override is not None and self.budget_override < 0:
            raise ValidationError("budget must be non-negative")

    @property
    def name(self) -> str:
        return str(self.metadata.get("name", "instance"))

    @property
    def total_demand(self) -> float:
        return float(sum(p.demand for p in self.pairs))

    @property
    def budget(self) -> float:
        if self.budget_override is not None:
            return self.budget_override
        return self.alpha * self.network.total_cost

    @cached_property
    def subnetworks(self) -> Tuple[PairSubnetwork, ...]:
        return tuple(pair_subnetwork(self.network, p.id, p.origin, p.dest, p.utility) for p in self.pairs)

    def pair_by_labels(self, origin: int, dest: int) -> ODPair:
        o, d = self.network.index_of(origin), self.network.index_of(dest)
        for pair in self.pairs:
            if pair.origin == o and pair.dest == d:
                return pair
        raise ValidationError(f"no O/D pair {origin}->{dest}")

    def with_alpha(self, alpha: float) -> "Instance":
        return replace(self, alpha=alpha, budget_override=None)

    def with_budget(self, budget: float) -> "Instance":
        alpha = min(1.0, budget / self.network.total_cost) if self.network.total_cost > 0 else 1.0
        return replace(self, alpha=alpha, budget_override=float(budget))

    @cached_property
    def key(self) -> str:
        payload = json.dumps(instance_to_dict(self), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


@dataclass(frozen=True)
class GenParams:
    n: int
    alpha: float = 0.4
    seed: int = 0
    cell_side: float = Config.GRID_CELL_SIDE
    deletion_prob: float = Config.EDGE_DELETION_PROB
    node_cost_range: Tuple[float, float] = Config.NODE_COST_RANGE
    demand_range: Tuple[float, float] = Config.DEMAND_RANGE
    utility_multiplier: float = Config.UTILITY_MULTIPLIER

    def validate(self) -> None:
        if self.n < 2:
            raise ValidationError(f"n must be >= 2, got {self.n}")
        if not 0 <= self.deletion_prob < 1:
            raise ValidationError(f"deletion probability must lie in [0,1), got {self.deletion_prob}")
        if not 0 < self.alpha <= 1:
            raise ValidationError(f"alpha must lie in (0,1], got {self.alpha}")
        for name in ("node_cost_range", "demand_range"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise ValidationError(f"{name} must be ordered and non-negative, got {(lo, hi)}")
        if self.demand_range[0] <= 0:
            raise ValidationError("demands must be positive")
        if self.cell_side <= 0 or self.utility_multiplier <= 0:
            raise ValidationError("cell side and utility multiplier must be positive")


def grid_shape(n: int) -> Tuple[int, int]:
    """Closest-to-square grid holding n cells: (rows, cols)."""
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    return rows, cols


def _place_points(params: GenParams, rng: np.random.Generator) -> np.ndarray:
    _, cols = grid_shape(params.n)
    side = params.cell_side
    points = []
    for k in range(params.n):
        r, c = divmod(k, cols)
        center = np.array([(c + 0.5) * side, (r + 0.5) * side])
        # uniform inside the central half of the cell
        points.append(center + rng.uniform(-side / 4, side / 4, size=2))
    return np.array(points)


def _triangulate(points: np.ndarray) -> List[Tuple[int, int]]:
    n = len(points)
    if n == 2:
        return [(0, 1)]
    tri = Delaunay(points)
    edges = set()
    for simplex in tri.simplices:
        for a in range(3):
            i, j = int(simplex[a]), int(simplex[(a + 1) % 3])
            edges.add((min(i, j), max(i, j)))
    return sorted(edges)


def _delete_edges(n: int, edges: List[Tuple[int, int]], p: float,
                  rng: np.random.Generator) -> List[Tuple[int, int]]:
    for attempt in range(Config.GENERATOR_MAX_RETRIES):
        keep = rng.random(len(edges)) >= p
        kept = [e for e, k in zip(edges, keep) if k]
        graph = nx.Graph()
        graph.add_nodes_from(range(n))
        graph.add_edges_from(kept)
        if nx.is_connected(graph):
            return kept
    logging.warning(f"⚠️ Edge deletion kept disconnecting the graph after {Config.GENERATOR_MAX_RETRIES} draws; keeping the full triangulation")
    return list(edges)


def generate(params: GenParams) -> Instance:
    """Random planar instance on a perturbed grid."""
    params.validate()
    rng = np.random.default_rng(params.seed)

    for attempt in range(Config.GENERATOR_MAX_RETRIES):
        points = _place_points(params, rng)
        try:
            edges = _triangulate(points)
            break
        except QhullError:
            logging.warning(f"⚠️ Degenerate point set on attempt {attempt + 1}, re-perturbing")
    else:
        raise ValidationError("could not triangulate the generated points")

    edges = _delete_edges(params.n, edges, params.deletion_prob, rng)

    lo, hi = params.node_cost_range
    node_costs = np.rint(rng.uniform(lo, hi, size=params.n))
    raw_nodes = [{"id": i, "cost": float(node_costs[i])} for i in range(params.n)]
    raw_edges = []
    for i, j in edges:
        length = float(max(1.0, np.rint(np.linalg.norm(points[i] - points[j]))))
        raw_edges.append({"u": i, "v": j, "cost": length, "length": length})
    network = build_network(raw_nodes, raw_edges)

    dlo, dhi = params.demand_range
    pairs = []
    for i in range(params.n):
        for j in range(params.n):
            if i == j:
                continue
            utility = float(params.utility_multiplier * np.linalg.norm(points[i] - points[j]))
            demand = float(rng.integers(int(dlo), int(dhi), endpoint=True))
            pairs.append(ODPair(len(pairs), i, j, demand, utility))

    generator = {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(params).items()}
    metadata = {
        "name": f"planar_n{params.n}_a{params.alpha:g}_s{params.seed}",
        "seed": params.seed,
        "generator": generator,
        "coordinates": [[float(x), float(y)] for x, y in points],
    }
    instance = Instance(network, tuple(pairs), params.alpha, metadata=metadata)
    logging.info(f"✅ Generated {instance.name}: {network.n_nodes} nodes, {network.n_edges} edges, {len(pairs)} pairs")
    return instance


def instance_to_dict(instance: Instance) -> Dict[str, Any]:
    net = instance.network
    doc: Dict[str, Any] = {"format": Config.INSTANCE_FORMAT, "alpha": instance.alpha}
    if instance.budget_override is not None:
        doc["budget"] = instance.budget_override
    doc["meta"] = instance.metadata
    doc["nodes"] = [{"id": label, "cost": cost} for label, cost in zip(net.labels, net.node_cost)]
    doc["edges"] = [
        {"u": net.labels[e.u], "v": net.labels[e.v], "cost": e.cost, "length": e.length}
        for e in net.edges
    ]
    doc["pairs"] = [
        {"origin": net.labels[p.origin], "destination": net.labels[p.dest],
         "demand": p.demand, "utility": p.utility}
        for p in instance.pairs
    ]
    return doc


def write_instance(instance: Instance, path) -> Path:
    return file_manager.write_json(path, instance_to_dict(instance))


def _require(doc: Any, key: str, path: str, context: str = "") -> Any:
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"'{context or 'document'}' must be an object", path=path, field=context or None)
    if key not in doc:
        where = f"{context}.{key}" if context else key
        raise InstanceFormatError(f"missing required field '{where}'", path=path, field=where)
    return doc[key]


def _records(doc: Dict[str, Any], key: str, path: str) -> List[Any]:
    records = _require(doc, key, path)
    if not isinstance(records, list):
        raise InstanceFormatError(f"'{key}' must be a list", path=path, field=key)
    return records


def _number(doc: Any, key: str, path: str, context: str = "", kind=float, optional: bool = False):
    """Field ``key`` converted with ``kind``; the error names the offending field."""
    where = f"{context}.{key}" if context else key
    raw = doc.get(key) if optional and isinstance(doc, dict) else _require(doc, key, path, context)
    if raw is None and optional:
        return None
    if isinstance(raw, bool):
        raise InstanceFormatError(f"'{where}' is not a number: {raw!r}", path=path, field=where)
    try:
        return kind(raw)
    except (TypeError, ValueError, OverflowError):
        raise InstanceFormatError(f"'{where}' is not a number: {raw!r}", path=path, field=where) from None


def instance_from_dict(doc: Dict[str, Any], path: str = "<memory>") -> Instance:
    fmt = _require(doc, "format", path)
    if fmt != Config.INSTANCE_FORMAT:
        raise InstanceFormatError(f"unsupported format '{fmt}'", path=path, line=2, field="format")
    alpha = _number(doc, "alpha", path)

    nodes = []
    for k, raw in enumerate(_records(doc, "nodes", path)):
        ctx = f"nodes[{k}]"
        nodes.append({"id": _number(raw, "id", path, ctx, int), "cost": _number(raw, "cost", path, ctx)})
    edges = []
    for k, raw in enumerate(_records(doc, "edges", path)):
        ctx = f"edges[{k}]"
        edges.append({"u": _number(raw, "u", path, ctx, int), "v": _number(raw, "v", path, ctx, int),
                      "cost": _number(raw, "cost", path, ctx),
                      "length": _number(raw, "length", path, ctx, optional=True)})
    raw_pairs = []
    for k, raw in enumerate(_records(doc, "pairs", path)):
        ctx = f"pairs[{k}]"
        raw_pairs.append((_number(raw, "origin", path, ctx, int), _number(raw, "destination", path, ctx, int),
                          _number(raw, "demand", path, ctx), _number(raw, "utility", path, ctx)))
    budget = _number(doc, "budget", path, optional=True)

    try:
        network = build_network(nodes, edges)
        pairs = tuple(ODPair(k, network.index_of(o), network.index_of(d), demand, utility)
                      for k, (o, d, demand, utility) in enumerate(raw_pairs))
        return Instance(network, pairs, alpha, budget_override=budget, metadata=doc.get("meta", {}))
    except ValidationError as e:
        raise InstanceFormatError(str(e), path=path) from e


def read_instance(path) -> Instance:
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"malformed JSON: {e.msg}", path=str(path), line=e.lineno) from e
    if not isinstance(doc, dict):
        raise InstanceFormatError("top-level document must be an object", path=str(path), line=1)
    return instance_from_dict(doc, str(path))


def prop2_fixture() -> Instance:
    """Four-node network showing that the capacity-dual bound is tight (budget 63)."""
    nodes = [(1, 8), (2, 7), (3, 10), (4, 8)]
    edges = [(1, 2, 12), (1, 3, 14), (1, 4, 17), (2, 4, 10), (3, 4, 6)]
    network = build_network(nodes, edges)
    raw_pairs = [(1, 2, 24, 181), (1, 4, 34, 168), (2, 4, 20, 43), (3, 2, 32, 121)]
    pairs = tuple(
        ODPair(k, network.index_of(o), network.index_of(d), float(g), float(u))
        for k, (o, d, u, g) in enumerate(raw_pairs)
    )
    instance = Instance(network, pairs, alpha=1.0, metadata={"name": "prop2"})
    return instance.with_budget(63.0)


FIXTURES = {"prop2": prop2_fixture}


def load_fixture(name: str) -> Instance:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise ValidationError(f"unknown fixture '{name}'; available: {', '.join(sorted(FIXTURES))}") from None
