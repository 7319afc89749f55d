"""Metric graph data model with vertex coupling data.

A graph is built once and never mutated; `normalize` and the phase helpers return
new graphs. Edge coordinates run from x = 0 at ``source`` to x = length at ``target``.
"""
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from utils.errors import GraphValidationError, UnsupportedRequestError
from utils.logger import app_logger

# Pieces shorter than this are treated as a collapsed edge
MIN_PIECE_LENGTH = 1e-12


class CouplingKind(str, Enum):
    """Vertex coupling used at every interior vertex of a run."""

    DELTA = "delta"
    DELTA_PRIME_S = "delta_prime_s"

    @classmethod
    def parse(cls, value: Any) -> "CouplingKind":
        if isinstance(value, CouplingKind):
            return value
        try:
            return cls(str(value).strip().lower().replace("-", "_"))
        except ValueError:
            raise UnsupportedRequestError(
                f"unknown coupling {value!r}; expected one of {[k.value for k in cls]}"
            ) from None


@dataclass(frozen=True)
class PotentialSpec:
    """Piecewise-constant potential on [0, length].

    ``breakpoints`` has one more entry than ``values``; Zero and Constant are the
    one-interval special cases.
    """

    breakpoints: Tuple[float, ...]
    values: Tuple[float, ...]

    @classmethod
    def zero(cls, length: float) -> "PotentialSpec":
        return cls((0.0, float(length)), (0.0,))

    @classmethod
    def constant(cls, length: float, value: float) -> "PotentialSpec":
        return cls((0.0, float(length)), (float(value),))

    @classmethod
    def piecewise(cls, breakpoints: Sequence[float], values: Sequence[float]) -> "PotentialSpec":
        return cls(tuple(float(b) for b in breakpoints), tuple(float(v) for v in values))

    @property
    def label(self) -> str:
        if len(self.values) == 1:
            return "zero" if self.values[0] == 0.0 else "constant"
        return "piecewise"

    @property
    def length(self) -> float:
        return self.breakpoints[-1]

    @property
    def sup_norm(self) -> float:
        return max(abs(v) for v in self.values)

    def intervals(self) -> List[Tuple[float, float, float]]:
        """(start, end, value) for every constant piece."""
        return [
            (self.breakpoints[i], self.breakpoints[i + 1], self.values[i])
            for i in range(len(self.values))
        ]

    def value_at(self, x: float) -> float:
        idx = int(np.searchsorted(self.breakpoints, x, side="right")) - 1
        return self.values[min(max(idx, 0), len(self.values) - 1)]

    def validate(self, length: float) -> None:
        bps = self.breakpoints
        if len(bps) != len(self.values) + 1 or not self.values:
            raise GraphValidationError(
                "invalid potential", "need len(breakpoints) == len(values) + 1"
            )
        if bps[0] != 0.0 or not math.isclose(bps[-1], length, rel_tol=1e-12, abs_tol=1e-15):
            raise GraphValidationError(
                "invalid potential", f"breakpoints must span [0, {length}], got {bps}"
            )
        if any(b1 <= b0 for b0, b1 in zip(bps, bps[1:])):
            raise GraphValidationError("invalid potential", "breakpoints not strictly increasing")
        if not all(math.isfinite(v) for v in self.values):
            raise GraphValidationError("invalid potential", "potential values must be finite")

    def reversed(self) -> "PotentialSpec":
        length = self.length
        bps = tuple(0.0 if b == length else length - b for b in reversed(self.breakpoints))
        return PotentialSpec(bps, tuple(reversed(self.values)))

    def split(self, x: float) -> Tuple["PotentialSpec", "PotentialSpec"]:
        """Cut at ``x``; the right half is re-based so that it starts at 0."""
        left_bps = [b for b in self.breakpoints if b < x] + [x]
        left_vals = [self.value_at(0.5 * (a + b)) for a, b in zip(left_bps, left_bps[1:])]
        right_abs = [x] + [b for b in self.breakpoints if b > x]
        right_vals = [self.value_at(0.5 * (a + b)) for a, b in zip(right_abs, right_abs[1:])]
        right_bps = [0.0] + [b - x for b in right_abs[1:]]
        return (
            PotentialSpec.piecewise(left_bps, left_vals),
            PotentialSpec.piecewise(right_bps, right_vals),
        )


def sample_potential(fn: Callable[[float], float], length: float, step: float) -> PotentialSpec:
    """Sample a bounded potential into a piecewise-constant one (midpoint rule)."""
    if step <= 0 or length <= 0:
        raise GraphValidationError("invalid sampling", "length and step must be positive")
    n = max(1, int(math.ceil(length / step)))
    bps = np.linspace(0.0, length, n + 1)
    bps[-1] = length
    mids = 0.5 * (bps[:-1] + bps[1:])
    values = [float(fn(float(x))) for x in mids]
    return PotentialSpec.piecewise(bps.tolist(), values)


@dataclass(frozen=True)
class VertexData:
    """Interior vertex (coupling constant) or boundary vertex (Robin angle omega)."""

    id: str
    boundary: bool = False
    constant: float = 0.0
    omega: float = 0.0

    @classmethod
    def interior(cls, vid: str, constant: float = 0.0) -> "VertexData":
        return cls(id=vid, boundary=False, constant=float(constant))

    @classmethod
    def boundary_vertex(cls, vid: str, omega: float = 0.0) -> "VertexData":
        return cls(id=vid, boundary=True, omega=float(omega))


@dataclass(frozen=True)
class EdgeData:
    id: str
    source: str
    target: str
    length: float
    potential: PotentialSpec
    phase: float = 0.0

    @classmethod
    def make(
        cls,
        eid: str,
        source: str,
        target: str,
        length: float,
        potential: Optional[PotentialSpec] = None,
        phase: float = 0.0,
    ) -> "EdgeData":
        pot = potential if potential is not None else PotentialSpec.zero(length)
        return cls(eid, source, target, float(length), pot, float(phase))

    def other_end(self, vid: str) -> str:
        if vid == self.source:
            return self.target
        if vid == self.target:
            return self.source
        raise GraphValidationError("not an endpoint", f"{vid!r} is not on edge {self.id!r}")

    def phase_from(self, vid: str) -> float:
        """Peierls phase accumulated when traversing the edge away from ``vid``."""
        return self.phase if vid == self.source else -self.phase

    def reversed(self) -> "EdgeData":
        return EdgeData(
            self.id, self.target, self.source, self.length, self.potential.reversed(), -self.phase
        )


@dataclass(frozen=True)
class AssumptionSummary:
    """Witnesses of the standing assumptions: sup |V|, min/max length, max degree."""

    potential_bound: float
    min_length: float
    max_length: float
    max_degree: int

    def as_dict(self) -> Dict[str, float]:
        return {
            "C": self.potential_bound,
            "l0": self.min_length,
            "L0": self.max_length,
            "N0": float(self.max_degree),
        }


@dataclass(frozen=True)
class Graph:
    """Finite connected metric graph. Build it with :func:`build_graph`."""

    vertices: Mapping[str, VertexData]
    edges: Tuple[EdgeData, ...]
    summary: AssumptionSummary
    _incident: Mapping[str, Tuple[str, ...]] = field(repr=False)
    _edge_index: Mapping[str, EdgeData] = field(repr=False)

    @property
    def interior_ids(self) -> Tuple[str, ...]:
        return tuple(vid for vid, v in self.vertices.items() if not v.boundary)

    @property
    def boundary_ids(self) -> Tuple[str, ...]:
        return tuple(vid for vid, v in self.vertices.items() if v.boundary)

    def vertex(self, vid: str) -> VertexData:
        return self.vertices[vid]

    def edge(self, eid: str) -> EdgeData:
        return self._edge_index[eid]

    def incident(self, vid: str) -> Tuple[EdgeData, ...]:
        return tuple(self._edge_index[eid] for eid in self._incident[vid])

    def degree(self, vid: str) -> int:
        return len(self._incident[vid])

    def neighbors(self, vid: str) -> Tuple[str, ...]:
        return tuple(e.other_end(vid) for e in self.incident(vid))

    @property
    def has_multilinks(self) -> bool:
        pairs = [frozenset((e.source, e.target)) for e in self.edges]
        return len(pairs) != len(set(pairs))

    @property
    def has_phases(self) -> bool:
        return any(e.phase != 0.0 for e in self.edges)

    def to_networkx(self) -> nx.MultiGraph:
        nxg = nx.MultiGraph()
        for vid, v in self.vertices.items():
            nxg.add_node(vid, data=v)
        for e in self.edges:
            nxg.add_edge(e.source, e.target, key=e.id, length=e.length, data=e)
        return nxg


def build_graph(vertices: Iterable[VertexData], edges: Iterable[EdgeData]) -> Graph:
    """Validate vertices and edges and build an immutable Graph.

    Raises:
        GraphValidationError: duplicate id, dangling endpoint, non-positive length,
            self-loop, boundary vertex of degree != 1, interior vertex of degree < 2,
            non-finite data, or a disconnected graph.
    """
    vertex_map: Dict[str, VertexData] = {}
    for v in vertices:
        if v.id in vertex_map:
            raise GraphValidationError("duplicate id", f"vertex {v.id!r}")
        if not v.boundary and not math.isfinite(v.constant):
            raise GraphValidationError("infinite coupling", f"vertex {v.id!r}")
        if v.boundary and not math.isfinite(v.omega):
            raise GraphValidationError("invalid boundary angle", f"vertex {v.id!r}")
        vertex_map[v.id] = v

    edge_list = list(edges)
    if not vertex_map or not edge_list:
        raise GraphValidationError("empty graph", "need at least one vertex and one edge")

    edge_index: Dict[str, EdgeData] = {}
    incident: Dict[str, List[str]] = {vid: [] for vid in vertex_map}
    for e in edge_list:
        if e.id in edge_index:
            raise GraphValidationError("duplicate id", f"edge {e.id!r}")
        for end in (e.source, e.target):
            if end not in vertex_map:
                raise GraphValidationError("dangling endpoint", f"edge {e.id!r} -> {end!r}")
        if e.source == e.target:
            raise GraphValidationError("self-loop", f"edge {e.id!r}")
        if not (e.length > 0 and math.isfinite(e.length)):
            raise GraphValidationError("non-positive length", f"edge {e.id!r}: {e.length}")
        if not math.isfinite(e.phase):
            raise GraphValidationError("invalid phase", f"edge {e.id!r}")
        e.potential.validate(e.length)
        edge_index[e.id] = e
        incident[e.source].append(e.id)
        incident[e.target].append(e.id)

    for vid, v in vertex_map.items():
        deg = len(incident[vid])
        if v.boundary and deg != 1:
            raise GraphValidationError("boundary vertex degree != 1", f"{vid!r} has degree {deg}")
        if not v.boundary and deg < 2:
            raise GraphValidationError("interior vertex degree < 2", f"{vid!r} has degree {deg}")

    summary = AssumptionSummary(
        potential_bound=max(e.potential.sup_norm for e in edge_list),
        min_length=min(e.length for e in edge_list),
        max_length=max(e.length for e in edge_list),
        max_degree=max(len(ids) for ids in incident.values()),
    )
    graph = Graph(
        vertices=dict(vertex_map),
        edges=tuple(edge_list),
        summary=summary,
        _incident={vid: tuple(ids) for vid, ids in incident.items()},
        _edge_index=edge_index,
    )
    nxg = graph.to_networkx()
    if not nx.is_connected(nxg):
        raise GraphValidationError(
            "disconnected graph", f"{nx.number_connected_components(nxg)} components"
        )
    app_logger.debug(
        f"Built graph with {len(vertex_map)} vertices, {len(edge_list)} edges, "
        f"l0={summary.min_length:g}, N0={summary.max_degree}"
    )
    return graph


def _split_edge(
    edge: EdgeData, cuts: Sequence[Tuple[float, float]]
) -> Tuple[List[VertexData], List[EdgeData]]:
    """Split an edge at the given (position, constant) cuts, in stored coordinates."""
    positions = sorted(cuts, key=lambda c: c[0])
    for x, _ in positions:
        if not 0.0 < x < edge.length:
            raise GraphValidationError(
                "position not strictly inside edge", f"{edge.id!r} at x={x} (length {edge.length})"
            )
    xs = [0.0] + [x for x, _ in positions] + [edge.length]
    if any(b - a < MIN_PIECE_LENGTH for a, b in zip(xs, xs[1:])):
        raise GraphValidationError("split would violate l0 > 0", f"edge {edge.id!r}")

    new_vertices = [
        VertexData.interior(f"{edge.id}@{x:.12g}", constant) for x, constant in positions
    ]
    ends = [edge.source] + [v.id for v in new_vertices] + [edge.target]
    pieces: List[EdgeData] = []
    remaining = edge.potential
    offset = 0.0
    for i, (a, b) in enumerate(zip(xs, xs[1:])):
        if b < edge.length:
            left, remaining = remaining.split(b - offset)
        else:
            left = remaining
        offset = b
        pieces.append(
            EdgeData(
                id=f"{edge.id}.{i}",
                source=ends[i],
                target=ends[i + 1],
                length=b - a,
                potential=left,
                phase=edge.phase * (b - a) / edge.length,
            )
        )
    return new_vertices, pieces


def normalize(
    g: Graph,
    parallel_edges: Sequence[str] = (),
    point_interactions: Sequence[Tuple[str, float, float]] = (),
) -> Graph:
    """Remove multi-links and realize point interactions by degree-2 vertices.

    Each listed parallel edge gets a free (constant 0) vertex at its midpoint; each
    point interaction (edge id, x, strength) inserts a vertex with that constant at x.
    Empty lists return ``g`` itself.
    """
    if not parallel_edges and not point_interactions:
        return g

    pair_count: Dict[frozenset, int] = {}
    for e in g.edges:
        key = frozenset((e.source, e.target))
        pair_count[key] = pair_count.get(key, 0) + 1

    cuts: Dict[str, List[Tuple[float, float]]] = {}
    for eid in parallel_edges:
        if eid not in g._edge_index:
            raise GraphValidationError("unknown edge", f"{eid!r}")
        e = g.edge(eid)
        if pair_count[frozenset((e.source, e.target))] < 2:
            raise GraphValidationError("not a multi-link", f"edge {eid!r}")
        cuts.setdefault(eid, []).append((0.5 * e.length, 0.0))
    for eid, x, strength in point_interactions:
        if eid not in g._edge_index:
            raise GraphValidationError("unknown edge", f"{eid!r}")
        if not math.isfinite(strength):
            raise GraphValidationError("infinite coupling", f"point interaction on {eid!r}")
        cuts.setdefault(eid, []).append((float(x), float(strength)))

    vertices = list(g.vertices.values())
    edges: List[EdgeData] = []
    for e in g.edges:
        if e.id in cuts:
            new_vertices, pieces = _split_edge(e, cuts[e.id])
            vertices.extend(new_vertices)
            edges.extend(pieces)
        else:
            edges.append(e)

    app_logger.info(
        f"Normalized graph: {len(parallel_edges)} parallel edges split, "
        f"{len(point_interactions)} point interactions inserted"
    )
    return build_graph(vertices, edges)


def with_phases(g: Graph, phases: Mapping[str, float]) -> Graph:
    """Return a copy of ``g`` whose listed edges carry the given Peierls phases."""
    unknown = set(phases) - set(g._edge_index)
    if unknown:
        raise GraphValidationError("unknown edge", f"{sorted(unknown)}")
    edges = [replace(e, phase=float(phases[e.id])) if e.id in phases else e for e in g.edges]
    return build_graph(g.vertices.values(), edges)


def gauge_shift(g: Graph, chi: Mapping[str, float]) -> Graph:
    """Add chi[target] - chi[source] to every edge phase (a pure gauge change)."""
    edges = [
        replace(e, phase=e.phase + chi.get(e.target, 0.0) - chi.get(e.source, 0.0))
        for e in g.edges
    ]
    return build_graph(g.vertices.values(), edges)


def graph_from_document(doc: Mapping[str, Any]) -> Tuple[Graph, CouplingKind]:
    """Build a graph from a parsed graph description document.

    See ``data/README.md`` for the schema. Unknown keys are rejected.
    """
    allowed = {"coupling", "vertices", "edges", "magnetic", "normalize"}
    unknown = set(doc) - allowed
    if unknown:
        raise GraphValidationError("unknown keys", f"{sorted(unknown)}")
    if "coupling" not in doc:
        raise GraphValidationError("missing key", "coupling")
    kind = CouplingKind.parse(doc["coupling"])

    vertices: List[VertexData] = []
    for raw in doc.get("vertices", []):
        _reject_unknown(raw, {"id", "kind", "constant", "omega"}, "vertex")
        vkind = str(raw.get("kind", "interior"))
        if vkind == "interior":
            if "omega" in raw:
                raise GraphValidationError("unknown keys", "interior vertex takes no omega")
            vertices.append(
                VertexData.interior(_field(raw, "id", str), _field(raw, "constant", float, 0.0))
            )
        elif vkind == "boundary":
            if "constant" in raw:
                raise GraphValidationError("unknown keys", "boundary vertex takes no constant")
            vertices.append(
                VertexData.boundary_vertex(_field(raw, "id", str), _field(raw, "omega", float, 0.0))
            )
        else:
            raise GraphValidationError("invalid vertex kind", f"{vkind!r}")

    raw_phases = _table(doc.get("magnetic", {}), "magnetic")
    magnetic = {str(k): _field(raw_phases, k, float) for k in raw_phases}
    edges: List[EdgeData] = []
    for i, raw in enumerate(doc.get("edges", [])):
        _reject_unknown(raw, {"id", "from", "to", "length", "potential"}, "edge")
        eid = str(raw.get("id", f"e{i}"))
        length = _field(raw, "length", float)
        edges.append(
            EdgeData.make(
                eid,
                _field(raw, "from", str),
                _field(raw, "to", str),
                length,
                _parse_potential(raw.get("potential", 0.0), length),
                magnetic.pop(eid, 0.0),
            )
        )
    if magnetic:
        raise GraphValidationError("dangling endpoint", f"magnetic phases for {sorted(magnetic)}")

    graph = build_graph(vertices, edges)
    norm = _table(doc.get("normalize", {}), "normalize")
    if norm:
        _reject_unknown(norm, {"parallel", "points"}, "normalize")
        if norm.get("parallel") and kind is CouplingKind.DELTA_PRIME_S:
            # a free delta'-s midpoint vertex changes the spectrum
            raise GraphValidationError("parallel splitting needs delta coupling", kind.value)
        points = []
        for p in norm.get("points", []):
            _reject_unknown(p, {"edge", "x", "strength"}, "point interaction")
            points.append(
                (_field(p, "edge", str), _field(p, "x", float), _field(p, "strength", float))
            )
        graph = normalize(graph, [str(e) for e in norm.get("parallel", [])], points)
    return graph, kind


def graph_to_document(g: Graph, kind: CouplingKind) -> Dict[str, Any]:
    """Inverse of :func:`graph_from_document` (normalization already applied)."""
    vertices: List[Dict[str, Any]] = []
    for v in g.vertices.values():
        if v.boundary:
            vertices.append({"id": v.id, "kind": "boundary", "omega": v.omega})
        else:
            vertices.append({"id": v.id, "kind": "interior", "constant": v.constant})
    edges: List[Dict[str, Any]] = []
    for e in g.edges:
        pot: Any
        if len(e.potential.values) == 1:
            pot = e.potential.values[0]
        else:
            pot = {"breakpoints": list(e.potential.breakpoints), "values": list(e.potential.values)}
        edges.append({"id": e.id, "from": e.source, "to": e.target, "length": e.length, "potential": pot})
    doc: Dict[str, Any] = {"coupling": kind.value, "vertices": vertices, "edges": edges}
    if g.has_phases:
        doc["magnetic"] = {e.id: e.phase for e in g.edges if e.phase != 0.0}
    return doc


def _parse_potential(raw: Any, length: float) -> PotentialSpec:
    if isinstance(raw, (int, float)):
        value = float(raw)
        return PotentialSpec.zero(length) if value == 0.0 else PotentialSpec.constant(length, value)
    if isinstance(raw, Mapping):
        _reject_unknown(raw, {"breakpoints", "values"}, "potential")
        try:
            breakpoints = [float(b) for b in _field(raw, "breakpoints", list)]
            values = [float(v) for v in _field(raw, "values", list)]
        except (TypeError, ValueError):
            raise GraphValidationError("invalid value", f"potential: {raw!r}") from None
        return PotentialSpec.piecewise(breakpoints, values)
    raise GraphValidationError("invalid potential", f"{raw!r}")


def _reject_unknown(raw: Any, allowed: set, what: str) -> None:
    unknown = set(_table(raw, what)) - allowed
    if unknown:
        raise GraphValidationError("unknown keys", f"{what}: {sorted(unknown)}")


def _table(raw: Any, what: str) -> Mapping[str, Any]:
    if not isinstance(raw, Mapping):
        raise GraphValidationError("invalid value", f"{what} must be a table, got {raw!r}")
    return raw


def _field(
    raw: Mapping[str, Any], key: str, cast: Callable[[Any], Any], default: Any = None
) -> Any:
    """Read ``raw[key]`` through ``cast``; a missing or malformed value names the key."""
    if key not in raw:
        if default is None:
            raise GraphValidationError("missing key", key)
        return default
    value = raw[key]
    if cast is float and isinstance(value, bool):
        raise GraphValidationError("invalid value", f"{key} = {value!r}")
    if cast is list:
        if not isinstance(value, (list, tuple)):
            raise GraphValidationError("invalid value", f"{key} = {value!r}")
        return list(value)
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise GraphValidationError("invalid value", f"{key} = {value!r}") from None
