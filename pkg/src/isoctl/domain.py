"""One-dimensional domains, compact metric graphs and their grids.

Every domain exposes the same edge/vertex view: a circle is a single loop
at a Kirchhoff vertex and an interval is one edge between two boundary
vertices.  Loops appear twice in their vertex's incidence list (once per
end), so the Kirchhoff sum of outgoing derivatives reduces to
``f'(0) - f'(L)`` for a loop without special casing.
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import (
    DanglingIncidence,
    DirichletAtInternalVertex,
    DisconnectedGraph,
    GridTooCoarse,
    UnknownDomain,
    ValidationError,
)

TWO_PI = 2.0 * math.pi

START = "start"
END = "end"


class BoundaryKind(enum.Enum):
    DIRICHLET = "dirichlet"
    KIRCHHOFF = "kirchhoff"

    @classmethod
    def parse(cls, text):
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower()
        aliases = {
            "d": cls.DIRICHLET,
            "dirichlet": cls.DIRICHLET,
            "n": cls.KIRCHHOFF,
            "neumann": cls.KIRCHHOFF,
            "kirchhoff": cls.KIRCHHOFF,
            "neumann-kirchhoff": cls.KIRCHHOFF,
        }
        if key not in aliases:
            raise UnknownDomain(f"unknown boundary condition {text!r}")
        return aliases[key]


def pi_multiple(length, max_den=1000, tol=1e-12):
    """Return ``Fraction(q)`` with ``length == q*pi`` if one exists, else None."""
    q = Fraction(length / math.pi).limit_denominator(max_den)
    if abs(float(q) * math.pi - length) <= tol * max(1.0, abs(length)):
        return q
    return None


_LENGTH_RE = re.compile(r"^\s*([0-9./+-]*)\s*\*?\s*pi\s*$", re.IGNORECASE)


def parse_length(value):
    """Accept a number or strings like ``"2pi"``, ``"2*pi"``, ``"pi/2"``."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip().lower().replace("π", "pi")
    m = re.match(r"^\s*pi\s*/\s*([0-9.]+)\s*$", text)
    if m:
        return math.pi / float(m.group(1))
    m = _LENGTH_RE.match(text)
    if m:
        coeff = m.group(1)
        return float(Fraction(coeff) if coeff not in ("", "+") else 1) * math.pi
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"cannot parse length {value!r}") from None


@dataclass(frozen=True)
class Edge:
    id: int
    length: float
    start: int
    end: int

    @property
    def is_loop(self):
        return self.start == self.end

    @property
    def length_over_pi(self):
        return pi_multiple(self.length)


@dataclass(frozen=True)
class Vertex:
    id: int
    incident: tuple  # of (edge id, START | END)
    condition: BoundaryKind = BoundaryKind.KIRCHHOFF

    @property
    def degree(self):
        return len(self.incident)


class MetricDomain:
    """Common interface of :class:`Circle`, :class:`Interval` and :class:`Graph`."""

    kind = "abstract"
    edges: tuple
    vertices: tuple

    @property
    def total_length(self):
        return sum(e.length for e in self.edges)

    @property
    def n_edges(self):
        return len(self.edges)

    def edge(self, j):
        return self.edges[j]

    def vertex(self, v):
        return self.vertices[v]

    def vertex_of(self, edge_id, marker):
        e = self.edges[edge_id]
        return e.start if marker == START else e.end

    @property
    def periodic(self):
        return False

    def describe(self):
        raise NotImplementedError


def _check_length(length):
    if not (length > 0 and math.isfinite(length)):
        raise ValidationError(f"lengths must be positive, got {length!r}")


@dataclass(frozen=True)
class Circle(MetricDomain):
    length: float = TWO_PI
    kind = "circle"

    def __post_init__(self):
        _check_length(self.length)

    @property
    def edges(self):
        return (Edge(0, self.length, 0, 0),)

    @property
    def vertices(self):
        return (Vertex(0, ((0, START), (0, END))),)

    @property
    def periodic(self):
        return True

    def describe(self):
        return f"circle:{self.length!r}"


@dataclass(frozen=True)
class Interval(MetricDomain):
    length: float = 1.0
    bc_left: BoundaryKind = BoundaryKind.DIRICHLET
    bc_right: BoundaryKind = BoundaryKind.DIRICHLET
    kind = "interval"

    def __post_init__(self):
        _check_length(self.length)
        object.__setattr__(self, "bc_left", BoundaryKind.parse(self.bc_left))
        object.__setattr__(self, "bc_right", BoundaryKind.parse(self.bc_right))

    @property
    def edges(self):
        return (Edge(0, self.length, 0, 1),)

    @property
    def vertices(self):
        return (
            Vertex(0, ((0, START),), self.bc_left),
            Vertex(1, ((0, END),), self.bc_right),
        )

    def describe(self):
        return f"interval:{self.length!r}:{self.bc_left.value}:{self.bc_right.value}"


@dataclass(frozen=True)
class Graph(MetricDomain):
    edges: tuple
    vertices: tuple
    name: str = field(default="graph", compare=False)
    kind = "graph"

    def describe(self):
        return self.name

    def to_json(self):
        return {
            "edges": [
                {"id": e.id, "length": e.length, "from": e.start, "to": e.end}
                for e in self.edges
            ],
            "vertices": [{"id": v.id, "bc": v.condition.value} for v in self.vertices],
        }


def _as_edge(item):
    if isinstance(item, Edge):
        return item
    if isinstance(item, dict):
        try:
            return Edge(
                int(item["id"]), parse_length(item["length"]), int(item["from"]), int(item["to"])
            )
        except KeyError as exc:
            raise ValidationError(f"edge entry missing field {exc}") from None
    eid, length, a, b = item
    return Edge(int(eid), parse_length(length), int(a), int(b))


def build_graph(edges, vertices, name="graph"):
    """Validate an edge/vertex description and return a :class:`Graph`.

    ``vertices`` entries may be ``Vertex`` objects, dicts ``{"id", "bc"}`` or
    ``(id, bc)`` pairs.  Incidence lists are derived from the edges; when a
    vertex supplies one explicitly it must agree with the derived list.
    """
    edges = [_as_edge(e) for e in edges]
    if not edges:
        raise ValidationError("a graph needs at least one edge")
    ids = [e.id for e in edges]
    if sorted(ids) != list(range(len(edges))):
        raise ValidationError("edge ids must be 0..N-1")
    edges.sort(key=lambda e: e.id)
    for e in edges:
        _check_length(e.length)

    specs = {}
    for item in vertices:
        if isinstance(item, Vertex):
            vid, bc, inc = item.id, item.condition, item.incident
        elif isinstance(item, dict):
            vid, bc, inc = int(item["id"]), item.get("bc", "kirchhoff"), item.get("incident")
        else:
            vid, bc = item
            inc = None
        if vid in specs:
            raise ValidationError(f"duplicate vertex id {vid}")
        specs[vid] = (BoundaryKind.parse(bc), inc)
    if sorted(specs) != list(range(len(specs))):
        raise ValidationError("vertex ids must be 0..M-1")

    incidence = {vid: [] for vid in specs}
    for e in edges:
        for vid, marker in ((e.start, START), (e.end, END)):
            if vid not in incidence:
                raise DanglingIncidence(f"edge {e.id} refers to unknown vertex {vid}")
            incidence[vid].append((e.id, marker))

    out = []
    for vid in sorted(specs):
        bc, given = specs[vid]
        inc = tuple(incidence[vid])
        if not inc:
            raise DanglingIncidence(f"vertex {vid} has no incident edge")
        if given is not None:
            norm = sorted((int(a), str(b)) for a, b in given)
            if norm != sorted(inc):
                raise DanglingIncidence(f"vertex {vid}: incidence list disagrees with edges")
        internal = len(inc) > 1 or edges[inc[0][0]].is_loop
        if bc is BoundaryKind.DIRICHLET and internal:
            raise DirichletAtInternalVertex(f"vertex {vid} is internal but marked Dirichlet")
        out.append(Vertex(vid, inc, bc))

    # connectivity over vertices
    adj = {vid: set() for vid in specs}
    for e in edges:
        adj[e.start].add(e.end)
        adj[e.end].add(e.start)
    seen, stack = {0}, [0]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if len(seen) != len(specs):
        raise DisconnectedGraph(f"graph has {len(specs) - len(seen)} unreachable vertices")
    return Graph(tuple(edges), tuple(out), name)


def eight_graph(length=TWO_PI):
    return build_graph(
        [(0, length, 0, 0), (1, length, 0, 0)], [(0, "kirchhoff")], name="eight"
    )


def three_branch_graph(length=TWO_PI):
    return build_graph(
        [(j, length, 0, 1) for j in range(3)],
        [(0, "kirchhoff"), (1, "kirchhoff")],
        name="three-branch",
    )


def load_graph(path):
    data = json.loads(Path(path).read_text())
    return build_graph(data["edges"], data["vertices"], name=Path(path).stem)


def parse_domain(text):
    """Resolve a CLI domain spec: ``eight``, ``three-branch``, ``circle:L``,
    ``interval:L:bc:bc`` or a path to a graph JSON file."""
    text = str(text).strip()
    if text == "eight":
        return eight_graph()
    if text in ("three-branch", "three_branch", "threebranch"):
        return three_branch_graph()
    if text == "circle":
        return Circle()
    if text.startswith("circle:"):
        return Circle(parse_length(text.split(":", 1)[1]))
    if text.startswith("interval:"):
        parts = text.split(":")
        length = parse_length(parts[1])
        left = parts[2] if len(parts) > 2 else "dirichlet"
        right = parts[3] if len(parts) > 3 else left
        return Interval(length, BoundaryKind.parse(left), BoundaryKind.parse(right))
    if text.endswith(".json") and Path(text).exists():
        return load_graph(text)
    raise UnknownDomain(f"unknown domain {text!r}")


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform nodes per edge.

    Edge blocks include both endpoints, so a vertex value is stored once per
    incident edge end.  The circle is the exception: its single block is
    periodic and omits the node at ``x = L``.
    """

    domain: MetricDomain
    blocks: tuple  # per-edge coordinate arrays

    @property
    def periodic(self):
        return self.domain.periodic

    @property
    def counts(self):
        return tuple(len(b) for b in self.blocks)

    @property
    def size(self):
        return sum(self.counts)

    @property
    def offsets(self):
        return np.concatenate([[0], np.cumsum(self.counts)]).astype(int)

    def spacing(self, j=0):
        b = self.blocks[j]
        return self.domain.edges[j].length / (len(b) if self.periodic else len(b) - 1)

    @property
    def x(self):
        return np.concatenate(self.blocks)

    @property
    def edge_index(self):
        return np.concatenate([np.full(len(b), j) for j, b in enumerate(self.blocks)])

    @property
    def weights(self):
        """Trapezoidal quadrature weights, edge by edge."""
        out = []
        for j, b in enumerate(self.blocks):
            h = self.spacing(j)
            w = np.full(len(b), h)
            if not self.periodic:
                w[0] = w[-1] = h / 2
            out.append(w)
        return np.concatenate(out)

    def split(self, values):
        off = self.offsets
        return [values[off[j] : off[j + 1]] for j in range(len(self.blocks))]

    def same_as(self, other):
        return self is other or (
            self.domain == other.domain
            and self.counts == other.counts
            and all(np.array_equal(a, b) for a, b in zip(self.blocks, other.blocks))
        )

    def end_index(self, edge_id, marker):
        """Sample index of an edge end (circle: both ends map to node 0)."""
        off = self.offsets
        if self.periodic:
            return 0
        return off[edge_id] if marker == START else off[edge_id + 1] - 1

    def dofs(self):
        return DofMap.build(self)


def discretize(domain, n_per_unit_length=None, nodes_per_edge=None):
    """Build a uniform grid.  Give either a density (nodes per unit length,
    at least 8) or an explicit node count per edge (at least 3)."""
    if (n_per_unit_length is None) == (nodes_per_edge is None):
        raise ValidationError("give exactly one of n_per_unit_length, nodes_per_edge")
    blocks = []
    for e in domain.edges:
        if n_per_unit_length is not None:
            if n_per_unit_length < 8:
                raise GridTooCoarse(f"need at least 8 nodes per unit length, got {n_per_unit_length}")
            n = int(round(n_per_unit_length * e.length))
        else:
            n = int(nodes_per_edge[e.id] if np.ndim(nodes_per_edge) else nodes_per_edge)
        if n < 3:
            raise GridTooCoarse(f"edge {e.id} would get only {n} nodes")
        if domain.periodic:
            blocks.append(np.arange(n) * (e.length / n))
        else:
            blocks.append(np.linspace(0.0, e.length, n))
    return Grid(domain, tuple(blocks))


@dataclass(frozen=True, eq=False)
class DofMap:
    """Map between grid samples and the unknowns of the discrete operator.

    Unknowns are the interior nodes of each edge plus one value per
    non-Dirichlet vertex; ``sample_to_dof[i] == -1`` marks a sample pinned
    to zero by a Dirichlet vertex.  ``mass`` holds the quadrature weight of
    each unknown, so the weighted Euclidean product on unknowns equals the
    trapezoidal L2 product on conforming samples.
    """

    grid: Grid
    sample_to_dof: np.ndarray
    mass: np.ndarray
    vertex_dof: dict

    @classmethod
    def build(cls, grid):
        dom = grid.domain
        n = grid.size
        s2d = np.full(n, -1, dtype=int)
        if grid.periodic:
            s2d[:] = np.arange(n)
            return cls(grid, s2d, grid.weights.copy(), {0: 0})
        vdof = {}
        count = 0
        for v in dom.vertices:
            if v.condition is BoundaryKind.KIRCHHOFF:
                vdof[v.id] = count
                count += 1
        off = grid.offsets
        mass = list(np.zeros(count))
        for e in dom.edges:
            lo, hi = off[e.id], off[e.id + 1]
            h = grid.spacing(e.id)
            for vid, idx in ((e.start, lo), (e.end, hi - 1)):
                if vid in vdof:
                    s2d[idx] = vdof[vid]
                    mass[vdof[vid]] += h / 2
            m = hi - lo - 2
            s2d[lo + 1 : hi - 1] = np.arange(count, count + m)
            mass.extend([h] * m)
            count += m
        return cls(grid, s2d, np.asarray(mass), vdof)

    @property
    def n(self):
        return len(self.mass)

    def scatter(self, u):
        """Unknowns -> samples (vertex values copied to each incident end)."""
        out = np.zeros(self.grid.size, dtype=np.result_type(u, float))
        mask = self.sample_to_dof >= 0
        out[mask] = u[self.sample_to_dof[mask]]
        return out

    def gather(self, samples):
        """Samples -> unknowns; vertex values averaged over incident ends."""
        mask = self.sample_to_dof >= 0
        idx = self.sample_to_dof[mask]
        acc = np.zeros(self.n, dtype=np.result_type(samples, float))
        np.add.at(acc, idx, samples[mask])
        cnt = np.bincount(idx, minlength=self.n)
        return acc / cnt
