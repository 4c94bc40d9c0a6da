"""Simple undirected graphs and edge-weighted graphs.

Vertices are dense integers 0..n-1.  Edges are stored canonically as
(min, max) tuples so that weight maps and file round-trips are bit-exact.
All values are immutable after construction; derived views are cached.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import InputError, ParseError

# Absolute slack for threshold comparisons on weights (e.g. against 1 - alpha).
# Iterative subtraction in the dense pipeline accumulates rounding at this scale.
WEIGHT_SLACK = 1e-12


@dataclass(frozen=True)
class Graph:
    """An undirected simple graph on vertices 0..n-1.

    Attributes
    ----------
    n : int
        Vertex count.
    edges : tuple of (int, int)
        Canonical (u, v) with u < v, sorted lexicographically.
    adj : tuple of tuple of int
        Per-vertex sorted neighbor lists, consistent with `edges`.
    """

    n: int
    edges: tuple = ()
    adj: tuple = ()
    edge_set: frozenset = field(default_factory=frozenset, repr=False, compare=False)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return False
        return ((u, v) if u < v else (v, u)) in self.edge_set


def from_edge_list(n: int, pairs: Iterable[Sequence[int]]) -> Graph:
    """Build a Graph from (u, v) pairs, deduplicating undirected edges.

    Raises InputError on out-of-range vertices or self-loops.
    """
    if n < 0:
        raise InputError(f"negative vertex count {n}")
    seen = set()
    for u, v in pairs:
        if not (0 <= u < n and 0 <= v < n):
            raise InputError(f"vertex out of range in edge ({u},{v}) for n={n}")
        if u == v:
            raise InputError(f"self-loop at vertex {u}")
        seen.add((u, v) if u < v else (v, u))
    edges = tuple(sorted(seen))
    nbr = [[] for _ in range(n)]
    for u, v in edges:
        nbr[u].append(v)
        nbr[v].append(u)
    adj = tuple(tuple(sorted(a)) for a in nbr)
    return Graph(n=n, edges=edges, adj=adj, edge_set=frozenset(edges))


@dataclass(frozen=True)
class RegularityInfo:
    is_regular: bool
    d: int | None
    min_deg: int
    max_deg: int


def regularity(g: Graph) -> RegularityInfo:
    """Report the common degree, or the min/max degrees when not regular."""
    if g.n == 0:
        return RegularityInfo(True, 0, 0, 0)
    degs = [len(a) for a in g.adj]
    lo, hi = min(degs), max(degs)
    if lo == hi:
        return RegularityInfo(True, lo, lo, hi)
    return RegularityInfo(False, None, lo, hi)


def edge_key(u: int, v: int) -> tuple:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class WeightedGraph:
    """A Graph plus an edge-weight map w: E -> [0,1].

    Every edge of `base` must carry a weight; weights slightly outside [0,1]
    (beyond WEIGHT_SLACK) are rejected.
    """

    base: Graph
    w: Mapping = field(default_factory=dict)

    def __post_init__(self):
        missing = [e for e in self.base.edges if e not in self.w]
        if missing:
            raise InputError(f"missing weight for edge {missing[0]}")
        for e, x in self.w.items():
            if e not in self.base.edge_set:
                raise InputError(f"weight given for non-edge {e}")
            if not (-WEIGHT_SLACK <= x <= 1 + WEIGHT_SLACK):
                raise InputError(f"weight {x} outside [0,1] on edge {e}")

    @property
    def n(self) -> int:
        return self.base.n

    def weight(self, u: int, v: int) -> float:
        return self.w[edge_key(u, v)]


def uniform_weights(g: Graph, value: float = 1.0) -> WeightedGraph:
    """Give every edge the same weight (w == 1 starts both extraction engines)."""
    return WeightedGraph(g, {e: float(value) for e in g.edges})


def weighted_degree(wg: WeightedGraph, v: int) -> float:
    """deg_w(v) = sum of w(uv) over neighbors u of v."""
    if not (0 <= v < wg.n):
        raise InputError(f"vertex {v} out of range")
    return sum(wg.w[edge_key(u, v)] for u in wg.base.adj[v])


def rich_subgraph(wg: WeightedGraph, alpha: float) -> Graph:
    """Spanning subgraph of the edges with w(uv) >= 1 - alpha.

    The comparison carries WEIGHT_SLACK of absolute slack so that weights
    produced by repeated subtraction still count as rich.
    """
    if not (0 <= alpha <= 1):
        raise InputError(f"alpha {alpha} outside [0,1]")
    thr = 1.0 - alpha - WEIGHT_SLACK
    keep = [e for e in wg.base.edges if wg.w[e] >= thr]
    return from_edge_list(wg.n, keep)


def graph_difference(g: Graph, g2: Graph) -> Graph:
    """Graph on V(g) with edge set E(g) \\ E(g2)."""
    if g.n != g2.n:
        raise InputError(f"vertex count mismatch: {g.n} vs {g2.n}")
    return from_edge_list(g.n, [e for e in g.edges if e not in g2.edge_set])


def induced_subgraph(g: Graph, U: Iterable[int]) -> tuple:
    """G[U] with vertices relabeled 0..|U|-1.

    Returns (subgraph, vertices) where vertices[i] is the original label of
    new vertex i (sorted ascending).
    """
    verts = sorted(set(U))
    for v in verts:
        if not (0 <= v < g.n):
            raise InputError(f"vertex {v} not in graph")
    pos = {v: i for i, v in enumerate(verts)}
    edges = [(pos[u], pos[v]) for (u, v) in g.edges if u in pos and v in pos]
    return from_edge_list(len(verts), edges), tuple(verts)


def induced_weighted(wg: WeightedGraph, U: Iterable[int]) -> tuple:
    """(G[U], w restricted to E(G[U])), with the same relabeling as induced_subgraph."""
    sub, verts = induced_subgraph(wg.base, U)
    w = {(a, b): wg.w[edge_key(verts[a], verts[b])] for (a, b) in sub.edges}
    return WeightedGraph(sub, w), verts


def count_rich_edges_at(wg: WeightedGraph, v: int, alpha: float) -> int:
    """Number of alpha-rich edges incident to v."""
    thr = 1.0 - alpha - WEIGHT_SLACK
    return sum(1 for u in wg.base.adj[v] if wg.w[edge_key(u, v)] >= thr)


# ---------------------------------------------------------------------------
# Text format: "n m" header, then one "u v" line per edge with 0 <= u < v < n.
# Weighted variant appends the weight: "u v w".
# ---------------------------------------------------------------------------


def _parse_header(line: str, line_no: int) -> tuple:
    parts = line.split()
    if len(parts) != 2:
        raise ParseError(line_no, f"expected 'n m' header, got {line!r}")
    try:
        n, m = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError(line_no, f"non-integer header field in {line!r}") from None
    if n < 0 or m < 0:
        raise ParseError(line_no, f"negative header value in {line!r}")
    return n, m


def _edge_lines(text: str):
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line:
            yield i, line


def parse_graph(text: str) -> Graph:
    """Parse the plain text format; malformed lines raise ParseError with line numbers."""
    lines = list(_edge_lines(text))
    if not lines:
        raise ParseError(1, "empty input, expected 'n m' header")
    (hdr_no, hdr), rest = lines[0], lines[1:]
    n, m = _parse_header(hdr, hdr_no)
    if len(rest) != m:
        raise ParseError(hdr_no, f"header declares {m} edges, found {len(rest)} edge lines")
    pairs = []
    for line_no, line in rest:
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(line_no, f"expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(line_no, f"non-integer vertex in {line!r}") from None
        if not (0 <= u < v < n):
            raise ParseError(line_no, f"edge ({u},{v}) violates 0 <= u < v < n={n}")
        pairs.append((u, v))
    g = from_edge_list(n, pairs)
    if g.m != m:
        raise ParseError(hdr_no, f"duplicate edges: {m} declared, {g.m} distinct")
    return g


def write_graph(g: Graph) -> str:
    out = [f"{g.n} {g.m}"]
    out.extend(f"{u} {v}" for u, v in g.edges)
    return "\n".join(out) + "\n"


def parse_weighted_graph(text: str) -> WeightedGraph:
    """Parse the weighted variant ('u v w' lines, w a decimal in [0,1])."""
    lines = list(_edge_lines(text))
    if not lines:
        raise ParseError(1, "empty input, expected 'n m' header")
    (hdr_no, hdr), rest = lines[0], lines[1:]
    n, m = _parse_header(hdr, hdr_no)
    if len(rest) != m:
        raise ParseError(hdr_no, f"header declares {m} edges, found {len(rest)} edge lines")
    pairs, weights = [], {}
    for line_no, line in rest:
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(line_no, f"expected 'u v w', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
            x = float(parts[2])
        except ValueError:
            raise ParseError(line_no, f"malformed edge line {line!r}") from None
        if not (0 <= u < v < n):
            raise ParseError(line_no, f"edge ({u},{v}) violates 0 <= u < v < n={n}")
        if not (0 <= x <= 1):
            raise ParseError(line_no, f"weight {x} outside [0,1]")
        pairs.append((u, v))
        weights[(u, v)] = x
    g = from_edge_list(n, pairs)
    if g.m != m:
        raise ParseError(hdr_no, f"duplicate edges: {m} declared, {g.m} distinct")
    return WeightedGraph(g, weights)


def write_weighted_graph(wg: WeightedGraph) -> str:
    out = [f"{wg.n} {wg.base.m}"]
    out.extend(f"{u} {v} {wg.w[(u, v)]!r}" for u, v in wg.base.edges)
    return "\n".join(out) + "\n"
