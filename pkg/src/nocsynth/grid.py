"""Chip-grid topology representation, baseline generators, and path metrics.

Switches sit on a t x t coordinate grid (adjacent rows/columns are one
length unit apart, physically 0.1 mm).  A topology is an undirected graph
whose link lengths equal the Manhattan distance of their endpoints.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path


@dataclass(frozen=True)
class Coord:
    row: int
    col: int


def manhattan(a: Coord, b: Coord) -> int:
    return abs(a.row - b.row) + abs(a.col - b.col)


class DisconnectedError(ValueError):
    """Raised when an operation requires connectivity and a pair is unreachable."""


class Topology:
    """Undirected switch graph on a t x t grid.

    Node ids are arbitrary (the file format stores explicit coordinates);
    link lengths always equal the endpoint Manhattan distance.
    """

    def __init__(self, t: int):
        if t < 1:
            raise ValueError(f"grid side must be >= 1, got {t}")
        self.t = t
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.adj: list[list[tuple[int, int]]] = []  # node -> [(nbr, length)]
        self.links: dict[tuple[int, int], int] = {}  # (min,max) -> length

    # -- construction -----------------------------------------------------

    def add_node(self, row: int, col: int) -> int:
        if not (0 <= row < self.t and 0 <= col < self.t):
            raise ValueError(f"coordinate ({row},{col}) outside {self.t}x{self.t} grid")
        self.rows.append(row)
        self.cols.append(col)
        self.adj.append([])
        return len(self.rows) - 1

    def add_link(self, u: int, v: int) -> int:
        if u == v:
            raise ValueError("self-loops are not allowed")
        key = (u, v) if u < v else (v, u)
        if key in self.links:
            raise ValueError(f"duplicate link {key}")
        length = abs(self.rows[u] - self.rows[v]) + abs(self.cols[u] - self.cols[v])
        self.links[key] = length
        self.adj[u].append((v, length))
        self.adj[v].append((u, length))
        return length

    # -- basic queries ----------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def link_count(self) -> int:
        return len(self.links)

    def coord(self, u: int) -> Coord:
        return Coord(self.rows[u], self.cols[u])

    def grid_rank(self, u: int) -> int:
        """Row-major rank of a node's coordinate; used for coordinate tie-breaks."""
        return self.rows[u] * self.t + self.cols[u]

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adj], dtype=np.int64)

    def has_link(self, u: int, v: int) -> bool:
        key = (u, v) if u < v else (v, u)
        return key in self.links

    def total_wire_length(self) -> int:
        return sum(self.links.values())

    def max_link_length(self) -> int:
        return max(self.links.values()) if self.links else 0

    def sorted_links(self) -> list[tuple[int, int, int]]:
        return [(u, v, w) for (u, v), w in sorted(self.links.items())]

    def adjacency_matrix(self, weights: str = "unit") -> csr_matrix:
        """Sparse symmetric adjacency; weights 'unit' (1 per link) or 'length'."""
        m = self.link_count
        rows = np.empty(2 * m, dtype=np.int64)
        cols = np.empty(2 * m, dtype=np.int64)
        data = np.empty(2 * m, dtype=np.float64)
        for i, ((u, v), w) in enumerate(sorted(self.links.items())):
            rows[2 * i], cols[2 * i] = u, v
            rows[2 * i + 1], cols[2 * i + 1] = v, u
            data[2 * i] = data[2 * i + 1] = 1.0 if weights == "unit" else float(w)
        return csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def is_connected(self) -> bool:
        if self.n == 0:
            return False
        seen = [False] * self.n
        stack = [0]
        seen[0] = True
        count = 1
        while stack:
            u = stack.pop()
            for v, _ in self.adj[u]:
                if not seen[v]:
                    seen[v] = True
                    count += 1
                    stack.append(v)
        return count == self.n

    # -- file format -------------------------------------------------------
    # header "t n", one "id row col" line per node, one "u v length" line per link

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"{self.t} {self.n}\n")
            for i in range(self.n):
                fh.write(f"{i} {self.rows[i]} {self.cols[i]}\n")
            for u, v, w in self.sorted_links():
                fh.write(f"{u} {v} {w}\n")

    @classmethod
    def load(cls, path) -> "Topology":
        with open(path) as fh:
            lines = fh.read().splitlines()
        try:
            t, n = map(int, lines[0].split())
        except (IndexError, ValueError) as exc:
            raise ValueError(f"{path}:1: malformed header (want 't n')") from exc
        topo = cls(t)
        coords = {}
        for lineno in range(1, 1 + n):
            try:
                i, r, c = map(int, lines[lineno].split())
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno + 1}: malformed node line") from exc
            coords[i] = (r, c)
        for i in range(n):
            if i not in coords:
                raise ValueError(f"{path}: node ids must be 0..{n - 1}, missing {i}")
            topo.add_node(*coords[i])
        for lineno in range(1 + n, len(lines)):
            if not lines[lineno].strip():
                continue
            try:
                u, v, w = map(int, lines[lineno].split())
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno + 1}: malformed link line") from exc
            got = topo.add_link(u, v)
            if got != w:
                raise ValueError(
                    f"{path}:{lineno + 1}: link ({u},{v}) length {w} != Manhattan {got}"
                )
        return topo


# -- baseline generators ---------------------------------------------------


def build_mesh(t: int) -> Topology:
    """4-neighbor grid: 2*t*(t-1) unit-length links."""
    if t < 2:
        raise ValueError(f"mesh needs t >= 2, got {t}")
    topo = Topology(t)
    for r in range(t):
        for c in range(t):
            topo.add_node(r, c)
    for r in range(t):
        for c in range(t):
            u = r * t + c
            if c + 1 < t:
                topo.add_link(u, u + 1)
            if r + 1 < t:
                topo.add_link(u, u + t)
    return topo


def build_torus(t: int) -> Topology:
    """Mesh plus 2t wraparound links of length t-1 each; 2*t*t links total."""
    if t < 3:
        raise ValueError(f"torus needs t >= 3, got {t}")
    topo = build_mesh(t)
    for r in range(t):
        topo.add_link(r * t, r * t + (t - 1))
    for c in range(t):
        topo.add_link(c, (t - 1) * t + c)
    return topo


# -- shortest-path machinery ------------------------------------------------


def all_pairs_min_hop(topo: Topology) -> np.ndarray:
    """Min-hop table H (BFS distances); raises DisconnectedError on unreachable pairs."""
    h = shortest_path(topo.adjacency_matrix("unit"), method="D", unweighted=True)
    bad = np.isinf(h)
    if bad.any():
        u, v = map(int, np.argwhere(bad)[0])
        raise DisconnectedError(f"nodes {u} and {v} are unreachable")
    return h.astype(np.int32)


def hop_and_length_tables(topo: Topology) -> tuple[np.ndarray, np.ndarray]:
    """(H, L): min hops, and min total link length among min-hop paths.

    Lexicographic (hops, length) shortest paths via a combined weight
    K*1 + length with K larger than any possible path length, so the hop
    term always dominates.  Exact in float64 for the sizes we target.
    """
    k_dom = topo.n * max(topo.max_link_length(), 1) + 1
    m = topo.link_count
    rows = np.empty(2 * m, dtype=np.int64)
    cols = np.empty(2 * m, dtype=np.int64)
    data = np.empty(2 * m, dtype=np.float64)
    for i, ((u, v), w) in enumerate(sorted(topo.links.items())):
        rows[2 * i], cols[2 * i] = u, v
        rows[2 * i + 1], cols[2 * i + 1] = v, u
        data[2 * i] = data[2 * i + 1] = float(k_dom + w)
    g = csr_matrix((data, (rows, cols)), shape=(topo.n, topo.n))
    w_tab = shortest_path(g, method="D")
    if np.isinf(w_tab).any():
        bad = np.argwhere(np.isinf(w_tab))[0]
        raise DisconnectedError(f"nodes {int(bad[0])} and {int(bad[1])} are unreachable")
    h_tab = shortest_path(topo.adjacency_matrix("unit"), method="D", unweighted=True)
    l_tab = w_tab - k_dom * h_tab  # exact: both terms are integers below 2^53
    return h_tab.astype(np.int32), l_tab.astype(np.int64)


def min_hop_path_length(topo: Topology, u: int, v: int) -> int:
    """Min total link length over all min-hop u-v paths (hop count dominates)."""
    k_dom = topo.n * max(topo.max_link_length(), 1) + 1
    dist = {u: 0}
    heap = [(0, u)]
    while heap:
        d, x = heapq.heappop(heap)
        if x == v:
            return int(d % k_dom)
        if d > dist.get(x, float("inf")):
            continue
        for y, w in topo.adj[x]:
            nd = d + k_dom + w
            if nd < dist.get(y, float("inf")):
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    raise DisconnectedError(f"nodes {u} and {v} are unreachable")


def rough_comm_cost(
    topo: Topology, tables: tuple[np.ndarray, np.ndarray] | None = None
) -> float:
    """Sum of L[u,v]*H[u,v] over ordered distinct node pairs."""
    h, l = tables if tables is not None else hop_and_length_tables(topo)
    return float((h.astype(np.float64) * l).sum())


# -- summary metrics ---------------------------------------------------------

# Reported #WL and C follow the conventional normalizations used for these
# tables: wire length in units of 5 grid spacings (0.5 mm at 0.1 mm pitch)
# and cost scaled by 1e-4 over unordered pairs.
WL_REPORT_UNIT = 5.0
COST_REPORT_SCALE = 2.0e4


@dataclass
class TopologyMetrics:
    avg_hop: float
    link_count: int
    total_wire_length: int  # grid units
    rough_comm_cost: float  # ordered-pair sum, unscaled

    @property
    def wire_length_report(self) -> float:
        return self.total_wire_length / WL_REPORT_UNIT

    @property
    def comm_cost_report(self) -> float:
        return self.rough_comm_cost / COST_REPORT_SCALE


def metrics(
    topo: Topology, tables: tuple[np.ndarray, np.ndarray] | None = None
) -> TopologyMetrics:
    if tables is None:
        tables = hop_and_length_tables(topo)
    h, l = tables
    n = topo.n
    avg_hop = float(h.sum()) / (n * (n - 1)) if n > 1 else 0.0
    return TopologyMetrics(
        avg_hop=avg_hop,
        link_count=topo.link_count,
        total_wire_length=topo.total_wire_length(),
        rough_comm_cost=float((h.astype(np.float64) * l).sum()),
    )


def mesh_avg_hop_closed_form(t: int) -> float:
    """Distinct-pair mean Manhattan distance on a t x t grid."""
    n = t * t
    per_dim = (t * t - 1) / (3 * t)
    return 2 * per_dim * n / (n - 1)


def torus_avg_hop_closed_form(t: int) -> float:
    """Distinct-pair mean wraparound distance on a t x t torus."""
    n = t * t
    half = t // 2
    if t % 2 == 0:
        total = 2 * sum(range(1, half)) + half  # per fixed source, one dim
    else:
        total = 2 * sum(range(1, half + 1))
    per_dim = total / t
    return 2 * per_dim * n / (n - 1)
