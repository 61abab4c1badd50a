"""Size-capped Louvain community detection and hub classification.

Edges are weighted by the inverse link length, so spatially tight groups
count as dense.  A community merge or move that would push a community
above the size cap is ruled out at every level.  Hubs are the high-degree
nodes of each community whose links stay mostly inside it (low
participation index); a community with no qualifying node falls back to
its three highest-degree nodes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Topology


@dataclass
class CommunityPartition:
    assign: np.ndarray            # node -> community id (0..n_m-1)
    communities: list[np.ndarray]  # community id -> sorted node ids
    q: float
    td: int

    @property
    def n_m(self) -> int:
        return len(self.communities)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            for u, c in enumerate(self.assign):
                fh.write(f"{u} {int(c)}\n")

    @classmethod
    def load(cls, path, topo: Topology, td: int = 0) -> "CommunityPartition":
        assign = np.zeros(topo.n, dtype=np.int64)
        seen = 0
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    u, c = map(int, line.split())
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: malformed partition line") from exc
                assign[u] = c
                seen += 1
        if seen != topo.n:
            raise ValueError(f"{path}: expected {topo.n} node lines, got {seen}")
        part = _partition_from_assign(topo, assign, td)
        return part


def _weighted_adjacency(topo: Topology) -> tuple[list[list[tuple[int, float]]], np.ndarray]:
    nbrs = [[(v, 1.0 / w) for v, w in a] for a in topo.adj]
    strength = np.array([sum(w for _, w in a) for a in nbrs])
    return nbrs, strength


def _partition_from_assign(topo: Topology, raw: np.ndarray, td: int) -> CommunityPartition:
    # renumber communities contiguously, ordered by smallest member id
    order = {}
    for u in range(len(raw)):
        c = int(raw[u])
        if c not in order:
            order[c] = len(order)
    assign = np.array([order[int(c)] for c in raw], dtype=np.int64)
    comms = [np.flatnonzero(assign == c) for c in range(len(order))]
    return CommunityPartition(assign=assign, communities=comms,
                              q=modularity(topo, assign), td=td)


def modularity(topo: Topology, assign: np.ndarray) -> float:
    """Standard weighted modularity of a node->community assignment
    (weights 1/length)."""
    w2 = 0.0
    intra2 = 0.0
    strength = np.zeros(topo.n)
    for (u, v), length in topo.links.items():
        w = 1.0 / length
        strength[u] += w
        strength[v] += w
        if assign[u] == assign[v]:
            intra2 += 2 * w
    w2 = float(strength.sum())
    if w2 == 0:
        return 0.0
    tot = np.zeros(int(assign.max()) + 1)
    np.add.at(tot, assign, strength)
    return intra2 / w2 - float((tot / w2) @ (tot / w2))


def _local_move(nbrs, strength, sizes, td, w2) -> tuple[list[int], bool]:
    """One Louvain level: sweep nodes in ascending id until no move improves
    modularity; moves that would exceed the size cap are ruled out."""
    n = len(nbrs)
    comm = list(range(n))
    csize = sizes[:]
    ctot = [strength[i] for i in range(n)]
    improved = False
    while True:
        moves = 0
        for i in range(n):
            c0 = comm[i]
            ki = strength[i]
            csize[c0] -= sizes[i]
            ctot[c0] -= ki
            acc: dict[int, float] = {}
            for j, w in nbrs[i]:
                if j != i:
                    cj = comm[j]
                    acc[cj] = acc.get(cj, 0.0) + w
            best_c = c0
            best_g = acc.get(c0, 0.0) - ctot[c0] * ki / w2
            for c in sorted(acc):
                if c == c0 or csize[c] + sizes[i] > td:
                    continue
                g = acc[c] - ctot[c] * ki / w2
                if g > best_g + 1e-12:
                    best_g = g
                    best_c = c
            comm[i] = best_c
            csize[best_c] += sizes[i]
            ctot[best_c] += ki
            if best_c != c0:
                moves += 1
        if moves == 0:
            break
        improved = True
    return comm, improved


def detect_communities(topo: Topology, td: int = 150) -> CommunityPartition:
    """Louvain on the inverse-length-weighted graph with a community size cap."""
    if td < 1:
        raise ValueError("size cap must be >= 1")
    nbrs, strength = _weighted_adjacency(topo)
    nbrs = [list(a) for a in nbrs]
    selfw = [0.0] * topo.n
    sizes = [1] * topo.n
    w2 = float(strength.sum())
    if w2 == 0:
        return _partition_from_assign(topo, np.arange(topo.n), td)
    node_to_super = list(range(topo.n))

    while True:
        str_full = [strength[i] + 2 * selfw[i] for i in range(len(nbrs))]
        comm, improved = _local_move(nbrs, str_full, sizes, td, w2)
        if not improved:
            break
        # aggregate communities into supernodes
        labels = sorted(set(comm))
        remap = {c: i for i, c in enumerate(labels)}
        comm = [remap[c] for c in comm]
        k = len(labels)
        new_sizes = [0] * k
        new_selfw = [0.0] * k
        agg: list[dict[int, float]] = [dict() for _ in range(k)]
        for i, c in enumerate(comm):
            new_sizes[c] += sizes[i]
            new_selfw[c] += selfw[i]
        for i in range(len(nbrs)):
            ci = comm[i]
            for j, w in nbrs[i]:
                cj = comm[j]
                if ci == cj:
                    if i < j:
                        new_selfw[ci] += w
                else:
                    agg[ci][cj] = agg[ci].get(cj, 0.0) + w
        node_to_super = [comm[s] for s in node_to_super]
        if k == len(nbrs):
            break
        nbrs = [sorted(d.items()) for d in agg]
        strength = np.array([sum(w for _, w in a) for a in nbrs])
        selfw = new_selfw
        sizes = new_sizes

    raw = np.array(node_to_super, dtype=np.int64)
    part = _partition_from_assign(topo, raw, td)
    assert all(len(c) <= td for c in part.communities)
    return part


# -- hubs ---------------------------------------------------------------------


@dataclass
class HubSet:
    by_comm: dict[int, list[int]]
    participation: np.ndarray
    degrees: np.ndarray

    def save(self, path) -> None:
        with open(path, "w") as fh:
            for c in sorted(self.by_comm):
                ids = " ".join(str(u) for u in self.by_comm[c])
                fh.write(f"{c} {ids}\n")

    @classmethod
    def load(cls, path) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                parts = line.split()
                if not parts:
                    continue
                try:
                    out[int(parts[0])] = [int(x) for x in parts[1:]]
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: malformed hub line") from exc
        return out


def participation_index(topo: Topology, assign: np.ndarray, u: int) -> float:
    """1 - sum over communities of (edge share into that community)^2."""
    deg = len(topo.adj[u])
    if deg == 0:
        raise ValueError(f"node {u} is isolated")
    acc: dict[int, int] = {}
    for v, _ in topo.adj[u]:
        c = int(assign[v])
        acc[c] = acc.get(c, 0) + 1
    return 1.0 - sum((k / deg) ** 2 for k in acc.values())


P_HUB_MAX = 0.3  # provincial-hub participation threshold


def classify_hubs(topo: Topology, partition: CommunityPartition) -> HubSet:
    """Per community: nodes with participation < 0.3 and degree at least one
    standard deviation above the network mean; fall back to the community's
    three highest-degree nodes when none qualifies."""
    deg = topo.degrees()
    thresh = float(deg.mean() + deg.std())
    part = np.array([participation_index(topo, partition.assign, u) for u in range(topo.n)])
    by_comm: dict[int, list[int]] = {}
    for c, members in enumerate(partition.communities):
        def key(u):
            return (-int(deg[u]), topo.grid_rank(u), u)
        qual = [u for u in members if part[u] < P_HUB_MAX and deg[u] >= thresh]
        if qual:
            by_comm[c] = sorted((int(u) for u in qual), key=key)
        else:
            top = sorted((int(u) for u in members), key=key)
            by_comm[c] = top[: min(3, len(top))]
    return HubSet(by_comm=by_comm, participation=part, degrees=deg)
