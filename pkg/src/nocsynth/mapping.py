"""Application task graphs and their mapping onto cores.

Mapping runs in three steps: spare tasks pad the graph to the core count,
a size-exact k-way assignment sends heavily-communicating tasks to the
same community (greedy seeding + boundary swaps, then simulated-annealing
refinement of a hub-aware cost), and a greedy placement pins each task to
a concrete core.  Costs combine switch-stage latency (r per hop) and wire
distance, with a penalty factor on cross-community demand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .community import CommunityPartition, HubSet
from .grid import Topology


class TaskGraph:
    """Directed task flows with positive demands (MB/s)."""

    def __init__(self, n_tasks: int):
        if n_tasks < 0:
            raise ValueError("task count must be nonnegative")
        self.n_tasks = n_tasks
        self.flows: dict[tuple[int, int], float] = {}
        self._nbrs: list[list[tuple[int, float]]] | None = None

    def add_flow(self, u: int, v: int, demand: float) -> None:
        if not (0 <= u < self.n_tasks and 0 <= v < self.n_tasks):
            raise ValueError(f"flow ({u},{v}) references unknown task")
        if u == v:
            raise ValueError("self-flows are not allowed")
        if demand <= 0:
            raise ValueError("flow demand must be positive")
        key = (u, v)
        self.flows[key] = self.flows.get(key, 0.0) + demand
        self._nbrs = None

    @property
    def flow_count(self) -> int:
        return len(self.flows)

    def neighbors(self) -> list[list[tuple[int, float]]]:
        """Undirected per-task view: partner -> summed demand both ways."""
        if self._nbrs is None:
            acc: list[dict[int, float]] = [dict() for _ in range(self.n_tasks)]
            for (u, v), d in self.flows.items():
                acc[u][v] = acc[u].get(v, 0.0) + d
                acc[v][u] = acc[v].get(u, 0.0) + d
            self._nbrs = [sorted(a.items()) for a in acc]
        return self._nbrs

    def total_demands(self) -> np.ndarray:
        tot = np.zeros(self.n_tasks)
        for (u, v), d in self.flows.items():
            tot[u] += d
            tot[v] += d
        return tot

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"{self.n_tasks}\n")
            for (u, v), d in sorted(self.flows.items()):
                fh.write(f"{u} {v} {d:g}\n")

    @classmethod
    def load(cls, path) -> "TaskGraph":
        with open(path) as fh:
            lines = fh.read().splitlines()
        try:
            n = int(lines[0])
        except (IndexError, ValueError) as exc:
            raise ValueError(f"{path}:1: malformed task-count header") from exc
        tg = cls(n)
        for lineno, line in enumerate(lines[1:], 2):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split()
            try:
                u, v, d = int(parts[0]), int(parts[1]), float(parts[2])
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed flow line") from exc
            tg.add_flow(u, v, d)
        return tg


def pad_spares(tg: TaskGraph, n: int) -> TaskGraph:
    """Extend to n tasks with traffic-less spares."""
    if tg.n_tasks > n:
        raise ValueError(f"{tg.n_tasks} tasks exceed {n} cores")
    out = TaskGraph(n)
    for (u, v), d in tg.flows.items():
        out.add_flow(u, v, d)
    return out


@dataclass
class MappingCostParams:
    r: int = 4            # switch pipeline stages charged per hop
    phi: float = 2.0      # cross-community penalty, > 1
    t0_factor: float = 0.05
    cooling: float = 0.995
    moves_per_temp_factor: int = 200  # proposals per temperature = factor * n_m
    stall_temps: int = 50
    max_temps: int = 600
    seed: int = 0

    def __post_init__(self):
        if self.phi <= 1:
            raise ValueError("phi must be > 1")
        if self.r < 1:
            raise ValueError("r must be >= 1")


class MappingContext:
    """Precomputed cost tables shared by assignment scoring and placement.

    a[x]: r*h + d averaged over core pairs inside community x.
    b[x, y]: r*h + d averaged over hub pairs of communities x, y.
    hub_h/hub_d[core, x]: averages from one core to the hubs of community x.
    """

    def __init__(self, topo: Topology, partition: CommunityPartition,
                 hubs: HubSet, params: MappingCostParams, hop: np.ndarray):
        self.topo = topo
        self.partition = partition
        self.hubs = hubs
        self.params = params
        self.hop = hop
        n = topo.n
        rows = np.asarray(topo.rows)
        cols = np.asarray(topo.cols)
        self.ranks = rows * topo.t + cols
        k = partition.n_m
        r = params.r

        self.a = np.zeros(k)
        for x, members in enumerate(partition.communities):
            if len(members) < 2:
                continue
            sub_h = hop[np.ix_(members, members)].astype(np.float64)
            dr = np.abs(rows[members][:, None] - rows[members][None, :])
            dc = np.abs(cols[members][:, None] - cols[members][None, :])
            pairs = len(members) * (len(members) - 1)
            self.a[x] = (r * sub_h.sum() + (dr + dc).sum()) / pairs

        self.b = np.zeros((k, k))
        hub_ids = [np.array(hubs.by_comm[x], dtype=np.int64) for x in range(k)]
        for x in range(k):
            for y in range(x + 1, k):
                hx, hy = hub_ids[x], hub_ids[y]
                sub_h = hop[np.ix_(hx, hy)].astype(np.float64)
                dr = np.abs(rows[hx][:, None] - rows[hy][None, :])
                dc = np.abs(cols[hx][:, None] - cols[hy][None, :])
                val = (r * sub_h.sum() + (dr + dc).sum()) / (len(hx) * len(hy))
                self.b[x, y] = self.b[y, x] = val

        self.hub_h = np.zeros((n, k))
        self.hub_d = np.zeros((n, k))
        for x in range(k):
            hx = hub_ids[x]
            self.hub_h[:, x] = hop[:, hx].mean(axis=1)
            dr = np.abs(rows[:, None] - rows[hx][None, :])
            dc = np.abs(cols[:, None] - cols[hx][None, :])
            self.hub_d[:, x] = (dr + dc).mean(axis=1)

    def pair_cost(self, x: int, y: int) -> float:
        if x == y:
            return float(self.a[x])
        return self.params.phi * float(self.b[x, y])


def build_context(topo: Topology, partition: CommunityPartition, hubs: HubSet,
                  params: MappingCostParams, hop: np.ndarray) -> MappingContext:
    return MappingContext(topo, partition, hubs, params, hop)


def _demand_matrix(assign: np.ndarray, tg: TaskGraph, k: int) -> np.ndarray:
    """cr[x, y]: demand between communities (diagonal = intra, off-diag symmetric)."""
    cr = np.zeros((k, k))
    for (u, v), d in tg.flows.items():
        x, y = int(assign[u]), int(assign[v])
        if x == y:
            cr[x, x] += d
        else:
            cr[x, y] += d
            cr[y, x] += d
    return cr


def assignment_cost(assign: np.ndarray, tg: TaskGraph, ctx: MappingContext) -> float:
    """Hub-aware communication cost of a task-to-community assignment."""
    k = ctx.partition.n_m
    cr = _demand_matrix(assign, tg, k)
    intra = float(ctx.a @ np.diag(cr))
    cross = 0.0
    for x in range(k):
        for y in range(x + 1, k):
            if cr[x, y]:
                cross += ctx.b[x, y] * cr[x, y]
    return intra + ctx.params.phi * cross


def initial_assignment(tg: TaskGraph, partition: CommunityPartition) -> np.ndarray:
    """Size-exact k-way assignment minimizing cut demand: greedy region
    growing seeded by the heaviest tasks, then boundary swap passes."""
    import heapq

    sizes = [len(c) for c in partition.communities]
    if sum(sizes) != tg.n_tasks:
        raise ValueError(
            f"community sizes sum to {sum(sizes)} but task graph has {tg.n_tasks} tasks"
        )
    nbrs = tg.neighbors()
    totals = tg.total_demands()
    assign = np.full(tg.n_tasks, -1, dtype=np.int64)
    unassigned = set(range(tg.n_tasks))
    by_weight = sorted(range(tg.n_tasks), key=lambda u: (-totals[u], u))

    order = sorted(range(len(sizes)), key=lambda x: (-sizes[x], x))
    for x in order:
        quota = sizes[x]
        gain: dict[int, float] = {}
        heap: list[tuple[float, float, int]] = []
        wi = 0
        while quota > 0:
            pick = -1
            while heap:
                g, tot, u = heap[0]
                if u not in unassigned or -g != gain.get(u, 0.0):
                    heapq.heappop(heap)
                    continue
                pick = u
                heapq.heappop(heap)
                break
            if pick < 0:
                while by_weight[wi] not in unassigned:
                    wi += 1
                pick = by_weight[wi]
            assign[pick] = x
            unassigned.discard(pick)
            quota -= 1
            for v, d in nbrs[pick]:
                if v in unassigned:
                    gain[v] = gain.get(v, 0.0) + d
                    heapq.heappush(heap, (-gain[v], -totals[v], v))

    # boundary refinement: swap endpoints of heavy cut flows while it helps
    def cut_delta(u: int, v: int) -> float:
        xu, xv = int(assign[u]), int(assign[v])
        delta = 0.0
        for w, d in nbrs[u]:
            if w == v:
                continue
            xw = int(assign[w])
            delta += d * (int(xw != xv) - int(xw != xu))
        for w, d in nbrs[v]:
            if w == u:
                continue
            xw = int(assign[w])
            delta += d * (int(xw != xu) - int(xw != xv))
        return delta

    cross = sorted(
        ((d, u, v) for (u, v), d in tg.flows.items()), key=lambda t: (-t[0], t[1], t[2])
    )
    for _ in range(10):
        improved = False
        for d, u, v in cross:
            if assign[u] == assign[v]:
                continue
            if cut_delta(u, v) < -1e-12:
                assign[u], assign[v] = assign[v], assign[u]
                improved = True
        if not improved:
            break
    return assign


def sa_refine(assign: np.ndarray, tg: TaskGraph, ctx: MappingContext
              ) -> tuple[np.ndarray, float]:
    """Simulated annealing over cross-community task swaps.

    Size-exactness is preserved by construction; the returned assignment is
    the best ever seen, so the cost never exceeds the input's.
    """
    p = ctx.params
    k = ctx.partition.n_m
    assign = assign.copy()
    nbrs = tg.neighbors()
    cost = assignment_cost(assign, tg, ctx)
    best_cost = cost
    best = assign.copy()
    if k < 2 or cost == 0:
        return best, best_cost

    rng = np.random.default_rng(p.seed)
    temp = p.t0_factor * cost
    moves_per_temp = p.moves_per_temp_factor * k
    stall = 0

    def swap_delta(u: int, v: int) -> float:
        xu, xv = int(assign[u]), int(assign[v])
        delta = 0.0
        for w, d in nbrs[u]:
            if w == v:
                continue
            xw = int(assign[w])
            delta += d * (ctx.pair_cost(xv, xw) - ctx.pair_cost(xu, xw))
        for w, d in nbrs[v]:
            if w == u:
                continue
            xw = int(assign[w])
            delta += d * (ctx.pair_cost(xu, xw) - ctx.pair_cost(xv, xw))
        return delta

    for _ in range(p.max_temps):
        improved_this_temp = False
        for _ in range(moves_per_temp):
            u = int(rng.integers(tg.n_tasks))
            v = int(rng.integers(tg.n_tasks))
            tries = 0
            while assign[v] == assign[u] and tries < 64:
                v = int(rng.integers(tg.n_tasks))
                tries += 1
            if assign[v] == assign[u]:
                continue
            delta = swap_delta(u, v)
            if delta <= 0 or rng.random() < math.exp(-delta / max(temp, 1e-300)):
                assign[u], assign[v] = assign[v], assign[u]
                cost += delta
                if cost < best_cost - 1e-9:
                    best_cost = cost
                    best = assign.copy()
                    improved_this_temp = True
        temp *= p.cooling
        stall = 0 if improved_this_temp else stall + 1
        if stall >= p.stall_temps:
            break
    # guard against float drift in the incrementally tracked cost
    best_cost = assignment_cost(best, tg, ctx)
    return best, best_cost


@dataclass
class Placement:
    task_to_core: np.ndarray
    core_to_task: np.ndarray

    def save(self, path) -> None:
        with open(path, "w") as fh:
            for task, core in enumerate(self.task_to_core):
                fh.write(f"{task} {int(core)}\n")

    @classmethod
    def load(cls, path, n_cores: int) -> "Placement":
        t2c = np.full(n_cores, -1, dtype=np.int64)
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    task, core = map(int, line.split())
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: malformed placement line") from exc
                t2c[task] = core
        c2t = np.full(n_cores, -1, dtype=np.int64)
        for task, core in enumerate(t2c):
            if core >= 0:
                c2t[core] = task
        return cls(task_to_core=t2c, core_to_task=c2t)


def detailed_place(assign: np.ndarray, tg: TaskGraph, ctx: MappingContext) -> Placement:
    """Greedy one-by-one placement inside the assigned communities.

    The heaviest task seeds the largest-degree hub of its community; then
    the task most connected to already-placed tasks goes to the free core
    of its community with the least cost, where unplaced partners are
    charged at the hub averages of their community.
    """
    topo = ctx.topo
    r = ctx.params.r
    hop = ctx.hop
    rows = np.asarray(topo.rows)
    cols = np.asarray(topo.cols)
    nbrs = tg.neighbors()
    totals = tg.total_demands()
    n = topo.n

    free: list[list[int]] = [sorted(map(int, c)) for c in ctx.partition.communities]
    free_mask = np.ones(n, dtype=bool)
    task_to_core = np.full(tg.n_tasks, -1, dtype=np.int64)
    core_to_task = np.full(n, -1, dtype=np.int64)
    placed = np.zeros(tg.n_tasks, dtype=bool)
    conn = np.zeros(tg.n_tasks)

    real = [u for u in range(tg.n_tasks) if totals[u] > 0]

    def occupy(task: int, core: int) -> None:
        task_to_core[task] = core
        core_to_task[core] = task
        placed[task] = True
        free_mask[core] = False
        for w, d in nbrs[task]:
            conn[w] += d

    if real:
        seed = min(real, key=lambda u: (-totals[u], u))
        x = int(assign[seed])
        hub = ctx.hubs.by_comm[x][0]  # hub lists are sorted by degree desc
        occupy(seed, hub)

        remaining = set(real) - {seed}
        while remaining:
            u = min(remaining, key=lambda w: (-conn[w], -totals[w], w))
            remaining.discard(u)
            x = int(assign[u])
            cand = np.array([c for c in free[x] if free_mask[c]], dtype=np.int64)
            if cand.size == 0:
                raise RuntimeError(f"community {x} has no free core left")
            cost = np.zeros(cand.size)
            for v, d in nbrs[u]:
                if placed[v]:
                    b = int(task_to_core[v])
                    dist = np.abs(rows[cand] - rows[b]) + np.abs(cols[cand] - cols[b])
                    cost += (r * hop[cand, b] + dist) * d
                else:
                    xv = int(assign[v])
                    cost += (r * ctx.hub_h[cand, xv] + ctx.hub_d[cand, xv]) * d
            best = np.lexsort((ctx.ranks[cand], cost))[0]
            occupy(u, int(cand[best]))

    # spares and traffic-less tasks fill leftover cores of their community
    for u in range(tg.n_tasks):
        if placed[u]:
            continue
        x = int(assign[u])
        core = next(c for c in free[x] if free_mask[c])
        occupy(u, core)

    return Placement(task_to_core=task_to_core, core_to_task=core_to_task)


def core_comm_graph(placement: Placement, tg: TaskGraph) -> dict[tuple[int, int], float]:
    """Flow demands between cores; parallel task flows between the same core
    pair are merged (one commodity per core pair)."""
    out: dict[tuple[int, int], float] = {}
    for (u, v), d in sorted(tg.flows.items()):
        if d <= 0:
            continue
        key = (int(placement.task_to_core[u]), int(placement.task_to_core[v]))
        out[key] = out.get(key, 0.0) + d
    return out
