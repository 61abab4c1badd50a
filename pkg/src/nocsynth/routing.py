"""Deadlock-free deterministic route computation.

A preprocessing pass prohibits a subset of turns so the channel
dependency graph is acyclic (wormhole deadlock freedom) while keeping
every node pair reachable.  Route computation is then a Lagrangian
relaxation of the unsplittable multicommodity-flow problem: per-flow
least-cost path searches on a (node, incoming-link) state space that
cannot expand prohibited turns, with subgradient updates of the link
bandwidth and per-flow hop-cap multipliers.

An exhaustive oracle for tiny instances and a solution validator live
here too; both are test machinery but ship with the package.
"""
from __future__ import annotations

import heapq
import itertools
import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .grid import Topology
from .power import PowerParams, per_bit_energies

log = logging.getLogger(__name__)


# -- turn prohibition ---------------------------------------------------------


@dataclass
class TurnSet:
    prohibited: set[tuple[int, int, int]]  # (a, b, c) with a < c, pivoting at b
    turn_universe: int

    def is_prohibited(self, a: int, b: int, c: int) -> bool:
        return ((a, b, c) if a < c else (c, b, a)) in self.prohibited

    @property
    def ratio(self) -> float:
        return len(self.prohibited) / self.turn_universe if self.turn_universe else 0.0

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"{self.turn_universe}\n")
            for a, b, c in sorted(self.prohibited):
                fh.write(f"{a} {b} {c}\n")


def _articulation_points(adj: dict[int, set[int]]) -> set[int]:
    """Iterative DFS articulation points of a connected graph."""
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    parent: dict[int, int] = {}
    arts: set[int] = set()
    timer = 0
    root = min(adj)
    stack = [(root, iter(sorted(adj[root])))]
    disc[root] = low[root] = timer
    timer += 1
    root_children = 0
    while stack:
        u, it = stack[-1]
        advanced = False
        for v in it:
            if v not in disc:
                parent[v] = u
                if u == root:
                    root_children += 1
                disc[v] = low[v] = timer
                timer += 1
                stack.append((v, iter(sorted(adj[v]))))
                advanced = True
                break
            elif v != parent.get(u):
                low[u] = min(low[u], disc[v])
        if not advanced:
            stack.pop()
            p = parent.get(u)
            if p is not None:
                low[p] = min(low[p], low[u])
                if p != root and low[u] >= disc[p]:
                    arts.add(p)
    if root_children > 1:
        arts.add(root)
    return arts


def turn_prohibition(topo: Topology) -> TurnSet:
    """Greedy node elimination: repeatedly delete a minimum-degree non-cut
    node, prohibiting every turn that pivots on it among its still-alive
    neighbors.  Any dependency cycle would need a turn around its
    first-deleted pivot, so the permitted channel dependency graph is
    acyclic; deleted nodes stay reachable because their own links never
    pivot on them.
    """
    if not topo.is_connected():
        raise ValueError("turn prohibition requires a connected topology")
    adj: dict[int, set[int]] = {u: {v for v, _ in a} for u, a in enumerate(topo.adj)}
    universe = sum(len(a) * (len(a) - 1) // 2 for a in adj.values())
    prohibited: set[tuple[int, int, int]] = set()

    while len(adj) > 1:
        if len(adj) - 1 == sum(len(s) for s in adj.values()) // 2:
            break  # remaining graph is a tree: no cycles left to break
        arts = _articulation_points(adj) if len(adj) > 2 else set()
        pick = min((u for u in adj if u not in arts), key=lambda u: (len(adj[u]), u))
        nbrs = sorted(adj[pick])
        for i in range(len(nbrs)):
            for j in range(i + 1, len(nbrs)):
                prohibited.add((nbrs[i], pick, nbrs[j]))
        for v in nbrs:
            adj[v].discard(pick)
        del adj[pick]

    ts = TurnSet(prohibited=prohibited, turn_universe=universe)
    if ts.ratio > 1 / 3:
        log.warning("prohibited turn ratio %.3f exceeds 1/3", ts.ratio)
    return ts


# -- directed-link state space ------------------------------------------------


class LinkSpace:
    """Directed-link view of a topology restricted to permitted turns.

    State i is a directed link; succ[i] lists the directed links reachable
    without using a prohibited turn or a U-turn.
    """

    def __init__(self, topo: Topology, turnset: TurnSet,
                 power_params: PowerParams | None = None):
        self.topo = topo
        pp = power_params or PowerParams()
        links = topo.sorted_links()
        m = len(links)
        self.n_states = 2 * m
        self.head = np.empty(2 * m, dtype=np.int64)
        self.tail = np.empty(2 * m, dtype=np.int64)
        self.length = np.empty(2 * m, dtype=np.int64)
        self.dl_of: dict[tuple[int, int], int] = {}
        for i, (u, v, w) in enumerate(links):
            self.tail[2 * i], self.head[2 * i] = u, v
            self.tail[2 * i + 1], self.head[2 * i + 1] = v, u
            self.length[2 * i] = self.length[2 * i + 1] = w
            self.dl_of[(u, v)] = 2 * i
            self.dl_of[(v, u)] = 2 * i + 1
        deg = topo.degrees()
        self.energy = np.array([
            sum(per_bit_energies(int(deg[self.head[dl]]) + 1, int(self.length[dl]), pp))
            for dl in range(2 * m)
        ])
        self.out_dls: list[list[int]] = [[] for _ in range(topo.n)]
        for dl in range(2 * m):
            self.out_dls[int(self.tail[dl])].append(dl)
        for lst in self.out_dls:
            lst.sort()
        self.succ: list[list[int]] = []
        for dl in range(2 * m):
            u, v = int(self.tail[dl]), int(self.head[dl])
            nxt = [
                self.dl_of[(v, w)]
                for w, _ in topo.adj[v]
                if w != u and not turnset.is_prohibited(u, v, w)
            ]
            self.succ.append(sorted(nxt))

    def path_nodes(self, dls: list[int]) -> tuple[int, ...]:
        nodes = [int(self.tail[dls[0]])]
        nodes.extend(int(self.head[dl]) for dl in dls)
        return tuple(nodes)


def cdg_is_acyclic(space: LinkSpace, used_turns: set[tuple[int, int]] | None = None) -> bool:
    """Cycle check on the channel dependency graph.  used_turns, when given,
    restricts the edges to (dl_in, dl_out) pairs actually exercised."""
    n = space.n_states
    color = bytearray(n)  # 0 white, 1 gray, 2 black
    for start in range(n):
        if color[start]:
            continue
        stack: list[tuple[int, int]] = [(start, 0)]
        color[start] = 1
        while stack:
            node, idx = stack[-1]
            succ = space.succ[node]
            found = False
            while idx < len(succ):
                nxt = succ[idx]
                idx += 1
                if used_turns is not None and (node, nxt) not in used_turns:
                    continue
                if color[nxt] == 1:
                    return False
                if color[nxt] == 0:
                    stack[-1] = (node, idx)
                    stack.append((nxt, 0))
                    color[nxt] = 1
                    found = True
                    break
            if not found:
                color[node] = 2
                stack.pop()
    return True


def reachable_under_turns(space: LinkSpace, src: int) -> np.ndarray:
    """Nodes reachable from src along permitted turns."""
    seen_state = np.zeros(space.n_states, dtype=bool)
    seen_node = np.zeros(space.topo.n, dtype=bool)
    seen_node[src] = True
    dq = deque()
    for dl in space.out_dls[src]:
        seen_state[dl] = True
        seen_node[space.head[dl]] = True
        dq.append(dl)
    while dq:
        dl = dq.popleft()
        for nxt in space.succ[dl]:
            if not seen_state[nxt]:
                seen_state[nxt] = True
                seen_node[space.head[nxt]] = True
                dq.append(nxt)
    return seen_node


# -- min-hop legal routing tables ---------------------------------------------


class RouteForest:
    """Per-source BFS trees over the permitted-turn state space; yields a
    deterministic minimum-hop legal path for every reachable pair."""

    def __init__(self, space: LinkSpace):
        self.space = space
        self._trees: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def ensure_source(self, src: int) -> None:
        if src in self._trees:
            return
        space = self.space
        parent = np.full(space.n_states, -2, dtype=np.int32)  # -2 unvisited
        best = np.full(space.topo.n, -1, dtype=np.int32)
        dq = deque()
        for dl in space.out_dls[src]:
            parent[dl] = -1
            if best[space.head[dl]] < 0:
                best[space.head[dl]] = dl
            dq.append(dl)
        while dq:
            dl = dq.popleft()
            for nxt in space.succ[dl]:
                if parent[nxt] == -2:
                    parent[nxt] = dl
                    h = space.head[nxt]
                    if best[h] < 0:
                        best[h] = nxt
                    dq.append(nxt)
        self._trees[src] = (parent, best)

    def path(self, src: int, dst: int) -> tuple[int, ...]:
        if src == dst:
            return (src,)
        self.ensure_source(src)
        parent, best = self._trees[src]
        dl = int(best[dst])
        if dl < 0:
            raise ValueError(f"no permitted path from {src} to {dst}")
        rev = []
        while dl != -1:
            rev.append(dl)
            dl = int(parent[dl])
        return self.space.path_nodes(rev[::-1])

    def hops(self, src: int, dst: int) -> int:
        return len(self.path(src, dst)) - 1


# -- multicommodity routing ---------------------------------------------------


def flow_link_cost(demand: float, link_energy: float, mu_link: float,
                   mu_flow: float, xi: float) -> float:
    """Lagrangian edge cost of sending one flow across one directed link."""
    return link_energy * demand + xi + mu_link * demand + mu_flow


@dataclass
class RoutingProblem:
    topo: Topology
    flows: list[tuple[int, int, float]]  # (src core, dst core, demand MB/s)
    hop_cap: int = 12
    link_cap: float = 4000.0
    xi: float | None = None
    power_params: PowerParams = field(default_factory=PowerParams)

    def __post_init__(self):
        if self.link_cap <= 0:
            raise ValueError("link capacity must be positive")
        for s, d, cr in self.flows:
            if s == d:
                raise ValueError(f"flow ({s},{d}) has equal endpoints")
            if cr <= 0:
                raise ValueError("flow demand must be positive")

    def resolved_xi(self, space: LinkSpace) -> float:
        """Default hop penalty: median per-hop energy at the mean demand, so
        the hop and energy objective terms have comparable magnitude."""
        if self.xi is not None:
            return self.xi
        if not self.flows:
            return 1.0
        mean_demand = sum(cr for _, _, cr in self.flows) / len(self.flows)
        med = float(np.median(space.energy))
        return med * mean_demand if med > 0 else 1.0


@dataclass
class RoutingSolution:
    paths: list[tuple[int, ...]]
    hop_ok: np.ndarray
    bw_ok: np.ndarray
    link_load: dict[tuple[int, int], float]
    mu_link: np.ndarray
    mu_flow: np.ndarray
    objective: float
    dual_best: float
    iterations: int
    structurally_infeasible: list[int]

    @property
    def success_pct(self) -> float:
        if len(self.paths) == 0:
            return 100.0
        ok = np.logical_and(self.hop_ok, self.bw_ok)
        return 100.0 * float(ok.sum()) / len(self.paths)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            for i, p in enumerate(self.paths):
                feas = 1 if (self.hop_ok[i] and self.bw_ok[i]) else 0
                nodes = " ".join(str(x) for x in p)
                fh.write(f"{p[0]} {p[-1]} {len(p) - 1} {nodes} feasible:{feas}\n")


def load_routing_table(path) -> dict[tuple[int, int], tuple[tuple[int, ...], bool]]:
    out: dict[tuple[int, int], tuple[tuple[int, ...], bool]] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            try:
                src, dst, hops = int(parts[0]), int(parts[1]), int(parts[2])
                nodes = tuple(int(x) for x in parts[3 : 3 + hops + 1])
                feas = parts[3 + hops + 1]
                assert feas in ("feasible:0", "feasible:1")
            except (ValueError, IndexError, AssertionError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed routing-table line") from exc
            out[(src, dst)] = (nodes, feas == "feasible:1")
    return out


def _dijkstra(space: LinkSpace, src: int, dst: int, cost: np.ndarray) -> list[int] | None:
    """Least-cost dst search over the directed-link states; returns the
    directed-link sequence, or None when unreachable."""
    dist = np.full(space.n_states, np.inf)
    parent = np.full(space.n_states, -1, dtype=np.int32)
    settled = np.zeros(space.n_states, dtype=bool)
    heap: list[tuple[float, int]] = []
    for dl in space.out_dls[src]:
        dist[dl] = cost[dl]
        heapq.heappush(heap, (float(cost[dl]), dl))
    while heap:
        d, dl = heapq.heappop(heap)
        if settled[dl]:
            continue
        settled[dl] = True
        if space.head[dl] == dst:
            rev = []
            cur = dl
            while cur != -1:
                rev.append(cur)
                cur = int(parent[cur])
            return rev[::-1]
        for nxt in space.succ[dl]:
            nd = d + cost[nxt]
            if nd < dist[nxt]:
                dist[nxt] = nd
                parent[nxt] = dl
                heapq.heappush(heap, (nd, nxt))
    return None


def _repair_pass(space: LinkSpace, problem: RoutingProblem, xi: float,
                 demands: np.ndarray, paths_dl: list[list[int]]
                 ) -> list[list[int]]:
    """Greedy primal repair: re-route flows crossing overloaded links, one at
    a time against residual loads, heavily penalizing links that would stay
    over capacity.  Feeds the incumbent only; the dual update never sees it."""
    cap = problem.link_cap
    load = np.zeros(space.n_states)
    for fi, p in enumerate(paths_dl):
        for dl in p:
            load[dl] += demands[fi]
    if not (load > cap + 1e-9).any():
        return paths_dl
    penalty = 1e6 * (float(space.energy.max()) * float(demands.max()) + xi + 1.0)
    out = [list(p) for p in paths_dl]
    order = sorted(
        (fi for fi in range(len(out)) if any(load[dl] > cap + 1e-9 for dl in out[fi])),
        key=lambda fi: (-demands[fi], fi),
    )
    for fi in order:
        src, dst, cr = problem.flows[fi]
        for dl in out[fi]:
            load[dl] -= cr
        cost = space.energy * cr + xi + penalty * (load + cr > cap + 1e-9)
        sol = _dijkstra(space, src, dst, cost)
        if sol is not None:
            out[fi] = sol
        for dl in out[fi]:
            load[dl] += cr
    return out


def lagrangian_route(problem: RoutingProblem, turnset: TurnSet,
                     max_iter: int = 500, stall_limit: int = 50,
                     theta0: float | None = None) -> RoutingSolution:
    """Subgradient-driven multicommodity routing under hop and bandwidth caps.

    Keeps the best incumbent by (success fraction, then objective); flows
    are re-priced lazily: a flow is re-searched only when a multiplier it
    could care about changed.  Each iteration's subproblem solution also
    seeds a greedy congestion repair whose result competes for the
    incumbent, which resolves symmetric-tie oscillation on shared links.
    """
    topo = problem.topo
    space = LinkSpace(topo, turnset, problem.power_params)
    flows = problem.flows
    nf = len(flows)
    xi = problem.resolved_xi(space)
    demands = np.array([cr for _, _, cr in flows])
    if theta0 is None:
        theta0 = 1.0 / float(demands.max()) if nf else 1.0

    mu = np.zeros(space.n_states)
    mu_f = np.zeros(nf)
    paths_dl: list[list[int]] = [[] for _ in range(nf)]
    last_routed = np.full(nf, -1, dtype=np.int64)
    link_last_up = np.full(space.n_states, -1, dtype=np.int64)
    last_down_iter = -1

    best_paths: list[list[int]] | None = None
    best_key: tuple[float, float] | None = None
    best_hop_ok = best_bw_ok = None
    best_load = None
    dual_best = -np.inf
    stall = 0
    it_done = 0

    def evaluate(cand: list[list[int]]):
        load = np.zeros(space.n_states)
        for fi in range(nf):
            for dl in cand[fi]:
                load[dl] += demands[fi]
        hops = np.array([len(p) for p in cand], dtype=np.int64)
        hop_ok = hops <= problem.hop_cap
        overloaded = load > problem.link_cap + 1e-9
        bw_ok = np.array(
            [not any(overloaded[dl] for dl in cand[fi]) for fi in range(nf)],
            dtype=bool,
        )
        objective = float(sum(
            demands[fi] * float(space.energy[dl]) + xi
            for fi in range(nf) for dl in cand[fi]
        ))
        key = (-float(np.logical_and(hop_ok, bw_ok).sum()), objective)
        return key, load, hops, hop_ok, bw_ok, overloaded, objective

    for it in range(1, max_iter + 1):
        it_done = it
        for fi, (src, dst, cr) in enumerate(flows):
            # multipliers stamped at iteration i change pricing from i+1 on,
            # hence >= against the flow's last routing iteration
            needs = last_routed[fi] < 0 or last_down_iter >= last_routed[fi]
            if not needs and paths_dl[fi]:
                needs = any(link_last_up[dl] >= last_routed[fi] for dl in paths_dl[fi])
            if not needs:
                continue
            cost = (space.energy + mu) * cr + (xi + mu_f[fi])
            sol = _dijkstra(space, src, dst, cost)
            if sol is None:
                raise ValueError(f"flow ({src},{dst}) unreachable under permitted turns")
            paths_dl[fi] = sol
            last_routed[fi] = it

        # dual value of this iteration's exact subproblem solution
        dual = 0.0
        for fi in range(nf):
            cr = demands[fi]
            e_sum = float(sum(space.energy[dl] for dl in paths_dl[fi]))
            mu_sum = float(sum(mu[dl] for dl in paths_dl[fi]))
            dual += cr * (e_sum + mu_sum) + len(paths_dl[fi]) * (xi + mu_f[fi])
        dual -= float(mu.sum()) * problem.link_cap
        dual -= float(mu_f.sum()) * problem.hop_cap
        dual_best = max(dual_best, dual)

        key, load, hops, hop_ok, bw_ok, overloaded, _ = evaluate(paths_dl)
        improved = False
        for cand in ([paths_dl] if not overloaded.any()
                     else [paths_dl, _repair_pass(space, problem, xi, demands, paths_dl)]):
            ckey, cload, _, chop_ok, cbw_ok, cover, _ = (
                (key, load, hops, hop_ok, bw_ok, overloaded, None)
                if cand is paths_dl
                else evaluate(cand)
            )
            if best_key is None or ckey < best_key:
                best_key = ckey
                best_paths = [list(p) for p in cand]
                best_hop_ok, best_bw_ok = chop_ok.copy(), cbw_ok.copy()
                best_load = cload.copy()
                improved = True
        stall = 0 if improved else stall + 1

        feasible = hop_ok.all() and not overloaded.any()
        fully_ok = best_key is not None and best_key[0] <= -float(nf)
        if feasible and (it == 1 or (mu.max(initial=0.0) == 0 and mu_f.max(initial=0.0) == 0)):
            break  # least-cost paths already satisfy every constraint
        if fully_ok and stall >= 5:
            break  # a fully feasible incumbent stopped improving
        if stall >= stall_limit:
            break
        if it == max_iter:
            break

        theta = theta0 / it
        new_mu = np.maximum(0.0, mu + theta * (load - problem.link_cap))
        new_mu_f = np.maximum(0.0, mu_f + theta * (hops - problem.hop_cap))
        up = new_mu > mu
        link_last_up[up] = it
        if (new_mu < mu).any():
            last_down_iter = it
        for fi in range(nf):
            if new_mu_f[fi] != mu_f[fi]:
                last_routed[fi] = -1  # force re-pricing
        mu, mu_f = new_mu, new_mu_f

    # assemble from the incumbent
    paths = [space.path_nodes(p) for p in best_paths]
    load_dict = {}
    for dl in range(space.n_states):
        if best_load[dl] > 0:
            load_dict[(int(space.tail[dl]), int(space.head[dl]))] = float(best_load[dl])
    objective = float(sum(
        float(space.energy[dl]) * demands[fi] + xi
        for fi in range(nf) for dl in best_paths[fi]
    ))
    structural = []
    forest = RouteForest(space)
    for fi, (src, dst, _) in enumerate(flows):
        if not best_hop_ok[fi] and forest.hops(src, dst) > problem.hop_cap:
            structural.append(fi)
    return RoutingSolution(
        paths=paths, hop_ok=best_hop_ok, bw_ok=best_bw_ok, link_load=load_dict,
        mu_link=mu, mu_flow=mu_f, objective=objective, dual_best=dual_best,
        iterations=it_done, structurally_infeasible=structural,
    )


# -- exhaustive oracle and validation -----------------------------------------


@dataclass
class OracleResult:
    feasible: bool
    objective: float
    paths: list[tuple[int, ...]] | None


def _legal_simple_paths(space: LinkSpace, src: int, dst: int, max_hops: int,
                        cap: int = 50000) -> list[list[int]]:
    out: list[list[int]] = []

    def rec(dl: int, visited: set[int], acc: list[int]) -> None:
        if len(out) >= cap:
            raise ValueError("instance too large for exhaustive enumeration")
        head = int(space.head[dl])
        if head == dst:
            out.append(list(acc))
            return
        if len(acc) >= max_hops:
            return
        for nxt in space.succ[dl]:
            h = int(space.head[nxt])
            if h in visited:
                continue
            visited.add(h)
            acc.append(nxt)
            rec(nxt, visited, acc)
            acc.pop()
            visited.discard(h)

    for dl in space.out_dls[src]:
        h = int(space.head[dl])
        rec(dl, {src, h}, [dl])
    return out


def ilp_oracle(problem: RoutingProblem, turnset: TurnSet,
               max_combos: int = 2_000_000) -> OracleResult:
    """Exhaustive optimum of the constrained routing objective on tiny
    instances (tests only)."""
    if problem.topo.n > 10 or len(problem.flows) > 4:
        raise ValueError("instance too large for the exhaustive oracle")
    space = LinkSpace(problem.topo, turnset, problem.power_params)
    xi = problem.resolved_xi(space)
    per_flow: list[list[tuple[float, list[int]]]] = []
    for src, dst, cr in problem.flows:
        cand = _legal_simple_paths(space, src, dst, problem.hop_cap)
        scored = sorted(
            ((float(sum(space.energy[dl] * cr + xi for dl in p)), p) for p in cand),
            key=lambda t: (t[0], t[1]),
        )
        if not scored:
            return OracleResult(feasible=False, objective=np.inf, paths=None)
        per_flow.append(scored)

    combos = 1
    for c in per_flow:
        combos *= len(c)
    if combos > max_combos:
        raise ValueError("instance too large for the exhaustive oracle")

    best_obj = np.inf
    best: list[list[int]] | None = None
    for pick in itertools.product(*per_flow):
        obj = sum(c for c, _ in pick)
        if obj >= best_obj:
            continue
        load: dict[int, float] = {}
        ok = True
        for (c, p), (_, _, cr) in zip(pick, problem.flows):
            for dl in p:
                load[dl] = load.get(dl, 0.0) + cr
                if load[dl] > problem.link_cap + 1e-9:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            best_obj = obj
            best = [p for _, p in pick]
    if best is None:
        return OracleResult(feasible=False, objective=np.inf, paths=None)
    return OracleResult(
        feasible=True, objective=float(best_obj),
        paths=[space.path_nodes(p) for p in best],
    )


@dataclass
class ValidationReport:
    path_ok: np.ndarray
    hop_ok: np.ndarray
    bw_ok: np.ndarray
    success_pct: float
    max_load: float

    @property
    def all_paths_valid(self) -> bool:
        return bool(self.path_ok.all())


def validate_solution(problem: RoutingProblem, turnset: TurnSet,
                      solution: RoutingSolution) -> ValidationReport:
    """Independent re-check of path validity, turn legality, loads, and caps."""
    topo = problem.topo
    nf = len(problem.flows)
    path_ok = np.zeros(nf, dtype=bool)
    load: dict[tuple[int, int], float] = {}
    for fi, (src, dst, cr) in enumerate(problem.flows):
        p = solution.paths[fi]
        ok = len(p) >= 2 and p[0] == src and p[-1] == dst and len(set(p)) == len(p)
        for a, b in zip(p, p[1:]):
            if not topo.has_link(a, b):
                ok = False
        for a, b, c in zip(p, p[1:], p[2:]):
            if turnset.is_prohibited(a, b, c):
                ok = False
        path_ok[fi] = ok
        if ok:
            for a, b in zip(p, p[1:]):
                load[(a, b)] = load.get((a, b), 0.0) + cr
    hop_ok = np.array([len(solution.paths[fi]) - 1 <= problem.hop_cap for fi in range(nf)])
    bw_ok = np.zeros(nf, dtype=bool)
    for fi in range(nf):
        p = solution.paths[fi]
        bw_ok[fi] = path_ok[fi] and all(
            load[(a, b)] <= problem.link_cap + 1e-9 for a, b in zip(p, p[1:])
        )
    ok = path_ok & hop_ok & bw_ok
    return ValidationReport(
        path_ok=path_ok, hop_ok=hop_ok, bw_ok=bw_ok,
        success_pct=100.0 * float(ok.sum()) / nf if nf else 100.0,
        max_load=max(load.values(), default=0.0),
    )
