"""Deterministic growth of limited scale-free / power-law-length topologies.

Growth starts from a small mesh at the grid center and adds the remaining
nodes ring by ring outward.  Every new node attaches with k links; each
link first picks the target *degree* that keeps the realized degree
distribution closest to the truncated power law, then among nodes of that
degree picks the target whose link *length* best fills the expected
power-law length distribution.  The whole process is a pure function of
its parameters.

A sweep over the two exponents scores every candidate topology by basic
power and a rough all-pairs communication cost, and picks the best
tradeoff subject to a power threshold relative to the mesh baseline.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Topology, hop_and_length_tables, metrics
from .power import PowerParams, basic_power

log = logging.getLogger(__name__)


@dataclass
class GrowthParams:
    n: int
    m: int = 15
    l_a: int = 15
    k: int = 2
    gamma: float = 0.7
    beta: float = 1.4
    init_side: int = 4

    def __post_init__(self):
        t = math.isqrt(self.n)
        if t * t != self.n:
            raise ValueError(f"n must be a perfect square, got {self.n}")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.m <= 2 * self.k:
            raise ValueError(f"need m > 2k, got m={self.m}, k={self.k}")
        if not (0 < self.l_a <= 2 * (t - 1)):
            raise ValueError(f"l_a must be in (0, {2 * (t - 1)}], got {self.l_a}")
        if self.gamma <= 0 or self.beta <= 0:
            raise ValueError("exponents must be positive")
        if self.init_side < 2 or self.init_side * self.init_side > self.n:
            raise ValueError(f"init_side {self.init_side} does not fit n={self.n}")

    @property
    def t(self) -> int:
        return math.isqrt(self.n)


def compute_ma(m: int, k: int, gamma: float) -> int:
    """Largest feasible cap on node degree: decrement from m until the
    positivity condition on the truncated power-law frequencies holds."""
    if m <= 2 * k:
        raise ValueError(f"need m > 2k, got m={m}, k={k}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    ma = m
    while ma > 2 * k:
        lhs = 2 * k * sum(j ** -gamma for j in range(k, ma))
        rhs = sum(j ** (-gamma + 1) for j in range(k, ma))
        if lhs >= rhs:
            return ma
        ma -= 1
    raise ValueError(f"no degree cap > 2k={2 * k} is feasible for m={m}, gamma={gamma}")


def degree_frequencies(ma: int, k: int, gamma: float) -> np.ndarray:
    """Expected frequency f[i] of degree-i nodes, i in [k, ma]; zeros elsewhere.

    Truncated power law for i < ma; the cap degree absorbs the remainder.
    """
    denom = sum((ma - j) / j ** gamma for j in range(k, ma))
    f = np.zeros(ma + 1)
    for i in range(k, ma):
        f[i] = (ma - 2 * k) / (i ** gamma * denom)
    f[ma] = 1.0 - f[k:ma].sum()
    if (f[k : ma + 1] <= 0).any():
        raise ValueError(f"nonpositive frequency for ma={ma}, k={k}, gamma={gamma}")
    return f


def expected_length_distribution(beta: float, l_a: int, t: int) -> np.ndarray:
    """Expected probability P[l] of link length l, l in [1, l_a]; index 0 unused.

    Power law over the full geometric range [1, 2(t-1)]; the cap length l_a
    absorbs the probability of all longer links so their proportion is kept.
    """
    lmax = 2 * (t - 1)
    if not (1 <= l_a <= lmax):
        raise ValueError(f"l_a must be in [1, {lmax}]")
    norm = sum(ln ** -beta for ln in range(1, lmax + 1))
    p = np.zeros(l_a + 1)
    for ln in range(1, l_a):
        p[ln] = ln ** -beta / norm
    p[l_a] = 1.0 - p[1:l_a].sum()
    return p


def expected_link_prob(l: int, beta: float, l_a: int, t: int) -> float:
    if not (1 <= l <= l_a):
        raise ValueError(f"l must be in [1, {l_a}]")
    return float(expected_length_distribution(beta, l_a, t)[l])


class DegreeTracker:
    """Running state of the realized vs expected degree distribution.

    score[i] accumulates the expected degree-i node count: it starts at
    f_i * (seed node count) and gains freq[i] = f_i / k on every link
    addition, so after the graph is complete it equals f_i * n.
    """

    def __init__(self, ma: int, k: int, gamma: float, seed_degree_counts, seed_nodes: int):
        self.ma = ma
        self.k = k
        self.f = degree_frequencies(ma, k, gamma)
        self.freq = self.f / k
        self.n_count = np.zeros(ma + 1, dtype=np.int64)
        for deg, cnt in seed_degree_counts.items():
            if deg > ma:
                raise ValueError(f"seed degree {deg} exceeds cap {ma}")
            if deg >= k:
                self.n_count[deg] = cnt
        self.score = self.f * seed_nodes

    def deviation(self, i: int) -> float:
        return float(self.n_count[i] - self.score[i] - self.freq[i])

    def choice_penalty(self, i: int) -> float:
        d_i = self.deviation(i)
        d_up = self.deviation(i + 1)
        return (abs(d_up + 1) + abs(d_i - 1)) - (abs(d_up) + abs(d_i))

    def on_link(self, target_degree: int) -> None:
        """Target moved from target_degree to target_degree + 1."""
        if target_degree >= self.k:
            self.n_count[target_degree] -= 1
        if target_degree + 1 >= self.k:
            self.n_count[target_degree + 1] += 1
        self.score += self.freq

    def on_new_node_complete(self) -> None:
        self.n_count[self.k] += 1


def degree_choice_penalty(tracker: DegreeTracker, i: int) -> float:
    """Change in total absolute distribution deviation if a degree-i node
    is picked as the link target (it would become degree i+1)."""
    return tracker.choice_penalty(i)


class LengthTracker:
    def __init__(self, beta: float, l_a: int, t: int):
        self.expected_p = expected_length_distribution(beta, l_a, t)
        self.actual_count = np.zeros(2 * (t - 1) + 1, dtype=np.int64)
        self.total_links = 0

    def on_link(self, length: int) -> None:
        self.actual_count[length] += 1
        self.total_links += 1

    def deviations(self, lengths: np.ndarray) -> np.ndarray:
        """DI(l) = expected - realized probability, vectorized over lengths <= l_a."""
        actual = self.actual_count[lengths] / max(self.total_links, 1)
        return self.expected_p[lengths] - actual


def _seed_block(t: int, side: int) -> tuple[int, int]:
    off = (t - side) // 2
    return off, off


def _ring_order(t: int, side: int) -> list[tuple[int, int]]:
    """Grid coordinates outside the seed block, nearest rings first, row-major
    within a ring (ring index = Chebyshev distance to the block rectangle)."""
    r0, c0 = _seed_block(t, side)
    out = []
    for r in range(t):
        for c in range(t):
            dr = max(r0 - r, r - (r0 + side - 1), 0)
            dc = max(c0 - c, c - (c0 + side - 1), 0)
            ring = max(dr, dc)
            if ring > 0:
                out.append((ring, r, c))
    out.sort()
    return [(r, c) for _, r, c in out]


def grow(params: GrowthParams) -> Topology:
    """Run the deterministic growth; bitwise reproducible for equal params."""
    t, k, l_a = params.t, params.k, params.l_a
    ma = compute_ma(params.m, k, params.gamma)

    topo = Topology(t)
    side = params.init_side
    r0, c0 = _seed_block(t, side)
    for r in range(side):
        for c in range(side):
            topo.add_node(r0 + r, c0 + c)
    for r in range(side):
        for c in range(side):
            u = r * side + c
            if c + 1 < side:
                topo.add_link(u, u + 1)
            if r + 1 < side:
                topo.add_link(u, u + side)

    seed_counts: dict[int, int] = {}
    for a in topo.adj:
        seed_counts[len(a)] = seed_counts.get(len(a), 0) + 1
    degrees = DegreeTracker(ma, k, params.gamma, seed_counts, topo.n)
    lengths = LengthTracker(params.beta, l_a, t)
    for w in topo.links.values():
        lengths.on_link(w)

    # per-degree candidate pools; selection is a full argmin so pool
    # iteration order never affects the result
    buckets: list[set[int]] = [set() for _ in range(ma + 1)]
    for u, a in enumerate(topo.adj):
        buckets[len(a)].add(u)

    rows = np.zeros(params.n, dtype=np.int64)
    cols = np.zeros(params.n, dtype=np.int64)
    rows[: topo.n] = topo.rows
    cols[: topo.n] = topo.cols
    ranks = rows * t + cols
    violations = 0

    for r, c in _ring_order(t, side):
        nid = topo.add_node(r, c)
        rows[nid], cols[nid] = r, c
        ranks[nid] = r * t + c
        picked: list[int] = []
        for _ in range(k):
            # candidate degrees ordered by distribution penalty, then smaller degree
            order = sorted(
                (degrees.choice_penalty(i), i)
                for i in range(k, ma)
                if degrees.n_count[i] > 0
            )
            target = -1
            tlen = 0
            for _, i in order:
                ids = np.fromiter(buckets[i], dtype=np.int64, count=len(buckets[i]))
                ls = np.abs(rows[ids] - r) + np.abs(cols[ids] - c)
                mask = ls <= l_a
                for p in picked:
                    mask &= ids != p
                if not mask.any():
                    continue
                ids, ls = ids[mask], ls[mask]
                di = lengths.deviations(ls)
                best = np.lexsort((ranks[ids], ls, -di))[0]
                target, tlen = int(ids[best]), int(ls[best])
                break
            if target < 0:
                # no in-range candidate at any preferred degree: connect to the
                # nearest legal node regardless of the length cap
                cand = [
                    u
                    for i in range(ma)
                    for u in buckets[i]
                    if u not in picked
                ]
                if not cand:
                    raise RuntimeError("no legal attachment target remains")
                target = min(
                    cand, key=lambda u: (abs(rows[u] - r) + abs(cols[u] - c), ranks[u])
                )
                tlen = int(abs(rows[target] - r) + abs(cols[target] - c))
                violations += 1
                log.warning(
                    "length cap %d violated: node (%d,%d) attached at distance %d",
                    l_a, r, c, tlen,
                )
            deg = len(topo.adj[target])
            topo.add_link(nid, target)
            buckets[deg].discard(target)
            buckets[deg + 1].add(target)
            degrees.on_link(deg)
            lengths.on_link(tlen)
            picked.append(target)
        buckets[k].add(nid)
        degrees.on_new_node_complete()

    if violations:
        log.warning("growth finished with %d length-cap violations", violations)
    assert max(len(a) for a in topo.adj) <= ma
    return topo


# -- exponent sweep ----------------------------------------------------------


def basic_obj(c: float, p: float, c_min: float, p_min: float, alpha: float) -> float:
    """Normalized cost/power tradeoff score in (0, 1]."""
    if c <= 0 or p <= 0:
        raise ValueError("cost and power must be positive")
    return alpha * c_min / c + (1.0 - alpha) * p_min / p


@dataclass
class SweepRecord:
    gamma: float
    beta: float
    avg_hop: float
    wire_length_report: float
    comm_cost: float  # raw ordered-pair sum
    basic_power: float
    obj: float = 0.0


@dataclass
class SweepResult:
    records: list[SweepRecord]
    alpha: float
    selected: int
    mesh_power: float
    params: GrowthParams = field(repr=False, default=None)

    @property
    def selected_record(self) -> SweepRecord:
        return self.records[self.selected]

    def selected_params(self) -> GrowthParams:
        rec = self.selected_record
        base = self.params
        return GrowthParams(
            n=base.n, m=base.m, l_a=base.l_a, k=base.k,
            gamma=rec.gamma, beta=rec.beta, init_side=base.init_side,
        )

    def save_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("gamma,beta,avg_hop,wire_length,comm_cost,basic_power,obj\n")
            for rec in self.records:
                fh.write(
                    f"{rec.gamma:.1f},{rec.beta:.1f},{rec.avg_hop:.6f},"
                    f"{rec.wire_length_report:.1f},{rec.comm_cost / 2.0e4:.6f},"
                    f"{rec.basic_power:.6f},{rec.obj:.6f}\n"
                )


def _steps(lo: float, hi: float, step: float) -> list[float]:
    if hi < lo:
        raise ValueError("empty range")
    count = int(round((hi - lo) / step)) + 1
    return [round(lo + i * step, 6) for i in range(count)]


def sweep(
    n: int,
    m: int = 15,
    l_a: int = 15,
    gamma_range: tuple[float, float] = (0.5, 2.5),
    beta_range: tuple[float, float] = (1.0, 3.0),
    step: float = 0.1,
    alpha: float = 0.5,
    k: int = 2,
    init_side: int = 4,
    power_params: PowerParams | None = None,
    power_threshold: float = 1.3,
) -> SweepResult:
    """Grow one topology per exponent pair, score all of them, and select
    the best tradeoff whose basic power stays below threshold * mesh power.

    If the selection exceeds the threshold, the cost weight alpha is
    reduced by 0.1 and the selection repeated.
    """
    from .grid import build_mesh

    pp = power_params or PowerParams()
    base = GrowthParams(n=n, m=m, l_a=l_a, k=k, init_side=init_side,
                        gamma=gamma_range[0], beta=beta_range[0])
    mesh_power = basic_power(build_mesh(base.t), pp).total

    records: list[SweepRecord] = []
    for gamma in _steps(*gamma_range, step):
        for beta in _steps(*beta_range, step):
            gp = GrowthParams(n=n, m=m, l_a=l_a, k=k, init_side=init_side,
                              gamma=gamma, beta=beta)
            topo = grow(gp)
            met = metrics(topo, hop_and_length_tables(topo))
            records.append(SweepRecord(
                gamma=gamma, beta=beta, avg_hop=met.avg_hop,
                wire_length_report=met.wire_length_report,
                comm_cost=met.rough_comm_cost,
                basic_power=basic_power(topo, pp).total,
            ))
    if not records:
        raise ValueError("empty sweep ranges")

    c_min = min(rec.comm_cost for rec in records)
    p_min = min(rec.basic_power for rec in records)
    a = alpha
    while True:
        for rec in records:
            rec.obj = basic_obj(rec.comm_cost, rec.basic_power, c_min, p_min, a)
        best = max(range(len(records)), key=lambda i: (records[i].obj, -i))
        if records[best].basic_power <= power_threshold * mesh_power:
            break
        a = round(a - 0.1, 6)
        if a < -1e-9:
            raise ValueError("no topology satisfies the basic-power threshold")
    return SweepResult(records=records, alpha=a, selected=best,
                       mesh_power=mesh_power, params=base)
