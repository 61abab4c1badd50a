"""Deterministic flit-level wormhole NoC simulator.

Input-queued switches with a four-stage header pipeline (route, VC
allocation, switch allocation, traversal), per-port virtual channels with
credit flow control, source routing from precomputed tables, Bernoulli
packet injection, and latency/power/hop reporting.  One simulation is
single-threaded and bit-reproducible for equal inputs and seed.

Timing model: a header flit arriving in a buffer at the end of cycle c
occupies one pipeline stage per cycle from c+1 and leaves on the link in
its fourth; body flits stream one cycle apart behind it.  Flits travel
link_delay cycles on the wire, so an unloaded packet takes
pipeline*hops + sum(link delays) + (flits-1) cycles door to door.
"""
from __future__ import annotations

import heapq
import logging
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .grid import Topology
from .power import PowerParams, basic_power, link_delay

log = logging.getLogger(__name__)

_RC, _VA, _SA = 0, 1, 2


@dataclass
class SimConfig:
    clock_freq_hz: float = 1.0e9
    flit_bits: int = 32
    packet_flits: int = 5  # 5 for synthetic traffic, 10 for application traffic
    vcs_per_port: int = 2
    vc_buffer_flits: int = 4
    pipeline_stages: int = 4
    warmup_cycles: int = 30000
    measure_cycles: int = 100000
    drain_cycles: int = 30000
    seed: int = 1

    def __post_init__(self):
        if min(self.packet_flits, self.vcs_per_port, self.vc_buffer_flits,
               self.pipeline_stages, self.flit_bits) < 1:
            raise ValueError("all simulator parameters must be positive")


SYNTHETIC_KINDS = ("uniform", "shuffle", "bitcomp", "randperm")


def synthetic_pattern(kind: str, node_count: int, seed: int = 0) -> np.ndarray | None:
    """Destination map for permutation patterns; None for uniform (drawn
    per packet at injection)."""
    if kind == "uniform":
        return None
    if kind in ("shuffle", "bitcomp"):
        bits = node_count.bit_length() - 1
        if 1 << bits != node_count:
            raise ValueError(f"{kind} traffic needs a power-of-two node count")
        src = np.arange(node_count)
        if kind == "bitcomp":
            return (node_count - 1) ^ src
        return ((src << 1) | (src >> (bits - 1))) & (node_count - 1)
    if kind == "randperm":
        rng = np.random.default_rng(seed)
        return rng.permutation(node_count)
    raise ValueError(f"unknown synthetic pattern {kind!r}")


@dataclass
class TrafficSpec:
    mode: str  # one of SYNTHETIC_KINDS, "table", or "oneshot"
    injection_rate: float = 0.0        # packets/flit-cycle/node, synthetic modes
    flows: list[tuple[int, int, float]] = field(default_factory=list)  # table mode
    shots: list[tuple[int, int, int]] = field(default_factory=list)   # (src,dst,cycle)

    def __post_init__(self):
        if self.mode in SYNTHETIC_KINDS:
            if not (0.0 < self.injection_rate < 1.0):
                raise ValueError("injection rate must be in (0, 1)")
        elif self.mode == "table":
            for src, dst, rate in self.flows:
                if not (0.0 < rate < 1.0):
                    raise ValueError(f"flow ({src},{dst}) rate {rate} outside (0, 1)")
        elif self.mode != "oneshot":
            raise ValueError(f"unknown traffic mode {self.mode!r}")

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"mode {self.mode}\n")
            if self.mode in SYNTHETIC_KINDS:
                fh.write(f"rate {self.injection_rate!r}\n")
            elif self.mode == "table":
                for src, dst, rate in self.flows:
                    fh.write(f"flow {src} {dst} {rate!r}\n")
            else:
                for src, dst, cyc in self.shots:
                    fh.write(f"shot {src} {dst} {cyc}\n")

    @classmethod
    def load(cls, path) -> "TrafficSpec":
        mode = None
        rate = 0.0
        flows: list[tuple[int, int, float]] = []
        shots: list[tuple[int, int, int]] = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                parts = line.split()
                if not parts or parts[0].startswith("#"):
                    continue
                try:
                    if parts[0] == "mode":
                        mode = parts[1]
                    elif parts[0] == "rate":
                        rate = float(parts[1])
                    elif parts[0] == "flow":
                        flows.append((int(parts[1]), int(parts[2]), float(parts[3])))
                    elif parts[0] == "shot":
                        shots.append((int(parts[1]), int(parts[2]), int(parts[3])))
                    else:
                        raise ValueError
                except (IndexError, ValueError) as exc:
                    raise ValueError(f"{path}:{lineno}: malformed traffic line") from exc
        if mode is None:
            raise ValueError(f"{path}: missing 'mode' line")
        return cls(mode=mode, injection_rate=rate, flows=flows, shots=shots)


def traffic_from_flows(core_flows: dict[tuple[int, int], float], cr_cap: float,
                       packet_flits: int) -> tuple[TrafficSpec, list[tuple[int, int, float]]]:
    """Convert core-to-core demands (MB/s) into per-flow packet injection
    rates: rate = demand / (capacity * packet size).  Flows whose rate
    would reach 1 are rejected and reported."""
    flows = []
    rejected = []
    for (src, dst), cr in sorted(core_flows.items()):
        if cr <= 0:
            continue
        rate = cr / (cr_cap * packet_flits)
        if rate >= 1.0:
            rejected.append((src, dst, rate))
        else:
            flows.append((src, dst, rate))
    if rejected:
        log.warning("rejected %d flows with injection rate >= 1", len(rejected))
    return TrafficSpec(mode="table", flows=flows), rejected


@dataclass
class SimReport:
    injected: int
    delivered: int
    in_flight: int
    avg_latency: float
    latency_hist: dict[int, int]
    avg_hops: float
    hop_hist: dict[int, int]
    offered: float          # packets/node/cycle over the measurement window
    accepted: float
    power: dict[str, float]
    congested: bool
    deadlock: bool
    cycles_run: int
    seed: int
    flow_injected: dict[tuple[int, int], int] = field(default_factory=dict, repr=False)
    flow_delivered: dict[tuple[int, int], int] = field(default_factory=dict, repr=False)

    def to_text(self) -> str:
        lines = [
            f"injected {self.injected}",
            f"delivered {self.delivered}",
            f"in_flight {self.in_flight}",
            f"avg_latency {self.avg_latency:.6f}",
            f"avg_hops {self.avg_hops:.6f}",
            f"offered {self.offered:.8f}",
            f"accepted {self.accepted:.8f}",
            f"congested {int(self.congested)}",
            f"deadlock {int(self.deadlock)}",
            f"cycles_run {self.cycles_run}",
            f"seed {self.seed}",
        ]
        for key in sorted(self.power):
            lines.append(f"power_{key} {self.power[key]:.9f}")
        lines.append("latency_hist " + " ".join(
            f"{k}:{v}" for k, v in sorted(self.latency_hist.items())))
        lines.append("hop_hist " + " ".join(
            f"{k}:{v}" for k, v in sorted(self.hop_hist.items())))
        return "\n".join(lines) + "\n"

    CSV_HEADER = ("injected,delivered,in_flight,avg_latency,avg_hops,offered,"
                  "accepted,congested,deadlock,power_total,power_comm")

    def to_csv_row(self) -> str:
        return (f"{self.injected},{self.delivered},{self.in_flight},"
                f"{self.avg_latency:.6f},{self.avg_hops:.6f},{self.offered:.8f},"
                f"{self.accepted:.8f},{int(self.congested)},{int(self.deadlock)},"
                f"{self.power['total']:.9f},{self.power['communication']:.9f}")


def _geometric_arrivals(rng: np.random.Generator, rate: float, horizon: int) -> np.ndarray:
    """Bernoulli(rate) process arrival cycles in [0, horizon)."""
    if rate <= 0:
        return np.empty(0, dtype=np.int64)
    est = int(rate * horizon * 1.3) + 16
    times = []
    cur = -1
    while cur < horizon:
        gaps = rng.geometric(rate, est)
        arr = cur + np.cumsum(gaps)
        times.append(arr)
        cur = int(arr[-1])
    all_times = np.concatenate(times)
    return all_times[all_times < horizon]


def _build_injections(traffic: TrafficSpec, n: int, horizon: int, seed: int
                      ) -> dict[int, list[tuple[int, int]]]:
    """cycle -> [(src, dst)] in deterministic order."""
    out: dict[int, list[tuple[int, int]]] = {}

    def put(cycle: int, src: int, dst: int) -> None:
        out.setdefault(cycle, []).append((src, dst))

    ss = np.random.SeedSequence(seed)
    if traffic.mode == "oneshot":
        for src, dst, cyc in traffic.shots:
            put(cyc, src, dst)
    elif traffic.mode == "table":
        children = ss.spawn(len(traffic.flows))
        for (src, dst, rate), child in zip(traffic.flows, children):
            rng = np.random.default_rng(child)
            for cyc in _geometric_arrivals(rng, rate, horizon):
                put(int(cyc), src, dst)
    else:
        perm = synthetic_pattern(traffic.mode, n, seed)
        children = ss.spawn(n)
        for src in range(n):
            rng = np.random.default_rng(children[src])
            arrivals = _geometric_arrivals(rng, traffic.injection_rate, horizon)
            if traffic.mode == "uniform":
                draws = rng.integers(0, n - 1, size=arrivals.size)
                for cyc, d in zip(arrivals, draws):
                    dst = int(d) + (1 if d >= src else 0)
                    put(int(cyc), src, dst)
            else:
                dst = int(perm[src])
                if dst == src:
                    continue
                for cyc in arrivals:
                    put(int(cyc), src, dst)
        for cycle in out:
            out[cycle].sort()
    return out


def run(topo: Topology, route_lookup, traffic: TrafficSpec,
        config: SimConfig | None = None,
        power_params: PowerParams | None = None) -> SimReport:
    """Cycle-driven wormhole simulation.

    route_lookup(src, dst) must return the node path for every pair the
    traffic can emit (build one from a RouteForest for synthetic traffic or
    from a routing-table file for application traffic).
    """
    cfg = config or SimConfig()
    pp = power_params or PowerParams()
    n = topo.n
    vcs = cfg.vcs_per_port
    nflits = cfg.packet_flits
    # route/VC-alloc/switch-alloc take one cycle each and traversal starts the
    # cycle after the grant, which covers four stages; charge any surplus here
    pipeline_extra = max(0, cfg.pipeline_stages - 4)

    # directed link tables
    links = topo.sorted_links()
    m2 = 2 * len(links)
    head = np.empty(m2, dtype=np.int64)
    delay = np.empty(m2, dtype=np.int64)
    omega = np.empty(m2, dtype=np.int64)
    dl_of: dict[tuple[int, int], int] = {}
    for i, (u, v, w) in enumerate(links):
        head[2 * i], head[2 * i + 1] = v, u
        delay[2 * i] = delay[2 * i + 1] = link_delay(w, pp)
        omega[2 * i] = omega[2 * i + 1] = w
        dl_of[(u, v)] = 2 * i
        dl_of[(v, u)] = 2 * i + 1

    n_link_vcs = m2 * vcs
    n_vcs = n_link_vcs + n  # per-node injection channel appended
    vc_pkt = [-1] * n_vcs
    vc_arr = [0] * n_vcs
    vc_sent = [0] * n_vcs
    vc_pos = [0] * n_vcs
    vc_phase = [0] * n_vcs
    vc_ready = [0] * n_vcs
    vc_outdl = [-1] * n_vcs
    vc_outvc = [-1] * n_vcs
    credits = [cfg.vc_buffer_flits] * n_link_vcs

    inj_queue: list[list[int]] = [[] for _ in range(n)]
    active: list[int] = []  # sorted vc ids with a live state machine

    def activate(vcid: int) -> None:
        pos = bisect_left(active, vcid)
        if pos == len(active) or active[pos] != vcid:
            active.insert(pos, vcid)

    def deactivate(vcid: int) -> None:
        pos = bisect_left(active, vcid)
        if pos < len(active) and active[pos] == vcid:
            del active[pos]

    # packets: pid -> [path_dls, inject_cycle, measured, src, dst]
    packets: dict[int, list] = {}
    path_cache: dict[tuple[int, int], list[int]] = {}

    def dls_for(src: int, dst: int) -> list[int]:
        key = (src, dst)
        got = path_cache.get(key)
        if got is None:
            nodes = route_lookup(src, dst)
            if nodes is None or len(nodes) < 2 or nodes[0] != src or nodes[-1] != dst:
                raise ValueError(f"routing table has no usable path for ({src},{dst})")
            got = [dl_of[(a, b)] for a, b in zip(nodes, nodes[1:])]
            path_cache[key] = got
        return got

    horizon = cfg.warmup_cycles + cfg.measure_cycles
    injections = _build_injections(traffic, n, horizon, cfg.seed)
    event_cycles = sorted(injections)
    total_offered = sum(len(v) for v in injections.values())

    arrivals: dict[int, list[tuple[int, int, int, int, bool]]] = {}
    wakeups: list[int] = list(event_cycles)
    heapq.heapify(wakeups)

    def schedule_arrival(cycle: int, vcid: int, pid: int, flit: int, pos: int,
                         at_dst: bool) -> None:
        lst = arrivals.get(cycle)
        if lst is None:
            arrivals[cycle] = [(vcid, pid, flit, pos, at_dst)]
            heapq.heappush(wakeups, cycle)
        else:
            lst.append((vcid, pid, flit, pos, at_dst))

    # statistics
    injected_measured = 0
    delivered_measured = 0
    delivered_total = 0
    injected_total = 0
    lat_sum = 0
    lat_hist: dict[int, int] = {}
    hop_sum = 0
    hop_hist: dict[int, int] = {}
    flow_injected: dict[tuple[int, int], int] = {}
    flow_delivered: dict[tuple[int, int], int] = {}
    counters = {"buffer_write": 0, "buffer_read": 0, "crossbar": 0,
                "link_flit_units": 0, "alloc": 0}
    counters_at_measure_end: dict[str, int] | None = None
    delivered_at_measure_end = 0

    next_pid = 0
    max_hops_seen = 1
    last_progress = 0
    deadlock = False
    cycle = -1
    end_cycle = horizon + cfg.drain_cycles
    rr: dict[int, int] = {}

    def install_injection(node: int, pid: int, now: int) -> None:
        vcid = n_link_vcs + node
        vc_pkt[vcid] = pid
        vc_arr[vcid] = nflits
        vc_sent[vcid] = 0
        vc_pos[vcid] = 0
        vc_phase[vcid] = _RC
        vc_ready[vcid] = now + 1
        activate(vcid)

    while True:
        # jump to the next cycle with possible work
        if not active:
            nxt = None
            while wakeups and wakeups[0] <= cycle:
                heapq.heappop(wakeups)
            if wakeups:
                nxt = wakeups[0]
            if nxt is None or nxt > end_cycle:
                break
            cycle = nxt
        else:
            cycle += 1
        if cycle > end_cycle:
            break
        if counters_at_measure_end is None and cycle >= horizon:
            counters_at_measure_end = dict(counters)
            delivered_at_measure_end = delivered_measured

        # 1. header pipeline / switch allocation requests
        requests: list[tuple[int, int]] = []
        for vcid in active:
            if vc_ready[vcid] > cycle:
                continue
            phase = vc_phase[vcid]
            if phase == _SA:
                if vc_arr[vcid] > vc_sent[vcid] and credits[vc_outvc[vcid]] > 0:
                    requests.append((vc_outdl[vcid], vcid))
            elif phase == _RC:
                pkt = packets[vc_pkt[vcid]]
                vc_outdl[vcid] = pkt[0][vc_pos[vcid]]
                vc_phase[vcid] = _VA
                vc_ready[vcid] = cycle + 1
            else:  # _VA
                base = vc_outdl[vcid] * vcs
                for v in range(vcs):
                    if vc_pkt[base + v] == -1:
                        tgt = base + v
                        vc_pkt[tgt] = vc_pkt[vcid]
                        vc_arr[tgt] = 0
                        vc_sent[tgt] = 0
                        vc_outvc[vcid] = tgt
                        vc_phase[vcid] = _SA
                        vc_ready[vcid] = cycle + 1 + pipeline_extra
                        counters["alloc"] += 1
                        break

        # 2. switch allocation grants: per output link, round-robin over
        #    requesting VCs; one grant per input port per cycle
        granted_ports: set[int] = set()
        grants: list[int] = []
        i = 0
        requests.sort()
        nreq = len(requests)
        while i < nreq:
            j = i
            outdl = requests[i][0]
            while j < nreq and requests[j][0] == outdl:
                j += 1
            last = rr.get(outdl, -1)
            chosen = -1
            for x in range(i, j):  # first unblocked vc above the pointer
                v = requests[x][1]
                if v > last:
                    port = v // vcs if v < n_link_vcs else m2 + (v - n_link_vcs)
                    if port not in granted_ports:
                        chosen = v
                        break
            if chosen < 0:
                for x in range(i, j):  # wrap around
                    v = requests[x][1]
                    port = v // vcs if v < n_link_vcs else m2 + (v - n_link_vcs)
                    if port not in granted_ports:
                        chosen = v
                        break
            if chosen >= 0:
                granted_ports.add(
                    chosen // vcs if chosen < n_link_vcs else m2 + (chosen - n_link_vcs))
                rr[outdl] = chosen
                grants.append(chosen)
            i = j

        # 3. execute grants (flit leaves next cycle, lands after the wire delay)
        for vcid in grants:
            pid = vc_pkt[vcid]
            pkt = packets[pid]
            flit = vc_sent[vcid]
            vc_sent[vcid] += 1
            outdl = vc_outdl[vcid]
            ovc = vc_outvc[vcid]
            credits[ovc] -= 1
            if vcid < n_link_vcs:
                credits[vcid] += 1
                counters["buffer_read"] += 1
            counters["crossbar"] += 1
            counters["link_flit_units"] += int(omega[outdl])
            counters["alloc"] += 1
            pos = vc_pos[vcid]
            at_dst = pos + 1 == len(pkt[0])
            schedule_arrival(cycle + 1 + int(delay[outdl]), ovc, pid, flit,
                             pos + 1, at_dst)
            last_progress = cycle
            if flit == nflits - 1:  # tail left this buffer
                if vcid < n_link_vcs:
                    vc_pkt[vcid] = -1
                    deactivate(vcid)
                else:
                    node = vcid - n_link_vcs
                    q = inj_queue[node]
                    if q:
                        install_injection(node, q.pop(0), cycle)
                    else:
                        vc_pkt[vcid] = -1
                        deactivate(vcid)

        # 4. arrivals scheduled for this cycle (actionable next cycle)
        ev = arrivals.pop(cycle, None)
        if ev is not None:
            last_progress = cycle
            for vcid, pid, flit, pos, at_dst in ev:
                counters["buffer_write"] += 1
                if at_dst:
                    credits[vcid] += 1  # destination buffers drain instantly
                    if flit == nflits - 1:
                        vc_pkt[vcid] = -1
                        pkt = packets.pop(pid)
                        delivered_total += 1
                        hops = len(pkt[0])
                        key = (pkt[3], pkt[4])
                        flow_delivered[key] = flow_delivered.get(key, 0) + 1
                        if pkt[2]:
                            delivered_measured += 1
                            lat = cycle - pkt[1]
                            lat_sum += lat
                            lat_hist[lat] = lat_hist.get(lat, 0) + 1
                            hop_sum += hops
                            hop_hist[hops] = hop_hist.get(hops, 0) + 1
                else:
                    vc_arr[vcid] += 1
                    if flit == 0:
                        vc_pos[vcid] = pos
                        vc_phase[vcid] = _RC
                        vc_ready[vcid] = cycle + 1
                        activate(vcid)

        # 5. new packets
        ev = injections.pop(cycle, None)
        if ev is not None:
            last_progress = cycle
            for src, dst in ev:
                dls = dls_for(src, dst)
                if len(dls) > max_hops_seen:
                    max_hops_seen = len(dls)
                measured = cycle >= cfg.warmup_cycles
                packets[next_pid] = [dls, cycle, measured, src, dst]
                injected_total += 1
                if measured:
                    injected_measured += 1
                key = (src, dst)
                flow_injected[key] = flow_injected.get(key, 0) + 1
                vcid = n_link_vcs + src
                if vc_pkt[vcid] == -1:
                    install_injection(src, next_pid, cycle)
                else:
                    inj_queue[src].append(next_pid)
                next_pid += 1

        # 6. watchdog
        if active and cycle - last_progress > 10 * cfg.pipeline_stages * max(
                max_hops_seen * 2, 10):
            deadlock = True
            log.error("deadlock watchdog fired at cycle %d", cycle)
            break
        if not packets and not injections:
            if cycle >= horizon:
                break

    if counters_at_measure_end is None:
        counters_at_measure_end = dict(counters)
        delivered_at_measure_end = delivered_measured

    power = power_accounting(counters_at_measure_end, pp, horizon,
                             basic_power(topo, pp).total, cfg)
    offered = injected_measured / (n * cfg.measure_cycles)
    accepted_frac = (delivered_at_measure_end / injected_measured
                     if injected_measured else 1.0)
    return SimReport(
        injected=injected_measured,
        delivered=delivered_measured,
        in_flight=len(packets),
        avg_latency=lat_sum / delivered_measured if delivered_measured else 0.0,
        latency_hist=lat_hist,
        avg_hops=hop_sum / delivered_measured if delivered_measured else 0.0,
        hop_hist=hop_hist,
        offered=offered,
        accepted=offered * accepted_frac,
        power=power,
        congested=accepted_frac < 0.95 or deadlock,
        deadlock=deadlock,
        cycles_run=cycle,
        seed=cfg.seed,
        flow_injected=flow_injected,
        flow_delivered=flow_delivered,
    )


def power_accounting(counters: dict[str, int], params: PowerParams,
                     duration_cycles: int, basic_total: float,
                     config: SimConfig) -> dict[str, float]:
    """Event counts x per-event energies over the simulated span, normalized
    by wall time at the configured clock."""
    seconds = duration_cycles / config.clock_freq_hz
    if seconds <= 0:
        seconds = 1.0
    buf = (counters["buffer_write"] * params.buffer_write_energy
           + counters["buffer_read"] * params.buffer_read_energy) / seconds
    xbar = counters["crossbar"] * params.crossbar_energy / seconds
    link = (counters["link_flit_units"] * params.j_l_per_unit
            * config.flit_bits) / seconds
    alloc = counters["alloc"] * params.allocator_energy / seconds
    comm = buf + xbar + link + alloc
    return {
        "basic": basic_total,
        "buffer": buf,
        "crossbar": xbar,
        "link": link,
        "allocator": alloc,
        "communication": comm,
        "total": basic_total + comm,
    }


def forest_lookup(forest) -> "callable":
    """route_lookup adapter for a RouteForest."""
    def lookup(src: int, dst: int):
        return forest.path(src, dst)
    return lookup


def table_lookup(table: dict[tuple[int, int], tuple[tuple[int, ...], bool]]) -> "callable":
    """route_lookup adapter for a loaded routing-table file."""
    def lookup(src: int, dst: int):
        got = table.get((src, dst))
        if got is None:
            raise KeyError(f"routing table lacks an entry for ({src},{dst})")
        return got[0]
    return lookup


def zero_load_probe(topo: Topology, route_lookup, src: int, dst: int,
                    config: SimConfig | None = None,
                    power_params: PowerParams | None = None) -> int:
    """Deliver one packet through an otherwise idle network and return its
    measured latency in cycles."""
    cfg = config or SimConfig()
    probe_cfg = SimConfig(
        clock_freq_hz=cfg.clock_freq_hz, flit_bits=cfg.flit_bits,
        packet_flits=cfg.packet_flits, vcs_per_port=cfg.vcs_per_port,
        vc_buffer_flits=cfg.vc_buffer_flits, pipeline_stages=cfg.pipeline_stages,
        warmup_cycles=0, measure_cycles=1000, drain_cycles=100000,
        seed=cfg.seed,
    )
    traffic = TrafficSpec(mode="oneshot", shots=[(src, dst, 0)])
    report = run(topo, route_lookup, traffic, probe_cfg, power_params)
    if report.delivered != 1:
        raise RuntimeError("probe packet was not delivered")
    return next(iter(report.latency_hist))
