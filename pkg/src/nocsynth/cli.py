"""Command-line pipeline: generate/sweep topologies, detect communities,
map task graphs, compute routes, and run the wormhole simulator.

Every stage reads and writes plain-text artifact files so stages compose:
generate -> communities -> map -> route -> simulate.  A key=value config
file can override any flag default; flags given explicitly win.
"""
from __future__ import annotations

import argparse
import sys

from . import community as community_mod
from . import grid, mapping, power, routing, sim, topogen

_SUBPARSERS: dict[str, argparse.ArgumentParser] = {}


def _load_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _topology_from_args(args) -> grid.Topology:
    if getattr(args, "mesh", None):
        return grid.build_mesh(args.mesh)
    if getattr(args, "torus", None):
        return grid.build_torus(args.torus)
    if getattr(args, "topo", None):
        return grid.Topology.load(args.topo)
    raise ValueError("no topology given (use --topo, --mesh, or --torus)")


def _power_params(args) -> power.PowerParams:
    if getattr(args, "power_params", None):
        return power.PowerParams.load(args.power_params)
    return power.PowerParams()


def cmd_generate(args) -> int:
    params = topogen.GrowthParams(
        n=args.n, m=args.m, l_a=args.la, k=args.k,
        gamma=args.gamma, beta=args.beta, init_side=args.init_side,
    )
    topo = topogen.grow(params)
    topo.save(args.out)
    print(f"generated n={topo.n} links={topo.link_count} "
          f"wire_length={topo.total_wire_length()} max_degree={int(topo.degrees().max())}")
    return 0


def cmd_sweep(args) -> int:
    result = topogen.sweep(
        n=args.n, m=args.m, l_a=args.la, k=args.k, init_side=args.init_side,
        gamma_range=(args.gamma_min, args.gamma_max),
        beta_range=(args.beta_min, args.beta_max),
        step=args.step, alpha=args.alpha, power_params=_power_params(args),
        power_threshold=args.power_threshold,
    )
    result.save_csv(args.out_csv)
    rec = result.selected_record
    print(f"selected gamma={rec.gamma:.1f} beta={rec.beta:.1f} "
          f"obj={rec.obj:.4f} alpha={result.alpha:.1f}")
    if args.out:
        topo = topogen.grow(result.selected_params())
        topo.save(args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_metrics(args) -> int:
    topo = _topology_from_args(args)
    met = grid.metrics(topo)
    p = power.basic_power(topo, _power_params(args)).total
    name = args.topo or (f"mesh{args.mesh}" if args.mesh else f"torus{args.torus}")
    print(f"{name} n={topo.n} avg_hop={met.avg_hop:.2f} links={met.link_count} "
          f"wl={round(met.wire_length_report)} comm_cost={met.comm_cost_report:.1E} "
          f"basic_power={p:.2f}")
    return 0


def cmd_communities(args) -> int:
    topo = _topology_from_args(args)
    part = community_mod.detect_communities(topo, td=args.td)
    hubs = community_mod.classify_hubs(topo, part)
    part.save(args.out_partition)
    hubs.save(args.out_hubs)
    sizes = [len(c) for c in part.communities]
    print(f"communities={part.n_m} modularity={part.q:.4f} "
          f"max_size={max(sizes)} td={args.td}")
    return 0


def cmd_map(args) -> int:
    topo = _topology_from_args(args)
    tg = mapping.TaskGraph.load(args.tasks)
    part = community_mod.CommunityPartition.load(args.partition, topo, td=args.td)
    hubs_raw = community_mod.HubSet.load(args.hubs)
    hubs = community_mod.classify_hubs(topo, part)
    hubs.by_comm = hubs_raw  # placement follows the hub file as written
    params = mapping.MappingCostParams(r=args.r, phi=args.phi, seed=args.seed)
    hop = grid.all_pairs_min_hop(topo)
    ctx = mapping.build_context(topo, part, hubs, params, hop)

    tg = mapping.pad_spares(tg, topo.n)
    assign = mapping.initial_assignment(tg, part)
    cost0 = mapping.assignment_cost(assign, tg, ctx)
    assign, cost = mapping.sa_refine(assign, tg, ctx)
    placement = mapping.detailed_place(assign, tg, ctx)
    placement.save(args.out_placement)
    print(f"mapped tasks={tg.n_tasks} flows={tg.flow_count} "
          f"cost_initial={cost0:.4g} cost_refined={cost:.4g}")
    return 0


def cmd_route(args) -> int:
    topo = _topology_from_args(args)
    tg = mapping.TaskGraph.load(args.tasks)
    placement = mapping.Placement.load(args.placement, topo.n)
    core_flows = mapping.core_comm_graph(placement, tg)
    turnset = routing.turn_prohibition(topo)
    problem = routing.RoutingProblem(
        topo=topo, flows=[(s, d, cr) for (s, d), cr in sorted(core_flows.items())],
        hop_cap=args.hop_cap, link_cap=args.link_cap,
        power_params=_power_params(args),
    )
    sol = routing.lagrangian_route(problem, turnset)
    sol.save(args.out)
    print(f"routed flows={len(problem.flows)} success={sol.success_pct:.1f}% "
          f"iterations={sol.iterations}")
    if args.out_traffic:
        spec, rejected = sim.traffic_from_flows(core_flows, args.link_cap,
                                                args.packet_flits)
        spec.save(args.out_traffic)
        if rejected:
            print(f"rejected {len(rejected)} flows with rate >= 1")
    return 0


def cmd_simulate(args) -> int:
    topo = _topology_from_args(args)
    pp = _power_params(args)
    if args.traffic:
        traffic = sim.TrafficSpec.load(args.traffic)
    elif args.pattern:
        traffic = sim.TrafficSpec(mode=args.pattern, injection_rate=args.rate)
    else:
        raise ValueError("give either --traffic FILE or --pattern KIND --rate R")
    packet_flits = args.packet_flits
    if packet_flits is None:
        packet_flits = 10 if traffic.mode == "table" else 5
    cfg = sim.SimConfig(
        packet_flits=packet_flits, warmup_cycles=args.warmup,
        measure_cycles=args.measure, drain_cycles=args.drain, seed=args.seed,
    )
    if args.routes:
        table = routing.load_routing_table(args.routes)
        lookup = sim.table_lookup(table)
    else:
        turnset = routing.turn_prohibition(topo)
        forest = routing.RouteForest(routing.LinkSpace(topo, turnset, pp))
        lookup = sim.forest_lookup(forest)
    report = sim.run(topo, lookup, traffic, cfg, pp)
    with open(args.report, "w") as fh:
        fh.write(report.to_text())
    if args.csv:
        import os
        new = not os.path.exists(args.csv)
        with open(args.csv, "a") as fh:
            if new:
                fh.write(report.CSV_HEADER + "\n")
            fh.write(report.to_csv_row() + "\n")
    print(f"simulated: delivered={report.delivered} avg_latency={report.avg_latency:.2f} "
          f"avg_hops={report.avg_hops:.2f} congested={int(report.congested)}")
    return 0 if not report.deadlock else 1


def cmd_ingest_snap(args) -> int:
    """Edge-list ingestion: whitespace u v [w] lines, '#' comments, ids
    remapped to 0..k-1 by sorted original id, duplicate edges summed."""
    edges: dict[tuple[int, int], float] = {}
    ids: set[int] = set()
    dropped_self = 0
    with open(args.infile) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                u, v = int(parts[0]), int(parts[1])
                w = float(parts[args.weight_col - 1]) if args.weight_col else 1.0
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{args.infile}:{lineno}: malformed edge line") from exc
            if u == v:
                dropped_self += 1
                continue
            ids.add(u)
            ids.add(v)
            edges[(u, v)] = edges.get((u, v), 0.0) + w
    remap = {orig: i for i, orig in enumerate(sorted(ids))}
    tg = mapping.TaskGraph(len(remap))
    for (u, v), w in sorted(edges.items()):
        tg.add_flow(remap[u], remap[v], w)
    tg.save(args.out)
    msg = f"ingested tasks={tg.n_tasks} flows={tg.flow_count}"
    if dropped_self:
        msg += f" dropped_self_loops={dropped_self}"
    print(msg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nocsynth", description=__doc__)
    ap.add_argument("--config", help="key=value file overriding flag defaults")
    subparsers = ap.add_subparsers(dest="command", required=True)

    class _Sub:
        def add_parser(self, name, **kw):
            p = subparsers.add_parser(name, **kw)
            _SUBPARSERS[name] = p
            return p

    sub = _Sub()

    def topo_flags(p):
        p.add_argument("--topo", help="topology file")
        p.add_argument("--mesh", type=int, help="built-in mesh of side t")
        p.add_argument("--torus", type=int, help="built-in torus of side t")

    p = sub.add_parser("generate", help="grow a topology")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=15)
    p.add_argument("--la", type=int, default=15)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--gamma", type=float, default=0.7)
    p.add_argument("--beta", type=float, default=1.4)
    p.add_argument("--init-side", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sweep", help="sweep the exponents and select a topology")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=15)
    p.add_argument("--la", type=int, default=15)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--init-side", type=int, default=4)
    p.add_argument("--gamma-min", type=float, default=0.5)
    p.add_argument("--gamma-max", type=float, default=2.5)
    p.add_argument("--beta-min", type=float, default=1.0)
    p.add_argument("--beta-max", type=float, default=3.0)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--power-threshold", type=float, default=1.3)
    p.add_argument("--power-params")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out", help="write the selected topology here")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("metrics", help="summary metrics of a topology")
    topo_flags(p)
    p.add_argument("--power-params")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("communities", help="detect communities and hubs")
    topo_flags(p)
    p.add_argument("--td", type=int, default=150)
    p.add_argument("--out-partition", required=True)
    p.add_argument("--out-hubs", required=True)
    p.set_defaults(func=cmd_communities)

    p = sub.add_parser("map", help="map a task graph onto cores")
    topo_flags(p)
    p.add_argument("--tasks", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--hubs", required=True)
    p.add_argument("--td", type=int, default=150)
    p.add_argument("--r", type=int, default=4)
    p.add_argument("--phi", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-placement", required=True)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("route", help="compute deadlock-free routes for mapped flows")
    topo_flags(p)
    p.add_argument("--tasks", required=True)
    p.add_argument("--placement", required=True)
    p.add_argument("--hop-cap", type=int, default=12)
    p.add_argument("--link-cap", type=float, default=4000.0)
    p.add_argument("--packet-flits", type=int, default=10)
    p.add_argument("--power-params")
    p.add_argument("--out", required=True)
    p.add_argument("--out-traffic", help="also write per-flow injection rates")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("simulate", help="run the wormhole simulator")
    topo_flags(p)
    p.add_argument("--routes", help="routing-table file (table traffic)")
    p.add_argument("--traffic", help="traffic file")
    p.add_argument("--pattern", choices=sim.SYNTHETIC_KINDS)
    p.add_argument("--rate", type=float, default=1e-3)
    p.add_argument("--packet-flits", type=int, default=None)
    p.add_argument("--warmup", type=int, default=30000)
    p.add_argument("--measure", type=int, default=100000)
    p.add_argument("--drain", type=int, default=30000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--power-params")
    p.add_argument("--report", required=True)
    p.add_argument("--csv", help="append a CSV row here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest-snap", help="convert an edge list to a task graph")
    p.add_argument("--infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--weight-col", type=int, default=0,
                   help="1-based column holding demands (0 = unweighted)")
    p.set_defaults(func=cmd_ingest_snap)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    ap = build_parser()
    # apply config-file defaults before the real parse
    if "--config" in argv:
        idx = argv.index("--config")
        cfg = _load_config(argv[idx + 1])
        for p in _SUBPARSERS.values():
            known = {a.dest for a in p._actions}
            p.set_defaults(**{k: _coerce(v) for k, v in cfg.items() if k in known})
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _coerce(val: str):
    for cast in (int, float):
        try:
            return cast(val)
        except ValueError:
            continue
    return val


if __name__ == "__main__":
    sys.exit(main())
