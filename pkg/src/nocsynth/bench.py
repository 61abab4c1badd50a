"""Synthetic application benchmark generators.

Planted-cluster task graphs echo the shape of large graph workloads:
groups of tasks with heavy internal traffic and sparse lighter traffic
between groups.  Deterministic for equal seeds.
"""
from __future__ import annotations

import numpy as np

from .mapping import TaskGraph


def planted_task_graph(n_tasks: int, n_clusters: int,
                       intra_flows_per_task: float = 3.0,
                       inter_flow_fraction: float = 0.15,
                       intra_demand: tuple[float, float] = (20.0, 300.0),
                       inter_demand: tuple[float, float] = (2.0, 30.0),
                       seed: int = 0) -> TaskGraph:
    """Task graph with n_clusters equal groups, dense heavy flows inside each
    group and sparse light flows between groups."""
    if n_tasks % n_clusters:
        raise ValueError("n_tasks must divide evenly into clusters")
    rng = np.random.default_rng(seed)
    size = n_tasks // n_clusters
    tg = TaskGraph(n_tasks)

    def draw_pair(lo: int, hi: int) -> tuple[int, int]:
        u = int(rng.integers(lo, hi))
        v = int(rng.integers(lo, hi))
        while v == u:
            v = int(rng.integers(lo, hi))
        return u, v

    n_intra = int(round(intra_flows_per_task * size))
    for c in range(n_clusters):
        lo, hi = c * size, (c + 1) * size
        for _ in range(n_intra):
            u, v = draw_pair(lo, hi)
            tg.add_flow(u, v, float(rng.integers(int(intra_demand[0]),
                                                 int(intra_demand[1]) + 1)))
    n_inter = int(round(inter_flow_fraction * n_intra * n_clusters))
    for _ in range(n_inter):
        u = int(rng.integers(0, n_tasks))
        v = int(rng.integers(0, n_tasks))
        while v // size == u // size:
            v = int(rng.integers(0, n_tasks))
        tg.add_flow(u, v, float(rng.integers(int(inter_demand[0]),
                                             int(inter_demand[1]) + 1)))
    return tg
