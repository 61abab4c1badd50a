"""Parameterized switch/link power and delay model.

Supplies the traffic-independent basic power (static + clocking) used to
score candidate topologies, the per-bit energies consumed by route-cost
evaluation, and link traversal delays for the simulator.

Default coefficients are a calibration, not a physics claim: they are
chosen so the mesh/torus/grown-topology basic-power ratios land where the
targeted process reports them (torus a few percent above mesh, the grown
topology 10-40% above).  Absolute watts depend on process coefficients
that are not reproduced here; everything is overridable from a key=value
parameter file.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .grid import Topology


@dataclass
class PowerParams:
    # basic (traffic-independent) power, watts
    switch_base: float = 1.316e-3       # per switch
    switch_per_port: float = 5.0e-5     # per port (linear radix term)
    crossbar_quad: float = 1.5e-4       # per port^2 (superlinear radix term)
    link_leak_per_unit: float = 2.5e-5  # per Manhattan unit of repeatered wire
    # per-bit transfer energies, joules/bit
    j_s_base: float = 0.5e-12
    j_s_per_port: float = 0.1e-12
    j_l_per_unit: float = 0.2e-12
    # repeatered-wire delay, cycles per Manhattan unit (rounded up, min 1)
    delay_per_unit: float = 0.2
    # per-flit event energies for simulator activity counters, joules/flit
    buffer_write_energy: float = 3.2e-12
    buffer_read_energy: float = 2.4e-12
    crossbar_energy: float = 4.0e-12
    allocator_energy: float = 0.5e-12

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be nonnegative")
        if self.crossbar_quad <= 0:
            raise ValueError("crossbar_quad must be positive (superlinear switch cost)")

    def save(self, path) -> None:
        with open(path, "w") as fh:
            for f in fields(self):
                fh.write(f"{f.name}={getattr(self, f.name)!r}\n")

    @classmethod
    def load(cls, path) -> "PowerParams":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key=value")
                key, _, val = line.partition("=")
                key = key.strip()
                if key not in known:
                    raise ValueError(f"{path}:{lineno}: unknown parameter {key!r}")
                kwargs[key] = float(val)
        return cls(**kwargs)


@dataclass
class PowerReport:
    switch_static: float
    switch_clock: float
    link_leak: float

    @property
    def total(self) -> float:
        return self.switch_static + self.switch_clock + self.link_leak


def basic_power(topo: Topology, params: PowerParams | None = None) -> PowerReport:
    """Static + clocking power of all switches and repeatered links."""
    p = params or PowerParams()
    static = 0.0
    clock = 0.0
    for a in topo.adj:
        deg = len(a)
        static += p.switch_base + p.switch_per_port * deg
        clock += p.crossbar_quad * deg * deg
    leak = p.link_leak_per_unit * topo.total_wire_length()
    return PowerReport(switch_static=static, switch_clock=clock, link_leak=leak)


def per_bit_energies(radix: int, length: int, params: PowerParams | None = None) -> tuple[float, float]:
    """(J_s, J_l): per-bit energy of a switch of the given radix and of a link of the given length."""
    if radix < 1 or length < 1:
        raise ValueError("radix and length must be >= 1")
    p = params or PowerParams()
    return (p.j_s_base + p.j_s_per_port * radix, p.j_l_per_unit * length)


def link_delay(length: int, params: PowerParams | None = None) -> int:
    """Cycles to traverse a repeatered link of the given Manhattan length."""
    if length < 1:
        raise ValueError("length must be >= 1")
    p = params or PowerParams()
    return max(1, math.ceil(p.delay_per_unit * length))
