"""NoC synthesis toolkit: scale-free small-world topology generation,
community-driven application mapping, deadlock-free routing, and a
flit-level wormhole simulator."""

from .grid import (Coord, Topology, build_mesh, build_torus, manhattan,
                   all_pairs_min_hop, hop_and_length_tables, metrics,
                   min_hop_path_length, rough_comm_cost)
from .topogen import (GrowthParams, compute_ma, degree_frequencies,
                      expected_link_prob, grow, basic_obj, sweep)
from .community import (CommunityPartition, HubSet, detect_communities,
                        modularity, participation_index, classify_hubs)
from .mapping import (TaskGraph, MappingCostParams, pad_spares,
                      initial_assignment, assignment_cost, sa_refine,
                      detailed_place, core_comm_graph)
from .routing import (TurnSet, turn_prohibition, RoutingProblem,
                      lagrangian_route, ilp_oracle, validate_solution,
                      flow_link_cost, LinkSpace, RouteForest)
from .power import PowerParams, basic_power, per_bit_energies, link_delay
from .sim import (SimConfig, TrafficSpec, run, synthetic_pattern,
                  traffic_from_flows, SimReport)

__version__ = "0.1.0"
