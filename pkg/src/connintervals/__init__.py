"""Monte Carlo tools for connection intervals in dynamic multi-hop networks."""

from .geometry import Boundary, GridIndex, PointSet, Window, ball_count, radius_neighbors, sample_ppp
from .graph import (SpatialGraph, build_graph, cluster_stats, hop_distance, k_hop_connected,
                    nearest_cluster_point, percolates_beyond)
from .intervals import (IntervalSet, TimeGrid, component_length, discretized_length, intersect,
                        total_length, truncate, union)
from .mobility import (MobileEnsemble, NodeTrace, WaypointLaw, diffusive_rescale_check,
                       position_at, sample_brownian_path, simulate_ensemble, simulate_trace)

__all__ = [
    "Boundary", "GridIndex", "PointSet", "Window", "ball_count", "radius_neighbors", "sample_ppp",
    "SpatialGraph", "build_graph", "cluster_stats", "hop_distance", "k_hop_connected",
    "nearest_cluster_point", "percolates_beyond", "IntervalSet", "TimeGrid", "component_length",
    "discretized_length", "intersect", "total_length", "truncate", "union", "MobileEnsemble",
    "NodeTrace", "WaypointLaw", "diffusive_rescale_check", "position_at",
    "sample_brownian_path", "simulate_ensemble", "simulate_trace",
]
