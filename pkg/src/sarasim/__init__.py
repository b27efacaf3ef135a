"""Slotted-time SINR random-access network simulator with exact oracles."""

from .aloha import AlohaParams, ase_curve, max_ase, optimal_phi, rho, success_probability
from .channel import ChannelParams, SinrEstimator, instantaneous_sinr, sample_gains
from .engine import RunConfig, RunMetrics, run, run_drop, run_experiment, two_phi_surface
from .geometry import Region, Topology, generate_topology, load_topology, save_topology
from .oracle import (
    ProbVector,
    SubsetSinrTable,
    check_axioms,
    conditional_avg_sinr,
    expected_success_count,
    fixed_point_iterate,
    interference_function,
    subset_probability,
    utility_value,
)
from .policies import Feedback, PolicySpec, make_policy

__version__ = "0.1.0"

__all__ = [
    "AlohaParams", "ase_curve", "max_ase", "optimal_phi", "rho", "success_probability",
    "ChannelParams", "SinrEstimator", "instantaneous_sinr", "sample_gains",
    "RunConfig", "RunMetrics", "run", "run_drop", "run_experiment", "two_phi_surface",
    "Region", "Topology", "generate_topology", "load_topology", "save_topology",
    "ProbVector", "SubsetSinrTable", "check_axioms", "conditional_avg_sinr",
    "expected_success_count", "fixed_point_iterate", "interference_function",
    "subset_probability", "utility_value",
    "Feedback", "PolicySpec", "make_policy",
    "__version__",
]
