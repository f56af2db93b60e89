"""Experiment harness: CLI orchestration, persistence, reproduction recipes."""

from .experiments import (
    build_network,
    convergence_analysis,
    convergence_bundle,
    critical_gamma,
    make_synthetic,
    parallel_map,
    resolve_config,
    run_sweep,
)
from .spec import ExperimentSpec

__all__ = [
    "ExperimentSpec",
    "build_network",
    "convergence_analysis",
    "convergence_bundle",
    "critical_gamma",
    "make_synthetic",
    "parallel_map",
    "resolve_config",
    "run_sweep",
]
