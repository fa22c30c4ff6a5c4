"""Sparse and foldable multilayer user-side RIS: channels, AO beamforming and tabu topology search."""

from .beamforming import BeamformingSolution, CascadeContext, achievable_rate, ao_solve
from .config import SystemConfig, parse_config
from .geometry import AngleSet, FoldConfiguration, SurfaceSpec, apply_fold, build_angle_set, max_fold_angle
from .scenario import AOParams, Scenario
from .search import ActivationTopology, SearchParams, joint_pipeline

__version__ = "0.1.0"

__all__ = [
    "AOParams", "ActivationTopology", "AngleSet", "BeamformingSolution", "CascadeContext",
    "FoldConfiguration", "Scenario", "SearchParams", "SurfaceSpec", "SystemConfig",
    "achievable_rate", "ao_solve", "apply_fold", "build_angle_set", "joint_pipeline",
    "max_fold_angle", "parse_config",
]
