"""
Read-only checks run on trajectories and exact solutions.
"""

from .nu_condition import (
    NuProfile, nu_profile, NuPreservationReport, nu_preservation_check,
    BarrierHeightReport, barrier_height_check,
)
from .c2_estimates import Patch, C2Monitor, c2_monitor, c2_closed_form
from .evolution import IdentityResidual, evolution_identity_check, identity_sweep
from .harnack import (
    DualConcavityReport, dual_concavity_check, sample_lambdas,
    HarnackRecord, harnack_check, locate_direction,
    VelocityFloorReport, velocity_floor_check,
)
from .normal_image import NormalImageReport, normal_image_disjointness

__all__ = [
    'NuProfile', 'nu_profile', 'NuPreservationReport', 'nu_preservation_check',
    'BarrierHeightReport', 'barrier_height_check',
    'Patch', 'C2Monitor', 'c2_monitor', 'c2_closed_form',
    'IdentityResidual', 'evolution_identity_check', 'identity_sweep',
    'DualConcavityReport', 'dual_concavity_check', 'sample_lambdas',
    'HarnackRecord', 'harnack_check', 'locate_direction',
    'VelocityFloorReport', 'velocity_floor_check',
    'NormalImageReport', 'normal_image_disjointness',
]
