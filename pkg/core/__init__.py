#!/usr/bin/env python3
"""
Core module initialization with centralized path management.

Grids, geometry, exact solutions and the flow solver.
"""

import sys
from pathlib import Path

# Single point of path configuration
_project_root = Path(__file__).parent.parent
if str(_project_root) not in sys.path:
    sys.path.insert(0, str(_project_root))

# Re-export commonly used core components
from .grid import GridSpec, GridFunction
from .geometry import GeometryFields, geometry_fields, derivatives
from .exact_solutions import SphereSolution, BarrierSpec, sphere_radius, solve_barrier, scenario
from .solver import FlowParams, TimeStepPolicy, BoundaryPolicy, Trajectory, run, step

__all__ = [
    'GridSpec', 'GridFunction',
    'GeometryFields', 'geometry_fields', 'derivatives',
    'SphereSolution', 'BarrierSpec', 'sphere_radius', 'solve_barrier', 'scenario',
    'FlowParams', 'TimeStepPolicy', 'BoundaryPolicy', 'Trajectory', 'run', 'step',
]
