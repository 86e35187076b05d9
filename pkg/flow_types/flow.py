#!/usr/bin/env python3
"""
Enums shared by the solver, the diagnostics and the command line.
"""

from enum import Enum


class TimeStepKind(Enum):
    FIXED = "fixed"
    CFL = "cfl"


class BoundaryKind(Enum):
    """How boundary nodes of the truncated domain are updated."""
    FROZEN = "frozen"
    BARRIER = "barrier"
    EXTRAPOLATE = "extrapolate"


class EvolutionIdentity(Enum):
    """Evolution equations (speed, gradient function, position) checked on spheres."""
    SPEED = "speed"
    GRADIENT_FUNCTION = "gradient_function"
    POSITION = "position"


class MinorConvention(Enum):
    """Closed form used for the principal minors of the concavity matrix."""
    DERIVED = "derived"
    PRINTED = "printed"


class DivergenceScheme(Enum):
    EXPANDED = "expanded"
    FLUX = "flux"


class ProfileExpectation(Enum):
    """Assertion attached to a ν-profile run."""
    NONE = "none"
    DECAY = "decay"
    PLATEAU = "plateau"
