#!/usr/bin/env python3
"""
Types module for the graph-flow laboratory.
Centralized type definitions organized by concern.
"""

from .base import (
    FloatArray, BoolArray,
    NodeIndex, Point,
    CsvValue,
)

from .flow import (
    TimeStepKind, BoundaryKind, EvolutionIdentity,
    MinorConvention, DivergenceScheme, ProfileExpectation,
)

from .protocols import InitialDataGenerator

__all__ = [
    # Base types
    'FloatArray', 'BoolArray', 'NodeIndex', 'Point', 'CsvValue',

    # Enums
    'TimeStepKind', 'BoundaryKind', 'EvolutionIdentity',
    'MinorConvention', 'DivergenceScheme', 'ProfileExpectation',

    # Protocols
    'InitialDataGenerator',
]
