#!/usr/bin/env python3
"""
Protocols for pluggable pieces of the graph-flow laboratory.
"""

from typing import TYPE_CHECKING, Protocol

if TYPE_CHECKING:
    from core.grid import GridFunction, GridSpec


class InitialDataGenerator(Protocol):
    """Builds an initial datum on a given grid (used by nested-domain studies)."""
    def __call__(self, spec: "GridSpec") -> "GridFunction": ...
