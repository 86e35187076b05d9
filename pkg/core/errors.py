#!/usr/bin/env python3
"""
Exception hierarchy for the graph-flow laboratory.

Errors that describe bad input also derive from ValueError so callers that
only care about "invalid argument" can keep catching ValueError.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from flow_types import NodeIndex


class FlowError(Exception):
    """Base class for every error raised by this package."""

    def details(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "message": str(self)}


class NonFiniteValues(FlowError, ValueError):
    pass


class SphereVanished(FlowError, ValueError):
    def __init__(self, t: float, extinction_time: float) -> None:
        super().__init__(f"sphere has vanished: t={t!r} is beyond extinction time {extinction_time!r}")
        self.t = t
        self.extinction_time = extinction_time

    def details(self) -> Dict[str, Any]:
        d = super().details()
        d.update(t=self.t, extinction_time=self.extinction_time)
        return d


class GridExceedsCap(FlowError, ValueError):
    pass


class BarrierNotFound(FlowError, ValueError):
    pass


class UnknownScenario(FlowError, ValueError):
    pass


class ConvexityLost(FlowError):
    """Mean curvature fell to the convexity floor at an interior node."""

    def __init__(self, node: NodeIndex, t: float, value: float) -> None:
        super().__init__(f"convexity lost at node {node} at t={t!r} (H={value!r})")
        self.node = tuple(int(i) for i in node)
        self.t = t
        self.value = value

    def details(self) -> Dict[str, Any]:
        d = super().details()
        d.update(node=list(self.node), t=self.t, value=self.value)
        return d


class StiffnessFailure(FlowError):
    def __init__(self, dt: float, t: float) -> None:
        super().__init__(f"time step underflow: dt={dt!r} at t={t!r}")
        self.dt = dt
        self.t = t

    def details(self) -> Dict[str, Any]:
        d = super().details()
        d.update(dt=self.dt, t=self.t)
        return d


class DomainRunFailed(FlowError):
    """A run inside a nested-domain study failed; labels the domain."""

    def __init__(self, half_width: float, cause: Exception) -> None:
        super().__init__(f"run on domain L={half_width!r} failed: {cause}")
        self.half_width = half_width
        self.cause = cause

    def details(self) -> Dict[str, Any]:
        d = super().details()
        d["half_width"] = self.half_width
        if isinstance(self.cause, FlowError):
            d["cause"] = self.cause.details()
        return d


class PatchInvalid(FlowError):
    def __init__(self, t: float, reason: str) -> None:
        super().__init__(f"patch invalid at t={t!r}: {reason}")
        self.t = t
        self.reason = reason

    def details(self) -> Dict[str, Any]:
        d = super().details()
        d.update(t=self.t, reason=self.reason)
        return d


class DirectionNotAttained(FlowError):
    def __init__(self, direction: Sequence[float], t: float, distance: float) -> None:
        super().__init__(
            f"normal direction {list(direction)} not attained at t={t!r} (closest |nu - p| = {distance!r})"
        )
        self.direction = [float(c) for c in direction]
        self.t = t
        self.distance = distance

    def details(self) -> Dict[str, Any]:
        d = super().details()
        d.update(direction=self.direction, t=self.t, distance=self.distance)
        return d


@dataclass
class ConfigIssue:
    line: int
    key: Optional[str]
    message: str

    def __str__(self) -> str:
        where = f"line {self.line}" if self.line else "config"
        return f"{where}: {self.message}"


class ConfigError(FlowError, ValueError):
    """Carries every problem found in a configuration, not just the first."""

    def __init__(self, issues: List[ConfigIssue]) -> None:
        super().__init__("; ".join(str(i) for i in issues))
        self.issues = issues

    def details(self) -> Dict[str, Any]:
        d = super().details()
        d["issues"] = [{"line": i.line, "key": i.key, "message": i.message} for i in self.issues]
        return d


__all__ = [
    "FlowError",
    "NonFiniteValues",
    "SphereVanished",
    "GridExceedsCap",
    "BarrierNotFound",
    "UnknownScenario",
    "ConvexityLost",
    "StiffnessFailure",
    "DomainRunFailed",
    "PatchInvalid",
    "DirectionNotAttained",
    "ConfigIssue",
    "ConfigError",
]
