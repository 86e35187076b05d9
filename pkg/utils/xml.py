from __future__ import annotations

TICK_FORMAT = "{:.4g}"
COORD_FORMAT = "{:.2f}"


def tick_label(x: float) -> str:
    """Axis labels use a fixed four-significant-digit format."""
    label = TICK_FORMAT.format(x)
    return "0" if label in ("-0", "0") else label


def coord(x: float) -> str:
    label = COORD_FORMAT.format(x)
    return "0.00" if label == "-0.00" else label


__all__ = ["tick_label", "coord", "TICK_FORMAT", "COORD_FORMAT"]
