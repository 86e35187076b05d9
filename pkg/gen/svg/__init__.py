from .writer import PlotSpec, SvgPlotWriter, emit_plot  # noqa: F401

__all__ = ["PlotSpec", "SvgPlotWriter", "emit_plot"]
