from .svg_meta import SvgMetaModel, DEFAULT_SVG_META

__all__ = [
    "SvgMetaModel",
    "DEFAULT_SVG_META",
]
