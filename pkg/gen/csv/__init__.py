from .writer import format_cell, write_csv, read_csv  # noqa: F401

__all__ = ["format_cell", "write_csv", "read_csv"]
