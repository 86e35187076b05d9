"""Command-line layer: configuration, runs and the acceptance battery."""
