#!/usr/bin/env python3
"""
graphflow - numerical laboratory for entire convex graphs moving by powers of mean curvature.

Delegates to app.cli; see `python graphflow.py --help`.
"""
from app.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
