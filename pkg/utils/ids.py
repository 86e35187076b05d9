from __future__ import annotations

import hashlib


def stable_id(s: str) -> str:
    """Deterministic element id derived from a content key."""
    return "id_" + hashlib.sha1(s.encode("utf-8")).hexdigest()[:16]


__all__ = ["stable_id"]
