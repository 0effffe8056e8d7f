"""Small shared helpers: hashing, canonical JSON, deterministic rounding."""

import hashlib
import json
import math
from pathlib import Path

_CHUNK = 1 << 16


def sha256_file(path: Path) -> str:
    """SHA256 hex digest of a file, read in 64 KB chunks."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        while True:
            chunk = f.read(_CHUNK)
            if not chunk:
                break
            h.update(chunk)
    return h.hexdigest()


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def canonical_json(obj) -> str:
    """Serialize to canonical JSON: sorted keys, 2-space indent, LF, trailing newline.

    Byte-stable for identical inputs, so checksums of the output are stable.
    """
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def round_half_up(x: float) -> int:
    """Round to nearest integer, halves away from floor (0.5 -> 1, 1.5 -> 2).

    Used wherever a proportion is converted to a count so the rule is
    platform-independent and documentable, unlike banker's rounding.
    """
    return int(math.floor(x + 0.5))
