"""Result files: atomic writes and deterministic JSON/TSV serialization."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

FORMAT_VERSION = "hypchain-results/1"


def atomic_write(path: str | os.PathLike, data: str | bytes) -> Path:
    """Write ``data`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_json(path, payload: dict, config: dict) -> Path:
    doc = {"format_version": FORMAT_VERSION, "config": config, **payload}
    return atomic_write(path, dumps(doc))


def write_tsv(path, body: str, config: dict) -> Path:
    """TSV with the resolved config embedded as ``#`` comment lines."""
    header = f"# format_version: {FORMAT_VERSION}\n# config: {json.dumps(config, sort_keys=True)}\n"
    return atomic_write(path, header + body)


def read_tsv_body(text: str) -> str:
    return "".join(line + "\n" for line in text.splitlines() if not line.startswith("#"))
