"""Parameter checkpoints.

A checkpoint is a numpy ``.npz`` archive. Every parameter is stored under its
dotted name as a float64 array. One extra entry, ``__manifest__``, holds a
UTF-8 JSON object with at least ``{"format": "diaster.ckpt", "version": 1}``
plus whatever the caller adds (method tag, cut count, training step, ...).
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np

FORMAT = "diaster.ckpt"
VERSION = 1
_MANIFEST = "__manifest__"


def save_checkpoint(path: str | Path, params: dict[str, np.ndarray], manifest: dict | None = None) -> None:
    if _MANIFEST in params:
        raise ValueError(f"parameter name {_MANIFEST!r} is reserved")
    meta = {"format": FORMAT, "version": VERSION, **(manifest or {})}
    arrays = {k: np.asarray(v, dtype=np.float64) for k, v in sorted(params.items())}
    arrays[_MANIFEST] = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    with np.load(Path(path), allow_pickle=False) as data:
        if _MANIFEST not in data:
            raise ValueError(f"{path} is not a {FORMAT} checkpoint")
        meta = json.loads(data[_MANIFEST].tobytes().decode())
        if meta.get("format") != FORMAT or meta.get("version") != VERSION:
            raise ValueError(f"unsupported checkpoint {meta.get('format')} v{meta.get('version')}")
        params = {k: data[k].copy() for k in data.files if k != _MANIFEST}
    return params, meta
