"""Small shared helpers."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path


def write_atomic_bytes(path: str | Path, data: bytes) -> None:
    """Write via a temp file in the same directory, then os.replace.

    Readers never observe a partial file, even if the process dies mid-write.
    """
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_atomic_text(path: str | Path, text: str) -> None:
    write_atomic_bytes(path, text.encode("utf-8"))
