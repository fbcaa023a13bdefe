import logging
import os
import tempfile
from pathlib import Path
from typing import Union

from errors import ArtifactIOError

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]


def create_output_directory(output_dir: PathLike) -> Path:
    """Create the output directory if it doesn't exist."""
    path = Path(output_dir)
    try:
        if not path.exists():
            path.mkdir(parents=True, exist_ok=True)
            logger.info(f"Created output directory: {path}")
    except OSError as e:
        logger.error(f"Failed to create directory {path}: {e}")
        raise ArtifactIOError(f"Cannot create output directory {path}: {e}") from e
    return path


def atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    """Write bytes through a temporary file in the same directory, then rename."""
    target = Path(path)
    directory = target.parent if str(target.parent) else Path(".")
    try:
        fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=directory)
    except OSError as e:
        raise ArtifactIOError(f"Cannot write {target}: {e}") from e
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp_name, target)
    except OSError as e:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise ArtifactIOError(f"Cannot write {target}: {e}") from e
    return target


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))
