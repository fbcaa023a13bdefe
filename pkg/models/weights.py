"""Weight file layout.

    magic  b"SEPADV1\\0"
    u64    header length, little-endian
    bytes  UTF-8 JSON header (architecture, sources, provenance, tensor manifest)
    bytes  float32 little-endian tensors, in manifest order
"""
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from dsp.stft import StftConfig
from errors import ArtifactIOError, FormatError, NumericError, ParameterError
from file_utils import atomic_write_bytes
from models.base import SeparationModel
from models.registry import model_class

logger = logging.getLogger(__name__)

MAGIC = b"SEPADV1\0"
PAYLOAD_DTYPE = np.dtype("<f4")


def _header(model: SeparationModel, extra: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    header = model.describe()
    header["tensors"] = [
        {"name": name, "shape": list(value.shape), "dtype": "float32"} for name, value in model.weights.items()
    ]
    if extra:
        header["provenance"] = extra
    return header


def save_weights(model: SeparationModel, path, provenance: Optional[Dict[str, Any]] = None) -> Path:
    """Serialize a model; ``provenance`` (e.g. training settings) is stored in the header."""
    header = json.dumps(_header(model, provenance), sort_keys=True).encode("utf-8")
    payload = b"".join(value.astype(PAYLOAD_DTYPE).tobytes() for value in model.weights.values())
    path = atomic_write_bytes(path, MAGIC + struct.pack("<Q", len(header)) + header + payload)
    logger.info(f"Saved {model.architecture} weights to {path}")
    return path


def _read(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise ArtifactIOError(f"Cannot read weights file {path}: {e}") from e


def _split(data: bytes, path) -> Tuple[Dict[str, Any], bytes]:
    if data[:len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: not a weights file (bad magic)")
    offset = len(MAGIC)
    if len(data) < offset + 8:
        raise FormatError(f"{path}: truncated header length")
    (header_len,) = struct.unpack("<Q", data[offset:offset + 8])
    offset += 8
    if len(data) < offset + header_len:
        raise FormatError(f"{path}: header declares {header_len} bytes but file is shorter")
    try:
        header = json.loads(data[offset:offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{path}: header is not valid JSON: {e}") from e
    if not isinstance(header, dict):
        raise FormatError(f"{path}: header must be a JSON object")
    return header, data[offset + header_len:]


def read_weights_header(path) -> Dict[str, Any]:
    """Return the JSON header of a weights file without decoding tensors."""
    header, _ = _split(_read(path), path)
    return header


def load_weights(path) -> SeparationModel:
    data = _read(path)
    header, payload = _split(data, path)
    try:
        arch = header["architecture"]
        num_sources = int(header["num_sources"])
        manifest = header["tensors"]
        stft_cfg = StftConfig(**header["stft"]) if header.get("stft") else None
    except (KeyError, TypeError, ValueError, ValidationError) as e:
        raise FormatError(f"{path}: incomplete header: {e}") from e

    try:
        cls = model_class(arch)
    except ParameterError as e:
        raise FormatError(f"{path}: {e}") from e
    expected = cls.weight_shapes(num_sources, stft_cfg)
    names = [entry.get("name") for entry in manifest]
    if names != list(expected):
        raise FormatError(f"{path}: manifest tensors {names} do not match {arch} layout {list(expected)}")

    weights = {}
    offset = 0
    for entry in manifest:
        name = entry["name"]
        shape = tuple(entry.get("shape", ()))
        if shape != expected[name]:
            raise FormatError(f"{path}: tensor '{name}' has shape {shape} in manifest, {arch} needs {expected[name]}")
        if entry.get("dtype", "float32") != "float32":
            raise FormatError(f"{path}: tensor '{name}' has dtype {entry.get('dtype')}, expected float32")
        nbytes = int(np.prod(shape, dtype=np.int64)) * PAYLOAD_DTYPE.itemsize
        if offset + nbytes > len(payload):
            raise FormatError(f"{path}: payload truncated inside tensor '{name}'")
        weights[name] = np.frombuffer(payload, dtype=PAYLOAD_DTYPE, count=nbytes // 4, offset=offset).reshape(shape)
        offset += nbytes
    if offset != len(payload):
        raise FormatError(f"{path}: payload holds {len(payload)} bytes, manifest accounts for {offset}")

    try:
        model = cls(
            weights=weights,
            num_sources=num_sources,
            source_names=header.get("source_names"),
            stft_cfg=stft_cfg,
            sample_rate=int(header.get("sample_rate", 8000)),
            seed=header.get("seed"),
        )
    except (ParameterError, NumericError) as e:
        raise FormatError(f"{path}: {e}") from e
    logger.info(f"Loaded {model!r} from {path}")
    return model
