"""RIFF/WAVE reading and writing for PCM16 and IEEE float32 data."""
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Mapping, Optional, Union

import numpy as np

from audio_io.clip import AudioClip, SourceSet
from errors import ArtifactIOError, FormatError, ParameterError, UnsupportedFormatError
from file_utils import atomic_write_bytes, create_output_directory

logger = logging.getLogger(__name__)

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE

PCM16_SCALE = 32768.0
ENCODINGS = ("pcm16", "float32")


@dataclass(frozen=True)
class WavWriteInfo:
    path: Path
    encoding: str
    clipped: bool
    num_clipped: int


def _parse_fmt(body: bytes, path) -> Dict[str, int]:
    if len(body) < 16:
        raise FormatError(f"{path}: fmt chunk too short ({len(body)} bytes)")
    format_tag, channels, sample_rate, _byte_rate, block_align, bits = struct.unpack("<HHIIHH", body[:16])
    if format_tag == WAVE_FORMAT_EXTENSIBLE:
        if len(body) < 40:
            raise FormatError(f"{path}: extensible fmt chunk too short")
        # first two bytes of the SubFormat GUID carry the actual format tag
        format_tag = struct.unpack("<H", body[24:26])[0]
    if channels < 1:
        raise FormatError(f"{path}: channel count is {channels}")
    if sample_rate < 1:
        raise FormatError(f"{path}: sample rate is {sample_rate}")
    return {
        "format_tag": format_tag,
        "channels": channels,
        "sample_rate": sample_rate,
        "block_align": block_align,
        "bits": bits,
    }


def read_wav(path: Union[str, Path]) -> AudioClip:
    """Read a PCM16 or float32 WAV file into a channel-major AudioClip.

    PCM16 samples are divided by 32768; float32 samples are passed through.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ArtifactIOError(f"Cannot read {path}: {e}") from e

    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")

    fmt: Optional[Dict[str, int]] = None
    payload: Optional[bytes] = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        chunk_size = struct.unpack("<I", data[pos + 4:pos + 8])[0]
        body_start = pos + 8
        body_end = body_start + chunk_size
        if body_end > len(data):
            raise FormatError(
                f"{path}: chunk {chunk_id!r} declares {chunk_size} bytes but only "
                f"{len(data) - body_start} remain"
            )
        body = data[body_start:body_end]
        if chunk_id == b"fmt ":
            fmt = _parse_fmt(body, path)
        elif chunk_id == b"data":
            payload = body
            if fmt is not None:
                break
        # chunks are word aligned
        pos = body_end + (chunk_size & 1)

    if fmt is None:
        raise FormatError(f"{path}: missing fmt chunk")
    if payload is None:
        raise FormatError(f"{path}: missing data chunk")

    if fmt["format_tag"] == WAVE_FORMAT_PCM and fmt["bits"] == 16:
        dtype = np.dtype("<i2")
    elif fmt["format_tag"] == WAVE_FORMAT_IEEE_FLOAT and fmt["bits"] == 32:
        dtype = np.dtype("<f4")
    else:
        raise UnsupportedFormatError(
            f"{path}: unsupported encoding (format tag {fmt['format_tag']}, {fmt['bits']} bits); "
            "only PCM16 and IEEE float32 are handled"
        )

    channels = fmt["channels"]
    frame_bytes = dtype.itemsize * channels
    if len(payload) % frame_bytes != 0:
        raise FormatError(f"{path}: data chunk of {len(payload)} bytes is not a whole number of frames")
    if len(payload) == 0:
        raise FormatError(f"{path}: data chunk holds no samples")

    interleaved = np.frombuffer(payload, dtype=dtype).reshape(-1, channels)
    samples = interleaved.T.astype(np.float64)
    if dtype.kind == "i":
        samples = samples / PCM16_SCALE
    if not np.all(np.isfinite(samples)):
        raise FormatError(f"{path}: float data contains NaN or Inf")

    logger.debug(f"Read {path}: {channels} ch, {samples.shape[1]} samples @ {fmt['sample_rate']} Hz")
    return AudioClip(samples=samples, sample_rate=fmt["sample_rate"])


def _encode(clip: AudioClip, encoding: str):
    samples = clip.samples
    num_clipped = 0
    if encoding == "pcm16":
        num_clipped = int(np.count_nonzero(np.abs(samples) > 1.0))
        scaled = np.rint(np.clip(samples, -1.0, 1.0) * PCM16_SCALE)
        ints = np.clip(scaled, -32768, 32767).astype("<i2")
        return ints.T.tobytes(), WAVE_FORMAT_PCM, 16, num_clipped
    if encoding == "float32":
        return samples.astype("<f4").T.tobytes(), WAVE_FORMAT_IEEE_FLOAT, 32, num_clipped
    raise ParameterError(f"Unknown WAV encoding '{encoding}', expected one of {ENCODINGS}")


def write_wav(clip: AudioClip, path: Union[str, Path], encoding: str = "float32") -> WavWriteInfo:
    """Write a clip as a RIFF/WAVE file.

    PCM16 output rounds to the nearest integer step; samples outside [-1, 1]
    are clamped and reported through the returned ``WavWriteInfo``.
    """
    path = Path(path)
    payload, format_tag, bits, num_clipped = _encode(clip, encoding)
    if num_clipped:
        logger.warning(f"Clamped {num_clipped} samples outside [-1, 1] while writing {path} as pcm16")

    block_align = clip.channels * bits // 8
    fmt_body = struct.pack(
        "<HHIIHH",
        format_tag,
        clip.channels,
        clip.sample_rate,
        clip.sample_rate * block_align,
        block_align,
        bits,
    )
    chunks = b"fmt " + struct.pack("<I", len(fmt_body)) + fmt_body
    chunks += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        chunks += b"\x00"
    header = b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE"

    atomic_write_bytes(path, header + chunks)
    logger.debug(f"Wrote {path} ({encoding}, {clip.num_samples} samples)")
    return WavWriteInfo(path=path, encoding=encoding, clipped=num_clipped > 0, num_clipped=num_clipped)


def load_source_set(mixture_path, source_paths: Mapping[str, Union[str, Path]], track_id: Optional[str] = None) -> SourceSet:
    """Read a mixture and its named stems from WAV files."""
    mixture = read_wav(mixture_path)
    sources = tuple((name, read_wav(p)) for name, p in source_paths.items())
    return SourceSet(sources=sources, mixture=mixture, track_id=track_id or Path(mixture_path).stem)


def write_source_set(source_set: SourceSet, output_dir, encoding: str = "float32") -> Dict[str, WavWriteInfo]:
    """Write every stem plus the mixture into ``output_dir``."""
    out = create_output_directory(output_dir)
    written = {}
    for name, clip in source_set.sources:
        written[name] = write_wav(clip, out / f"{name}.wav", encoding)
    written["mixture"] = write_wav(source_set.mixture, out / "mixture.wav", encoding)
    logger.info(f"Wrote {len(written)} files for track '{source_set.track_id}' to {out}")
    return written
