import logging
from pathlib import Path
from typing import List

import numpy as np
import pandas as pd

from dsp.stft import Spectrogram
from file_utils import atomic_write_text, create_output_directory

logger = logging.getLogger(__name__)

DB_FLOOR = 1e-10


def magnitude_db(frames: np.ndarray) -> np.ndarray:
    return 20.0 * np.log10(np.abs(frames) + DB_FLOOR)


def spectrogram_table(frames: np.ndarray) -> pd.DataFrame:
    """One channel's dB grid: one row per frame, one column per bin."""
    grid = magnitude_db(frames)
    table = pd.DataFrame(grid, columns=[f"bin_{k}" for k in range(grid.shape[1])])
    table.index.name = "frame"
    return table


def export_spectrogram_csv(spec: Spectrogram, output_dir, stem: str) -> List[Path]:
    """Write ``<stem>_ch<c>.csv`` for every channel of the spectrogram."""
    out = create_output_directory(output_dir)
    written = []
    for channel in range(spec.channels):
        path = out / f"{stem}_ch{channel}.csv"
        atomic_write_text(path, spectrogram_table(spec.frames[channel]).to_csv(float_format="%.6f"))
        written.append(path)
    logger.info(f"Exported {len(written)} spectrogram grid(s) for '{stem}' to {out}")
    return written
