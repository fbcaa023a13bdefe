"""Shared fixtures: short synthetic clips, small models and temp directories."""
import os
import shutil
import tempfile
import unittest
from pathlib import Path

from audio_io.synth import default_recipe, synth_source_set
from dsp.stft import StftConfig
from models.registry import init_model

SAMPLE_RATE = 8000
SMALL_STFT = StftConfig(n_fft=128, hop=32)


def slow_tests_enabled() -> bool:
    return os.getenv("SEPADV_SLOW_TESTS") == "1"


def short_clip(seconds: float = 0.25, seed: int = 0, kinds=("vocals", "bass"), leading_silence_s: float = 0.0,
               channels: int = 1):
    recipe = default_recipe(kinds, duration_s=seconds, leading_silence_s=leading_silence_s, channels=channels)
    return synth_source_set(recipe, seed)


def small_model(arch: str = "mask_freq", seed: int = 0, num_sources: int = 2):
    stft_cfg = SMALL_STFT if arch == "mask_freq" else None
    return init_model(arch, num_sources, seed, source_names=["vocals", "bass", "drums", "other"][:num_sources],
                      stft_cfg=stft_cfg)


class TempDirTestCase(unittest.TestCase):
    def setUp(self):
        super().setUp()
        self.tmp = Path(tempfile.mkdtemp(prefix="sepadv_test_"))

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)
        super().tearDown()
