import unittest

import numpy as np
import numpy.testing as npt
import pandas as pd

from audio_io.clip import AudioClip
from dsp.export import export_spectrogram_csv, magnitude_db, spectrogram_table
from dsp.griffin_lim import griffin_lim, griffin_lim_with_trace, spectral_convergence
from dsp.patches import patch_l2_norms, patch_norm_values
from dsp.stft import (
    StftConfig,
    istft,
    istft_adjoint_array,
    istft_array,
    real_inner,
    stft,
    stft_adjoint_array,
    stft_array,
)
from errors import ParameterError
from tests.helpers import TempDirTestCase, short_clip


class TestStftConfig(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(ValueError):
            StftConfig(n_fft=100, hop=25)
        with self.assertRaises(ValueError):
            StftConfig(n_fft=128, hop=48)
        with self.assertRaises(ValueError):
            StftConfig(n_fft=128, hop=128)

    def test_frame_count(self):
        cfg = StftConfig(n_fft=128, hop=32)
        self.assertEqual(cfg.num_frames(2000), 64)
        self.assertEqual(stft_array(np.zeros((1, 2000)), cfg).shape, (1, 64, 65))

    def test_too_short_without_centering(self):
        cfg = StftConfig(n_fft=128, hop=32, center=False)
        with self.assertRaises(ParameterError):
            cfg.num_frames(100)


class TestStft(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(0)

    def test_round_trip(self):
        for n_fft, hop, length in [(512, 128, 4000), (128, 32, 1001), (64, 16, 333), (256, 128, 777)]:
            cfg = StftConfig(n_fft=n_fft, hop=hop)
            x = self.rng.standard_normal((2, length))
            y = istft_array(stft_array(x, cfg), cfg, length)
            self.assertLess(np.max(np.abs(x - y)), 1e-6, msg=f"n_fft={n_fft}, hop={hop}, length={length}")

    def test_clip_wrappers(self):
        clip = short_clip().mixture
        cfg = StftConfig(n_fft=128, hop=32)
        spec = stft(clip, cfg)
        back = istft(spec, cfg)
        npt.assert_allclose(back.samples, clip.samples, atol=1e-9)
        with self.assertRaises(ParameterError):
            istft(spec, StftConfig(n_fft=128, hop=64))

    def test_stft_adjoint_identity(self):
        cfg = StftConfig(n_fft=64, hop=16)
        length = 300
        frames = cfg.num_frames(length)
        for _ in range(100):
            u = self.rng.standard_normal((1, length))
            v = self.rng.standard_normal((1, frames, cfg.bins)) + 1j * self.rng.standard_normal((1, frames, cfg.bins))
            lhs = real_inner(stft_array(u, cfg), v)
            rhs = float(np.sum(u * stft_adjoint_array(v, cfg, length)))
            self.assertLess(abs(lhs - rhs), 1e-8 * max(abs(lhs), 1.0))

    def test_istft_adjoint_identity(self):
        cfg = StftConfig(n_fft=64, hop=16)
        length = 300
        frames = cfg.num_frames(length)
        for _ in range(100):
            v = self.rng.standard_normal((1, frames, cfg.bins)) + 1j * self.rng.standard_normal((1, frames, cfg.bins))
            w = self.rng.standard_normal((1, length))
            lhs = float(np.sum(istft_array(v, cfg, length) * w))
            rhs = real_inner(v, istft_adjoint_array(w, cfg))
            self.assertLess(abs(lhs - rhs), 1e-8 * max(abs(lhs), 1.0))

    def test_istft_rejects_wrong_frame_count(self):
        cfg = StftConfig(n_fft=64, hop=16)
        with self.assertRaises(ParameterError):
            istft_array(np.zeros((1, 3, cfg.bins), dtype=complex), cfg, 300)


class TestGriffinLim(unittest.TestCase):
    def setUp(self):
        self.cfg = StftConfig(n_fft=128, hop=32)
        self.clip = short_clip().mixture
        self.spec = stft_array(self.clip.samples, self.cfg)

    def test_error_never_increases(self):
        result = griffin_lim_with_trace(np.abs(self.spec), self.cfg, 40, seed=1, length=self.clip.num_samples)
        errors = np.array(result.errors)
        self.assertEqual(len(errors), 40)
        self.assertTrue(np.all(np.diff(errors) <= 1e-12))

    def test_true_phase_reconstructs_signal(self):
        clip = griffin_lim(np.abs(self.spec), self.cfg, 1, length=self.clip.num_samples, init_phase=self.spec)
        npt.assert_allclose(clip.samples, self.clip.samples, atol=1e-8)
        self.assertLess(spectral_convergence(stft_array(clip.samples, self.cfg), np.abs(self.spec)), 1e-8)

    def test_deterministic_per_seed(self):
        a = griffin_lim(np.abs(self.spec), self.cfg, 5, seed=7, length=self.clip.num_samples)
        b = griffin_lim(np.abs(self.spec), self.cfg, 5, seed=7, length=self.clip.num_samples)
        npt.assert_array_equal(a.samples, b.samples)

    def test_inferred_length(self):
        clip = griffin_lim(np.abs(self.spec)[0], self.cfg, 2)
        frames = self.spec.shape[1]
        self.assertEqual(clip.num_samples, (frames - 1) * self.cfg.hop + self.cfg.n_fft - 2 * self.cfg.pad)

    def test_validation(self):
        with self.assertRaises(ParameterError):
            griffin_lim(np.abs(self.spec), self.cfg, 0)
        with self.assertRaises(ParameterError):
            griffin_lim(-np.abs(self.spec) - 1.0, self.cfg, 1)
        with self.assertRaises(ParameterError):
            griffin_lim(np.ones((1, 4, 10)), self.cfg, 1)


class TestPatches(unittest.TestCase):
    def test_known_norms(self):
        values = patch_norm_values(np.array([[3.0, 4.0, 0.0, 0.0, 1.0]]), 2)
        npt.assert_allclose(values, [5.0, 0.0, 1.0])

    def test_channels_are_pooled(self):
        samples = np.array([[3.0, 0.0], [0.0, 4.0]])
        npt.assert_allclose(patch_norm_values(samples, 2), [5.0])

    def test_clip_norms(self):
        clip = AudioClip(samples=np.ones((1, 10)), sample_rate=8000)
        norms = patch_l2_norms(clip, 4)
        self.assertEqual(len(norms), 3)
        npt.assert_allclose(norms.values, [2.0, 2.0, np.sqrt(2.0)])
        with self.assertRaises(ParameterError):
            patch_l2_norms(clip, 0)


class TestExport(TempDirTestCase):
    def test_table_layout(self):
        frames = np.ones((5, 9), dtype=complex)
        table = spectrogram_table(frames)
        self.assertEqual(table.shape, (5, 9))
        self.assertEqual(table.index.name, "frame")
        self.assertEqual(list(table.columns[:2]), ["bin_0", "bin_1"])
        npt.assert_allclose(table.to_numpy(), 0.0, atol=1e-6)
        self.assertLess(magnitude_db(np.zeros(1))[0], -190.0)

    def test_export_one_file_per_channel(self):
        cfg = StftConfig(n_fft=64, hop=16)
        spec = stft(short_clip(channels=2).mixture, cfg)
        paths = export_spectrogram_csv(spec, self.tmp / "grids", "input")
        self.assertEqual([p.name for p in paths], ["input_ch0.csv", "input_ch1.csv"])
        loaded = pd.read_csv(paths[0], index_col="frame")
        self.assertEqual(loaded.shape, (spec.frames.shape[1], cfg.bins))


if __name__ == "__main__":
    unittest.main()
