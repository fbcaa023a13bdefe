import struct
import unittest

import numpy as np
import numpy.testing as npt

from audio_io.clip import AudioClip, SourceSet, mix_sources, require_same_layout
from audio_io.synth import default_recipe, synth_source_set
from audio_io.wav import load_source_set, read_wav, write_source_set, write_wav
from errors import ArtifactIOError, FormatError, ParameterError, UnsupportedFormatError
from tests.helpers import TempDirTestCase, short_clip


class TestAudioClip(unittest.TestCase):
    def test_mono_vector_becomes_one_channel(self):
        clip = AudioClip(samples=np.zeros(10), sample_rate=8000)
        self.assertEqual(clip.shape, (1, 10))
        self.assertAlmostEqual(clip.duration_s, 10 / 8000)

    def test_samples_are_read_only(self):
        clip = AudioClip(samples=np.ones((2, 4)), sample_rate=8000)
        with self.assertRaises(ValueError):
            clip.samples[0, 0] = 2.0

    def test_rejects_non_finite_and_bad_rate(self):
        with self.assertRaises(ParameterError):
            AudioClip(samples=np.array([0.0, np.nan]), sample_rate=8000)
        with self.assertRaises(ParameterError):
            AudioClip(samples=np.zeros(4), sample_rate=0)
        with self.assertRaises(ParameterError):
            AudioClip(samples=np.zeros((1, 1, 4)), sample_rate=8000)

    def test_layout_mismatch(self):
        a = AudioClip(samples=np.zeros(4), sample_rate=8000)
        b = AudioClip(samples=np.zeros(5), sample_rate=8000)
        c = AudioClip(samples=np.zeros(4), sample_rate=16000)
        with self.assertRaises(ParameterError):
            require_same_layout(a, b)
        with self.assertRaises(ParameterError):
            require_same_layout(a, c)


class TestSourceSet(unittest.TestCase):
    def test_mixture_must_be_sum(self):
        a = AudioClip(samples=np.ones(8), sample_rate=8000)
        b = AudioClip(samples=2 * np.ones(8), sample_rate=8000)
        with self.assertRaises(ParameterError):
            SourceSet(sources=(("a", a), ("b", b)), mixture=a)
        mixed = mix_sources([("a", a), ("b", b)])
        npt.assert_allclose(mixed.mixture.samples, 3 * np.ones((1, 8)))

    def test_lookup_by_name_and_index(self):
        clip = short_clip()
        self.assertIs(clip.source("bass"), clip.source(1))
        with self.assertRaises(ParameterError):
            clip.source("piano")

    def test_duplicate_names_rejected(self):
        a = AudioClip(samples=np.ones(8), sample_rate=8000)
        with self.assertRaises(ParameterError):
            mix_sources([("a", a), ("a", a)])


class TestSynth(unittest.TestCase):
    def test_same_seed_same_material(self):
        first, second = short_clip(seed=3), short_clip(seed=3)
        npt.assert_array_equal(first.mixture.samples, second.mixture.samples)
        self.assertFalse(np.array_equal(first.mixture.samples, short_clip(seed=4).mixture.samples))

    def test_leading_silence_is_exact_zero(self):
        clip = short_clip(seconds=0.5, leading_silence_s=0.125)
        silent = int(0.125 * 8000)
        self.assertTrue(np.all(clip.mixture.samples[:, :silent] == 0.0))
        self.assertTrue(np.any(clip.mixture.samples[:, silent:] != 0.0))

    def test_multichannel_and_all_kinds(self):
        recipe = default_recipe(("vocals", "bass", "drums", "other"), duration_s=0.25, channels=2)
        clip = synth_source_set(recipe, 0)
        self.assertEqual(clip.mixture.shape, (2, 2000))
        self.assertEqual(clip.names, ["vocals", "bass", "drums", "other"])

    def test_recipe_validation(self):
        with self.assertRaises(ParameterError):
            synth_source_set(default_recipe(("vocals",)), 0)
        with self.assertRaises(ParameterError):
            synth_source_set(default_recipe(duration_s=0.25, leading_silence_s=0.25), 0)


class TestWav(TempDirTestCase):
    def test_float32_round_trip(self):
        clip = short_clip(channels=2).mixture
        info = write_wav(clip, self.tmp / "x.wav")
        self.assertFalse(info.clipped)
        loaded = read_wav(self.tmp / "x.wav")
        self.assertEqual(loaded.sample_rate, clip.sample_rate)
        npt.assert_array_equal(loaded.samples, clip.samples.astype(np.float32).astype(np.float64))

    def test_pcm16_quantization_and_clipping(self):
        clip = AudioClip(samples=np.array([[0.0, 0.5, -0.5, 1.5, -2.0]]), sample_rate=8000)
        info = write_wav(clip, self.tmp / "x.wav", encoding="pcm16")
        self.assertTrue(info.clipped)
        self.assertEqual(info.num_clipped, 2)
        loaded = read_wav(self.tmp / "x.wav")
        npt.assert_allclose(loaded.samples[0, :3], [0.0, 0.5, -0.5], atol=1 / 32768)
        self.assertLessEqual(loaded.samples.max(), 1.0)
        self.assertGreaterEqual(loaded.samples.min(), -1.0)

    def test_identical_writes_are_byte_identical(self):
        clip = short_clip().mixture
        write_wav(clip, self.tmp / "a.wav")
        write_wav(clip, self.tmp / "b.wav")
        self.assertEqual((self.tmp / "a.wav").read_bytes(), (self.tmp / "b.wav").read_bytes())

    def test_malformed_files(self):
        (self.tmp / "junk.wav").write_bytes(b"not a wav file at all")
        with self.assertRaises(FormatError):
            read_wav(self.tmp / "junk.wav")
        with self.assertRaises(ArtifactIOError):
            read_wav(self.tmp / "missing.wav")

    def test_unsupported_encoding(self):
        # 24-bit PCM, one frame
        fmt = struct.pack("<HHIIHH", 1, 1, 8000, 24000, 3, 24)
        body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", 3) + b"\x00\x00\x00"
        (self.tmp / "x24.wav").write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body + b"\x00")
        with self.assertRaises(UnsupportedFormatError):
            read_wav(self.tmp / "x24.wav")

    def test_source_set_round_trip(self):
        clip = short_clip()
        write_source_set(clip, self.tmp / "track")
        loaded = load_source_set(
            self.tmp / "track" / "mixture.wav",
            {name: self.tmp / "track" / f"{name}.wav" for name in clip.names},
            track_id="t",
        )
        self.assertEqual(loaded.names, clip.names)
        self.assertEqual(loaded.track_id, "t")


if __name__ == "__main__":
    unittest.main()
