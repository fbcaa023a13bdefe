import json
import unittest

import numpy as np
import numpy.testing as npt
import pandas as pd

from audio_io.clip import AudioClip, mix_sources
from errors import ParameterError, UndefinedMetricError
from metrics import (
    GroundMetric,
    TrackSignals,
    aggregate,
    di,
    difference,
    ds,
    dsa,
    frame_bounds,
    median,
    report_table,
    sdr,
    sir,
    summarize,
    write_report_csv,
    write_summary_json,
)
from metrics.degradation import SATURATED, UNDEFINED
from metrics.reports import GLOBAL_TRACK
from tests.helpers import TempDirTestCase

SDR = GroundMetric(kind="sdr")
SIR = GroundMetric(kind="sir")


def _clip(samples) -> AudioClip:
    return AudioClip(samples=np.atleast_2d(np.asarray(samples, dtype=np.float64)), sample_rate=8000)


def _frame_sdr(reference, estimate):
    return 10 * np.log10(np.sum(reference ** 2) / np.sum((reference - estimate) ** 2))


class TestGroundMetrics(unittest.TestCase):
    def test_sdr(self):
        self.assertAlmostEqual(sdr(_clip([1.0, 0.0]), _clip([0.5, 0.0])), 10 * np.log10(4.0))
        self.assertEqual(sdr(_clip([1.0, 2.0]), _clip([1.0, 2.0])), float("inf"))
        self.assertEqual(sdr(_clip([0.0, 0.0]), _clip([1.0, 0.0])), float("-inf"))
        with self.assertRaises(UndefinedMetricError):
            sdr(_clip([0.0, 0.0]), _clip([0.0, 0.0]))

    def test_sir_scalar_projection(self):
        sources = mix_sources([("a", _clip([1.0, 0.0, 0.0, 0.0])), ("b", _clip([0.0, 1.0, 0.0, 0.0]))])
        self.assertAlmostEqual(sir(sources, 0, _clip([1.0, 0.1, 0.3, 0.0])), 20.0)
        self.assertEqual(sir(sources, 1, _clip([0.0, 2.0, 0.5, 0.5])), float("inf"))

    def test_sir_errors(self):
        dependent = mix_sources([("a", _clip([1.0, 1.0])), ("b", _clip([2.0, 2.0]))])
        with self.assertRaises(UndefinedMetricError):
            sir(dependent, 0, _clip([1.0, 0.0]))
        single = mix_sources([("a", _clip([1.0, 1.0]))])
        with self.assertRaises(ParameterError):
            sir(single, 0, _clip([1.0, 0.0]))


class TestDegradations(unittest.TestCase):
    def test_di_closed_form(self):
        x = _clip(np.ones(100))
        self.assertAlmostEqual(di(x, _clip(np.full(100, 0.1))), 20.0)
        self.assertEqual(di(x, _clip(np.zeros(100))), float("inf"))
        # matches SDR(x, x + eta)
        eta = _clip(np.random.default_rng(0).standard_normal(100) * 0.05)
        self.assertAlmostEqual(di(x, eta), sdr(x, x.with_samples(x.samples + eta.samples)))

    def test_ds_and_dsa(self):
        rng = np.random.default_rng(1)
        y = _clip(rng.standard_normal(200))
        clean = y.with_samples(y.samples + 0.1 * rng.standard_normal((1, 200)))
        adversarial = y.with_samples(y.samples + 0.3 * rng.standard_normal((1, 200)))
        degradation = ds(SDR, y, clean, adversarial)
        self.assertIsNone(degradation.flag)
        self.assertAlmostEqual(degradation.value, sdr(y, clean) - sdr(y, adversarial))
        self.assertGreater(degradation.value, 0)
        self.assertEqual(ds(SDR, y, clean, clean).value, 0.0)
        self.assertEqual(dsa(y, clean, _clip(np.zeros(200))).value, 0.0)
        eta = _clip(0.2 * rng.standard_normal(200))
        self.assertAlmostEqual(
            dsa(y, clean, eta).value,
            sdr(y, clean) - sdr(y, clean.with_samples(clean.samples + eta.samples)),
        )

    def test_sir_needs_sources(self):
        y = _clip([1.0, 0.0])
        with self.assertRaises(ParameterError):
            ds(SIR, y, y, y)

    def test_difference_flags(self):
        self.assertEqual(difference(5.0, 2.0).value, 3.0)
        self.assertEqual(difference(float("inf"), 2.0).flag, SATURATED)
        self.assertEqual(difference(float("inf"), float("inf")).flag, UNDEFINED)
        self.assertFalse(difference(float("-inf"), float("-inf")).defined)
        self.assertEqual(difference(float("inf"), float("-inf")).value, float("inf"))


class TestAggregation(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(7)
        self.frame = 100
        self.tracks = []
        for index in range(3):
            length = 100 * (3 + index)
            y = rng.standard_normal((1, length))
            clean = y + 0.1 * rng.standard_normal((1, length))
            adversarial = y + 0.5 * rng.standard_normal((1, length))
            x = y + rng.standard_normal((1, length))
            eta = 0.05 * rng.standard_normal((1, length))
            self.tracks.append(TrackSignals(
                track_id=f"t{index}",
                reference=_clip(y[0]),
                estimate=_clip(adversarial[0]),
                clean_estimate=_clip(clean[0]),
                mixture=_clip(x[0]),
                eta=_clip(eta[0]),
            ))

    def _frames(self, signals):
        return frame_bounds(signals.reference.num_samples, self.frame, self.frame)

    def test_frame_bounds(self):
        self.assertEqual(frame_bounds(10, 4, 4), [(0, 4), (4, 8)])
        self.assertEqual(frame_bounds(10, 4, 3), [(0, 4), (3, 7), (6, 10)])
        self.assertEqual(frame_bounds(3, 4, 4), [(0, 3)])
        with self.assertRaises(ParameterError):
            frame_bounds(10, 0, 4)

    def test_median(self):
        self.assertEqual(median([1.0, 3.0, 2.0, 10.0]), 2.5)
        self.assertEqual(median([float("inf"), 1.0, 2.0]), 2.0)
        with self.assertRaises(UndefinedMetricError):
            median([])

    def test_value_median_of_medians(self):
        report = aggregate(self.frame, self.frame, self.tracks, SDR, "value")
        expected = []
        for signals, track in zip(self.tracks, report.per_track):
            y, est = signals.reference.samples, signals.estimate.samples
            frames = [_frame_sdr(y[:, a:b], est[:, a:b]) for a, b in self._frames(signals)]
            npt.assert_allclose(track.frame_values, frames)
            expected.append(np.median(frames))
        self.assertAlmostEqual(report.global_median, np.median(expected))

    def test_difference_then_aggregate(self):
        report = aggregate(self.frame, self.frame, self.tracks, SDR, "DS", "difference_then_aggregate")
        medians = []
        for signals in self.tracks:
            y = signals.reference.samples
            frames = [
                _frame_sdr(y[:, a:b], signals.clean_estimate.samples[:, a:b])
                - _frame_sdr(y[:, a:b], signals.estimate.samples[:, a:b])
                for a, b in self._frames(signals)
            ]
            medians.append(np.median(frames))
        self.assertAlmostEqual(report.global_median, np.median(medians))
        self.assertEqual(report.components, ())

    def test_aggregate_then_difference(self):
        report = aggregate(self.frame, self.frame, self.tracks, SDR, "DS", "aggregate_then_difference")
        clean_medians, adversarial_medians = [], []
        for signals in self.tracks:
            y = signals.reference.samples
            bounds = self._frames(signals)
            clean_medians.append(np.median([_frame_sdr(y[:, a:b], signals.clean_estimate.samples[:, a:b]) for a, b in bounds]))
            adversarial_medians.append(np.median([_frame_sdr(y[:, a:b], signals.estimate.samples[:, a:b]) for a, b in bounds]))
        self.assertAlmostEqual(report.global_median, np.median(clean_medians) - np.median(adversarial_medians))
        self.assertEqual(len(report.components), 2)
        npt.assert_allclose(
            [track.track_median for track in report.per_track],
            np.array(clean_medians) - np.array(adversarial_medians),
        )

    def test_di_per_frame(self):
        report = aggregate(self.frame, self.frame, self.tracks[:1], SDR, "DI")
        signals = self.tracks[0]
        x, eta = signals.mixture.samples, signals.eta.samples
        expected = [10 * np.log10(np.sum(x[:, a:b] ** 2) / np.sum(eta[:, a:b] ** 2)) for a, b in self._frames(signals)]
        npt.assert_allclose(report.per_track[0].frame_values, expected)

    def test_dsa_zero_perturbation(self):
        signals = self.tracks[0]
        silent = TrackSignals(
            track_id="t0", reference=signals.reference, clean_estimate=signals.clean_estimate,
            eta=_clip(np.zeros(signals.reference.num_samples)),
        )
        for order in ("aggregate_then_difference", "difference_then_aggregate"):
            self.assertEqual(aggregate(self.frame, self.frame, [silent], SDR, "DSA", order).global_median, 0.0)

    def test_undefined_frames_are_skipped(self):
        samples = np.concatenate([np.zeros(100), np.ones(200)])
        estimate = np.concatenate([np.zeros(100), np.full(200, 0.9)])
        signals = TrackSignals(track_id="s", reference=_clip(samples), estimate=_clip(estimate))
        report = aggregate(100, 100, [signals], SDR, "value")
        self.assertEqual(report.per_track[0].skipped_frames, 1)
        self.assertEqual(len(report.per_track[0].frame_values), 2)

    def test_silent_track_excluded(self):
        silent = TrackSignals(track_id="silent", reference=_clip(np.zeros(300)), estimate=_clip(np.zeros(300)))
        report = aggregate(self.frame, self.frame, [self.tracks[0], silent], SDR, "value")
        self.assertEqual(report.excluded_tracks, ("silent",))
        self.assertEqual(len(report.per_track), 1)
        with self.assertRaises(UndefinedMetricError):
            aggregate(self.frame, self.frame, [silent], SDR, "value")

    def test_missing_signals(self):
        bare = TrackSignals(track_id="bare", reference=self.tracks[0].reference)
        with self.assertRaises(ParameterError):
            aggregate(self.frame, self.frame, [bare], SDR, "DS")
        with self.assertRaises(ParameterError):
            aggregate(self.frame, self.frame, [], SDR, "value")


class TestReports(TempDirTestCase):
    def setUp(self):
        super().setUp()
        y = np.ones(200)
        signals = TrackSignals(track_id="a", reference=_clip(y), estimate=_clip(0.9 * y), clean_estimate=_clip(0.95 * y))
        self.reports = [
            aggregate(100, 100, [signals], SDR, "value"),
            aggregate(100, 100, [signals], SDR, "DS"),
        ]

    def test_table_rows(self):
        table = report_table(self.reports)
        value_rows = table[table["quantity"] == "value"]
        self.assertEqual(len(value_rows[value_rows["frame_index"].notna()]), 2)
        global_rows = table[table["track_id"] == GLOBAL_TRACK]
        self.assertEqual(sorted(global_rows["quantity"]), ["DS", "DS.adversarial", "DS.clean", "value"])
        self.assertAlmostEqual(float(value_rows[value_rows["track_id"] == GLOBAL_TRACK]["value_db"].iloc[0]), 20.0)

    def test_written_files(self):
        csv_path = write_report_csv(self.reports, self.tmp / "metrics_report.csv")
        self.assertEqual(list(pd.read_csv(csv_path).columns), ["quantity", "metric", "track_id", "frame_index", "value_db", "flags"])
        json_path = write_summary_json(self.reports, self.tmp / "metrics_summary.json")
        document = json.loads(json_path.read_text(encoding="utf-8"))
        self.assertIn("note", document)
        self.assertEqual(set(document["metrics"]), {"value_SDR", "DS_SDR"})
        self.assertEqual(document["metrics"]["DS_SDR"], summarize(self.reports)["DS_SDR"])
        self.assertAlmostEqual(document["metrics"]["DS_SDR"]["global_median"], 10 * np.log10(400.0) - 20.0)


if __name__ == "__main__":
    unittest.main()
