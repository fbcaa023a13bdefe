import unittest

import numpy as np
import numpy.testing as npt
import pandas as pd

from attacks import (
    AttackConfig,
    ConstraintKind,
    constraint_value,
    craft,
    craft_gd,
    export_trace_csv,
    project_l1_ball,
    project_sup_ball,
    prox_constraint,
)
from attacks.common import DataTerm
from attacks.traces import TraceRecorder
from audio_io.clip import AudioClip
from errors import ParameterError
from tests.helpers import SMALL_STFT, TempDirTestCase, short_clip, small_model


def _clip(samples) -> AudioClip:
    return AudioClip(samples=np.atleast_2d(np.asarray(samples, dtype=np.float64)), sample_rate=8000)


class TestAttackConfig(unittest.TestCase):
    def test_lambda_alias(self):
        cfg = AttackConfig.model_validate({"lambda": 5.0})
        self.assertEqual(cfg.lam, 5.0)
        self.assertEqual(cfg.echo()["lambda"], 5.0)
        self.assertNotIn("lam", cfg.echo())
        self.assertEqual(AttackConfig(lam=5.0), cfg)

    def test_config_id(self):
        a = AttackConfig(method="pgd", epsilon=0.01)
        self.assertTrue(a.config_id.startswith("pgd-"))
        self.assertEqual(a.config_id, AttackConfig(method="pgd", epsilon=0.01).config_id)
        self.assertNotEqual(a.config_id, AttackConfig(method="pgd", epsilon=0.02).config_id)
        self.assertEqual(AttackConfig(label="mine").config_id, "mine")

    def test_validation(self):
        with self.assertRaises(ValueError):
            AttackConfig(method="fgsm", epsilon=0.0)
        with self.assertRaises(ValueError):
            AttackConfig(method="pgd", domain="frequency")
        with self.assertRaises(ValueError):
            AttackConfig(iterations=0)
        with self.assertRaises(ValueError):
            AttackConfig(unknown_field=1)

    def test_default_pgd_step(self):
        cfg = AttackConfig(method="pgd", epsilon=0.02, iterations=16)
        self.assertAlmostEqual(cfg.resolved_step, 0.005)
        self.assertEqual(cfg.model_copy(update={"step": 0.1}).resolved_step, 0.1)

    def test_patch_length_scales_with_rate(self):
        self.assertEqual(ConstraintKind(kind="stpr").patch_length(44100), 2048)
        self.assertEqual(ConstraintKind(kind="stpr").patch_length(8000), 372)
        self.assertEqual(ConstraintKind(kind="stpr", stpr_patch_len=10).patch_length(8000), 10)


class TestConstraints(unittest.TestCase):
    def test_values(self):
        x = _clip([1.0, 1.0, 1.0, 1.0])
        eta = _clip([1.0, 0.0, 0.0, 0.0])
        self.assertAlmostEqual(constraint_value(_clip([3.0, -4.0, 0.0, 0.0]), x, ConstraintKind(kind="l2")), 5.0)
        self.assertAlmostEqual(constraint_value(_clip([0.5, -2.0, 0.0, 0.0]), x, ConstraintKind(kind="sup")), 2.0)
        stpr = ConstraintKind(kind="stpr", stpr_patch_len=2)
        self.assertAlmostEqual(constraint_value(eta, x, stpr), 1.0 / np.sqrt(2.0))

    def test_closed_form_values(self):
        x = _clip(np.ones(8))
        for kind in ("l2", "sup", "stpr"):
            c = ConstraintKind(kind=kind, stpr_patch_len=2)
            self.assertEqual(constraint_value(_clip(np.zeros(8)), x, c), 0.0, msg=kind)
        self.assertAlmostEqual(constraint_value(x, x, ConstraintKind(kind="stpr", stpr_patch_len=1)), 8.0)
        self.assertAlmostEqual(constraint_value(x, x, ConstraintKind(kind="stpr", stpr_patch_len=2)), 4.0)
        per_sample = ConstraintKind(kind="stpr", stpr_patch_len=1)
        self.assertAlmostEqual(constraint_value(_clip([5.0, 10.0]), _clip([10.0, 10.0]), per_sample), 1.5)

    def test_stpr_floor_on_silence(self):
        x = _clip([0.0, 0.0, 1.0, 1.0])
        eta = _clip([1e-3, 0.0, 0.0, 0.0])
        stpr = ConstraintKind(kind="stpr", stpr_patch_len=2, floor=1e-2)
        self.assertAlmostEqual(constraint_value(eta, x, stpr), 0.1)

    def test_project_l1_ball(self):
        npt.assert_allclose(project_l1_ball(np.array([3.0, 1.0]), 2.0), [2.0, 0.0])
        npt.assert_allclose(project_l1_ball(np.array([0.5, -0.5]), 2.0), [0.5, -0.5])
        npt.assert_array_equal(project_l1_ball(np.array([1.0, 1.0]), 0.0), [0.0, 0.0])
        v = np.random.default_rng(0).standard_normal((2, 50))
        projected = project_l1_ball(v, 3.0)
        self.assertAlmostEqual(np.sum(np.abs(projected)), 3.0)
        self.assertTrue(np.all(np.sign(projected[projected != 0]) == np.sign(v[projected != 0])))
        with self.assertRaises(ParameterError):
            project_l1_ball(v, -1.0)

    def test_prox_known_values(self):
        x = np.ones((1, 2))
        npt.assert_allclose(prox_constraint(np.array([[3.0, 1.0]]), x, ConstraintKind(kind="sup"), 2.0, 8000), [[1.0, 1.0]])
        npt.assert_allclose(prox_constraint(np.array([[3.0, 4.0]]), x, ConstraintKind(kind="l2"), 1.0, 8000), [[2.4, 3.2]])
        npt.assert_array_equal(prox_constraint(np.array([[3.0, 4.0]]), x, ConstraintKind(kind="l2"), 5.0, 8000), [[0.0, 0.0]])
        npt.assert_array_equal(prox_constraint(np.array([[3.0, 4.0]]), x, ConstraintKind(kind="l2"), 0.0, 8000), [[3.0, 4.0]])

    def test_prox_minimizes_objective(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((1, 40))
        eta = rng.standard_normal((1, 40))
        threshold = 0.7
        for kind in ("l2", "sup", "stpr"):
            c = ConstraintKind(kind=kind, stpr_patch_len=8)

            def objective(u):
                return 0.5 * np.sum((u - eta) ** 2) + threshold * constraint_value(_clip(u[0]), _clip(x[0]), c)

            best = prox_constraint(eta, x, c, threshold, 8000)
            for _ in range(50):
                other = best + 1e-2 * rng.standard_normal(best.shape)
                self.assertLessEqual(objective(best), objective(other) + 1e-12, msg=kind)

    def test_project_sup_ball(self):
        center = _clip([0.0, 0.5, -0.5])
        projected = project_sup_ball(_clip([1.0, 0.55, -2.0]), center, 0.1)
        npt.assert_allclose(projected.samples, [[0.1, 0.55, -0.6]])
        with self.assertRaises(ParameterError):
            project_sup_ball(center, center, 0.0)


class AttackTestBase(unittest.TestCase):
    def setUp(self):
        self.x = short_clip(seconds=0.1).mixture
        self.model = small_model("conv_time", seed=1)


class TestGradientDescent(AttackTestBase):
    def test_trace_and_adversarial(self):
        cfg = AttackConfig(method="gd", lam=1e-3, lr=0.05, iterations=5, delta=1e6)
        result = craft(self.model, self.x, cfg)
        self.assertEqual(result.iterations, 5)
        npt.assert_array_equal(result.adversarial.samples, self.x.samples + result.eta.samples)
        npt.assert_allclose(
            result.loss_trace,
            np.array(result.objective_trace) + cfg.lam * np.array(result.constraint_trace),
        )
        self.assertTrue(result.within_delta)

    def test_unconstrained_distance_grows(self):
        cfg = AttackConfig(method="gd", lam=0.0, lr=0.05, iterations=6)
        result = craft_gd(self.model, self.x, cfg)
        self.assertEqual(DataTerm(self.model, self.x, cfg).distance(np.zeros(self.x.shape)), 0.0)
        self.assertGreater(-result.objective_trace[-1], 0.0)
        self.assertGreater(-result.objective_trace[-1], -result.objective_trace[0])

    def test_final_loss_not_above_first(self):
        for kind in ("l2", "sup", "stpr"):
            constraint = ConstraintKind(kind=kind, stpr_patch_len=64)
            cfg = AttackConfig(method="gd", lam=1e-3, lr=0.01, iterations=6, constraint=constraint)
            result = craft_gd(self.model, self.x, cfg)
            self.assertLessEqual(result.loss_trace[-1], result.loss_trace[0] + 1e-12, msg=kind)

    def test_magnitude_mode_reports_reconstructed_loss(self):
        model = small_model("mask_freq", seed=1)
        cfg = AttackConfig(method="gd", lam=1e-2, lr=0.01, iterations=3, domain="frequency",
                           frequency_mode="magnitude", stft=SMALL_STFT, griffin_lim_iters=4)
        result = craft_gd(model, self.x, cfg)
        distance = DataTerm(model, self.x, cfg).distance(result.eta.samples)
        constraint = constraint_value(result.eta, self.x, cfg.constraint)
        npt.assert_allclose(result.constraint_trace[-1], constraint, rtol=1e-9)
        npt.assert_allclose(result.objective_trace[-1], -distance, rtol=1e-9)
        npt.assert_allclose(result.loss_trace[-1], -distance + cfg.lam * constraint, rtol=1e-9, atol=1e-15)
        self.assertEqual(result.iterations, 3)

    def test_huge_lambda_gives_zero_perturbation(self):
        for kind in ("l2", "sup", "stpr"):
            cfg = AttackConfig(method="gd", lam=1e9, lr=1e-3, iterations=3, constraint=ConstraintKind(kind=kind))
            result = craft(self.model, self.x, cfg)
            npt.assert_array_equal(result.eta.samples, 0.0, err_msg=kind)

    def test_deterministic(self):
        cfg = AttackConfig(method="gd", lam=0.0, lr=0.01, iterations=3, seed=4)
        a = craft(self.model, self.x, cfg)
        b = craft(self.model, self.x, cfg)
        npt.assert_array_equal(a.eta.samples, b.eta.samples)
        c = craft(self.model, self.x, cfg.model_copy(update={"seed": 5}))
        self.assertFalse(np.array_equal(a.eta.samples, c.eta.samples))

    def test_frequency_domain_modes(self):
        model = small_model("mask_freq", seed=1)
        for mode in ("complex", "magnitude"):
            cfg = AttackConfig(method="gd", lam=1.0, lr=0.01, iterations=3, domain="frequency",
                               frequency_mode=mode, stft=SMALL_STFT, griffin_lim_iters=4)
            result = craft(model, self.x, cfg)
            self.assertEqual(result.eta.shape, self.x.shape)
            self.assertTrue(np.all(np.isfinite(result.eta.samples)), msg=mode)
            self.assertEqual(result.iterations, 3)

    def test_complex_domain_respects_prox(self):
        cfg = AttackConfig(method="gd", lam=1e9, lr=1e-3, iterations=2, domain="frequency", stft=SMALL_STFT)
        result = craft(self.model, self.x, cfg)
        npt.assert_array_equal(result.eta.samples, 0.0)

    def test_target_out_of_range(self):
        with self.assertRaises(ParameterError):
            craft(self.model, self.x, AttackConfig(target_source=2, iterations=1))

    def test_method_mismatch(self):
        with self.assertRaises(ParameterError):
            craft_gd(self.model, self.x, AttackConfig(method="fgsm", epsilon=0.1))


class TestFgsm(AttackTestBase):
    def test_values_are_signed_epsilon(self):
        epsilon = 0.01
        result = craft(self.model, self.x, AttackConfig(method="fgsm", epsilon=epsilon))
        values = np.unique(result.eta.samples)
        self.assertTrue(set(values.tolist()) <= {-epsilon, 0.0, epsilon})
        self.assertEqual(np.max(np.abs(result.eta.samples)), epsilon)
        self.assertEqual(result.iterations, 1)

    def test_zero_noise_gives_zero_gradient(self):
        result = craft(self.model, self.x, AttackConfig(method="fgsm", epsilon=0.01, init_scale=0.0))
        npt.assert_array_equal(result.eta.samples, 0.0)


class TestPgd(AttackTestBase):
    def test_iterates_stay_in_ball(self):
        epsilon = 0.005
        cfg = AttackConfig(method="pgd", epsilon=epsilon, iterations=8)
        result = craft(self.model, self.x, cfg)
        self.assertEqual(result.iterations, 8)
        self.assertTrue(all(value <= epsilon for value in result.extra_traces["sup_norm"]))
        self.assertLessEqual(np.max(np.abs(result.eta.samples)), epsilon)
        npt.assert_array_equal(result.adversarial.samples, self.x.samples + result.eta.samples)

    def test_distance_grows_with_epsilon(self):
        distances = []
        for epsilon in (0.005, 0.01, 0.02, 0.05):
            result = craft(self.model, self.x, AttackConfig(method="pgd", epsilon=epsilon, iterations=5))
            distances.append(-result.objective_trace[-1])
        inversions = sum(later < earlier for earlier, later in zip(distances, distances[1:]))
        self.assertLessEqual(inversions, 1, msg=str(distances))
        self.assertGreater(distances[-1], distances[0])

    def test_attack_all_sources(self):
        cfg = AttackConfig(method="pgd", epsilon=0.005, iterations=2, attack_all_sources=True)
        self.assertEqual(DataTerm(self.model, self.x, cfg).sources, [0, 1])
        self.assertEqual(craft(self.model, self.x, cfg).eta.shape, self.x.shape)


class TestTraceRecorder(unittest.TestCase):
    def test_replace_last(self):
        recorder = TraceRecorder(lam=2.0)
        recorder.record(1.0, 0.5)
        recorder.record(3.0, 1.0)
        recorder.replace_last(4.0, 0.25)
        self.assertEqual(recorder.loss, [0.0, -3.5])
        self.assertEqual(recorder.objective, [-1.0, -4.0])
        self.assertEqual(recorder.constraint, [0.5, 0.25])
        with self.assertRaises(ValueError):
            TraceRecorder(lam=1.0).replace_last(1.0, 1.0)


class TestTraceExport(TempDirTestCase):
    def test_csv_columns(self):
        model = small_model("conv_time")
        x = short_clip(seconds=0.1).mixture
        result = craft(model, x, AttackConfig(method="pgd", epsilon=0.01, iterations=3))
        path = export_trace_csv(result, self.tmp / "loss_trace.csv")
        table = pd.read_csv(path)
        self.assertEqual(list(table.columns), ["iteration", "loss", "objective", "constraint", "sup_norm"])
        self.assertEqual(table["iteration"].tolist(), [1, 2, 3])


if __name__ == "__main__":
    unittest.main()
