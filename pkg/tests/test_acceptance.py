"""End-to-end properties on trained toy models.

These train small separators and run full attack searches, so they only run
with ``SEPADV_SLOW_TESTS=1``.
"""
import unittest
from functools import lru_cache

import numpy as np

from attacks import AttackConfig, craft
from audio_io.synth import default_recipe, synth_source_set
from harness import ExperimentPlan, run_transfer
from harness.matching import match_di
from harness.plan import ClipSpec, ModelRef, TargetModel, TrainingSpec, resolve_model
from harness.runner import clip_config
from harness.studies import regularizer_comparison, untargeted_effects
from metrics import GroundMetric, di, ds
from metrics.reports import GLOBAL_TRACK
from tests.helpers import slow_tests_enabled

SDR = GroundMetric(kind="sdr")
TARGET_DI_DB = 30.0
TRAINING = TrainingSpec(epochs=60, num_clips=4, seed=0)
SOURCE_REF = ModelRef(arch="mask_freq", seed=0, train=TRAINING)


@lru_cache(maxsize=None)
def trained(ref: ModelRef):
    return resolve_model(ref)


def _clips(count: int, seconds: float = 1.0, leading_silence_s: float = 0.0, first_seed: int = 100):
    recipe = default_recipe(duration_s=seconds, leading_silence_s=leading_silence_s)
    return [synth_source_set(recipe, first_seed + index, track_id=f"clip-{index}") for index in range(count)]


def _whole_clip_ds(model, clip, adversarial_input, index=0) -> float:
    clean = model.forward(clip.mixture)[index]
    adversarial = model.forward(adversarial_input)[index]
    return ds(SDR, clip.source(index), clean, adversarial, clip, index).value


def _matched_ds(model, clips, cfg):
    values = []
    for clip in clips:
        outcome = match_di(model, clip.mixture, clip_config(cfg, clip.track_id), TARGET_DI_DB)
        assert outcome.matched, f"{cfg.method} missed DI {TARGET_DI_DB} on {clip.track_id}: {outcome.measured}"
        values.append(_whole_clip_ds(model, clip, outcome.result.adversarial))
    return float(np.median(values))


GD = AttackConfig(method="gd", lr=1e-2, iterations=100)
PGD = AttackConfig(method="pgd", iterations=20)
FGSM = AttackConfig(method="fgsm")


@unittest.skipUnless(slow_tests_enabled(), "set SEPADV_SLOW_TESTS=1 to run acceptance tests")
class TestAttackEffectiveness(unittest.TestCase):
    def test_gd_beats_random_noise(self):
        model = trained(SOURCE_REF)
        clips = _clips(4)
        gd_median = _matched_ds(model, clips, GD)

        noise_values = []
        for clip in clips:
            x = clip.mixture
            for seed in range(25):
                noise = np.random.default_rng(seed).standard_normal(x.shape)
                noise *= np.linalg.norm(x.samples) / (np.linalg.norm(noise) * 10 ** (TARGET_DI_DB / 20))
                eta = x.with_samples(noise)
                self.assertAlmostEqual(di(x, eta), TARGET_DI_DB, places=6)
                noise_values.append(_whole_clip_ds(model, clip, x.with_samples(x.samples + noise)))
        noise_median = float(np.median(noise_values))
        self.assertGreater(gd_median, 0.0)
        self.assertGreaterEqual(gd_median, 5 * max(noise_median, 0.0))

    def test_method_ordering(self):
        model = trained(SOURCE_REF)
        clips = _clips(8)
        gd, pgd, fgsm = (_matched_ds(model, clips, cfg) for cfg in (GD, PGD, FGSM))
        self.assertGreaterEqual(gd, pgd)
        self.assertGreater(pgd, fgsm)

    def test_pgd_degradation_grows_with_epsilon(self):
        model = trained(SOURCE_REF)
        clips = _clips(4)
        medians = []
        for epsilon in (0.002, 0.005, 0.01, 0.02):
            cfg = PGD.model_copy(update={"epsilon": epsilon})
            values = [
                _whole_clip_ds(model, clip, craft(model, clip.mixture, clip_config(cfg, clip.track_id)).adversarial)
                for clip in clips
            ]
            medians.append(float(np.median(values)))
        for earlier, later in zip(medians, medians[1:]):
            self.assertGreaterEqual(later, earlier - 0.1, msg=str(medians))
        self.assertGreater(medians[-1], medians[0])


@unittest.skipUnless(slow_tests_enabled(), "set SEPADV_SLOW_TESTS=1 to run acceptance tests")
class TestStprLocalization(unittest.TestCase):
    def test_silent_region_energy(self):
        model = trained(SOURCE_REF)
        clips = _clips(4, seconds=2.0, leading_silence_s=0.5)
        table = regularizer_comparison(model, clips, GD, target_ds_db=3.0, tolerance_db=0.5)
        self.assertTrue(table["matched"].all(), msg=table.to_string())
        self.assertTrue((table["silent_samples"] == 4000).all())
        fractions = table.groupby("constraint")["silent_energy_fraction"].median()
        self.assertLess(fractions["stpr"], 0.5 * fractions["l2"])


@unittest.skipUnless(slow_tests_enabled(), "set SEPADV_SLOW_TESTS=1 to run acceptance tests")
class TestTransferOrdering(unittest.TestCase):
    def test_white_gray_black(self):
        gray_ref = ModelRef(arch="mask_freq", seed=1, train=TRAINING.model_copy(update={"seed": 1}))
        black_ref = ModelRef(arch="conv_time", seed=0, train=TRAINING)
        clip_recipe = default_recipe(duration_s=1.0)
        plan = ExperimentPlan(
            experiment="transfer",
            clips=[ClipSpec(synth=clip_recipe, seed=100 + index) for index in range(4)],
            source_model=SOURCE_REF,
            target_models=[
                TargetModel(label="white", model=SOURCE_REF, condition="white"),
                TargetModel(label="gray", model=gray_ref, condition="gray"),
                TargetModel(label="black", model=black_ref, condition="black"),
            ],
            attack_grid=[AttackConfig(method="pgd", epsilon=0.01, iterations=20, label="pgd")],
            metrics=[SDR],
        )
        medians = run_transfer(plan).medians_by_condition("DS_SDR")
        self.assertGreater(medians["white"], medians["gray"])
        self.assertGreater(medians["gray"], medians["black"])
        self.assertGreaterEqual(medians["white"], 2 * medians["gray"])


@unittest.skipUnless(slow_tests_enabled(), "set SEPADV_SLOW_TESTS=1 to run acceptance tests")
class TestUntargetedEffects(unittest.TestCase):
    def test_attacked_source_degrades_most(self):
        model = trained(SOURCE_REF)
        clips = _clips(4)
        cfg = match_di(model, clips[0].mixture, GD, TARGET_DI_DB).config
        table = untargeted_effects(model, clips, cfg)
        global_rows = table[table["track_id"] == GLOBAL_TRACK].set_index("source_index")
        attacked = global_rows.loc[0, "DS_SDR"]
        for index in global_rows.index.drop(0):
            self.assertGreaterEqual(attacked, 2 * max(global_rows.loc[index, "DS_SDR"], 0.0))
        self.assertGreater(attacked, 0.0)


if __name__ == "__main__":
    unittest.main()
