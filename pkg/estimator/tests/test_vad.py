from unittest import TestCase

import numpy as np

from ..config import EngineConfig
from ..pipeline import voice_activity
from ..signal_features import EmptyTrackError, FrameTrack, TrackKind
from ..synth import frame_truth, occupancy_mix, speech_and_noise
from ..util import runs
from ..vad import VadParams, detect_voice_activity
from .utils import window

def tracks(energy, zcr, pitch):
    def make(values, kind):
        return FrameTrack(np.asarray(values, dtype=np.float64), kind, 10, 50)
    return make(energy, TrackKind.ENERGY), make(zcr, TrackKind.ZCR), make(pitch, TrackKind.PITCH_HZ)

def vad_of(samples, rate=16000):
    return voice_activity(window(samples, rate), EngineConfig())[-1]

class DetectVoiceActivityTest(TestCase):
    def test_silence_has_no_voice_activity(self):
        vad = vad_of(np.zeros(80000))
        self.assertEqual((vad.mean, vad.std_dev), (0.0, 0.0))
        self.assertTrue(vad.degenerate_silence)
        self.assertGreater(vad.min_energy, 0.0)

    def test_half_speech_half_noise(self):
        vad = vad_of(speech_and_noise(5.0))
        self.assertGreaterEqual(vad.mean, 0.4)
        self.assertLessEqual(vad.mean, 0.6)
        flags = vad.flags.values
        self.assertGreater(flags[:200].mean(), 0.95)
        self.assertFalse(flags[300:].any())

    def test_short_burst_pruned(self):
        n = 100
        zcr = np.zeros(n)
        pitch = np.zeros(n)
        zcr[50:55], pitch[50:55] = 0.02, 150.0
        zcr[70:90], pitch[70:90] = 0.02, 150.0
        vad = detect_voice_activity(*tracks(np.ones(n), zcr, pitch))
        expected = np.zeros(n)
        expected[70:90] = 1
        np.testing.assert_array_equal(vad.flags.values, expected)
        self.assertAlmostEqual(vad.mean, 0.2)

    def test_zero_pitch_means_no_activity(self):
        n = 200
        vad = detect_voice_activity(*tracks(np.ones(n), np.full(n, 0.02), np.zeros(n)))
        self.assertFalse(vad.flags.values.any())

    def test_pitch_found_within_search_radius(self):
        n = 60
        pitch = np.zeros(n)
        pitch[[10, 26, 42]] = 120.0
        vad = detect_voice_activity(*tracks(np.ones(n), np.full(n, 0.02), pitch))
        np.testing.assert_array_equal(vad.flags.values[2:51], 1)
        self.assertFalse(vad.flags.values[:2].any())

    def test_zcr_band_is_exclusive(self):
        n = 50
        for rate in (VadParams().zcr_min, VadParams().zcr_max):
            vad = detect_voice_activity(*tracks(np.ones(n), np.full(n, rate), np.full(n, 150.0)))
            self.assertFalse(vad.flags.values.any())

    def test_minimum_energy_follows_running_mean_of_silent_frames(self):
        params = VadParams()
        energy = np.random.default_rng(4).uniform(0.01, 2.0, 120)
        vad = detect_voice_activity(*tracks(energy, np.zeros(120), np.zeros(120)), params)
        expected = float(np.mean(energy[:params.init_span]))
        for count, e in enumerate(energy.tolist(), start=1):
            expected = (count * expected + e) / (count + 1)
        self.assertEqual(vad.min_energy, expected)
        self.assertFalse(vad.degenerate_silence)

    def test_empty_track(self):
        with self.assertRaises(EmptyTrackError):
            detect_voice_activity(*tracks([], [], []))

class VoiceActivityAccuracyTest(TestCase):
    def test_synthetic_occupancy_corpus(self):
        rng = np.random.default_rng(11)
        cfg = EngineConfig()
        tp = fp = fn = 0
        for seed in range(60):
            occupancy = rng.uniform(0.2, 0.8)
            samples, mask = occupancy_mix(occupancy, seed=seed)
            vad = vad_of(samples)
            flags = vad.flags.values > 0
            truth = frame_truth(mask, cfg.analysis, 16000)
            tp += np.count_nonzero(flags & truth)
            fp += np.count_nonzero(flags & ~truth)
            fn += np.count_nonzero(~flags & truth)
            with self.subTest(seed=seed):
                self.assertLessEqual(abs(vad.mean - truth.mean()), 0.1)
                starts, ends = runs(flags)
                self.assertTrue(np.all(ends - starts >= VadParams().min_run))
        f1 = 2 * tp / (2 * tp + fp + fn)
        self.assertGreaterEqual(f1, 0.9)
