from unittest import TestCase

import numpy as np

from ..framing import AnalysisConfig
from ..pitch import PitchParams, gate_by_vad, pitch_track, prune_short_runs
from ..signal_features import FrameTrack, GridMismatchError, TrackKind, frame_rms
from ..synth import glottal_pulses, sine, white_noise
from .utils import window

CFG = AnalysisConfig()

def track(samples, rate=16000):
    win = window(samples, rate)
    return pitch_track(win, frame_rms(win, CFG), CFG).values

def flags(values):
    return FrameTrack(np.asarray(values, dtype=np.float64), TrackKind.VAD_FLAG, 10, 50)

def pitches(values):
    return FrameTrack(np.asarray(values, dtype=np.float64), TrackKind.PITCH_HZ, 10, 50)

class PitchTrackTest(TestCase):
    def test_sine_220_hz(self):
        values = track(sine(220, 5.0))
        voiced = values[values > 0]
        self.assertGreater(len(voiced), 0.9 * len(values))
        self.assertTrue(np.all(np.abs(voiced - 220) <= 4))

    def test_sine_accuracy_across_rates(self):
        for rate in (8000, 16000, 44100):
            for freq in (90, 120, 180, 220, 320):
                with self.subTest(rate=rate, freq=freq):
                    values = track(sine(freq, 1.0, rate), rate)
                    voiced = values[values > 0]
                    self.assertGreater(len(voiced), 0)
                    self.assertLessEqual(abs(voiced.mean() - freq), 0.03 * freq)

    def test_above_ceiling_rejected(self):
        for rate in (8000, 16000, 44100):
            self.assertFalse(track(sine(500, 1.0, rate), rate).any())

    def test_silence(self):
        self.assertFalse(track(np.zeros(80000)).any())

    def test_no_value_above_ceiling_or_below_floor(self):
        rng = np.random.default_rng(2)
        for seed in range(5):
            values = track(white_noise(1.0, amplitude=0.2, seed=seed) + sine(rng.uniform(80, 600), 1.0))
            nonzero = values[values > 0]
            self.assertTrue(np.all((nonzero >= 75) & (nonzero <= 400)))

    def test_amplitude_invariance(self):
        base = track(glottal_pulses(140, 1.0, amplitude=1.0))
        for scale in (0.1, 0.5):
            scaled = track(glottal_pulses(140, 1.0, amplitude=scale))
            np.testing.assert_array_equal(scaled > 0, base > 0)
            voiced = base > 0
            self.assertLess(np.max(np.abs(scaled[voiced] - base[voiced])), 1.0)

    def test_quiet_frames_gated(self):
        samples = np.concatenate((sine(150, 2.0, amplitude=0.5), sine(150, 2.0, amplitude=0.01)))
        values = track(samples)
        self.assertTrue(values[:150].all())
        self.assertFalse(values[-150:].any())

    def test_short_runs_pruned(self):
        for values in (track(glottal_pulses(120, 1.0)), track(white_noise(1.0, amplitude=0.3))):
            padded = np.concatenate(([False], values > 0, [False]))
            edges = np.flatnonzero(padded[1:] != padded[:-1])
            self.assertTrue(np.all(edges[1::2] - edges[0::2] >= 4))

    def test_pruning_idempotent(self):
        raw = pitches([0, 100, 100, 0, 120, 120, 120, 120, 0, 130, 0, 0])
        once = prune_short_runs(raw)
        np.testing.assert_array_equal(once.values, [0, 0, 0, 0, 120, 120, 120, 120, 0, 0, 0, 0])
        np.testing.assert_array_equal(prune_short_runs(once).values, once.values)

class GateByVadTest(TestCase):
    def test_no_voice_activity_zeroes_everything(self):
        gated = gate_by_vad(pitches(np.full(60, 150.0)), flags(np.zeros(60)))
        self.assertFalse(gated.values.any())

    def test_within_buffer_retained(self):
        vad = np.zeros(60)
        vad[35] = 1
        p = np.zeros(60)
        p[30] = 150.0
        self.assertEqual(gate_by_vad(pitches(p), flags(vad)).values[30], 150.0)

    def test_beyond_buffer_zeroed(self):
        vad = np.zeros(60)
        vad[15] = 1
        p = np.zeros(60)
        p[0] = 150.0
        self.assertEqual(gate_by_vad(pitches(p), flags(vad)).values[0], 0.0)

    def test_only_zeroes_values(self):
        rng = np.random.default_rng(0)
        p = np.where(rng.uniform(size=300) < 0.5, rng.uniform(75, 400, 300), 0.0)
        vad = (rng.uniform(size=300) < 0.05).astype(float)
        gated = gate_by_vad(pitches(p), flags(vad)).values
        self.assertTrue(np.all((gated == p) | (gated == 0)))

    def test_buffer_scales_with_frame_step(self):
        vad = FrameTrack(np.array([1.0] + [0.0] * 9), TrackKind.VAD_FLAG, 20, 50)
        p = FrameTrack(np.full(10, 100.0), TrackKind.PITCH_HZ, 20, 50)
        np.testing.assert_array_equal(gate_by_vad(p, vad, PitchParams()).values > 0, [True] * 6 + [False] * 4)

    def test_grid_mismatch(self):
        with self.assertRaises(GridMismatchError):
            gate_by_vad(pitches(np.zeros(10)), flags(np.zeros(11)))

    def test_rms_track_from_another_window(self):
        win = window(sine(220, 5.0))
        with self.assertRaises(GridMismatchError):
            pitch_track(win, frame_rms(window(sine(220, 4.0)), CFG), CFG)
