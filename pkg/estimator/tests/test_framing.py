from unittest import TestCase

import numpy as np
from django.core.exceptions import ValidationError

from ..audio_io import AudioBuffer
from ..framing import (AnalysisConfig, EmptyWindowError, WindowAssembler, frame_bounds, frame_count, frame_matrix,
                       windows)

class AnalysisConfigTest(TestCase):
    def test_defaults_in_samples(self):
        cfg = AnalysisConfig()
        self.assertEqual((cfg.frame_step(16000), cfg.frame_span(16000)), (160, 800))
        self.assertEqual((cfg.frame_step(44100), cfg.frame_span(44100)), (441, 2205))
        self.assertEqual((cfg.window_len(8000), cfg.step_len(8000)), (40000, 8000))

    def test_rounds_to_nearest_sample(self):
        cfg = AnalysisConfig(frame_step_ms=10, frame_span_ms=25)
        self.assertEqual(cfg.frame_span(22050), 551)

    def test_invalid_geometry(self):
        with self.assertRaises(ValidationError):
            AnalysisConfig(window_ms=0)
        with self.assertRaises(ValidationError):
            AnalysisConfig(window_ms=40, frame_span_ms=50)
        with self.assertRaises(ValidationError):
            AnalysisConfig(frame_step_ms=60, frame_span_ms=50)

class FrameBoundsTest(TestCase):
    def test_five_second_window_at_16k(self):
        cfg = AnalysisConfig()
        bounds = frame_bounds(80000, cfg, 16000)
        self.assertEqual(len(bounds), 496)
        np.testing.assert_array_equal(bounds[0], [0, 800])
        np.testing.assert_array_equal(bounds[-1], [79200, 80000])

    def test_frames_never_exceed_window(self):
        cfg = AnalysisConfig()
        for n in (800, 801, 959, 960, 12345):
            bounds = frame_bounds(n, cfg, 16000)
            self.assertEqual(len(bounds), (n - 800) // 160 + 1)
            self.assertLessEqual(bounds[-1, 1], n)

    def test_shorter_than_one_frame(self):
        with self.assertRaises(EmptyWindowError):
            frame_bounds(799, AnalysisConfig(), 16000)
        self.assertEqual(frame_count(799, AnalysisConfig(), 16000), 0)

    def test_frame_matrix_matches_bounds(self):
        cfg = AnalysisConfig()
        samples = np.arange(4000, dtype=np.float64)
        frames = frame_matrix(samples, cfg, 8000)
        bounds = frame_bounds(len(samples), cfg, 8000)
        self.assertEqual(frames.shape, (len(bounds), 400))
        for (lo, hi), frame in zip(bounds, frames):
            np.testing.assert_array_equal(frame, samples[lo:hi])

def chunked(samples, rate, size):
    for lo in range(0, len(samples), size):
        yield AudioBuffer(samples[lo:lo + size], rate)

class WindowsTest(TestCase):
    def test_window_count_and_starts(self):
        rate = 8000
        samples = np.random.default_rng(0).uniform(-1, 1, 10 * rate)
        wins = list(windows([AudioBuffer(samples, rate)], AnalysisConfig()))
        self.assertEqual([w.start_time_s for w in wins], [0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
        for k, w in enumerate(wins):
            np.testing.assert_array_equal(w.samples, samples[k * rate:k * rate + 5 * rate])

    def test_trailing_partial_window_dropped(self):
        rate = 8000
        wins = list(windows([AudioBuffer(np.zeros(int(7.5 * rate)), rate)], AnalysisConfig()))
        self.assertEqual(len(wins), 3)

    def test_chunking_does_not_change_windows(self):
        rate = 16000
        samples = np.random.default_rng(1).uniform(-1, 1, 12 * rate)
        whole = list(windows([AudioBuffer(samples, rate)], AnalysisConfig()))
        for size in (331, 997, 8000, 16000 * 7):
            pieces = list(windows(chunked(samples, rate, size), AnalysisConfig()))
            self.assertEqual(len(pieces), len(whole))
            for a, b in zip(whole, pieces):
                self.assertEqual(a.start_time_s, b.start_time_s)
                np.testing.assert_array_equal(a.samples, b.samples)

    def test_empty_source(self):
        self.assertEqual(list(windows([], AnalysisConfig())), [])

    def test_step_longer_than_window(self):
        rate = 1000
        cfg = AnalysisConfig(window_ms=1000, step_ms=3000)
        assembler = WindowAssembler(cfg, rate)
        wins = assembler.push(np.arange(7500, dtype=np.float64))
        self.assertEqual([w.samples[0] for w in wins], [0.0, 3000.0, 6000.0])
