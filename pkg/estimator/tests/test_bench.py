from unittest import TestCase

from ..audio_io import AudioBuffer
from ..bench import DEFAULT_SIZES, FEATURES, BenchError, run_bench
from ..synth import scenario

class RunBenchTest(TestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.result = run_bench(scenario('speech-mix', 61.0), DEFAULT_SIZES, repeats=10)

    def test_table_shape(self):
        self.assertEqual(len(self.result.table), len(FEATURES) * len(DEFAULT_SIZES))
        text = self.result.to_text()
        self.assertIn('60s', text)
        self.assertIn('R^2', text)

    def test_total_time_scales_linearly(self):
        ratio = self.result.mean('all', 60) / self.result.mean('all', 5)
        self.assertGreaterEqual(ratio, 8)
        self.assertLessEqual(ratio, 16)
        self.assertGreaterEqual(self.result.r_squared, 0.95)
        self.assertGreater(self.result.slope, 0)

    def test_pitch_dominates_and_intensity_is_cheapest(self):
        at_60 = {f: self.result.mean(f, 60) for f in FEATURES if f != 'all'}
        self.assertEqual(max(at_60, key=at_60.get), 'pitch')
        self.assertEqual(min(at_60, key=at_60.get), 'intensity')
        self.assertGreater(self.result.mean('pitch', 60) / self.result.mean('all', 60), 0.5)

    def test_short_windows_under_a_second(self):
        for size in (1, 5, 10, 15):
            self.assertLess(self.result.mean('all', size), 1.0)

class BenchErrorTest(TestCase):
    def test_audio_too_short(self):
        with self.assertRaises(BenchError):
            run_bench(AudioBuffer([0.0] * 16000, 16000), (1, 5))

    def test_needs_two_sizes(self):
        with self.assertRaises(BenchError):
            run_bench(scenario('silence', 2.0), (1, 1))

    def test_repeats(self):
        with self.assertRaises(BenchError):
            run_bench(scenario('silence', 2.0), (1, 2), repeats=0)
