import logging
import time
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
from scipy import stats
from threadpoolctl import threadpool_limits

from .audio_io import to_mono
from .config import EngineConfig
from .framing import AudioWindow
from .pipeline import extract_features
from .pitch import gate_by_vad, pitch_track
from .signal_features import frame_energy, frame_rms, frame_zcr
from .syllables import count_syllables
from .vad import detect_voice_activity

"""
Feature extraction run-time across window sizes.
"""

logger = logging.getLogger(__name__)

DEFAULT_SIZES = (1, 5, 10, 15, 30, 60)
FEATURES = ('intensity', 'pitch', 'voice_activity', 'speech_rate', 'all')

class BenchError(Exception):
    """Raised when a benchmark cannot run on the given audio."""

@dataclass(frozen=True, eq=False)
class BenchResult:
    # Rows per (feature, window_s) with mean_s and std_s columns
    table: pd.DataFrame
    slope: float
    intercept: float
    r_squared: float

    def mean(self, feature, window_s):
        row = self.table[(self.table['feature'] == feature) & (self.table['window_s'] == window_s)]
        return float(row['mean_s'].iloc[0])

    def to_text(self):
        """Mean seconds per feature (rows) and window size (columns), then the linear fit."""
        wide = self.table.pivot(index='feature', columns='window_s', values='mean_s').reindex(list(FEATURES))
        wide.columns = [f'{c:g}s' for c in wide.columns]
        fit = f'all = {self.slope:.6f} * window_s + {self.intercept:.6f}  (R^2 = {self.r_squared:.4f})'
        return wide.to_string(float_format=lambda v: f'{v:.4f}') + '\n' + fit

def time_features(win, cfg):
    """
    Wall time of each feature extractor on one window. Each feature pays for
    its own frame tracks, except the pitch track, which every pitch-dependent
    feature reuses.

    :return: Dict of seconds keyed by FEATURES
    """
    analysis = cfg.analysis
    clock = time.perf_counter
    out = {}

    t = clock()
    rms = frame_rms(win, analysis)
    out['intensity'] = clock() - t

    t = clock()
    pitch = pitch_track(win, rms, analysis, cfg.pitch)
    out['pitch'] = clock() - t

    t = clock()
    vad = detect_voice_activity(frame_energy(win, analysis), frame_zcr(win, analysis), pitch, cfg.vad)
    out['voice_activity'] = clock() - t

    gated = gate_by_vad(pitch, vad.flags, cfg.pitch)
    t = clock()
    count_syllables(frame_rms(win, analysis), frame_zcr(win, analysis), gated, analysis)
    out['speech_rate'] = clock() - t

    t = clock()
    extract_features(win, cfg)
    out['all'] = clock() - t
    return out

def run_bench(audio, window_sizes_s=DEFAULT_SIZES, repeats=10, cfg=EngineConfig()):
    """
    Time every feature extractor on the first window of `audio` at each window
    size. One warm-up run per size is discarded. BLAS and FFT thread pools are
    limited to one thread.

    :param audio: AudioBuffer at least as long as the largest window
    :param window_sizes_s: Window sizes in seconds
    :param repeats: Timed runs per size
    :param cfg: EngineConfig
    :return: BenchResult
    """
    if repeats < 1:
        raise BenchError('repeats must be at least 1')
    sizes = sorted(set(float(s) for s in window_sizes_s))
    if len(sizes) < 2:
        raise BenchError('Need at least two window sizes for the linear fit')
    mono = to_mono(audio)
    if mono.duration_s < sizes[-1]:
        raise BenchError(f'Audio is {mono.duration_s:.1f} s, shorter than the {sizes[-1]:g} s window')

    rows = []
    with threadpool_limits(limits=1):
        for size in sizes:
            sized = replace(cfg, analysis=replace(cfg.analysis, window_ms=int(round(size * 1000))))
            n = sized.analysis.window_len(mono.sample_rate)
            win = AudioWindow(np.array(mono.samples[:n]), mono.sample_rate, 0.0)
            time_features(win, sized)
            runs = pd.DataFrame([time_features(win, sized) for _ in range(repeats)])
            for feature in FEATURES:
                rows.append({'feature': feature, 'window_s': size, 'mean_s': runs[feature].mean(),
                             'std_s': runs[feature].std(ddof=0)})
            logger.info('Window %gs: all features %.4f s', size, runs['all'].mean())

    table = pd.DataFrame(rows)
    totals = table[table['feature'] == 'all']
    fit = stats.linregress(totals['window_s'].to_numpy(), totals['mean_s'].to_numpy())
    return BenchResult(table, float(fit.slope), float(fit.intercept), float(fit.rvalue**2))
