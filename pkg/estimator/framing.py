from dataclasses import dataclass

import librosa
import numpy as np

from .util import ms_to_samples
from .validators import is_valid_analysis_config

"""
Window and frame geometry. Windows are the unit an estimate is produced for;
frames are the short overlapping slices inside a window that every frame-level
feature is computed on.
"""

class EmptyWindowError(Exception):
    """Raised when a window is shorter than a single frame."""

@dataclass(frozen=True)
class AnalysisConfig:
    window_ms: int = 5000
    step_ms: int = 1000
    frame_step_ms: int = 10
    frame_span_ms: int = 50

    def __post_init__(self):
        is_valid_analysis_config(self)

    def window_len(self, sample_rate):
        return ms_to_samples(self.window_ms, sample_rate)

    def step_len(self, sample_rate):
        return ms_to_samples(self.step_ms, sample_rate)

    def frame_step(self, sample_rate):
        return ms_to_samples(self.frame_step_ms, sample_rate)

    def frame_span(self, sample_rate):
        return ms_to_samples(self.frame_span_ms, sample_rate)

    def frames_per_window(self, sample_rate):
        return frame_count(self.window_len(sample_rate), self, sample_rate)

@dataclass(frozen=True, eq=False)
class AudioWindow:
    samples: np.ndarray
    sample_rate: int
    start_time_s: float

    def __len__(self):
        return len(self.samples)

    @property
    def duration_s(self):
        return len(self.samples) / self.sample_rate

def frame_count(n_samples, cfg, sample_rate):
    span = cfg.frame_span(sample_rate)
    if n_samples < span:
        return 0
    return (n_samples - span) // cfg.frame_step(sample_rate) + 1

def frame_bounds(window_len, cfg, sample_rate):
    """
    Sample bounds of every frame in a window.

    :param window_len: Window length in samples
    :param cfg: AnalysisConfig
    :param sample_rate: Sample rate in Hz
    :return: int array of shape (n_frames, 2) holding [start, end) pairs
    """
    n = frame_count(window_len, cfg, sample_rate)
    if n == 0:
        raise EmptyWindowError(f'Window of {window_len} samples is shorter than one frame '
                               f'({cfg.frame_span(sample_rate)} samples)')
    starts = np.arange(n, dtype=np.int64) * cfg.frame_step(sample_rate)
    return np.stack([starts, starts + cfg.frame_span(sample_rate)], axis=1)

def frame_matrix(samples, cfg, sample_rate):
    """
    View the samples as overlapping frames.

    :return: Array of shape (n_frames, frame_span), read-only view
    """
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    span = cfg.frame_span(sample_rate)
    if len(samples) < span:
        raise EmptyWindowError(f'Window of {len(samples)} samples is shorter than one frame ({span} samples)')
    return librosa.util.frame(samples, frame_length=span, hop_length=cfg.frame_step(sample_rate)).T

class WindowAssembler:
    """
    Accumulates mono sample chunks and releases complete windows. Window k
    starts at sample k * step_len; a trailing partial window is never emitted.
    """
    def __init__(self, cfg, sample_rate):
        self.cfg = cfg
        self.sample_rate = sample_rate
        self.window_len = cfg.window_len(sample_rate)
        self.step_len = cfg.step_len(sample_rate)
        self.index = 0
        # Absolute sample position of self.buffer[0]
        self.offset = 0
        self.buffer = np.zeros(0, dtype=np.float64)

    def push(self, samples):
        """
        Append samples and return the windows completed by them.

        :param samples: 1-D mono samples
        :return: List of AudioWindow
        """
        self.buffer = np.concatenate((self.buffer, np.asarray(samples, dtype=np.float64)))
        ready = []
        while True:
            start = self.index * self.step_len
            lo = start - self.offset
            if lo + self.window_len > len(self.buffer):
                break
            ready.append(AudioWindow(self.buffer[lo:lo + self.window_len].copy(), self.sample_rate,
                                     self.index * self.cfg.step_ms / 1000.0))
            self.index += 1
        drop = min(self.index * self.step_len - self.offset, len(self.buffer))
        if drop > 0:
            self.buffer = self.buffer[drop:]
            self.offset += drop
        return ready

def windows(stream, cfg):
    """
    Generator over full analysis windows of a mono sample source.

    :param stream: Iterable of mono AudioBuffers sharing one sample rate
    :param cfg: AnalysisConfig
    """
    assembler = None
    for chunk in stream:
        if chunk.channels != 1:
            raise ValueError('windows() expects mono audio')
        if assembler is None:
            assembler = WindowAssembler(cfg, chunk.sample_rate)
        elif chunk.sample_rate != assembler.sample_rate:
            raise ValueError('Sample rate changed mid-stream')
        yield from assembler.push(chunk.samples)
