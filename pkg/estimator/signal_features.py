from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .framing import frame_bounds, frame_matrix

"""
Frame-level signal features: energy, RMS intensity and zero-crossing rate.
"""

# Window statistics use the population standard deviation throughout
POPULATION_DDOF = 0

class EmptyTrackError(Exception):
    """Raised when summarizing or thresholding a track with no frames."""

class GridMismatchError(Exception):
    """Raised when two frame tracks are combined but do not share a frame grid."""

class TrackKind(str, Enum):
    ENERGY = 'energy'
    RMS = 'rms'
    ZCR = 'zcr'
    PITCH_HZ = 'pitch_hz'
    VAD_FLAG = 'vad_flag'

@dataclass(frozen=True, eq=False)
class FrameTrack:
    """
    One value per frame of a window, on the frame grid described by
    `frame_step_ms` and `frame_span_ms`.
    """
    values: np.ndarray
    kind: TrackKind
    frame_step_ms: int
    frame_span_ms: int

    def __len__(self):
        return len(self.values)

    def with_values(self, values, kind=None):
        return replace(self, values=np.asarray(values), kind=kind or self.kind)

    def same_grid(self, other):
        return (len(self) == len(other) and self.frame_step_ms == other.frame_step_ms
                and self.frame_span_ms == other.frame_span_ms)

    def check_grid(self, other):
        if not self.same_grid(other):
            raise GridMismatchError(f'{self.kind.value} track ({len(self)} frames, {self.frame_step_ms}/'
                                    f'{self.frame_span_ms} ms) does not match {other.kind.value} track '
                                    f'({len(other)} frames, {other.frame_step_ms}/{other.frame_span_ms} ms)')

def _track(values, kind, cfg):
    return FrameTrack(np.asarray(values, dtype=np.float64), kind, cfg.frame_step_ms, cfg.frame_span_ms)

def frame_energy(win, cfg):
    """Sum of squared samples per frame."""
    frames = frame_matrix(win.samples, cfg, win.sample_rate)
    return _track(np.einsum('ij,ij->i', frames, frames), TrackKind.ENERGY, cfg)

def frame_rms(win, cfg):
    """Root mean square amplitude per frame."""
    frames = frame_matrix(win.samples, cfg, win.sample_rate)
    return _track(np.sqrt(np.einsum('ij,ij->i', frames, frames) / frames.shape[1]), TrackKind.RMS, cfg)

def frame_zcr(win, cfg):
    """
    Sign changes between consecutive samples inside each frame, divided by the
    frame's sample count. A zero sample carries the sign of the last non-zero
    sample before it.
    """
    bounds = frame_bounds(len(win.samples), cfg, win.sample_rate)
    signs = np.sign(win.samples)
    last_nonzero = np.maximum.accumulate(np.where(signs != 0, np.arange(len(signs)), 0))
    signs = signs[last_nonzero]
    crossings = (signs[1:] * signs[:-1]) < 0
    # cumulative[k]: crossings among sample pairs ending at or before k
    cumulative = np.concatenate(([0], np.cumsum(crossings, dtype=np.int64)))
    counts = cumulative[bounds[:, 1] - 1] - cumulative[bounds[:, 0]]
    return _track(counts / cfg.frame_span(win.sample_rate), TrackKind.ZCR, cfg)

def summarize(track):
    """
    Mean and population standard deviation of a track.

    :return: Tuple (mean, std)
    """
    if not len(track):
        raise EmptyTrackError(f'Cannot summarize empty {track.kind.value} track')
    values = np.asarray(track.values, dtype=np.float64)
    return float(values.mean()), float(values.std(ddof=POPULATION_DDOF))
