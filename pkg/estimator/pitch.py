import logging
from dataclasses import dataclass

import numpy as np
from scipy import fft

from .framing import frame_matrix
from .signal_features import FrameTrack, GridMismatchError, TrackKind
from .util import dilate, remove_short_runs
from .validators import is_valid_pitch_params

"""
Autocorrelation pitch tracking with silence gating, run pruning and gating by
voice activity.
"""

logger = logging.getLogger(__name__)

# Frames handled per FFT batch; bounds memory for long windows
BLOCK_FRAMES = 256

@dataclass(frozen=True)
class PitchParams:
    floor_hz: float = 75.0
    # Frequencies above this are estimated but rejected
    ceiling_hz: float = 400.0
    # Upper end of the lag search
    search_ceiling_hz: float = 1000.0
    voicing_threshold: float = 0.45
    octave_cost: float = 0.01
    snr_ratio: float = 4.0
    ambient_percentile: float = 10.0
    # Silence threshold never exceeds this fraction of the loudest frame
    silence_ceiling_ratio: float = 0.5
    min_run: int = 4
    vad_buffer_ms: int = 100

    def __post_init__(self):
        is_valid_pitch_params(self)

def _lag_range(params, sample_rate, frame_span):
    min_lag = max(2, int(np.floor(sample_rate / params.search_ceiling_hz)))
    max_lag = min(int(np.ceil(sample_rate / params.floor_hz)), frame_span - 2)
    return min_lag, max_lag

def normalized_autocorrelation(frames, max_lag):
    """
    Autocorrelation of each frame at lags 0..max_lag+1, normalized by the
    energies of the overlapping head and tail segments so a periodic frame
    scores 1 at its period regardless of amplitude.

    :param frames: Array (n_frames, span)
    :return: Array (n_frames, max_lag + 2)
    """
    n_frames, span = frames.shape
    n_fft = fft.next_fast_len(2 * span)
    spectrum = fft.rfft(frames, n=n_fft, axis=1)
    acf = fft.irfft(spectrum.real**2 + spectrum.imag**2, n=n_fft, axis=1)[:, :max_lag + 2]
    cumulative = np.concatenate((np.zeros((n_frames, 1)), np.cumsum(frames**2, axis=1)), axis=1)
    lags = np.arange(max_lag + 2)
    head = cumulative[:, span - lags]
    tail = cumulative[:, span:span + 1] - cumulative[:, lags]
    denom = np.sqrt(np.maximum(head * tail, 0.0))
    out = np.zeros_like(acf)
    np.divide(acf, denom, out=out, where=denom > 1e-20)
    return out

def best_lags(acf, min_lag, max_lag, sample_rate, params):
    """
    Pick the best local maximum of each normalized autocorrelation row, refined
    by parabolic interpolation. Shorter lags win near-ties through the octave
    cost.

    :return: Tuple (lag, strength) arrays; lag is NaN where no maximum exists
    """
    lags = np.arange(min_lag, max_lag + 1)
    prev, here, nxt = acf[:, lags - 1], acf[:, lags], acf[:, lags + 1]
    is_peak = (here > prev) & (here >= nxt)
    curvature = prev - 2.0 * here + nxt
    delta = np.zeros_like(here)
    np.divide(0.5 * (prev - nxt), curvature, out=delta, where=curvature < 0)
    delta = np.clip(delta, -0.5, 0.5)
    strength = here - 0.25 * (prev - nxt) * delta
    refined = lags + delta
    score = strength - params.octave_cost * np.log2(params.floor_hz * refined / sample_rate)
    score = np.where(is_peak, score, -np.inf)
    best = np.argmax(score, axis=1)
    rows = np.arange(acf.shape[0])
    found = np.isfinite(score[rows, best])
    return np.where(found, refined[rows, best], np.nan), np.where(found, strength[rows, best], 0.0)

def silence_threshold(rms_values, params):
    if not len(rms_values):
        return 0.0
    ambient = np.percentile(rms_values, params.ambient_percentile)
    return min(params.snr_ratio * ambient, params.silence_ceiling_ratio * float(np.max(rms_values)))

def pitch_track(win, rms, cfg, params=PitchParams()):
    """
    Estimate the fundamental frequency of every frame in a window.

    :param win: AudioWindow
    :param rms: RMS FrameTrack on the same frame grid
    :param cfg: AnalysisConfig
    :param params: PitchParams
    :return: FrameTrack of pitch in Hz, 0 where unvoiced or rejected
    """
    frames = frame_matrix(win.samples, cfg, win.sample_rate)
    if len(frames) != len(rms):
        raise GridMismatchError(f'RMS track has {len(rms)} frames, window has {len(frames)}')
    rate = win.sample_rate
    min_lag, max_lag = _lag_range(params, rate, frames.shape[1])

    pitch = np.zeros(len(frames))
    if max_lag > min_lag:
        for lo in range(0, len(frames), BLOCK_FRAMES):
            block = frames[lo:lo + BLOCK_FRAMES]
            acf = normalized_autocorrelation(block, max_lag)
            lag, strength = best_lags(acf, min_lag, max_lag, rate, params)
            voiced = np.isfinite(lag) & (strength >= params.voicing_threshold)
            pitch[lo:lo + len(block)] = np.where(voiced, rate / np.where(voiced, lag, 1.0), 0.0)

    pitch[(pitch > params.ceiling_hz) | (pitch < params.floor_hz)] = 0.0
    rms_values = np.asarray(rms.values)
    threshold = silence_threshold(rms_values, params)
    pitch[(rms_values < threshold) | (rms_values <= 0)] = 0.0
    pitch[~remove_short_runs(pitch > 0, params.min_run)] = 0.0
    logger.debug('Pitch track: %d of %d frames voiced', np.count_nonzero(pitch), len(pitch))
    return FrameTrack(pitch, TrackKind.PITCH_HZ, cfg.frame_step_ms, cfg.frame_span_ms)

def prune_short_runs(pitch, params=PitchParams()):
    """Zero runs of non-zero pitch shorter than `params.min_run` frames."""
    values = np.asarray(pitch.values, dtype=np.float64)
    return pitch.with_values(np.where(remove_short_runs(values > 0, params.min_run), values, 0.0))

def gate_by_vad(pitch, vad, params=PitchParams()):
    """
    Keep pitch values only within `params.vad_buffer_ms` of a voice-active frame.

    :param pitch: Pitch FrameTrack
    :param vad: Voice activity flag FrameTrack on the same grid
    :return: Gated pitch FrameTrack
    """
    pitch.check_grid(vad)
    radius = params.vad_buffer_ms // pitch.frame_step_ms
    keep = dilate(np.asarray(vad.values) > 0, radius)
    return pitch.with_values(np.where(keep, pitch.values, 0.0))
