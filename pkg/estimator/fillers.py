import logging
from dataclasses import dataclass

import librosa
import numpy as np
from scipy.signal import find_peaks, freqz, lfilter
from scipy.signal.windows import hamming

from .framing import frame_matrix
from .util import dilate, runs

"""
Formant tracking by linear prediction and detection of filler utterances
("uh", "um", "oh"): long voiced stretches whose first two formants are stable
and sit in the back-vowel region.
"""

logger = logging.getLogger(__name__)

PRE_EMPHASIS = 0.97
FORMANT_FLOOR_HZ = 200.0
ENVELOPE_POINTS = 1024

FILLER_MIN_MS = 250
F1_BAND_HZ = (300.0, 700.0)
F2_BAND_HZ = (600.0, 1400.0)
BAND_OCCUPANCY = 0.8
F1_MAX_STD_HZ = 75.0
F2_MAX_STD_HZ = 100.0
# Segments must be voice-active within this distance
VAD_BUFFER_MS = 100

@dataclass(frozen=True, eq=False)
class FormantTrack:
    f1: np.ndarray
    f2: np.ndarray
    frame_step_ms: int
    frame_span_ms: int

    def __len__(self):
        return len(self.f1)

    @property
    def voiced(self):
        return self.f1 > 0

@dataclass(frozen=True, eq=False)
class FillerResult:
    # (start_frame, end_frame) pairs, end exclusive
    segments: tuple

    @property
    def count_per_window(self):
        return len(self.segments)

def lpc_order(sample_rate):
    return 2 + int(sample_rate) // 1000

def frame_formants(frame, sample_rate, order):
    """
    First two formant frequencies of one frame: the two strongest peaks of the
    LPC spectral envelope above FORMANT_FLOOR_HZ, in ascending frequency.

    :return: Tuple (f1, f2), (0, 0) when fewer than two peaks are found
    """
    x = lfilter([1.0, -PRE_EMPHASIS], [1.0], frame) * hamming(len(frame))
    if not np.any(x):
        return 0.0, 0.0
    try:
        a = librosa.lpc(x, order=order)
    except (FloatingPointError, librosa.util.exceptions.ParameterError):
        return 0.0, 0.0
    if not np.all(np.isfinite(a)):
        return 0.0, 0.0
    freqs, response = freqz([1.0], a, worN=ENVELOPE_POINTS, fs=sample_rate)
    envelope = np.abs(response)
    peaks, _ = find_peaks(envelope)
    peaks = peaks[freqs[peaks] > FORMANT_FLOOR_HZ]
    if len(peaks) < 2:
        return 0.0, 0.0
    strongest = peaks[np.argsort(envelope[peaks], kind='stable')[::-1][:2]]
    f1, f2 = sorted(freqs[strongest])
    return float(f1), float(f2)

def formant_track(win, pitch, cfg):
    """
    Track F1 and F2 on every voiced frame of a window.

    :param win: AudioWindow
    :param pitch: Pitch FrameTrack; frames with pitch 0 are left at (0, 0)
    :param cfg: AnalysisConfig
    :return: FormantTrack
    """
    frames = frame_matrix(win.samples, cfg, win.sample_rate)
    order = lpc_order(win.sample_rate)
    f1 = np.zeros(len(frames))
    f2 = np.zeros(len(frames))
    for i in np.flatnonzero(np.asarray(pitch.values) > 0):
        f1[i], f2[i] = frame_formants(frames[i], win.sample_rate, order)
    return FormantTrack(f1, f2, cfg.frame_step_ms, cfg.frame_span_ms)

def _in_band(values, band):
    return (values >= band[0]) & (values <= band[1])

def is_filler(f1, f2, frame_step_ms):
    """Apply the duration, back-vowel band and formant stability predicates to one segment."""
    if len(f1) * frame_step_ms < FILLER_MIN_MS:
        return False
    in_band = _in_band(f1, F1_BAND_HZ) & _in_band(f2, F2_BAND_HZ)
    if in_band.mean() < BAND_OCCUPANCY:
        return False
    return np.std(f1) <= F1_MAX_STD_HZ and np.std(f2) <= F2_MAX_STD_HZ

def detect_fillers(formants, vad, cfg):
    """
    Find filler utterances among the maximal voiced segments of a formant track.

    :param formants: FormantTrack
    :param vad: VadResult on the same frame grid
    :param cfg: AnalysisConfig
    :return: FillerResult
    """
    if vad.mean == 0 or not len(formants):
        return FillerResult(())
    active = dilate(np.asarray(vad.flags.values) > 0, VAD_BUFFER_MS // cfg.frame_step_ms)
    segments = []
    for start, end in zip(*runs(formants.voiced)):
        if not active[start:end].any():
            continue
        if is_filler(formants.f1[start:end], formants.f2[start:end], cfg.frame_step_ms):
            segments.append((int(start), int(end)))
    logger.debug('Filler detection: %d segment(s)', len(segments))
    return FillerResult(tuple(segments))
