from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

"""
Syllable counting from voiced peaks of the intensity track.
"""

# Frames a peak must span at half prominence
PEAK_MIN_WIDTH = 2
PEAK_MIN_DISTANCE = 4
SYLLABLE_ZCR_MAX = 0.06
PITCH_SEARCH_RADIUS = 4

@dataclass(frozen=True, eq=False)
class SyllableResult:
    peak_frames: np.ndarray
    rate: float

    @property
    def count(self):
        return len(self.peak_frames)

def select_by_distance(peaks, heights, distance):
    """
    Keep peaks at least `distance` indices apart, higher peaks first and the
    earlier one on equal height.

    :return: Sorted array of kept peak indices
    """
    peaks = np.asarray(peaks, dtype=np.int64)
    if not len(peaks):
        return peaks
    order = np.lexsort((peaks, -np.asarray(heights, dtype=np.float64)))
    blocked = np.zeros(int(peaks.max()) + distance + 1, dtype=bool)
    kept = []
    for p in peaks[order]:
        if blocked[p]:
            continue
        kept.append(p)
        blocked[max(0, p - distance + 1):p + distance] = True
    return np.sort(np.asarray(kept, dtype=np.int64))

def intensity_peaks(rms_values):
    """Local maxima of an RMS track that are wide enough and far enough apart."""
    rms_values = np.asarray(rms_values, dtype=np.float64)
    peaks, _ = find_peaks(rms_values, width=PEAK_MIN_WIDTH)
    return select_by_distance(peaks, rms_values[peaks], PEAK_MIN_DISTANCE)

def count_syllables(rms, zcr, pitch, cfg):
    """
    Count intensity peaks that are voiced: low zero-crossing rate at the peak and
    a non-zero pitch value within a few frames of it.

    :param rms: RMS FrameTrack
    :param zcr: Zero-crossing rate FrameTrack
    :param pitch: Pitch FrameTrack, gated by voice activity
    :param cfg: AnalysisConfig
    :return: SyllableResult with syllables per second over the window
    """
    rms.check_grid(zcr)
    rms.check_grid(pitch)
    zcrs = np.asarray(zcr.values)
    voiced_pitch = np.asarray(pitch.values) != 0
    syllables = []
    for peak in intensity_peaks(rms.values):
        near = voiced_pitch[max(0, peak - PITCH_SEARCH_RADIUS):peak + PITCH_SEARCH_RADIUS + 1]
        if zcrs[peak] < SYLLABLE_ZCR_MAX and near.any():
            syllables.append(peak)
    peak_frames = np.asarray(syllables, dtype=np.int64)
    return SyllableResult(peak_frames, len(peak_frames) / (cfg.window_ms / 1000.0))
