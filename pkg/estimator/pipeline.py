import logging
import time
from collections import deque
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
from billiard.pool import Pool

from .audio_io import DecodeError, remove_dc, to_mono
from .config import EngineConfig
from .fillers import detect_fillers, formant_track
from .framing import windows
from .network import FeatureSetMismatchError, forward
from .pitch import gate_by_vad, pitch_track
from .signal_features import frame_energy, frame_rms, frame_zcr, summarize
from .syllables import count_syllables
from .vad import detect_voice_activity

"""
Per-window estimation: voice activity first, the zero-voice short circuit, the
feature vector and the network, plus the streaming loop around it.
"""

logger = logging.getLogger(__name__)

LABEL_RANGE = (0.0, 4.0)

class SourceError(Exception):
    """Raised when the audio source fails mid-stream. Estimates already yielded stay valid."""

@dataclass(frozen=True, eq=False)
class RespirationSeries:
    """Externally recorded breathing rate, breaths per minute at timestamps in seconds."""
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if times.shape != values.shape or not len(times):
            raise ValueError('Respiration series needs matching, non-empty times and values')
        order = np.argsort(times, kind='stable')
        object.__setattr__(self, 'times', times[order])
        object.__setattr__(self, 'values', values[order])

    @classmethod
    def read_csv(cls, path):
        frame = pd.read_csv(path, comment='#')
        return cls(frame['time_s'].to_numpy(), frame['breaths_per_min'].to_numpy())

    def window_rate(self, start_s, duration_s):
        """
        Mean rate over [start_s, start_s + duration_s), or the sample nearest to
        the window midpoint when none falls inside.
        """
        inside = (self.times >= start_s) & (self.times < start_s + duration_s)
        if inside.any():
            return float(self.values[inside].mean())
        return float(self.values[np.argmin(np.abs(self.times - (start_s + duration_s / 2)))])

@dataclass(frozen=True, eq=False)
class WindowFeatures:
    """Every feature of one window, including the per-frame tracks they summarize."""
    start_time_s: float
    energy: object
    rms: object
    zcr: object
    pitch: object
    gated_pitch: object
    vad: object
    syllables: object
    fillers: object = None
    respiration_rate: float = None

    def values(self):
        intensity_mean, intensity_std = summarize(self.rms)
        pitch_mean, pitch_std = summarize(self.gated_pitch)
        out = {
            'intensity_mean': intensity_mean,
            'intensity_std': intensity_std,
            'pitch_mean': pitch_mean,
            'pitch_std': pitch_std,
            'vad_mean': self.vad.mean,
            'vad_std': self.vad.std_dev,
            'syllables_per_second': self.syllables.rate,
        }
        if self.respiration_rate is not None:
            out['respiration_rate'] = self.respiration_rate
        if self.fillers is not None:
            out['filler_count'] = float(self.fillers.count_per_window)
        return out

    def vector(self, feature_set):
        values = self.values()
        missing = [name for name in feature_set.names if name not in values]
        if missing:
            raise FeatureSetMismatchError(f'Feature set {feature_set.label} needs {", ".join(missing)}, '
                                          'which is not enabled')
        return np.array([values[name] for name in feature_set.names], dtype=np.float64)

@dataclass(frozen=True, eq=False)
class WindowEstimate:
    start_time_s: float
    estimate: float
    feature_vector: np.ndarray = None
    vad_mean: float = 0.0
    # Seconds from window completion to estimate, not part of the result identity
    latency_s: float = 0.0

    def __eq__(self, other):
        if not isinstance(other, WindowEstimate):
            return NotImplemented
        same_vector = ((self.feature_vector is None and other.feature_vector is None)
                       or (self.feature_vector is not None and other.feature_vector is not None
                           and np.array_equal(self.feature_vector, other.feature_vector)))
        return (self.start_time_s == other.start_time_s and self.estimate == other.estimate
                and self.vad_mean == other.vad_mean and same_vector)

def _prepare(win, cfg):
    if cfg.remove_dc:
        return replace(win, samples=remove_dc(win.samples))
    return win

def voice_activity(win, cfg):
    """
    Frame tracks needed by the voice activity detector, and its result.

    :return: Tuple (energy, rms, zcr, pitch, VadResult)
    """
    analysis = cfg.analysis
    energy = frame_energy(win, analysis)
    rms = frame_rms(win, analysis)
    zcr = frame_zcr(win, analysis)
    pitch = pitch_track(win, rms, analysis, cfg.pitch)
    return energy, rms, zcr, pitch, detect_voice_activity(energy, zcr, pitch, cfg.vad)

def extract_features(win, cfg=EngineConfig(), respiration=None):
    """
    Compute every enabled feature of a window, whatever its voice activity.

    :param win: AudioWindow, mono
    :param cfg: EngineConfig
    :param respiration: RespirationSeries, required when respiration is enabled
    :return: WindowFeatures
    """
    win = _prepare(win, cfg)
    return _complete(win, cfg, voice_activity(win, cfg), respiration)

def _complete(win, cfg, tracks, respiration):
    energy, rms, zcr, pitch, vad = tracks
    gated = gate_by_vad(pitch, vad.flags, cfg.pitch)
    syllables = count_syllables(rms, zcr, gated, cfg.analysis)
    fillers = None
    if cfg.features.fillers:
        fillers = detect_fillers(formant_track(win, gated, cfg.analysis), vad, cfg.analysis)
    rate = None
    if cfg.features.respiration:
        if respiration is None:
            raise FeatureSetMismatchError('Respiration feature is enabled but no respiration series was given')
        rate = respiration.window_rate(win.start_time_s, win.duration_s)
    return WindowFeatures(win.start_time_s, energy, rms, zcr, pitch, gated, vad, syllables, fillers, rate)

def estimate_window(win, params, cfg=EngineConfig(), respiration=None, clamp=False):
    """
    Estimate speech workload for one window. Windows without voice activity
    return exactly 0 and no feature vector, without computing any feature
    beyond voice activity.

    :param win: AudioWindow, mono
    :param params: ModelParams
    :param cfg: EngineConfig
    :param respiration: Optional RespirationSeries
    :param clamp: Clamp the estimate to the label range [0, 4]
    :return: WindowEstimate
    """
    feature_set = cfg.features.feature_set
    if params.feature_set != feature_set:
        raise FeatureSetMismatchError(f'Model was trained on feature set {params.feature_set.label}, '
                                      f'pipeline produces {feature_set.label}')
    win = _prepare(win, cfg)
    tracks = voice_activity(win, cfg)
    vad = tracks[-1]
    if vad.mean == 0:
        return WindowEstimate(win.start_time_s, 0.0, None, 0.0)

    vector = _complete(win, cfg, tracks, respiration).vector(feature_set)
    estimate = forward(params, vector)
    if clamp:
        estimate = float(np.clip(estimate, LABEL_RANGE[0], LABEL_RANGE[1]))
    return WindowEstimate(win.start_time_s, estimate, vector, vad.mean)

def _timed_estimate(win, params, cfg, respiration, clamp):
    started = time.perf_counter()
    est = estimate_window(win, params, cfg, respiration, clamp)
    return replace(est, latency_s=time.perf_counter() - started)

def _mono_chunks(source):
    started = False
    try:
        for chunk in source:
            started = True
            yield to_mono(chunk)
    except (OSError, EOFError, DecodeError) as e:
        if not started:
            raise
        raise SourceError(f'Audio source failed: {e}') from e

def stream_estimates(source, params, cfg=EngineConfig(), respiration=None, clamp=False, workers=0, max_pending=4):
    """
    Estimate every complete window of a chunked audio source, in start-time
    order. With `workers` > 0 windows are fanned out to a process pool with at
    most `max_pending` windows in flight; the reader blocks on the oldest
    window once the bound is reached.

    :param source: Iterable of AudioBuffer chunks
    :param params: ModelParams
    :param cfg: EngineConfig
    :return: Generator of WindowEstimate; raises SourceError after the last
        complete window if the source fails
    """
    assembled = windows(_mono_chunks(source), cfg.analysis)
    if workers <= 0:
        for win in assembled:
            yield _timed_estimate(win, params, cfg, respiration, clamp)
        return

    pool = Pool(processes=workers)
    pending = deque()
    try:
        try:
            for win in assembled:
                pending.append((time.perf_counter(), pool.apply_async(estimate_window,
                                                                      (win, params, cfg, respiration, clamp))))
                while len(pending) >= max_pending:
                    yield _collect(pending.popleft())
        except SourceError:
            # Windows completed before the failure are still delivered
            while pending:
                yield _collect(pending.popleft())
            raise
        while pending:
            yield _collect(pending.popleft())
        pool.close()
    except BaseException:
        pool.terminate()
        raise
    finally:
        pool.join()

def _collect(item):
    completed_at, result = item
    est = result.get()
    return replace(est, latency_s=time.perf_counter() - completed_at)

def estimate_buffer(buf, params, cfg=EngineConfig(), respiration=None, clamp=False):
    """Whole-buffer estimation, the same computation as streaming the buffer as a single chunk."""
    return list(stream_estimates([buf], params, cfg, respiration, clamp))

def estimates_frame(estimates, feature_set):
    """Tabulate estimates as rows of start_s, estimate, vad_mean and the feature columns."""
    rows = []
    for est in estimates:
        row = {'start_s': est.start_time_s, 'estimate': est.estimate, 'vad_mean': est.vad_mean}
        vector = est.feature_vector if est.feature_vector is not None else np.full(feature_set.size, np.nan)
        row.update(zip(feature_set.names, vector.tolist()))
        rows.append(row)
    return pd.DataFrame(rows, columns=['start_s', 'estimate', 'vad_mean'] + list(feature_set.names))

def estimate_record(est):
    """JSON-serialisable record for line-delimited output."""
    return {
        'start_s': est.start_time_s,
        'estimate': est.estimate,
        'vad_mean': est.vad_mean,
        'features': None if est.feature_vector is None else est.feature_vector.tolist(),
        'latency_s': round(est.latency_s, 6),
    }
