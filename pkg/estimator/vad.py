import logging
import math
from dataclasses import dataclass

import numpy as np

from .signal_features import EmptyTrackError, FrameTrack, TrackKind, summarize
from .util import dilate, remove_short_runs
from .validators import is_valid_vad_params

"""
Adaptive-threshold voice activity detection over energy, zero-crossing rate and
pitch tracks.
"""

logger = logging.getLogger(__name__)

@dataclass(frozen=True)
class VadParams:
    primary_threshold: float = 40.0
    zcr_max: float = 0.04
    zcr_min: float = 0.008
    pitch_search_radius: int = 8
    min_run: int = 10
    # Frames averaged for the initial minimum energy, assumed silent
    init_span: int = 30
    energy_floor: float = 1e-12
    # Energies enter the threshold in 16-bit PCM units
    energy_scale: float = 2.0**30

    def __post_init__(self):
        is_valid_vad_params(self)

@dataclass(frozen=True, eq=False)
class VadResult:
    flags: FrameTrack
    mean: float
    std_dev: float
    # Final adaptive minimum energy, in the units of the energy track
    min_energy: float
    degenerate_silence: bool = False

def _clamp(min_energy, params):
    if min_energy <= 0:
        return params.energy_floor, True
    return min_energy, False

def detect_voice_activity(energy, zcr, pitch, params=VadParams()):
    """
    Flag voice-active frames. A frame is active when its energy exceeds an
    adaptive threshold, its zero-crossing rate lies inside the speech band and a
    non-zero pitch value exists nearby. The threshold tracks the running mean of
    non-speech frame energies, and active runs shorter than `params.min_run`
    frames are dropped.

    :param energy: Energy FrameTrack
    :param zcr: Zero-crossing rate FrameTrack
    :param pitch: Pitch FrameTrack (before voice activity gating)
    :param params: VadParams
    :return: VadResult
    """
    if not len(energy):
        raise EmptyTrackError('Cannot detect voice activity on an empty track')
    energy.check_grid(zcr)
    energy.check_grid(pitch)

    energies = np.asarray(energy.values, dtype=np.float64) * params.energy_scale
    zcrs = np.asarray(zcr.values, dtype=np.float64)
    candidate = ((zcrs > params.zcr_min) & (zcrs < params.zcr_max)
                 & dilate(np.asarray(pitch.values) != 0, params.pitch_search_radius))

    min_energy, degenerate = _clamp(float(np.mean(energies[:params.init_span])), params)
    threshold = params.primary_threshold * math.log(min_energy)
    silence_count = 0
    flags = np.zeros(len(energies), dtype=bool)
    for i, frame_energy in enumerate(energies.tolist()):
        if frame_energy > threshold and candidate[i]:
            flags[i] = True
        else:
            silence_count += 1
            min_energy = (silence_count * min_energy + frame_energy) / (silence_count + 1)
            min_energy, clamped = _clamp(min_energy, params)
            degenerate = degenerate or clamped
            threshold = params.primary_threshold * math.log(min_energy)

    flags = remove_short_runs(flags, params.min_run)
    track = FrameTrack(flags.astype(np.float64), TrackKind.VAD_FLAG, energy.frame_step_ms, energy.frame_span_ms)
    mean, std_dev = summarize(track)
    if degenerate:
        logger.debug('Voice activity: minimum energy clamped to %g (digital silence)', params.energy_floor)
    return VadResult(track, mean, std_dev, min_energy / params.energy_scale, degenerate)
