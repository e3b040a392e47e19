import logging
import os

import numpy as np
import pandas as pd

from .audio_io import AudioBuffer, save_pcm
from .framing import frame_bounds
from .util import get_valid_filename

"""
Synthetic audio with known ground truth: tones, glottal-pulse speech, formant
vowels, syllable bursts, speech/noise mixes at a known occupancy, and labeled
multi-participant corpora for the evaluation protocols.
"""

logger = logging.getLogger(__name__)

DEFAULT_RATE = 16000
TABLE_SIZE = 4096
RAMP_MS = 5
SPEECH_AMPLITUDE = 0.3
NOISE_AMPLITUDE = 0.003
# Workload label is this multiple of the speech occupancy of the next window
LABEL_SCALE = 4.0
CONDITION_OCCUPANCY = {'low': (0.15, 0.35), 'medium': (0.4, 0.6), 'high': (0.65, 0.85)}

def n_samples(duration_s, rate):
    return int(round(duration_s * rate))

def _harmonic_table(f0, amplitudes, rate):
    """One period of a harmonic series with the given per-harmonic amplitudes, peak 1."""
    k_max = min(len(amplitudes), int((rate / 2 - 1) // f0), TABLE_SIZE // 2 - 1)
    k = np.arange(1, k_max + 1)
    phase = 2 * np.pi * np.arange(TABLE_SIZE) / TABLE_SIZE
    table = np.sin(np.outer(phase, k)) @ np.asarray(amplitudes[:k_max], dtype=np.float64)
    return table / np.max(np.abs(table))

def _play_table(table, f0, n, rate):
    pos = (f0 * np.arange(n) / rate) % 1.0 * TABLE_SIZE
    i = np.floor(pos).astype(np.int64)
    frac = pos - i
    return table[i] * (1 - frac) + table[(i + 1) % TABLE_SIZE] * frac

def ramp(samples, rate, ramp_ms=RAMP_MS):
    """Raised-cosine fade in and out."""
    samples = np.array(samples, dtype=np.float64)
    n = min(int(rate * ramp_ms / 1000), len(samples) // 2)
    if n > 0:
        fade = 0.5 - 0.5 * np.cos(np.pi * np.arange(n) / n)
        samples[:n] *= fade
        samples[-n:] *= fade[::-1]
    return samples

def silence(duration_s, rate=DEFAULT_RATE):
    return np.zeros(n_samples(duration_s, rate))

def sine(freq_hz, duration_s, rate=DEFAULT_RATE, amplitude=0.5):
    t = np.arange(n_samples(duration_s, rate)) / rate
    return amplitude * np.sin(2 * np.pi * freq_hz * t)

def white_noise(duration_s, rate=DEFAULT_RATE, amplitude=NOISE_AMPLITUDE, seed=0):
    """Gaussian noise with standard deviation `amplitude`."""
    return amplitude * np.random.default_rng(seed).standard_normal(n_samples(duration_s, rate))

def uniform_noise(duration_s, rate=DEFAULT_RATE, amplitude=1e-4, seed=0):
    """Noise bounded by +/- `amplitude`."""
    return amplitude * np.random.default_rng(seed).uniform(-1, 1, n_samples(duration_s, rate))

def glottal_pulses(f0, duration_s, rate=DEFAULT_RATE, amplitude=SPEECH_AMPLITUDE, tilt=2.0):
    """
    Voiced source: harmonics of f0 falling off as 1/k**tilt.
    """
    amplitudes = 1.0 / np.arange(1, TABLE_SIZE // 2) ** tilt
    table = _harmonic_table(f0, amplitudes, rate)
    return ramp(amplitude * _play_table(table, f0, n_samples(duration_s, rate), rate), rate)

def resonance_gain(freq, formant, bandwidth):
    """Magnitude of a two-pole resonator at `freq`, normalized to 1 at its peak."""
    peak = formant / bandwidth
    return formant**2 / np.sqrt((formant**2 - freq**2)**2 + (bandwidth * freq)**2) / peak

def vowel(f0, formants=(400.0, 900.0), bandwidths=(80.0, 90.0), duration_s=0.4, rate=DEFAULT_RATE,
          amplitude=SPEECH_AMPLITUDE):
    """
    Steady vowel: a 1/k harmonic source through parallel resonators at the
    given formant frequencies.
    """
    k = np.arange(1, TABLE_SIZE // 2)
    gains = sum(resonance_gain(k * f0, f, b) for f, b in zip(formants, bandwidths))
    table = _harmonic_table(f0, gains / k, rate)
    return ramp(amplitude * _play_table(table, f0, n_samples(duration_s, rate), rate), rate)

def hann_burst(f0, duration_s, rate=DEFAULT_RATE, amplitude=SPEECH_AMPLITUDE):
    """Voiced burst under a Hann envelope, one intensity peak."""
    pulses = glottal_pulses(f0, duration_s, rate, amplitude)
    return pulses * np.hanning(len(pulses))

def burst_train(n_bursts, window_s=5.0, rate=DEFAULT_RATE, burst_s=0.15, gap_s=0.4, f0=120.0,
                noise=0.002, seed=0):
    """
    Voiced bursts separated by low-level noise.

    :return: Tuple (samples, burst centre times in seconds)
    """
    samples = white_noise(window_s, rate, noise, seed)
    burst = hann_burst(f0, burst_s, rate)
    centres = []
    t = gap_s / 2
    for _ in range(n_bursts):
        start = n_samples(t, rate)
        if start + len(burst) > len(samples):
            raise ValueError(f'{n_bursts} bursts do not fit in {window_s} s')
        samples[start:start + len(burst)] += burst
        centres.append(t + burst_s / 2)
        t += burst_s + gap_s
    return samples, centres

def occupancy_mix(occupancy, window_s=5.0, rate=DEFAULT_RATE, seed=0, f0=120.0, noise=NOISE_AMPLITUDE,
                  n_segments=None):
    """
    Glottal-pulse speech over low-level noise, with speech covering
    `occupancy` of the window in one to three segments.

    :return: Tuple (samples, per-sample speech mask)
    """
    rng = np.random.default_rng(seed)
    n_segments = n_segments or int(rng.integers(1, 4))
    samples = white_noise(window_s, rate, noise, seed + 1)
    mask = np.zeros(len(samples), dtype=bool)
    cell = len(samples) // n_segments
    length = int(round(occupancy * cell))
    for j in range(n_segments):
        offset = j * cell + int(rng.integers(0, cell - length + 1))
        pitch = f0 * rng.uniform(0.85, 1.15)
        samples[offset:offset + length] += glottal_pulses(pitch, length / rate, rate)[:length]
        mask[offset:offset + length] = True
    return samples, mask

def frame_truth(sample_mask, cfg, rate):
    """Per-frame ground truth: a frame is speech when most of its samples are."""
    bounds = frame_bounds(len(sample_mask), cfg, rate)
    cumulative = np.concatenate(([0], np.cumsum(sample_mask, dtype=np.int64)))
    covered = cumulative[bounds[:, 1]] - cumulative[bounds[:, 0]]
    return covered * 2 >= (bounds[:, 1] - bounds[:, 0])

def speech_and_noise(duration_s=5.0, rate=DEFAULT_RATE, f0=120.0, seed=0):
    """Voiced speech for the first half, low-level noise for the second."""
    half = duration_s / 2
    speech = glottal_pulses(f0, half, rate) + white_noise(half, rate, NOISE_AMPLITUDE, seed)
    return np.concatenate((speech, white_noise(duration_s - half, rate, NOISE_AMPLITUDE, seed + 1)))

def _scenario_samples(name, duration_s, rate, f0, seed):
    if name == 'silence':
        return silence(duration_s, rate)
    if name == 'near-silent':
        return uniform_noise(duration_s, rate, 1e-4, seed)
    if name == 'noise':
        return white_noise(duration_s, rate, 0.1, seed)
    if name == 'sine':
        return sine(f0, duration_s, rate)
    if name == 'glottal':
        return glottal_pulses(f0, duration_s, rate)
    if name == 'vowel':
        return vowel(f0, duration_s=duration_s, rate=rate)
    if name == 'front-vowel':
        return vowel(f0, formants=(400.0, 2200.0), bandwidths=(80.0, 120.0), duration_s=duration_s, rate=rate)
    if name == 'speech-noise':
        return speech_and_noise(duration_s, rate, f0, seed)
    if name == 'bursts':
        n_bursts = max(1, int(duration_s / 0.55))
        return burst_train(n_bursts, duration_s, rate, f0=f0, seed=seed)[0]
    if name == 'speech-mix':
        return speech_session(duration_s, rate, seed)[0]
    raise ValueError(f'Unknown scenario: {name}')

SCENARIOS = ('silence', 'near-silent', 'noise', 'sine', 'glottal', 'vowel', 'front-vowel', 'speech-noise',
             'bursts', 'speech-mix')

def scenario(name, duration_s=5.0, rate=DEFAULT_RATE, f0=120.0, seed=0, channels=1):
    """
    Build a named synthetic recording.

    :return: AudioBuffer
    """
    samples = _scenario_samples(name, duration_s, rate, f0, seed)
    samples = np.clip(samples, -1.0, 32767 / 32768)
    if channels == 2:
        samples = np.repeat(samples, 2)
    return AudioBuffer(samples, rate, channels)

def speech_session(duration_s, rate=DEFAULT_RATE, seed=0, block_s=10, window_s=5):
    """
    Continuous recording built from condition blocks. Each block holds one
    workload condition, realised as speech occupancy; within a block every
    second starts with a glottal-pulse speech segment.

    :return: Tuple (samples, per-second DataFrame with columns time_s, condition, label)
    """
    rng = np.random.default_rng(seed)
    n_seconds = int(duration_s)
    samples = white_noise(n_seconds, rate, NOISE_AMPLITUDE, seed + 1)
    mask = np.zeros(len(samples), dtype=bool)
    conditions = []
    names = list(CONDITION_OCCUPANCY)
    for block_start in range(0, n_seconds, block_s):
        condition = names[int(rng.integers(len(names)))]
        lo, hi = CONDITION_OCCUPANCY[condition]
        for second in range(block_start, min(block_start + block_s, n_seconds)):
            occupancy = rng.uniform(lo, hi)
            start, length = second * rate, int(round(occupancy * rate))
            samples[start:start + length] += glottal_pulses(rng.uniform(100, 180), length / rate, rate)[:length]
            mask[start:start + length] = True
            conditions.append(condition)
    per_second = mask[:n_seconds * rate].reshape(n_seconds, rate).mean(axis=1)
    n_labels = n_seconds - window_s + 1
    occupancy = np.convolve(per_second, np.ones(window_s) / window_s, mode='valid')[:max(n_labels, 0)]
    labels = pd.DataFrame({
        'time_s': np.arange(len(occupancy), dtype=np.float64),
        'condition': conditions[:len(occupancy)],
        'label': LABEL_SCALE * occupancy,
    })
    return samples, labels

def write_corpus(directory, n_participants=5, duration_s=60, paradigm='synthetic', rate=DEFAULT_RATE, seed=0):
    """
    Write one WAV per participant plus a label CSV covering all of them.

    :return: Path of the labels CSV
    """
    os.makedirs(directory, exist_ok=True)
    frames = []
    for p in range(n_participants):
        participant = f'p{p + 1:02d}'
        samples, labels = speech_session(duration_s, rate, seed * 1000 + p)
        path = os.path.join(directory, get_valid_filename(f'{paradigm}_{participant}.wav'))
        save_pcm(path, AudioBuffer(np.clip(samples, -1.0, 32767 / 32768), rate))
        labels.insert(0, 'paradigm', paradigm)
        labels.insert(0, 'participant_id', participant)
        frames.append(labels)
        logger.info('Wrote %s', path)
    labels_path = os.path.join(directory, get_valid_filename(f'{paradigm}_labels.csv'))
    pd.concat(frames, ignore_index=True).to_csv(labels_path, index=False)
    return labels_path
