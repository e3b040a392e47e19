import logging
import struct
from dataclasses import dataclass

import numpy as np
import soundfile as sf

"""
PCM WAV decoding into normalized sample buffers, plus the streaming chunk reader
used by the online estimator.
"""

logger = logging.getLogger(__name__)

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_EXTENSIBLE = 0xFFFE
# Sub-format GUID tail shared by every KSDATAFORMAT_SUBTYPE_* value
KSDATAFORMAT_TAIL = b'\x00\x00\x00\x00\x10\x00\x80\x00\x00\xaa\x00\x38\x9b\x71'

SUPPORTED_BITS = {16: ('<i2', 32768.0), 32: ('<i4', 2147483648.0)}
SUPPORTED_CHANNELS = (1, 2)
PCM_SUBTYPES = {16: 'PCM_16', 32: 'PCM_32'}

class DecodeError(Exception):
    """Raised when a byte stream is not a well-formed RIFF/WAVE file."""

class UnsupportedFormatError(Exception):
    """Raised for well-formed WAV files using an encoding this reader does not decode."""

@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """
    Decoded audio. Samples are float64 in [-1, 1), interleaved when stereo.
    """
    samples: np.ndarray
    sample_rate: int
    channels: int = 1

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError('Samples must be one-dimensional (interleaved).')
        if not np.isfinite(samples).all():
            raise ValueError('Samples must be finite.')
        if self.sample_rate <= 0:
            raise ValueError('Sample rate must be positive.')
        if self.channels not in SUPPORTED_CHANNELS:
            raise ValueError(f'Unsupported channel count: {self.channels}.')
        if len(samples) % self.channels:
            raise ValueError('Sample count is not a multiple of the channel count.')
        samples.flags.writeable = False
        object.__setattr__(self, 'samples', samples)

    @property
    def frame_count(self):
        return len(self.samples) // self.channels

    @property
    def duration_s(self):
        return self.frame_count / self.sample_rate

    def __eq__(self, other):
        if not isinstance(other, AudioBuffer):
            return NotImplemented
        return (self.sample_rate == other.sample_rate and self.channels == other.channels
                and np.array_equal(self.samples, other.samples))

@dataclass(frozen=True)
class WaveFormat:
    channels: int
    sample_rate: int
    bits_per_sample: int
    data_size: int

    @property
    def block_align(self):
        return self.channels * self.bits_per_sample // 8

def _read_exactly(stream, n, chunk):
    data = b''
    while len(data) < n:
        part = stream.read(n - len(data))
        if not part:
            raise DecodeError(f'{chunk} chunk truncated: expected {n} bytes, got {len(data)}')
        data += part
    return data

def _skip(stream, n, chunk):
    # Works for unseekable streams such as stdin
    while n > 0:
        part = stream.read(min(n, 65536))
        if not part:
            raise DecodeError(f'{chunk} chunk truncated')
        n -= len(part)

def _parse_fmt(body):
    if len(body) < 16:
        raise DecodeError(f'fmt chunk too short: {len(body)} bytes')
    format_tag, channels, sample_rate, _, _, bits = struct.unpack('<HHIIHH', body[:16])
    if format_tag == WAVE_FORMAT_EXTENSIBLE:
        if len(body) < 40:
            raise DecodeError('fmt chunk too short for WAVE_FORMAT_EXTENSIBLE')
        sub_format = body[24:40]
        if sub_format[2:] != KSDATAFORMAT_TAIL:
            raise UnsupportedFormatError('Unknown WAVE_FORMAT_EXTENSIBLE sub-format GUID')
        format_tag = struct.unpack('<H', sub_format[:2])[0]
    if format_tag != WAVE_FORMAT_PCM:
        raise UnsupportedFormatError(f'Unsupported encoding: format tag 0x{format_tag:04x} (only integer PCM)')
    if bits not in SUPPORTED_BITS:
        raise UnsupportedFormatError(f'Unsupported sample width: {bits} bits (only 16 or 32)')
    if channels not in SUPPORTED_CHANNELS:
        raise UnsupportedFormatError(f'Unsupported channel count: {channels}')
    if sample_rate == 0:
        raise DecodeError('fmt chunk declares a zero sample rate')
    return channels, sample_rate, bits

def read_header(stream):
    """
    Parse the RIFF header and chunks up to the start of the sample data, leaving
    the stream positioned at the first data byte. Unknown chunks are skipped.

    :param stream: Binary file-like object
    :return: WaveFormat
    """
    head = stream.read(12)
    if len(head) < 12:
        raise DecodeError('RIFF chunk truncated: file shorter than 12 bytes')
    magic, _, wave = struct.unpack('<4sI4s', head)
    if magic != b'RIFF':
        raise DecodeError(f'RIFF chunk: expected magic RIFF, found {magic!r}')
    if wave != b'WAVE':
        raise DecodeError(f'RIFF chunk: expected form type WAVE, found {wave!r}')

    fmt = None
    while True:
        chunk_head = stream.read(8)
        if len(chunk_head) < 8:
            if fmt is None:
                raise DecodeError('fmt chunk missing')
            raise DecodeError('data chunk missing')
        chunk_id, size = struct.unpack('<4sI', chunk_head)
        name = chunk_id.decode('latin-1').strip()
        if chunk_id == b'fmt ':
            fmt = _parse_fmt(_read_exactly(stream, size, 'fmt'))
            if size % 2:
                _skip(stream, 1, 'fmt')
        elif chunk_id == b'data':
            if fmt is None:
                raise DecodeError('data chunk precedes fmt chunk')
            channels, sample_rate, bits = fmt
            return WaveFormat(channels, sample_rate, bits, size)
        else:
            logger.debug('Skipping %s chunk (%d bytes)', name, size)
            _skip(stream, size + size % 2, name)

class WaveReader:
    """
    Incremental reader over the data chunk of a PCM WAV stream.
    """
    def __init__(self, stream):
        self.stream = stream
        self.format = read_header(stream)
        self.remaining = self.format.data_size - self.format.data_size % self.format.block_align

    def read(self, n_frames=None):
        """
        Read up to `n_frames` sample frames, or everything when None.

        :return: AudioBuffer, empty once the data chunk is exhausted
        """
        fmt = self.format
        n_bytes = self.remaining if n_frames is None else min(self.remaining, n_frames * fmt.block_align)
        raw = _read_exactly(self.stream, n_bytes, 'data') if n_bytes else b''
        self.remaining -= n_bytes
        dtype, scale = SUPPORTED_BITS[fmt.bits_per_sample]
        samples = np.frombuffer(raw, dtype=dtype).astype(np.float64) / scale
        return AudioBuffer(samples, fmt.sample_rate, fmt.channels)

def load_pcm(path):
    """
    Decode a 16- or 32-bit integer PCM WAV file, mono or stereo.

    :param path: File path
    :return: AudioBuffer with samples normalized by the type's maximum magnitude
    """
    with open(path, 'rb') as f:
        return WaveReader(f).read()

def read_chunks(stream, chunk_ms):
    """
    Generator yielding consecutive AudioBuffers of `chunk_ms` milliseconds (the
    last one may be shorter).

    :param stream: Binary file-like object positioned at the RIFF header
    :param chunk_ms: Chunk duration in milliseconds
    """
    reader = WaveReader(stream)
    n_frames = max(1, int(reader.format.sample_rate * chunk_ms // 1000))
    while True:
        chunk = reader.read(n_frames)
        if not chunk.frame_count:
            return
        yield chunk

def to_mono(buf):
    """
    Average stereo channels; mono input is returned unchanged.
    """
    if buf.channels == 1:
        return buf
    left, right = buf.samples[0::2], buf.samples[1::2]
    return AudioBuffer((left + right) / 2.0, buf.sample_rate, 1)

def remove_dc(samples):
    """Subtract the mean from a sample array."""
    samples = np.asarray(samples, dtype=np.float64)
    if not len(samples):
        return samples
    return samples - samples.mean()

def save_pcm(path, buf, bits=16):
    """
    Write an AudioBuffer as integer PCM WAV. Samples are scaled by the same
    factor `load_pcm` divides by, so decoding returns the written values.

    :param path: Output path
    :param buf: AudioBuffer
    :param bits: 16 or 32
    """
    if bits not in SUPPORTED_BITS:
        raise UnsupportedFormatError(f'Unsupported sample width: {bits} bits (only 16 or 32)')
    dtype, scale = SUPPORTED_BITS[bits]
    info = np.iinfo(np.dtype(dtype))
    pcm = np.clip(np.round(buf.samples * scale), info.min, info.max).astype(dtype)
    sf.write(path, pcm.reshape(-1, buf.channels), buf.sample_rate, subtype=PCM_SUBTYPES[bits], format='WAV')
