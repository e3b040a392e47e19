import io
import os
import struct
import tempfile
from unittest import TestCase

import numpy as np

from ..audio_io import (AudioBuffer, DecodeError, UnsupportedFormatError, WaveReader, load_pcm, read_chunks,
                        remove_dc, save_pcm, to_mono)
from .utils import wav_bytes

def decode(data):
    return WaveReader(io.BytesIO(data)).read()

class LoadPcmTest(TestCase):
    def test_full_scale_sample_normalized_by_type_magnitude(self):
        buf = decode(wav_bytes([32767]))
        self.assertEqual(buf.frame_count, 1)
        self.assertAlmostEqual(buf.samples[0], 0.99997, places=5)

    def test_most_negative_sample_is_minus_one(self):
        self.assertEqual(decode(wav_bytes([-32768])).samples[0], -1.0)

    def test_32_bit_samples(self):
        buf = decode(wav_bytes([2**30, -2**31], bits=32))
        np.testing.assert_array_equal(buf.samples, [0.5, -1.0])

    def test_rifx_rejected_naming_chunk(self):
        with self.assertRaisesRegex(DecodeError, 'RIFF'):
            decode(wav_bytes([0, 1], magic=b'RIFX'))

    def test_not_wave_form(self):
        data = bytearray(wav_bytes([0]))
        data[8:12] = b'AVI '
        with self.assertRaisesRegex(DecodeError, 'WAVE'):
            decode(bytes(data))

    def test_24_bit_unsupported(self):
        with self.assertRaises(UnsupportedFormatError):
            decode(wav_bytes([0, 0, 0], bits=24))

    def test_float_encoding_unsupported(self):
        with self.assertRaisesRegex(UnsupportedFormatError, 'format tag'):
            decode(wav_bytes([0], format_tag=3))

    def test_truncated_data_chunk(self):
        with self.assertRaisesRegex(DecodeError, 'data'):
            decode(wav_bytes([1, 2, 3, 4])[:-3])

    def test_missing_data_chunk(self):
        data = wav_bytes([1, 2])
        with self.assertRaisesRegex(DecodeError, 'data chunk missing'):
            decode(data[:data.index(b'data')])

    def test_unknown_chunks_skipped_with_padding(self):
        odd = b'LIST' + struct.pack('<I', 3) + b'abc' + b'\x00'
        buf = decode(wav_bytes([100, -100], extra_chunks=odd))
        np.testing.assert_array_equal(buf.samples, np.array([100, -100]) / 32768)

    def test_extensible_pcm(self):
        guid_tail = b'\x00\x00\x00\x00\x10\x00\x80\x00\x00\xaa\x00\x38\x9b\x71'
        fmt = struct.pack('<HHIIHHHHI', 0xFFFE, 1, 8000, 16000, 2, 16, 22, 16, 4) + b'\x01\x00' + guid_tail
        samples = np.array([1000, -1000], dtype='<i2').tobytes()
        body = (b'WAVE' + b'fmt ' + struct.pack('<I', len(fmt)) + fmt + b'data' + struct.pack('<I', len(samples))
                + samples)
        buf = decode(b'RIFF' + struct.pack('<I', len(body)) + body)
        self.assertEqual(buf.sample_rate, 8000)
        np.testing.assert_array_equal(buf.samples, np.array([1000, -1000]) / 32768)

    def test_stereo_stays_interleaved(self):
        buf = decode(wav_bytes([100, 300, -200, 0], channels=2))
        self.assertEqual((buf.channels, buf.frame_count), (2, 2))
        np.testing.assert_array_equal(buf.samples, np.array([100, 300, -200, 0]) / 32768)

    def test_load_pcm_from_path(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'tone.wav')
            with open(path, 'wb') as f:
                f.write(wav_bytes(np.arange(-50, 50), rate=22050))
            buf = load_pcm(path)
        self.assertEqual(buf.sample_rate, 22050)
        self.assertAlmostEqual(buf.duration_s, 100 / 22050)

    def test_samples_read_only(self):
        buf = decode(wav_bytes([1, 2]))
        with self.assertRaises(ValueError):
            buf.samples[0] = 0.5

class SavePcmTest(TestCase):
    def test_write_then_read_returns_written_values(self):
        rng = np.random.default_rng(3)
        for bits, scale in ((16, 32768), (32, 2**31)):
            for channels in (1, 2):
                values = rng.integers(-scale // 2, scale // 2, size=200 * channels) / scale
                buf = AudioBuffer(values, 16000, channels)
                with tempfile.TemporaryDirectory() as tmp:
                    path = os.path.join(tmp, 'out.wav')
                    save_pcm(path, buf, bits)
                    self.assertEqual(load_pcm(path), buf)

    def test_unsupported_width(self):
        with self.assertRaises(UnsupportedFormatError):
            save_pcm('unused.wav', AudioBuffer([0.0], 8000), bits=8)

class ChunkReaderTest(TestCase):
    def test_chunks_cover_all_samples(self):
        samples = np.arange(-1600, 1700, dtype=np.int64)
        chunks = list(read_chunks(io.BytesIO(wav_bytes(samples, rate=8000)), 100))
        self.assertEqual([c.frame_count for c in chunks], [800, 800, 800, 800, 100])
        np.testing.assert_array_equal(np.concatenate([c.samples for c in chunks]), samples / 32768)

    def test_empty_data_chunk_yields_nothing(self):
        self.assertEqual(list(read_chunks(io.BytesIO(wav_bytes([])), 500)), [])

class ChannelTest(TestCase):
    def test_to_mono_averages_channels(self):
        buf = AudioBuffer([0.5, -0.25, 1.0, 0.0], 16000, channels=2)
        np.testing.assert_array_equal(to_mono(buf).samples, [0.125, 0.5])

    def test_to_mono_idempotent(self):
        mono = to_mono(AudioBuffer([0.5, -0.25, 1.0, 0.0], 16000, channels=2))
        self.assertIs(to_mono(mono), mono)

    def test_remove_dc(self):
        centred = remove_dc(np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(centred, [-1.0, 0.0, 1.0])
        self.assertEqual(len(remove_dc(np.zeros(0))), 0)

    def test_buffer_validation(self):
        with self.assertRaises(ValueError):
            AudioBuffer([0.0, 1.0, 0.5], 16000, channels=2)
        with self.assertRaises(ValueError):
            AudioBuffer([0.0], 0)
        with self.assertRaises(ValueError):
            AudioBuffer([0.0, np.nan], 16000)
        with self.assertRaises(ValueError):
            AudioBuffer([np.inf, 0.0], 16000, channels=2)
