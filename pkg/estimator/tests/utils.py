import struct

import numpy as np

from ..framing import AudioWindow

def wav_bytes(samples, channels=1, rate=16000, bits=16, format_tag=1, extra_chunks=b'', magic=b'RIFF'):
    """Hand-built RIFF/WAVE file around integer PCM samples."""
    dtype = {16: '<i2', 32: '<i4'}.get(bits, '<i2')
    data = np.asarray(samples, dtype=dtype).tobytes()
    block = channels * bits // 8
    fmt = struct.pack('<HHIIHH', format_tag, channels, rate, rate * block, block, bits)
    body = (b'WAVE' + b'fmt ' + struct.pack('<I', len(fmt)) + fmt + extra_chunks + b'data'
            + struct.pack('<I', len(data)) + data)
    return magic + struct.pack('<I', len(body)) + body

def window(samples, rate=16000, start=0.0):
    return AudioWindow(np.asarray(samples, dtype=np.float64), rate, start)
