"""
Run-length and mask helpers shared by the frame-level feature extractors.
"""
import re

import numpy as np

def get_valid_filename(s):
    """
    Return the given string converted to a string that can be used for a clean
    filename. Remove leading and trailing spaces; remove anything that is not an
    alphanumeric, dash, whitespace, comma, bracket, underscore, or dot.
    >>> get_valid_filename("participant's audio 04.wav")
    'participants audio 04.wav'
    """
    s = str(s).strip()
    return re.sub(r'(?u)[^-\w\s.,[\]()]', '', s)

def runs(mask):
    """
    Find maximal runs of True values.

    :param mask: 1-D boolean array
    :return: Tuple (starts, ends) of index arrays, ends exclusive
    """
    mask = np.asarray(mask, dtype=bool)
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return edges[0::2], edges[1::2]

def remove_short_runs(mask, min_length: int):
    """
    Clear runs of True values shorter than `min_length`.

    :param mask: 1-D boolean array
    :param min_length: Minimum run length that survives
    :return: New boolean array
    """
    mask = np.asarray(mask, dtype=bool)
    out = mask.copy()
    starts, ends = runs(mask)
    for start, end in zip(starts, ends):
        if end - start < min_length:
            out[start:end] = False
    return out

def dilate(mask, radius: int):
    """
    Mark every index that has a True value within `radius` indices of it.

    :param mask: 1-D boolean array
    :param radius: Neighbourhood half width, in indices
    :return: New boolean array
    """
    mask = np.asarray(mask, dtype=bool)
    n = len(mask)
    if n == 0:
        return mask.copy()
    counts = np.concatenate(([0], np.cumsum(mask, dtype=np.int64)))
    idx = np.arange(n)
    lo = np.clip(idx - radius, 0, n)
    hi = np.clip(idx + radius + 1, 0, n)
    return (counts[hi] - counts[lo]) > 0

def ms_to_samples(ms, sample_rate) -> int:
    """Convert milliseconds to a sample count, rounding half up."""
    return int(np.floor(ms * sample_rate / 1000.0 + 0.5))
