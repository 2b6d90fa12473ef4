"""1-D smoothing, differentiation and extrema search on per-frame series."""
from __future__ import annotations

import functools

import numpy as np


class SignalError(ValueError):
    pass


@functools.lru_cache(maxsize=None)
def savgol_coefficients(window: int, poly_order: int) -> np.ndarray:
    """Convolution weights giving the fitted polynomial's value at the window center."""
    half = window // 2
    offsets = np.arange(-half, half + 1, dtype=float)
    vander = np.vander(offsets, poly_order + 1, increasing=True)
    # row 0 of the pseudo-inverse evaluates the fit at offset 0
    coeffs = np.linalg.pinv(vander)[0]
    coeffs.setflags(write=False)
    return coeffs


def _check_window(n: int, window: int, poly_order: int) -> None:
    if window % 2 != 1 or window < 1:
        raise SignalError(f"window must be a positive odd integer, got {window}")
    if poly_order < 0 or window <= poly_order:
        raise SignalError(f"window ({window}) must exceed poly_order ({poly_order})")
    if n < window:
        raise SignalError(f"series of length {n} is shorter than window {window}")


def savgol_smooth(values, window: int = 21, poly_order: int = 3) -> np.ndarray:
    """Savitzky-Golay smoothing with mirror padding (edge sample not repeated)."""
    s = np.asarray(values, dtype=float)
    if s.ndim != 1:
        raise SignalError("expected a 1-D series")
    _check_window(s.size, window, poly_order)
    if not np.all(np.isfinite(s)):
        raise SignalError("series contains non-finite values")
    half = window // 2
    if half == 0:
        return s.copy()
    if s.size <= half:
        raise SignalError("series too short for mirror padding")
    padded = np.concatenate([s[half:0:-1], s, s[-2:-half - 2:-1]])
    coeffs = savgol_coefficients(window, poly_order)
    # correlate: out[i] = sum_k coeffs[k] * padded[i + k]
    return np.convolve(padded, coeffs[::-1], mode="valid")


def derivative(values) -> np.ndarray:
    """Per-frame derivative: central differences inside, one-sided at the ends."""
    s = np.asarray(values, dtype=float)
    if s.ndim != 1 or s.size < 3:
        raise SignalError("derivative needs a 1-D series of length >= 3")
    return np.gradient(s)


def local_minima(values) -> list[int]:
    """Strict local minima; a flat-bottomed valley reports its first index."""
    s = np.asarray(values, dtype=float)
    if s.size < 3:
        raise SignalError("local_minima needs length >= 3")
    out = []
    i = 1
    n = s.size
    while i < n - 1:
        if s[i - 1] > s[i]:
            j = i
            while j + 1 < n and s[j + 1] == s[i]:
                j += 1
            if j + 1 < n and s[j + 1] > s[i]:
                out.append(i)
            i = j + 1
        else:
            i += 1
    return out


def argmax_in_range(values, lo: int, hi: int) -> int:
    """First index in [lo, hi] attaining the maximum."""
    s = np.asarray(values, dtype=float)
    if not (0 <= lo <= hi < s.size):
        raise SignalError(f"invalid range [{lo}, {hi}] for series of length {s.size}")
    return lo + int(np.argmax(s[lo:hi + 1]))
