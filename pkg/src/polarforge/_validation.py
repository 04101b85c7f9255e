"""Input validation helpers shared by the estimators and functional API."""

import numpy as np


def check_power_of_two(N, name="N", min_exp=0):
    N = int(N)
    if N < (1 << min_exp) or N & (N - 1):
        raise ValueError(f"{name} must be a power of two >= {1 << min_exp}, got {N}")
    return N


def log2_int(N):
    return int(N).bit_length() - 1


def check_bits(bits, length=None, name="bits"):
    """Return ``bits`` as a uint8 array, raising if any entry is not 0/1."""
    arr = np.asarray(bits)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{name} must contain only 0 and 1")
    arr = arr.astype(np.uint8)
    if length is not None and arr.shape[-1] != length:
        raise ValueError(f"{name} must have length {length}, got {arr.shape[-1]}")
    return arr


def check_llrs(llrs, length=None, name="llrs"):
    arr = np.asarray(llrs, dtype=np.float64)
    if length is not None and arr.shape[-1] != length:
        raise ValueError(f"{name} must have length {length}, got {arr.shape[-1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def check_probability(value, name):
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def check_index_set(A, N):
    """Return a sorted tuple of 1-based indices, validating range and uniqueness."""
    idx = sorted(int(i) for i in A)
    if len(set(idx)) != len(idx):
        raise ValueError("data index set contains duplicates")
    if idx and (idx[0] < 1 or idx[-1] > N):
        raise ValueError(f"data indices must lie in 1..{N}")
    return tuple(idx)


def index_mask(A, N):
    mask = np.zeros(N, dtype=np.bool_)
    for i in A:
        mask[i - 1] = True
    return mask
