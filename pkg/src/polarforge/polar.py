"""Polar codes as block codes: construction, encoding, SC and (CRC-aided) SCL decoding."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from . import _kernels
from .crc import CrcSpec, crc_attach
from .polarize import BitChannelEstimator, BitChannelStats, polar_transform
from ._validation import (check_bits, check_index_set, check_llrs, check_power_of_two,
                          index_mask, log2_int)


@dataclass(frozen=True)
class CodeSpec:
    """Block length ``N``, dimension ``K`` and 1-based data index set ``A`` (sorted)."""

    N: int
    K: int
    A: tuple

    def __post_init__(self):
        check_power_of_two(self.N, min_exp=1)
        object.__setattr__(self, "A", check_index_set(self.A, self.N))
        if not 1 <= self.K <= self.N:
            raise ValueError(f"K must lie in 1..{self.N}, got {self.K}")
        if len(self.A) != self.K:
            raise ValueError(f"|A| = {len(self.A)} does not match K = {self.K}")

    @property
    def rate(self):
        return self.K / self.N

    @property
    def n(self):
        return log2_int(self.N)

    @property
    def data_mask(self):
        return index_mask(self.A, self.N)

    def to_dict(self, **extra):
        return {"type": "polar", "N": self.N, "K": self.K, "A": list(self.A), **extra}


def select_data_indices(stats, K):
    """The ``K`` indices with the smallest Bhattacharyya parameters (ties: smaller index)."""
    N = stats.N
    if not 0 <= K <= N:
        raise ValueError(f"K must lie in 0..{N}, got {K}")
    z = np.asarray(stats.bhattacharyya)
    order = np.lexsort((np.arange(N), z))
    return tuple(sorted(int(i) + 1 for i in order[:K]))


def union_bound(stats, A):
    """Upper bound on the SC frame error probability, the sum of Z(W_i) over ``A``."""
    z = np.asarray(stats.bhattacharyya)
    return float(sum(z[i - 1] for i in A))


def embed(d, mask):
    d = check_bits(d, length=int(mask.sum()), name="source word")
    u = np.zeros(d.shape[:-1] + (mask.size,), dtype=np.uint8)
    u[..., mask] = d
    return u


def encode(d, spec):
    """Place ``d`` on the data indices, zeros elsewhere, then apply the polar transform."""
    return polar_transform(embed(d, spec.data_mask))


def _as_batch(llrs, N):
    arr = check_llrs(llrs, length=N)
    return np.atleast_2d(arr), arr.ndim == 1


def sc_decode(llrs, spec, minsum=False):
    """Successive-cancellation decoding; returns the decoded source word(s)."""
    chans, single = _as_batch(llrs, spec.N)
    mask = spec.data_mask
    u = _kernels.sc_decode_batch(chans, ~mask, spec.n, minsum)
    d = u[:, mask]
    return d[0] if single else d


def scl_decode(llrs, spec, list_size=8, crc=None, minsum=False):
    """List decoding with sign-mismatch path penalties.

    When ``crc`` is given, ``spec.K`` counts the CRC bits, which occupy the
    last ``crc.width`` data indices; the returned word includes them.
    """
    if list_size < 1:
        raise ValueError("list_size must be >= 1")
    chans, single = _as_batch(llrs, spec.N)
    mask = spec.data_mask
    if crc is not None and crc.width >= spec.K:
        raise ValueError("K must exceed the CRC width")
    poly = crc.generator_bits if crc is not None else np.ones(1, dtype=np.uint8)
    u = _kernels.scl_decode_batch(chans, ~mask, spec.n, int(list_size), minsum, poly,
                                  crc is not None)
    d = u[:, mask]
    return d[0] if single else d


class PolarCode(BaseEstimator):
    """Polar code with SC or CRC-aided list decoding, in estimator form.

    ``fit`` picks the data indices from bit-channel statistics (or builds them
    from a channel), ``transform`` encodes source words and ``predict``
    decodes channel LLRs back to source words.

    Parameters
    ----------
    N, K : int
        Block length and number of payload bits.
    list_size : int
        1 selects plain SC decoding.
    crc_width : int
        CRC bits appended to the payload (0 for none); uses ``crc_poly``.
    minsum : bool
        Use the min-sum check-node approximation.
    method, samples, seed
        Construction settings when ``fit`` is given a channel.
    """

    def __init__(self, N=128, K=64, list_size=1, crc_width=0, crc_poly=0x07, minsum=False,
                 method="auto", samples=100_000, seed=0):
        self.N = N
        self.K = K
        self.list_size = list_size
        self.crc_width = crc_width
        self.crc_poly = crc_poly
        self.minsum = minsum
        self.method = method
        self.samples = samples
        self.seed = seed

    def fit(self, X, y=None):
        """``X`` is a BitChannelStats or a ChannelModel to construct for."""
        stats = X
        if not isinstance(X, BitChannelStats):
            est = BitChannelEstimator(N=self.N, method=self.method, samples=self.samples,
                                      seed=self.seed).fit(X)
            stats = est.stats_
        if stats.N != self.N:
            raise ValueError(f"statistics are for N = {stats.N}, code has N = {self.N}")
        self.crc_ = CrcSpec(self.crc_width, self.crc_poly) if self.crc_width else None
        carrier = self.K + self.crc_width
        self.spec_ = CodeSpec(self.N, carrier, select_data_indices(stats, carrier))
        self.stats_ = stats
        return self

    def transform(self, X):
        """Encode payload words of length ``K`` into codewords."""
        d = check_bits(X, length=self.K, name="payload")
        if self.crc_ is not None:
            d = np.atleast_2d(d)
            d = np.stack([crc_attach(row, self.crc_) for row in d]).reshape(
                np.shape(X)[:-1] + (self.K + self.crc_width,))
        return encode(d, self.spec_)

    def predict(self, X):
        """Decode channel LLRs into payload estimates."""
        if self.list_size == 1 and self.crc_ is None:
            d = sc_decode(X, self.spec_, self.minsum)
        else:
            d = scl_decode(X, self.spec_, self.list_size, self.crc_, self.minsum)
        return d[..., : self.K]

    def to_dict(self):
        extra = {"list": self.list_size} if self.list_size > 1 else {}
        if self.crc_ is not None:
            extra["crc"] = {"width": self.crc_.width, "polynomial": self.crc_.polynomial}
        return self.spec_.to_dict(**extra)
