"""Polarization-adjusted convolutional (PAC) codes with Fano sequential decoding.

A source word is placed on the data indices of a carrier ``v`` (zeros
elsewhere), convolved with a rate-1 impulse response ``c`` to give ``u``, and
sent through the polar transform.  The decoder searches the resulting
irregular tree, which only branches at data indices.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator

from . import _kernels
from .polar import CodeSpec
from .polarize import BitChannelEstimator, BitChannelStats, polar_transform
from ._validation import check_bits, check_llrs, check_power_of_two, index_mask

DEFAULT_CONV = (1, 0, 1, 1, 0, 1, 1)
DEFAULT_DELTA = 2.0
DEFAULT_MAX_VISITS = 1_000_000

SCORE_KINDS = ("rm", "capacity", "cutoff")
BIAS_RULES = ("cutoff", "capacity", "rate-profile")


@dataclass(frozen=True)
class ConvSpec:
    """Impulse response ``(c_0, ..., c_m)`` over GF(2) with ``c_0 = c_m = 1``."""

    c: tuple = DEFAULT_CONV

    def __post_init__(self):
        c = tuple(int(b) for b in self.c)
        if not c or any(b not in (0, 1) for b in c):
            raise ValueError("impulse response must be a non-empty 0/1 sequence")
        if c[0] != 1 or c[-1] != 1:
            raise ValueError("impulse response must start and end with 1")
        object.__setattr__(self, "c", c)

    @classmethod
    def from_string(cls, text):
        """Parse ``"1011011"`` (c_0 first)."""
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"bad impulse response {text!r}")
        return cls(tuple(int(ch) for ch in text))

    @property
    def m(self):
        return len(self.c) - 1

    def __str__(self):
        return "".join(map(str, self.c))

    @property
    def taps(self):
        return np.array(self.c, dtype=np.uint8)


@dataclass(frozen=True)
class ScoreRule:
    """Score function for choosing data indices.

    ``rm`` scores index i by the Hamming weight of i - 1; ``capacity`` and
    ``cutoff`` score by C(W_i) and R0(W_i) from ``stats``.
    """

    kind: str = "rm"
    stats: BitChannelStats = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in SCORE_KINDS:
            raise ValueError(f"unknown score rule {self.kind!r}")
        if self.kind != "rm" and self.stats is None:
            raise ValueError(f"score rule {self.kind!r} needs bit-channel statistics")

    def scores(self, N):
        if self.kind == "rm":
            return np.array([bin(i).count("1") for i in range(N)], dtype=np.float64)
        if self.stats.N != N:
            raise ValueError(f"statistics are for N = {self.stats.N}, not {N}")
        return np.asarray(self.stats.capacity if self.kind == "capacity" else self.stats.cutoff,
                          dtype=np.float64)


def build_data_index_set(rule, N, K):
    """Indices with the ``K`` largest scores; ties go to the larger index."""
    N = check_power_of_two(N)
    if not 0 <= K <= N:
        raise ValueError(f"K must lie in 0..{N}, got {K}")
    s = rule.scores(N)
    order = np.lexsort((-np.arange(N), -s))
    return tuple(sorted(int(i) + 1 for i in order[:K]))


def rate_profile(A, N):
    """``K_i = |A intersect {1..i}|`` for i = 0..N."""
    return np.concatenate([[0], np.cumsum(index_mask(A, N))]).astype(np.int64)


def conv_encode(v, conv):
    """``u_i = sum_j c_j v_{i-j}`` over GF(2), truncated to the length of ``v``."""
    v = check_bits(v)
    N = v.shape[-1]
    u = np.zeros_like(v)
    for j, cj in enumerate(conv.c):
        if cj and j < N:
            u[..., j:] ^= v[..., : N - j]
    return u


def conv_invert(u, conv):
    """The unique ``v`` with ``conv_encode(v) == u`` (forward substitution)."""
    u = check_bits(u)
    v = np.zeros_like(u)
    c = conv.c
    for i in range(u.shape[-1]):
        acc = u[..., i].copy()
        for j in range(1, min(len(c), i + 1)):
            if c[j]:
                acc ^= v[..., i - j]
        v[..., i] = acc
    return v


def toeplitz_matrix(conv, N):
    """Upper-triangular Toeplitz ``T`` with ``u = v T``; an oracle for :func:`conv_encode`."""
    T = np.zeros((N, N), dtype=np.uint8)
    for j, cj in enumerate(conv.c):
        if cj:
            T += np.eye(N, k=j, dtype=np.uint8)
    return T


@dataclass(frozen=True)
class FanoParams:
    """Fano search settings.

    ``bias`` names the per-index metric bias rule: ``cutoff`` adds
    ``1 - R0(W_j)``, ``capacity`` adds ``1 - C(W_j)`` and ``rate-profile``
    adds ``1 - r_j`` (1 on frozen indices, 0 on data indices).
    """

    delta: float = DEFAULT_DELTA
    max_visits: int = DEFAULT_MAX_VISITS
    minsum: bool = False
    bias: str = "cutoff"

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.max_visits < 1:
            raise ValueError("max_visits must be positive")
        if self.bias not in BIAS_RULES:
            raise ValueError(f"unknown bias rule {self.bias!r}")


def metric_bias(rule, data_mask, stats=None):
    """Per-index additive metric bias for the Fano decoder."""
    data_mask = np.asarray(data_mask, dtype=np.bool_)
    if rule == "rate-profile":
        return 1.0 - data_mask.astype(np.float64)
    if stats is None:
        raise ValueError(f"bias rule {rule!r} needs bit-channel statistics")
    if stats.N != data_mask.size:
        raise ValueError(f"statistics are for N = {stats.N}, not {data_mask.size}")
    values = stats.cutoff if rule == "cutoff" else stats.capacity
    return 1.0 - np.asarray(values, dtype=np.float64)


@dataclass(frozen=True)
class PacSpec:
    """A PAC code ``(N, K, A, c)`` with its decoder settings.

    ``bias`` holds the resolved per-index metric bias; None means the
    rate-profile bias, which needs no channel knowledge.
    """

    code: CodeSpec
    conv: ConvSpec = ConvSpec()
    fano: FanoParams = FanoParams(bias="rate-profile")
    bias: tuple = None

    def __post_init__(self):
        if self.fano.max_visits < self.code.N:
            raise ValueError("max_visits must be at least N")
        if self.bias is None and self.fano.bias != "rate-profile":
            raise ValueError(f"bias rule {self.fano.bias!r} needs resolved bias values")
        if self.bias is not None and len(self.bias) != self.code.N:
            raise ValueError("bias must have one entry per index")

    @property
    def bias_values(self):
        if self.bias is None:
            return metric_bias("rate-profile", self.code.data_mask)
        return np.asarray(self.bias, dtype=np.float64)

    def to_dict(self):
        return {"type": "pac", "N": self.code.N, "K": self.code.K, "A": list(self.code.A),
                "conv": str(self.conv), "delta": self.fano.delta,
                "max_visits": self.fano.max_visits, "bias": self.fano.bias}


def pac_encode(d, spec):
    v = np.zeros(np.shape(d)[:-1] + (spec.code.N,), dtype=np.uint8)
    v[..., spec.code.data_mask] = check_bits(d, length=spec.code.K, name="source word")
    return polar_transform(conv_encode(v, spec.conv))


class MetricCalculator:
    """Branch metrics for one received word, computed by the SC recursion.

    Decisions are committed in index order with :meth:`commit`; the metric
    for index ``j`` is available once ``j`` decisions have been committed.
    The metric of hypothesis ``u_j`` is ``log2 Pr(U_j = u_j | y, past) + bias[j]``;
    the default bias is ``1 - r_j`` with ``r_j = 1`` on data indices and 0 elsewhere.
    """

    def __init__(self, llrs, data_mask, bias=None, minsum=False):
        llrs = check_llrs(llrs, length=len(data_mask))
        self.N = llrs.shape[0]
        self.n = self.N.bit_length() - 1
        self.data_mask = np.asarray(data_mask, dtype=np.bool_)
        self.bias = (metric_bias("rate-profile", self.data_mask) if bias is None
                     else np.asarray(bias, dtype=np.float64))
        self.minsum = minsum
        self._llr = np.zeros((self.n + 1, self.N))
        self._llr[self.n] = llrs
        self._ps = np.zeros((self.n + 1, self.N), dtype=np.uint8)
        self.position = 0
        self._leaf = _kernels.leaf_llr(self._llr, self._ps, 0, self.n, minsum)

    @property
    def llr(self):
        """LLR of the bit at the current position given the committed past."""
        return self._leaf

    def metric(self, u_j):
        return _kernels.log2_prob(self._leaf, int(u_j)) + self.bias[self.position]

    def commit(self, u_j):
        _kernels.commit_bit(self._ps, self.position, int(u_j), self.n)
        self.position += 1
        if self.position < self.N:
            self._leaf = _kernels.leaf_llr(self._llr, self._ps, self.position, self.n,
                                           self.minsum)


def branch_metric(j, u_j, state):
    """Metric of hypothesis ``u_j`` at index ``j`` (0-based) for a :class:`MetricCalculator`."""
    if state.position != j:
        raise ValueError(f"calculator is at index {state.position}, not {j}")
    return state.metric(u_j)


class FanoResult(NamedTuple):
    d: np.ndarray
    visits: np.ndarray
    exhausted: np.ndarray


def fano_decode(llrs, spec):
    """Fano sequential decoding; ``visits`` counts forward moves through the tree."""
    arr = check_llrs(llrs, length=spec.code.N)
    chans = np.atleast_2d(arr)
    mask = spec.code.data_mask
    v, visits, exhausted = _kernels.fano_decode_batch(
        chans, mask, spec.bias_values, spec.code.n, spec.conv.taps, float(spec.fano.delta),
        int(spec.fano.max_visits), spec.fano.minsum)
    d = v[:, mask]
    if arr.ndim == 1:
        return FanoResult(d[0], int(visits[0]), bool(exhausted[0]))
    return FanoResult(d, visits, exhausted)


class PacCode(BaseEstimator):
    """PAC code with Fano decoding, in estimator form.

    Parameters
    ----------
    N, K : int
    rule : {"rm", "cutoff", "capacity"}
        Score rule for the data index set; the polar rules need statistics,
        passed to ``fit`` directly or constructed from a channel.
    conv : str or tuple
        Impulse response, ``c_0`` first.
    delta, max_visits, minsum
        Fano decoder settings.
    bias : {"cutoff", "capacity", "rate-profile"}
        Metric bias rule; the first two need bit-channel statistics.
    method, samples, seed
        Construction settings when ``fit`` is given a channel.

    Attributes
    ----------
    spec_ : PacSpec
    visits_, exhausted_ : ndarray
        Decoder work for the most recent :meth:`predict` call.
    """

    def __init__(self, N=128, K=64, rule="rm", conv="1011011", delta=DEFAULT_DELTA,
                 max_visits=DEFAULT_MAX_VISITS, minsum=False, bias="cutoff", method="auto",
                 samples=100_000, seed=0):
        self.N = N
        self.K = K
        self.rule = rule
        self.conv = conv
        self.delta = delta
        self.max_visits = max_visits
        self.minsum = minsum
        self.bias = bias
        self.method = method
        self.samples = samples
        self.seed = seed

    def fit(self, X=None, y=None):
        """``X`` is a BitChannelStats, a ChannelModel to construct for, or None.

        None is only accepted with the RM rule and the rate-profile bias.
        """
        fano = FanoParams(self.delta, self.max_visits, self.minsum, self.bias)
        stats = X
        if X is None:
            if self.rule != "rm" or self.bias != "rate-profile":
                raise ValueError("this rule/bias combination needs a channel or statistics")
        elif not isinstance(X, BitChannelStats):
            stats = BitChannelEstimator(N=self.N, method=self.method, samples=self.samples,
                                        seed=self.seed).fit(X).stats_
        A = build_data_index_set(ScoreRule(self.rule, stats), self.N, self.K)
        if isinstance(self.conv, ConvSpec):
            conv = self.conv
        elif isinstance(self.conv, str):
            conv = ConvSpec.from_string(self.conv)
        else:
            conv = ConvSpec(self.conv)
        code = CodeSpec(self.N, self.K, A)
        bias = None
        if fano.bias != "rate-profile":
            bias = tuple(metric_bias(fano.bias, code.data_mask, stats))
        self.spec_ = PacSpec(code, conv, fano, bias)
        self.stats_ = stats
        return self

    def transform(self, X):
        return pac_encode(X, self.spec_)

    def decode(self, X):
        return fano_decode(X, self.spec_)

    def predict(self, X):
        res = self.decode(X)
        self.visits_ = res.visits
        self.exhausted_ = res.exhausted
        return res.d

    def to_dict(self):
        return {**self.spec_.to_dict(), "rule": self.rule}
