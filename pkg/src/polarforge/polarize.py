"""The polar transform and characterization of the synthesized bit-channels."""

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import bmc
from ._validation import check_bits, check_power_of_two, check_probability, log2_int

DEFAULT_SAMPLES = 100_000
_CHUNK = 8192


def polar_transform(u):
    """Return ``u P_n`` over GF(2), where ``P_n`` is the n-fold Kronecker power of [[1,0],[1,1]].

    Works on the last axis, so a batch of words of shape ``(..., N)`` is
    transformed row by row.  The transform is its own inverse.
    """
    x = check_bits(u).copy()
    N = x.shape[-1]
    check_power_of_two(N)
    lead = x.shape[:-1]
    h = N // 2
    while h >= 1:
        blocks = x.reshape(lead + (N // (2 * h), 2, h))
        blocks[..., 0, :] ^= blocks[..., 1, :]
        h //= 2
    return x


def kronecker_matrix(n):
    """Explicit ``P_n`` as an ``(N, N)`` 0/1 matrix; used as an oracle for small N."""
    P = np.ones((1, 1), dtype=np.uint8)
    F = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    for _ in range(n):
        P = np.kron(P, F)
    return P


@dataclass
class BitChannelStats:
    """Per-index capacity, Bhattacharyya parameter and cutoff rate of the bit-channels.

    Arrays are 0-based: entry ``i - 1`` describes bit-channel ``W_i``.
    """

    N: int
    capacity: np.ndarray
    bhattacharyya: np.ndarray
    cutoff: np.ndarray
    method: str
    samples: int = None
    seed: int = None
    channel: str = None
    stderr: dict = field(default=None, repr=False)

    def to_dict(self):
        rows = [
            {"i": i + 1, "capacity": float(c), "bhattacharyya": float(z), "cutoff": float(r)}
            for i, (c, z, r) in enumerate(zip(self.capacity, self.bhattacharyya, self.cutoff))
        ]
        return {"channel": self.channel, "N": self.N, "method": self.method,
                "samples": self.samples, "seed": self.seed, "rows": rows}

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        rows = sorted(data["rows"], key=lambda r: r["i"])
        return cls(
            N=int(data["N"]),
            capacity=np.array([r["capacity"] for r in rows]),
            bhattacharyya=np.array([r["bhattacharyya"] for r in rows]),
            cutoff=np.array([r["cutoff"] for r in rows]),
            method=data["method"], samples=data.get("samples"), seed=data.get("seed"),
            channel=data.get("channel"),
        )


def bec_erasure_probabilities(eps, N):
    check_probability(eps, "erasure probability")
    n = log2_int(check_power_of_two(N))
    z = np.array([eps], dtype=np.float64)
    for _ in range(n):
        # each channel splits into (worse, better) = (2z - z^2, z^2); MSB of the index first
        z = np.stack([2 * z - z * z, z * z], axis=1).reshape(-1)
    return z


def bec_bit_channels(eps, N):
    """Exact bit-channel parameters for the BEC via the erasure recursion."""
    z = bec_erasure_probabilities(eps, N)
    return BitChannelStats(N=int(N), capacity=1.0 - z, bhattacharyya=z,
                           cutoff=1.0 - np.log2(1.0 + z), method="exact-bec",
                           channel=str(bmc.ChannelModel.bec(eps)))


def _f_exact(a, b):
    s = np.sign(a) * np.sign(b)
    return (s * np.minimum(np.abs(a), np.abs(b))
            + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b))))


def genie_llrs(chan_llrs):
    """Bit-channel LLRs for the all-zero word with a correct (all-zero) past.

    ``chan_llrs`` has shape ``(B, N)``; the result has the same shape with
    column ``i - 1`` holding the LLR observed by bit-channel ``W_i``.
    """
    L = np.asarray(chan_llrs, dtype=np.float64)
    B, N = L.shape
    L = L.reshape(B, 1, N)
    h = N // 2
    while h >= 1:
        a, b = L[:, :, :h], L[:, :, h:]
        L = np.stack([_f_exact(a, b), a + b], axis=2).reshape(B, -1, h)
        h //= 2
    return L.reshape(B, N)


def mc_bit_channels(channel, N, samples=DEFAULT_SAMPLES, seed=0):
    """Genie-aided Monte-Carlo estimate of the bit-channel parameters.

    The all-zero word is sent ``samples`` times.  Samples are drawn in fixed
    chunks, each from its own substream of ``seed``, so the estimate does
    not depend on how the work is split.
    """
    if not isinstance(channel, bmc.ChannelModel):
        raise TypeError("Monte-Carlo construction needs a symmetric ChannelModel (BEC, BSC, BIAWGN)")
    samples = int(samples)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    N = check_power_of_two(N)
    cap_sum = np.zeros(N)
    cap_sq = np.zeros(N)
    z_sum = np.zeros(N)
    z_sq = np.zeros(N)
    for chunk, start in enumerate(range(0, samples, _CHUNK)):
        B = min(_CHUNK, samples - start)
        rng = np.random.default_rng([int(seed), chunk])
        y = bmc.sample(channel, np.zeros((B, N), dtype=np.uint8), rng)
        L = genie_llrs(bmc.llr(channel, y))
        c = bmc.information_density(L)
        z = np.exp(-L / 2.0)
        cap_sum += c.sum(axis=0)
        cap_sq += (c * c).sum(axis=0)
        z_sum += z.sum(axis=0)
        z_sq += (z * z).sum(axis=0)
    cap = cap_sum / samples
    zb = z_sum / samples
    stderr = {
        "capacity": np.sqrt(np.maximum(cap_sq / samples - cap ** 2, 0.0) / samples),
        "bhattacharyya": np.sqrt(np.maximum(z_sq / samples - zb ** 2, 0.0) / samples),
    }
    zb = np.clip(zb, 0.0, 1.0)
    return BitChannelStats(N=N, capacity=np.clip(cap, 0.0, 1.0), bhattacharyya=zb,
                           cutoff=1.0 - np.log2(1.0 + zb), method="monte-carlo",
                           samples=samples, seed=int(seed), channel=str(channel),
                           stderr=stderr)


@dataclass
class ProfileTable:
    """Cumulative capacity and cutoff-rate profiles for i = 0..N."""

    pol_cap: np.ndarray
    pol_r0: np.ndarray
    unpol_cap: np.ndarray
    unpol_r0: np.ndarray

    def to_csv(self):
        lines = ["i,pol_cap,pol_r0,unpol_cap,unpol_r0"]
        for i, row in enumerate(zip(self.pol_cap, self.pol_r0, self.unpol_cap, self.unpol_r0)):
            lines.append(",".join([str(i)] + [f"{v:.10g}" for v in row]))
        return "\n".join(lines) + "\n"


def profiles(stats, channel):
    i = np.arange(stats.N + 1)
    zero = np.zeros(1)
    return ProfileTable(
        pol_cap=np.concatenate([zero, np.cumsum(stats.capacity)]),
        pol_r0=np.concatenate([zero, np.cumsum(stats.cutoff)]),
        unpol_cap=i * bmc.capacity(channel),
        unpol_r0=i * bmc.cutoff_rate(channel),
    )


def polarization_fractions(stats, delta):
    """Fractions of bit-channels with capacity above ``1 - delta``, in between, and below ``delta``."""
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta must lie in (0, 1/2), got {delta}")
    cap = np.asarray(stats.capacity)
    high = np.count_nonzero(cap > 1.0 - delta) / cap.size
    low = np.count_nonzero(cap < delta) / cap.size
    return high, 1.0 - high - low, low


class BitChannelEstimator(BaseEstimator):
    """Estimate bit-channel statistics for a channel at block length ``N``.

    Parameters
    ----------
    N : int
        Block length, a power of two.
    method : {"auto", "exact-bec", "monte-carlo"}
        ``auto`` uses the exact recursion on the BEC and Monte-Carlo otherwise.
    samples, seed : int
        Monte-Carlo budget and seed.

    Attributes
    ----------
    stats_ : BitChannelStats
    """

    def __init__(self, N=128, method="auto", samples=DEFAULT_SAMPLES, seed=0):
        self.N = N
        self.method = method
        self.samples = samples
        self.seed = seed

    def fit(self, channel, y=None):
        method = self.method
        if method == "auto":
            method = "exact-bec" if channel.kind == "bec" else "monte-carlo"
        if method == "exact-bec":
            if channel.kind != "bec":
                raise ValueError("exact-bec construction requires a BEC channel")
            self.stats_ = bec_bit_channels(channel.param, self.N)
        elif method == "monte-carlo":
            self.stats_ = mc_bit_channels(channel, self.N, self.samples, self.seed)
        else:
            raise ValueError(f"unknown construction method {method!r}")
        self.channel_ = channel
        return self

    def transform(self, channel=None):
        """Return the profile table of the fitted statistics."""
        return profiles(self.stats_, channel if channel is not None else self.channel_)
