"""Binary-input memoryless channels and their information measures.

Three channels are supported for simulation and construction: the binary
erasure channel (BEC), the binary symmetric channel (BSC) and the
binary-input AWGN channel (BIAWGN, bit 0 -> +1, bit 1 -> -1).  All
information measures are in bits; LLRs are natural-log ``ln W(y|0)/W(y|1)``.

The M-ary erasure channel is analysis only, see :func:`mec_split`.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from ._validation import check_probability

LLR_MAX = 40.0
GH_NODES = 129
ERASURE = 2

_KINDS = ("bec", "bsc", "biawgn")


@dataclass(frozen=True)
class ChannelModel:
    """A symmetric binary-input memoryless channel.

    ``param`` is the erasure probability (BEC), the crossover probability
    (BSC) or the noise variance sigma^2 (BIAWGN).
    """

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.kind == "biawgn":
            if not (self.param > 0 and math.isfinite(self.param)):
                raise ValueError(f"noise variance must be positive, got {self.param}")
        else:
            check_probability(self.param, "erasure probability" if self.kind == "bec"
                              else "crossover probability")

    @classmethod
    def bec(cls, eps):
        return cls("bec", float(eps))

    @classmethod
    def bsc(cls, p):
        return cls("bsc", float(p))

    @classmethod
    def biawgn(cls, snr_db=None, sigma2=None):
        if (snr_db is None) == (sigma2 is None):
            raise ValueError("give exactly one of snr_db or sigma2")
        if sigma2 is None:
            sigma2 = snr_db_to_sigma2(snr_db)
        return cls("biawgn", float(sigma2))

    @property
    def sigma2(self):
        return self.param if self.kind == "biawgn" else None

    @property
    def snr_db(self):
        if self.kind != "biawgn":
            return None
        return sigma2_to_snr_db(self.param)

    def __str__(self):
        if self.kind == "biawgn":
            return f"biawgn:sigma2={self.param!r}"
        return f"{self.kind}:{self.param!r}"


def snr_db_to_sigma2(snr_db):
    return 10.0 ** (-float(snr_db) / 10.0)


def sigma2_to_snr_db(sigma2):
    return -10.0 * math.log10(sigma2)


def parse_channel(text):
    """Parse ``bec:0.5``, ``bsc:0.1``, ``biawgn:snr_db=3`` or ``biawgn:sigma2=0.5``."""
    kind, sep, rest = text.strip().partition(":")
    kind = kind.lower()
    if kind not in _KINDS:
        raise ValueError(f"unknown channel kind {kind!r} in {text!r}")
    if not sep or not rest:
        raise ValueError(f"missing channel parameter in {text!r}")
    key, eq, value = rest.partition("=")
    if not eq:
        key, value = ("snr_db" if kind == "biawgn" else "p"), key
    try:
        number = float(value)
    except ValueError:
        raise ValueError(f"bad channel parameter {value!r} in {text!r}") from None
    if kind == "biawgn":
        if key == "snr_db":
            return ChannelModel.biawgn(snr_db=number)
        if key == "sigma2":
            return ChannelModel.biawgn(sigma2=number)
        raise ValueError(f"bad channel parameter name {key!r} in {text!r}")
    return ChannelModel(kind, number)


def _binary_entropy(p):
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _awgn_llr_nodes(sigma2, nodes):
    """Gauss-Hermite nodes/weights for the LLR seen when bit 0 is sent."""
    z, w = hermegauss(nodes)
    w = w / w.sum()
    return 2.0 * (1.0 + math.sqrt(sigma2) * z) / sigma2, w


def information_density(llr):
    """Bits of information carried by an LLR observed under the sent bit, 1 - log2(1 + e^-L)."""
    return 1.0 - np.logaddexp(0.0, -np.asarray(llr, dtype=np.float64)) / math.log(2)


def capacity(channel, nodes=GH_NODES):
    """Symmetric capacity in bits per channel use."""
    if channel.kind == "bec":
        return 1.0 - channel.param
    if channel.kind == "bsc":
        return 1.0 - _binary_entropy(channel.param)
    L, w = _awgn_llr_nodes(channel.param, nodes)
    return float(np.dot(w, information_density(L)))


def bhattacharyya(channel, nodes=GH_NODES):
    if channel.kind == "bec":
        return channel.param
    if channel.kind == "bsc":
        p = channel.param
        return 2.0 * math.sqrt(p * (1.0 - p))
    # sum_y sqrt(W(y|0)W(y|1)) = E[exp(-L/2) | x=0]
    L, w = _awgn_llr_nodes(channel.param, nodes)
    return float(np.dot(w, np.exp(-L / 2.0)))


def cutoff_rate(channel, nodes=GH_NODES):
    """Symmetric cutoff rate in bits per channel use."""
    return 1.0 - math.log2(1.0 + bhattacharyya(channel, nodes))


@dataclass(frozen=True)
class InfoTriple:
    capacity_bits: float
    cutoff_rate_bits: float
    bhattacharyya: float


def info_triple(channel, nodes=GH_NODES):
    z = bhattacharyya(channel, nodes)
    return InfoTriple(capacity(channel, nodes), 1.0 - math.log2(1.0 + z), z)


def llr(channel, y):
    """Natural-log LLR of channel output(s) ``y``, clipped to +-LLR_MAX."""
    y = np.asarray(y)
    if channel.kind == "biawgn":
        out = 2.0 * y.astype(np.float64) / channel.param
    else:
        valid = (y == 0) | (y == 1)
        if channel.kind == "bec":
            valid |= y == ERASURE
        if not np.all(valid):
            raise ValueError(f"output symbol outside the {channel.kind} alphabet")
        if channel.kind == "bec":
            mag = 0.0 if channel.param >= 1.0 else np.inf
            out = np.where(y == ERASURE, 0.0, np.where(y == 0, mag, -mag))
        else:
            p = channel.param
            if 0 < p < 1:
                mag = math.log((1 - p) / p)
            else:
                mag = np.inf if p == 0 else -np.inf
            out = np.where(y == 0, mag, -mag)
    out = np.clip(out, -LLR_MAX, LLR_MAX)
    return float(out) if out.ndim == 0 else out


def sample(channel, x, rng):
    """Draw channel output(s) for input bit(s) ``x`` using ``rng``."""
    x = np.asarray(x)
    if channel.kind == "biawgn":
        s = 1.0 - 2.0 * x
        out = s + math.sqrt(channel.param) * rng.standard_normal(x.shape)
    elif channel.kind == "bsc":
        out = (x ^ (rng.random(x.shape) < channel.param)).astype(np.uint8)
    else:
        out = np.where(rng.random(x.shape) < channel.param, ERASURE, x).astype(np.uint8)
    return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class MecParams:
    """M-ary erasure channel with M = 2**m inputs and erasure probability eps."""

    m: int
    eps: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"m must be an integer >= 2, got {self.m}")
        check_probability(self.eps, "erasure probability")


class MecSplit(NamedTuple):
    C_m: float
    R0_m: float
    C_1: float
    R0_1: float

    def boost_margin(self, m):
        """Sum cutoff rate gained by splitting the MEC into m binary erasure channels."""
        return m * self.R0_1 - self.R0_m


def mec_split(params):
    m, eps = params.m, params.eps
    return MecSplit(
        C_m=m * (1.0 - eps),
        R0_m=m - math.log2(1.0 + (2 ** m - 1) * eps),
        C_1=1.0 - eps,
        R0_1=1.0 - math.log2(1.0 + eps),
    )
