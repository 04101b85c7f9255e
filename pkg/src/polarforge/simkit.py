"""Monte-Carlo frame-error-rate estimation and the normal-approximation reference.

Every frame draws its randomness from ``default_rng([seed, point, frame])``
and the stopping point is resolved frame by frame, so results do not depend
on chunking or on the number of workers.
"""

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtr

from . import bmc
from .pac import DEFAULT_CONV, DEFAULT_DELTA, DEFAULT_MAX_VISITS, PacCode
from .polar import PolarCode
from .polarize import BitChannelEstimator, DEFAULT_SAMPLES

SYSTEMS = ("polar-sc", "polar-cascl", "pac-fano")
CSV_HEADER = ("snr_db,frames,errors,fer,fer_ci95,exhausted,visits_mean,visits_p50,visits_p99,"
              "visits_max,seconds,seed")
CHUNK = 256


@dataclass(frozen=True)
class DispersionStats:
    capacity: float
    dispersion: float


def channel_dispersion(channel, nodes=bmc.GH_NODES):
    """Mean and variance (bits, bits^2) of the information density under uniform inputs."""
    if channel.kind == "bec":
        eps = channel.param
        return DispersionStats(1.0 - eps, eps * (1.0 - eps))
    if channel.kind == "bsc":
        p = channel.param
        if p in (0.0, 1.0) or p == 0.5:
            return DispersionStats(bmc.capacity(channel), 0.0)
        return DispersionStats(bmc.capacity(channel), p * (1 - p) * math.log2((1 - p) / p) ** 2)
    if channel.kind == "biawgn":
        L, w = bmc._awgn_llr_nodes(channel.param, nodes)
        dens = bmc.information_density(L)
        C = float(np.dot(w, dens))
        return DispersionStats(C, float(np.dot(w, (dens - C) ** 2)))
    raise ValueError(f"unsupported channel {channel!r}")


def dispersion_fer(N, K, channel, log_term=True, nodes=bmc.GH_NODES):
    """Normal approximation Q((N C - K + log2(N)/2) / sqrt(N V)) to the ML frame error rate."""
    if N < 1 or not 0 <= K <= N:
        raise ValueError("need N >= 1 and 0 <= K <= N")
    ds = channel_dispersion(channel, nodes)
    num = N * ds.capacity - K + (0.5 * math.log2(N) if log_term else 0.0)
    if ds.dispersion == 0.0:
        return 0.0 if num > 0 else (1.0 if num < 0 else 0.5)
    return float(ndtr(-num / math.sqrt(N * ds.dispersion)))


def wilson_halfwidth(errors, frames, z=1.959963984540054):
    if frames == 0:
        return float("nan")
    p = errors / frames
    return z / (1 + z * z / frames) * math.sqrt(p * (1 - p) / frames + z * z / (4 * frames ** 2))


@dataclass
class SystemSpec:
    """Which code and decoder to simulate, with construction settings.

    ``design_snr_db`` of None constructs polar-rule codes at every channel
    point; otherwise one construction at that SNR is reused.
    """

    code: str = "polar-sc"
    N: int = 128
    K: int = 64
    rule: str = "rm"
    list_size: int = 32
    crc_width: int = 8
    conv: str = "".join(map(str, DEFAULT_CONV))
    delta: float = DEFAULT_DELTA
    max_visits: int = DEFAULT_MAX_VISITS
    bias: str = "cutoff"
    minsum: bool = False
    construct_samples: int = DEFAULT_SAMPLES
    construct_seed: int = 0
    design_snr_db: float = None

    def __post_init__(self):
        if self.code not in SYSTEMS:
            raise ValueError(f"unknown system {self.code!r}; choose from {', '.join(SYSTEMS)}")

    def build(self, channel):
        """Return a fitted code (estimator) for simulating at ``channel``."""
        design = channel
        if self.design_snr_db is not None:
            design = bmc.ChannelModel.biawgn(snr_db=self.design_snr_db)
        needs_stats = self.code != "pac-fano" or self.rule != "rm" or self.bias != "rate-profile"
        stats = None
        if needs_stats:
            stats = BitChannelEstimator(N=self.N, samples=self.construct_samples,
                                        seed=self.construct_seed).fit(design).stats_
        if self.code == "polar-sc":
            return PolarCode(self.N, self.K, list_size=1, crc_width=0,
                             minsum=self.minsum).fit(stats)
        if self.code == "polar-cascl":
            return PolarCode(self.N, self.K, list_size=self.list_size, crc_width=self.crc_width,
                             minsum=self.minsum).fit(stats)
        return PacCode(self.N, self.K, rule=self.rule, conv=self.conv, delta=self.delta,
                       max_visits=self.max_visits, minsum=self.minsum, bias=self.bias).fit(stats)


@dataclass
class SimConfig:
    points: list
    system: SystemSpec = field(default_factory=SystemSpec)
    min_errors: int = 100
    max_frames: int = 10_000_000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.min_errors < 1 or self.max_frames < 1:
            raise ValueError("min_errors and max_frames must be >= 1")

    def to_dict(self):
        return {"points": [str(p) for p in self.points], "system": asdict(self.system),
                "min_errors": self.min_errors, "max_frames": self.max_frames,
                "seed": self.seed}

    @classmethod
    def from_dict(cls, data, workers=1):
        return cls(points=[bmc.parse_channel(p) for p in data["points"]],
                   system=SystemSpec(**data["system"]), min_errors=int(data["min_errors"]),
                   max_frames=int(data["max_frames"]), seed=int(data["seed"]), workers=workers)


@dataclass
class SimRecord:
    point: str
    snr_db: float
    frames: int
    frame_errors: int
    fer: float
    fer_ci95: float
    seed: int
    exhausted_count: int = None
    visits_mean: float = None
    visits_p50: float = None
    visits_p99: float = None
    visits_max: int = None
    wall_seconds: float = None


def _simulate_chunk(code, channel, seed, point, start, stop):
    K = code.K
    rngs = [np.random.default_rng([seed, point, f]) for f in range(start, stop)]
    d = np.stack([rng.integers(0, 2, K, dtype=np.uint8) for rng in rngs])
    x = code.transform(d)
    y = [bmc.sample(channel, x[i], rng) for i, rng in enumerate(rngs)]
    llrs = bmc.llr(channel, np.stack(y))
    if isinstance(code, PacCode):
        res = code.decode(llrs)
        return np.any(res.d != d, axis=1), res.visits, res.exhausted
    return np.any(code.predict(llrs) != d, axis=1), None, None


def run_point(code, channel, seed, point, min_errors, max_frames, workers=1):
    """Simulate one channel point until ``min_errors`` frame errors or ``max_frames`` frames."""
    t0 = time.perf_counter()
    errors_seen = 0
    flags, visits, exhausted = [], [], []
    frames = 0
    done = False
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        while not done and frames < max_frames:
            wave = []
            for w in range(max(1, workers)):
                start = frames + w * CHUNK
                if start >= max_frames:
                    break
                wave.append((start, min(start + CHUNK, max_frames)))
            results = pool.map(lambda se: _simulate_chunk(code, channel, seed, point, *se), wave)
            for (start, stop), (err, vis, exh) in zip(wave, results):
                if done:
                    continue
                cum = errors_seen + np.cumsum(err)
                hit = np.flatnonzero(cum >= min_errors)
                take = hit[0] + 1 if hit.size else len(err)
                flags.append(err[:take])
                if vis is not None:
                    visits.append(vis[:take])
                    exhausted.append(exh[:take])
                errors_seen += int(err[:take].sum())
                frames = int(start + take)
                done = hit.size > 0
    errs = int(errors_seen)
    rec = SimRecord(point=str(channel), snr_db=channel.snr_db, frames=frames, frame_errors=errs,
                    fer=errs / frames, fer_ci95=wilson_halfwidth(errs, frames), seed=seed)
    if visits:
        v = np.concatenate(visits)
        rec.exhausted_count = int(np.concatenate(exhausted).sum())
        rec.visits_mean = float(v.mean())
        rec.visits_p50 = float(np.percentile(v, 50))
        rec.visits_p99 = float(np.percentile(v, 99))
        rec.visits_max = int(v.max())
    rec.wall_seconds = time.perf_counter() - t0
    return rec


def run_fer(config, progress=None):
    """Run every channel point of ``config`` and return one SimRecord per point."""
    records = []
    shared = None
    if config.system.design_snr_db is not None:
        shared = config.system.build(config.points[0])
    for idx, channel in enumerate(config.points):
        code = shared if shared is not None else config.system.build(channel)
        rec = run_point(code, channel, config.seed, idx, config.min_errors, config.max_frames,
                        config.workers)
        records.append(rec)
        if progress is not None:
            progress(rec)
    return records


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def records_to_csv(records, timing=False):
    """CSV text for ``records``; ``seconds`` stays blank unless ``timing`` so reruns compare equal."""
    lines = [CSV_HEADER]
    for r in records:
        first = r.snr_db if r.snr_db is not None else r.point
        row = [first, r.frames, r.frame_errors, r.fer, r.fer_ci95, r.exhausted_count,
               r.visits_mean, r.visits_p50, r.visits_p99, r.visits_max,
               r.wall_seconds if timing else None, r.seed]
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def records_to_json(records, timing=False):
    rows = []
    for r in records:
        rows.append({
            "snr_db": r.snr_db, "point": r.point, "frames": r.frames, "errors": r.frame_errors,
            "fer": r.fer, "fer_ci95": r.fer_ci95, "exhausted": r.exhausted_count,
            "visits_mean": r.visits_mean, "visits_p50": r.visits_p50,
            "visits_p99": r.visits_p99, "visits_max": r.visits_max,
            "seconds": r.wall_seconds if timing else None, "seed": r.seed,
        })
    return json.dumps(rows, indent=2)


def snr_grid(text):
    """Inclusive ``start:step:stop`` grid in dB (a single number is a one-point grid)."""
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"bad SNR grid {text!r}") from None
    if len(nums) == 1:
        return [nums[0]]
    if len(nums) != 3 or nums[1] <= 0 or nums[2] < nums[0]:
        raise ValueError(f"bad SNR grid {text!r}; expected start:step:stop")
    start, step, stop = nums
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def default_workers():
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count()
