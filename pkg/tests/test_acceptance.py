"""Acceptance criteria, one test (and one reported line) per criterion.

Tolerances and budgets are pinned from the criteria text.  The summary
lines are collected by ``conftest.py`` and printed at the end of the run.
"""

import itertools
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from polarforge import bmc, cli, simkit
from polarforge.bmc import ChannelModel, MecParams
from polarforge.crc import bits_to_int, bytes_to_bits, crc_attach, crc_check, crc_remainder
from polarforge.pac import ConvSpec, conv_encode, conv_invert
from polarforge.polar import CodeSpec, PolarCode, encode, sc_decode, scl_decode, union_bound
from polarforge.polarize import (bec_bit_channels, mc_bit_channels, polar_transform,
                                 polarization_fractions, profiles)
from polarforge.simkit import SimConfig, SystemSpec, dispersion_fer, run_fer

import oracles

N, K = 128, 64
CONV = "1011011"


@pytest.fixture(scope="module")
def fig8():
    ch = ChannelModel.biawgn(snr_db=3.0)
    t0 = time.perf_counter()
    stats = mc_bit_channels(ch, N, samples=100_000, seed=0)
    table = profiles(stats, ch)
    return table, time.perf_counter() - t0


def test_criterion_1_capacity_3db(acceptance_report):
    t0 = time.perf_counter()
    out = subprocess.run([sys.executable, "-m", "polarforge.cli", "analyze", "biawgn:snr_db=3",
                          "--json"], capture_output=True, text=True, check=True).stdout
    elapsed = time.perf_counter() - t0
    C = json.loads(out)["C"]
    ok = abs(C - 0.72) <= 0.005 and elapsed < 1.0
    assert acceptance_report(1, ok, f"C(3 dB) = {C:.5f} (target 0.72 +- 0.005), {elapsed:.2f} s (< 1 s)")


def test_criterion_2a_sum_cutoff(fig8, acceptance_report):
    table, elapsed = fig8
    val = table.pol_r0[-1]
    ok = abs(val - 86.7) <= 0.5 and elapsed < 120
    assert acceptance_report("2a", ok, f"sum R0(W_i) = {val:.3f} (target 86.7 +- 0.5), {elapsed:.1f} s")


def test_criterion_2b_unpolarized_cutoff(fig8, acceptance_report):
    # N R0(W) is a closed form here (Z = exp(-SNR/2)), giving 70.03; see the decisions ledger
    table, _ = fig8
    val = table.unpol_r0[-1]
    ok = abs(val - 69.8) <= 0.2
    assert acceptance_report("2b", ok, f"N R0(W) = {val:.3f} (target 69.8 +- 0.2)")


def test_criterion_2c_capacity_gap(fig8, acceptance_report):
    table, _ = fig8
    val = N - table.unpol_cap[-1]
    ok = abs(val - 35.8) <= 0.7
    assert acceptance_report("2c", ok, f"[1 - C(W)] N = {val:.3f} (target 35.8 +- 0.7)")


def test_criterion_3_pac_near_dispersion(acceptance_report):
    grid = simkit.snr_grid("0:0.25:5")
    ref = {s: dispersion_fer(N, K, ChannelModel.biawgn(snr_db=s)) for s in grid}
    band = [s for s in grid if 1e-3 <= ref[s] <= 1e-1]
    cfg = SimConfig(points=[ChannelModel.biawgn(snr_db=s) for s in band],
                    system=SystemSpec(code="pac-fano", N=N, K=K, rule="rm", conv=CONV),
                    min_errors=100, seed=2019, workers=simkit.default_workers())
    t0 = time.perf_counter()
    records = run_fer(cfg)
    elapsed = time.perf_counter() - t0
    parts, ok = [], True
    for s, rec in zip(band, records):
        ratio = rec.fer / ref[s]
        good = rec.frame_errors >= 100 and 1 / 3 <= ratio <= 3
        ok &= good
        parts.append(f"{s:g} dB {rec.fer:.2e}/{ref[s]:.2e}")
    detail = "; ".join(parts) + f" (measured/reference within x3, {elapsed:.0f} s)"
    assert acceptance_report(3, ok, detail)


def test_criterion_4_ordering(acceptance_report):
    points = [ChannelModel.biawgn(snr_db=s) for s in (1.0, 1.5, 2.0)]
    systems = {
        "pac": SystemSpec(code="pac-fano", N=N, K=K, rule="rm", conv=CONV),
        "cascl": SystemSpec(code="polar-cascl", N=N, K=K, list_size=32, crc_width=8),
        "sc": SystemSpec(code="polar-sc", N=N, K=K),
    }
    fer = {}
    for name, system in systems.items():
        cfg = SimConfig(points=points, system=system, min_errors=100, seed=77,
                        workers=simkit.default_workers())
        fer[name] = run_fer(cfg)
    ok, parts = True, []
    for i, ch in enumerate(points):
        p, c, s = (fer[k][i] for k in ("pac", "cascl", "sc"))
        enough = min(p.frame_errors, c.frame_errors, s.frame_errors) >= 100
        ok &= enough and p.fer < c.fer < s.fer
        parts.append(f"{ch.snr_db:g} dB PAC {p.fer:.2e} < CA-SCL {c.fer:.2e} < SC {s.fer:.2e}")
    assert acceptance_report(4, ok, "; ".join(parts))


def test_criterion_5_union_bound(acceptance_report):
    ok, parts = True, []
    t0 = time.perf_counter()
    for eps, (n_, k_) in itertools.product((0.3, 0.5), ((64, 32), (128, 64))):
        ch = ChannelModel.bec(eps)
        cfg = SimConfig(points=[ch], system=SystemSpec(code="polar-sc", N=n_, K=k_),
                        min_errors=10 ** 9, max_frames=100_000, seed=5,
                        workers=simkit.default_workers())
        rec = run_fer(cfg)[0]
        code = cfg.system.build(ch)
        bound = union_bound(code.stats_, code.spec_.A)
        sigma = math.sqrt(rec.fer * (1 - rec.fer) / rec.frames)
        good = rec.frames >= 100_000 and rec.fer <= bound + 3 * sigma
        ok &= good
        parts.append(f"eps={eps} ({n_},{k_}) FER {rec.fer:.4f} <= {bound:.4f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    assert acceptance_report(5, ok, "; ".join(parts) + f" ({elapsed:.0f} s)")


def test_criterion_6_oracles(acceptance_report):
    t0 = time.perf_counter()
    checks = {}
    checks["a"] = all(
        np.array_equal(polar_transform(U), (U.astype(np.int64) @ oracles.kron_power(n)) % 2)
        for n in range(4)
        for U in [np.array(list(itertools.product((0, 1), repeat=1 << n)), dtype=np.uint8)])
    checks["b"] = all(
        np.allclose(bec_bit_channels(eps, n_).bhattacharyya,
                    oracles.bec_bit_erasures_bruteforce(eps, n_), atol=1e-12)
        for eps in (0.2, 0.5) for n_ in (2, 4, 8))
    c111 = ConvSpec((1, 1, 1))

    def toeplitz(n_):
        return np.array([[1 if 0 <= j - i <= 2 else 0 for j in range(n_)] for i in range(n_)])

    checks["c"] = all(
        np.array_equal(conv_encode(V, c111), (V.astype(np.int64) @ toeplitz(n_)) % 2)
        for n_ in (1, 2, 4, 8)
        for V in [np.array(list(itertools.product((0, 1), repeat=n_)), dtype=np.uint8)])
    ch = ChannelModel.biawgn(snr_db=1.5)
    code = PolarCode(N, K).fit(mc_bit_channels(ch, N, samples=20_000, seed=1))
    rng = np.random.default_rng(6)
    d = rng.integers(0, 2, (10_000, K), dtype=np.uint8)
    L = bmc.llr(ch, bmc.sample(ch, code.transform(d), rng))
    checks["d"] = np.array_equal(scl_decode(L, code.spec_, list_size=1), sc_decode(L, code.spec_))
    elapsed = time.perf_counter() - t0
    ok = all(checks.values()) and elapsed < 60
    detail = " ".join(f"({k}) {'ok' if v else 'MISMATCH'}" for k, v in checks.items())
    assert acceptance_report(6, ok, f"{detail}, {elapsed:.1f} s")


def test_criterion_7_polarization_fractions(acceptance_report):
    t0 = time.perf_counter()
    stats = bec_bit_channels(0.5, 1 << 20)
    high = np.count_nonzero(stats.capacity > 0.99) / stats.N
    low = np.count_nonzero(stats.capacity < 0.01) / stats.N
    elapsed = time.perf_counter() - t0
    ok = abs(high - 0.5) <= 0.02 and abs(low - 0.5) <= 0.02 and elapsed < 10
    assert polarization_fractions(stats, 0.01)[0] == high
    assert acceptance_report(7, ok, f"N=2^20: C>0.99 {high:.4f}, C<0.01 {low:.4f} "
                                    f"(0.5 +- 0.02), {elapsed:.2f} s")


def test_criterion_8_invariants(acceptance_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    checks = {}
    U = rng.integers(0, 2, (2000, 1024), dtype=np.uint8)
    V = rng.integers(0, 2, (2000, 1024), dtype=np.uint8)
    checks["involution"] = np.array_equal(polar_transform(polar_transform(U)), U)
    checks["linearity"] = np.array_equal(polar_transform(U ^ V), polar_transform(U) ^ polar_transform(V))
    trips = True
    for n in range(1, 11):
        n_ = 1 << n
        k_ = int(rng.integers(1, n_ + 1))
        spec = CodeSpec(n_, k_, 1 + rng.choice(n_, k_, replace=False))
        dd = rng.integers(0, 2, (20, k_), dtype=np.uint8)
        llrs = bmc.LLR_MAX * (1.0 - 2.0 * encode(dd, spec))
        trips &= np.array_equal(sc_decode(llrs, spec), dd)
        trips &= np.array_equal(scl_decode(llrs, spec, list_size=4), dd)
    checks["round trip"] = trips
    convs = [ConvSpec(tuple([1] + list(rng.integers(0, 2, m)) + [1])) for m in range(8)]
    checks["conv_invert"] = all(np.array_equal(conv_invert(conv_encode(U[:50], c), c), U[:50])
                                for c in convs)
    checks["conservation"] = all(
        abs(bec_bit_channels(eps, 1 << n).capacity.sum() - (1 << n) * (1 - eps)) <= 1e-9
        for eps in (0.1, 0.3, 0.5, 0.77) for n in range(13))
    checks["crc 0xF4"] = bits_to_int(crc_remainder(bytes_to_bits(b"123456789"))) == 0xF4
    checks["crc attach"] = all(crc_check(crc_attach(w)) for w in U[:200, :64])
    checks["mec margin"] = all(
        bmc.mec_split(MecParams(m, e)).boost_margin(m) > 0
        for m in range(2, 9) for e in np.linspace(0.01, 0.99, 50))
    elapsed = time.perf_counter() - t0
    ok = all(checks.values()) and elapsed < 60
    failed = [k for k, v in checks.items() if not v]
    detail = f"{len(checks)} suites, " + (f"failed: {', '.join(failed)}" if failed else "all hold")
    assert acceptance_report(8, ok, f"{detail}, {elapsed:.1f} s")


def test_criterion_9_determinism(tmp_path, acceptance_report):
    base = ["simulate", "--code", "pac-fano", "--rule", "rm", "--conv", CONV, "-N", "64", "-K", "32",
            "biawgn", "--snr", "1:0.5:2", "--min-errors", "30", "--seed", "11"]
    one, four, again = (tmp_path / f"{name}.csv" for name in ("one", "four", "again"))
    assert cli.main([*base, "--workers", "1", "--out", str(one)]) == 0
    assert cli.main([*base, "--workers", "4", "--out", str(four)]) == 0
    assert cli.main(["simulate", "--manifest", str(tmp_path / "one.manifest.json"),
                     "--workers", "2", "--out", str(again)]) == 0
    ok = one.read_bytes() == four.read_bytes() == again.read_bytes()
    assert acceptance_report(9, ok, "CSV identical for workers 1/4 and for a manifest re-run")
