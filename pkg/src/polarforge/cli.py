"""Command-line entry point: ``analyze``, ``construct``, ``profile``, ``reference``, ``simulate``."""

import argparse
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, bmc

# Decoder modules pull in numba, scipy and sklearn; they are imported per
# command so that ``analyze`` stays fast.

SEED_ENV = "POLARFORGE_SEED"

SYSTEMS = ("polar-sc", "polar-cascl", "pac-fano")
RULES = {"rm": "rm", "polar-z": "cutoff", "polar-c": "capacity"}

SIM_DEFAULTS = {
    "code": "polar-sc", "N": 128, "K": 64, "rule": "rm", "list": 32, "crc": 8,
    "conv": "1011011", "delta": 2.0, "max_visits": 1_000_000, "bias": "cutoff",
    "minsum": False, "samples": 100_000, "design_snr": None, "snr": None,
    "min_errors": 100, "max_frames": 10_000_000, "seed": None, "channel": None,
}


class CliError(Exception):
    pass


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _channel(text):
    try:
        return bmc.parse_channel(text)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _write_atomic(path, text):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _emit(text, out):
    if out:
        _write_atomic(out, text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args):
    ch = _channel(args.channel)
    info = bmc.info_triple(ch)
    result = {"channel": str(ch), "C": info.capacity_bits, "R0": info.cutoff_rate_bits,
              "Z": info.bhattacharyya}
    if args.mec is not None:
        if ch.kind != "bec":
            raise CliError("--mec needs a bec:<eps> channel")
        split = bmc.mec_split(bmc.MecParams(args.mec, ch.param))
        result["mec"] = {"m": args.mec, **split._asdict(),
                         "boost_margin": split.boost_margin(args.mec)}
    if args.json:
        print(json.dumps(result, indent=2))
        return
    print(f"channel {result['channel']}")
    print(f"C  = {info.capacity_bits:.6f}")
    print(f"R0 = {info.cutoff_rate_bits:.6f}")
    print(f"Z  = {info.bhattacharyya:.6f}")
    if "mec" in result:
        m = result["mec"]
        print(f"MEC m={args.mec}: C_m={m['C_m']:.6f} R0_m={m['R0_m']:.6f} "
              f"C_1={m['C_1']:.6f} R0_1={m['R0_1']:.6f}")
        print(f"boost margin m*R0_1 - R0_m = {m['boost_margin']:.6f}")


def _stats(channel, N, method, samples, seed):
    from .polarize import BitChannelEstimator

    if method is None:
        method = "exact-bec" if channel.kind == "bec" else None
    if method is None:
        raise CliError("non-BEC channels need --method monte-carlo")
    try:
        return BitChannelEstimator(N=N, method=method, samples=samples, seed=seed).fit(channel).stats_
    except ValueError as exc:
        raise CliError(str(exc)) from None


def cmd_construct(args):
    from .pac import ScoreRule, build_data_index_set
    from .polar import CodeSpec, select_data_indices

    N, K = args.N, args.K
    if not 1 <= K <= N:
        raise CliError(f"K must lie in 1..{N}, got {K}")
    stats = None
    if args.rule == "rm":
        A = build_data_index_set(ScoreRule("rm"), N, K)
    else:
        if args.channel is None:
            raise CliError(f"rule {args.rule} needs a channel")
        stats = _stats(_channel(args.channel), N, args.method, args.samples, args.seed)
        if args.rule == "polar-z":
            A = select_data_indices(stats, K)
        else:
            A = build_data_index_set(ScoreRule(RULES[args.rule], stats), N, K)
    code = CodeSpec(N, K, A).to_dict(rule=args.rule)
    _emit(json.dumps(code) + "\n", args.out)
    stats_out = args.stats_out
    if stats_out is None and args.out:
        stats_out = Path(args.out).with_suffix(".stats.json")
    if stats is not None and stats_out:
        _write_atomic(stats_out, stats.to_json(indent=1) + "\n")


def cmd_profile(args):
    from .polarize import polarization_fractions, profiles

    ch = _channel(args.channel)
    stats = _stats(ch, args.N, args.method, args.samples, args.seed)
    table = profiles(stats, ch)
    _emit(table.to_csv(), args.out)
    if args.fractions is not None:
        hi, mid, lo = polarization_fractions(stats, args.fractions)
        print(f"fractions delta={args.fractions}: high={hi:.4f} mid={mid:.4f} low={lo:.4f}",
              file=sys.stderr)


def cmd_reference(args):
    from . import simkit

    try:
        grid = simkit.snr_grid(args.snr)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    lines = ["snr_db,fer_approx"]
    for s in grid:
        fer = simkit.dispersion_fer(args.N, args.K, bmc.ChannelModel.biawgn(snr_db=s),
                                    log_term=not args.no_log_term)
        lines.append(f"{s:.10g},{fer:.10g}")
    _emit("\n".join(lines) + "\n", args.out)


def parse_config_file(path):
    """Flat ``key = value`` file; values are JSON literals or bare strings; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise CliError(f"{path}:{lineno}: expected key = value")
        key = key.strip().replace("-", "_")
        value = value.strip()
        try:
            values[key] = json.loads(value)
        except json.JSONDecodeError:
            values[key] = value
    unknown = set(values) - set(SIM_DEFAULTS)
    if unknown:
        raise CliError(f"{path}: unknown config key {sorted(unknown)[0]!r}")
    return values


def _resolve_sim_config(args):
    from . import simkit

    merged = dict(SIM_DEFAULTS)
    if args.config:
        merged.update(parse_config_file(args.config))
    for key in SIM_DEFAULTS:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            merged[key] = val
    if merged["seed"] is None:
        merged["seed"] = _default_seed()
    chan = merged["channel"]
    if isinstance(chan, str):
        chan = [chan]
    if not chan:
        chan = ["biawgn"] if merged["snr"] is not None else []
    points = []
    for text in chan:
        if text.strip().lower() == "biawgn":
            if merged["snr"] is None:
                raise CliError("biawgn sweeps need --snr start:step:stop")
            try:
                grid = simkit.snr_grid(str(merged["snr"]))
            except ValueError as exc:
                raise CliError(str(exc)) from None
            points.extend(bmc.ChannelModel.biawgn(snr_db=s) for s in grid)
        else:
            points.append(_channel(text))
    if not points:
        raise CliError("no channel points given")
    rule = merged["rule"]
    if rule not in RULES:
        raise CliError(f"unknown rule {rule!r}")
    try:
        system = simkit.SystemSpec(
            code=merged["code"], N=int(merged["N"]), K=int(merged["K"]), rule=RULES[rule],
            list_size=int(merged["list"]), crc_width=int(merged["crc"]), conv=str(merged["conv"]),
            delta=float(merged["delta"]), max_visits=int(merged["max_visits"]),
            bias=merged["bias"], minsum=bool(merged["minsum"]),
            construct_samples=int(merged["samples"]), construct_seed=int(merged["seed"]),
            design_snr_db=None if merged["design_snr"] is None else float(merged["design_snr"]),
        )
        return simkit.SimConfig(points=points, system=system, min_errors=int(merged["min_errors"]),
                                max_frames=int(merged["max_frames"]), seed=int(merged["seed"]))
    except (TypeError, ValueError) as exc:
        raise CliError(str(exc)) from None


def build_manifest(config):
    return {
        "tool": "polarforge", "version": __version__, "command": "simulate",
        "config": config.to_dict(), "python": platform.python_version(),
        "numpy": np.__version__,
    }


def cmd_simulate(args):
    from . import simkit

    if args.manifest:
        data = json.loads(Path(args.manifest).read_text())
        try:
            config = simkit.SimConfig.from_dict(data["config"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(f"bad manifest {args.manifest}: {exc}") from None
    else:
        config = _resolve_sim_config(args)
    config.workers = args.workers or simkit.default_workers()
    progress = None
    if args.verbose:
        def progress(rec):
            print(f"{rec.point}: frames={rec.frames} errors={rec.frame_errors} fer={rec.fer:.3e} "
                  f"({rec.wall_seconds:.1f}s)", file=sys.stderr)
    records = simkit.run_fer(config, progress)
    csv_text = simkit.records_to_csv(records, timing=args.timing)
    if args.out:
        out = Path(args.out)
        stem = out.with_suffix("")
        _write_atomic(stem.with_suffix(".manifest.json"),
                      json.dumps(build_manifest(config), indent=2) + "\n")
        _write_atomic(stem.with_suffix(".json"),
                      simkit.records_to_json(records, timing=args.timing) + "\n")
        _write_atomic(out, csv_text)
    else:
        sys.stdout.write(csv_text)


def build_parser():
    p = argparse.ArgumentParser(prog="polarforge", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="capacity, cutoff rate and Bhattacharyya parameter")
    a.add_argument("channel")
    a.add_argument("--mec", type=int, help="also split an M=2^m erasure channel")
    a.add_argument("--json", action="store_true")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("construct", help="choose a data index set")
    c.add_argument("channel", nargs="?")
    c.add_argument("-N", "--N", type=int, required=True)
    c.add_argument("-K", "--K", type=int, required=True)
    c.add_argument("--rule", choices=sorted(RULES), default="polar-z")
    c.add_argument("--method", choices=["exact-bec", "monte-carlo"])
    c.add_argument("--samples", type=int, default=100_000)
    c.add_argument("--seed", type=int)
    c.add_argument("--out")
    c.add_argument("--stats-out")
    c.set_defaults(func=cmd_construct)

    pr = sub.add_parser("profile", help="capacity and cutoff-rate profiles as CSV")
    pr.add_argument("channel")
    pr.add_argument("-N", "--N", type=int, required=True)
    pr.add_argument("--method", choices=["exact-bec", "monte-carlo"])
    pr.add_argument("--samples", type=int, default=100_000)
    pr.add_argument("--seed", type=int)
    pr.add_argument("--fractions", type=float, metavar="DELTA",
                    help="report polarization fractions on stderr")
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_profile)

    r = sub.add_parser("reference", help="BIAWGN normal-approximation FER curve")
    r.add_argument("-N", "--N", type=int, default=128)
    r.add_argument("-K", "--K", type=int, default=64)
    r.add_argument("--snr", default="0:0.25:5")
    r.add_argument("--no-log-term", action="store_true")
    r.add_argument("--out")
    r.set_defaults(func=cmd_reference)

    s = sub.add_parser("simulate", help="Monte-Carlo FER simulation")
    s.add_argument("channel", nargs="*", default=None,
                   help="'biawgn' (with --snr) or explicit channel points")
    s.add_argument("--code", choices=SYSTEMS)
    s.add_argument("-N", "--N", type=int)
    s.add_argument("-K", "--K", type=int)
    s.add_argument("--snr", help="inclusive start:step:stop grid in dB")
    s.add_argument("--rule", choices=sorted(RULES))
    s.add_argument("--list", type=int)
    s.add_argument("--crc", type=int)
    s.add_argument("--conv")
    s.add_argument("--delta", type=float)
    s.add_argument("--max-visits", type=int)
    s.add_argument("--bias", choices=["cutoff", "capacity", "rate-profile"])
    s.add_argument("--minsum", action="store_true")
    s.add_argument("--samples", type=int, help="construction samples per point")
    s.add_argument("--design-snr", type=float)
    s.add_argument("--min-errors", type=int)
    s.add_argument("--max-frames", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--config", help="flat key = value file; flags override it")
    s.add_argument("--manifest", help="re-run exactly from a manifest file")
    s.add_argument("--out", help="CSV path; a .json mirror and .manifest.json are written beside it")
    s.add_argument("--timing", action="store_true", help="fill the seconds column")
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is None and args.command in ("construct", "profile"):
        try:
            args.seed = _default_seed()
        except CliError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    try:
        args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
