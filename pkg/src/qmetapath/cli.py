"""Command-line entry point: ``qmetapath run`` and ``qmetapath init-config``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import harness
from .config import SWEEP_AXES, ExperimentConfig, config_from_dict, config_to_dict, dump_config, load_config
from .errors import QMetaPathError

log = logging.getLogger("qmetapath")


def parse_sweep(text: str):
    """``axis=v1,v2,...`` -> (axis, [values])."""
    if "=" not in text:
        raise QMetaPathError(f"--sweep expects axis=v1,v2,... (got {text!r})")
    axis, _, raw = text.partition("=")
    axis = axis.strip()
    if axis not in SWEEP_AXES:
        raise QMetaPathError(f"unknown sweep axis {axis!r} (choose from {', '.join(SWEEP_AXES)})")
    values = [v.strip() for v in raw.split(",") if v.strip()]
    if not values:
        raise QMetaPathError("--sweep needs at least one value")
    try:
        parsed = [int(v) if axis == "n_elements" else float(v) for v in values]
    except ValueError as exc:
        raise QMetaPathError(f"bad sweep value: {exc}") from exc
    return axis, parsed


def paper_scale(cfg: ExperimentConfig) -> ExperimentConfig:
    """Full architecture: N=100, Q=64, K=4 with L=6, P=8, k=3 (24 qubits)."""
    cfg = cfg.with_system(n_elements=100, n_antennas=64, n_users=4)
    return cfg.with_qmeta(layers=6, paths=8, k_top=3, feature_qubits=6, max_qubits=24)


def build_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else config_from_dict({})
    if args.paper_scale:
        cfg = paper_scale(cfg)
    if args.seeds is not None:
        cfg = cfg.replace(seeds=args.seeds)
    if args.episodes is not None:
        cfg = cfg.replace(episodes=args.episodes)
    if args.baselines is not None:
        names = tuple(b.strip() for b in args.baselines.split(",") if b.strip() and b.strip() != "none")
        cfg = cfg.replace(baselines=names)
    if args.out is not None:
        cfg = cfg.replace(out=args.out)
    if args.quantize_bits is not None:
        cfg = cfg.with_qmeta(quantize_bits=args.quantize_bits)
    if args.no_timing:
        cfg = cfg.replace(record_latency=False)
    # re-run validation on the overridden values
    return config_from_dict(config_to_dict(cfg))


def cmd_run(args) -> int:
    cfg = build_config(args)
    if args.sweep:
        axis, values = parse_sweep(args.sweep)
        results = harness.run_sweep(cfg, axis, values)
        path = harness.emit_sweep(results, axis, cfg.out, cfg)
        for value, res in results:
            _print_summary(res.summaries, f"{axis}={value}")
        print(f"wrote {path}")
        return 0
    res = harness.run_benchmark(cfg)
    csv_path, json_path = harness.emit_results(res.records, res.summaries, cfg.out, cfg)
    _print_summary(res.summaries)
    print(f"wrote {csv_path} and {json_path}")
    return 0


def cmd_init_config(args) -> int:
    dump_config(config_from_dict({}), args.path)
    print(f"wrote default config to {args.path}")
    return 0


def _print_summary(summaries, label=None):
    if label:
        print(f"[{label}]")
    print(f"{'method':<10} {'SE mean':>9} {'SE std':>8} {'lat ms':>9} {'conv ep':>8}")
    for m, s in sorted(summaries.items()):
        print(f"{m:<10} {s.se_mean:9.4f} {s.se_std:8.4f} {s.latency_ms_mean:9.2f} {s.convergence_episode:8.1f}")


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qmetapath", description="Path-based quantum meta-learning RIS simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark or a parameter sweep")
    run.add_argument("--config", help="YAML/JSON config file (absent fields take defaults)")
    run.add_argument("--seeds", type=int)
    run.add_argument("--episodes", type=int)
    run.add_argument("--baselines", help="comma list from random,gradient,ao (or 'none')")
    run.add_argument("--sweep", help="axis=v1,v2,... with axis in csi_error, n_elements")
    run.add_argument("--out", help="output directory")
    run.add_argument("--quantize-bits", type=int, dest="quantize_bits")
    run.add_argument("--paper-scale", action="store_true", dest="paper_scale", help="24-qubit L=6, P=8 architecture")
    run.add_argument("--no-timing", action="store_true", dest="no_timing", help="write latency as 0 for byte-stable CSV")
    run.set_defaults(func=cmd_run)

    init = sub.add_parser("init-config", help="write the default config")
    init.add_argument("path")
    init.set_defaults(func=cmd_init_config)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (QMetaPathError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
