"""Seeded scenario generation, benchmark loops, sweeps and result files."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import baselines
from .channel import (
    ChannelSet,
    LinkBudget,
    NetworkGeometry,
    energy_cost,
    generate_channels,
    inject_csi_error,
    objective,
    pathloss,
    spectral_efficiency,
    wavelength,
)
from .config import SWEEP_AXES, ExperimentConfig, config_to_dict
from .engine import EpisodeRecord, PathRegistry, normalize_features, run_episode
from .errors import ConfigError

log = logging.getLogger(__name__)

CSV_HEADER = ["method", "seed", "episode", "se_bpshz", "objective", "energy", "latency_ms", "paths"]
RATE_MAX_BPSHZ = 10.0
TRAILING = 10


# -- scenarios ---------------------------------------------------------------


def build_geometry(cfg: ExperimentConfig, ue_positions) -> NetworkGeometry:
    s = cfg.system
    spacing = s.spacing_wavelengths * wavelength(s.carrier_freq_hz)
    return NetworkGeometry(
        n_elements=s.n_elements,
        n_antennas=s.n_antennas,
        n_users=s.n_users,
        carrier_freq=s.carrier_freq_hz,
        element_spacing=spacing,
        ue_positions=ue_positions,
        ris_position=np.asarray(s.ris_position, dtype=float),
        ap_position=np.asarray(s.ap_position, dtype=float),
        decay_const=s.coupling_decay_spacings * spacing,
    )


def link_budget(cfg: ExperimentConfig) -> LinkBudget:
    s = cfg.system
    return LinkBudget.from_dbm(s.tx_power_dbm, s.noise_power_dbm, s.n_users)


def draw_users(cfg: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    """Uniform positions in the square service area, at least
    ``min_distance_m`` from the RIS and the AP."""
    s = cfg.system
    anchors = np.array([s.ris_position, s.ap_position], dtype=float)
    out = np.empty((s.n_users, 2))
    for k in range(s.n_users):
        for _ in range(10_000):
            p = rng.uniform(0.0, s.area_size_m, size=2)
            if np.min(np.linalg.norm(anchors - p, axis=1)) >= max(s.min_distance_m, 1e-6):
                break
        else:
            raise ConfigError("could not place a user away from the RIS/AP", field="system.min_distance_m")
        out[k] = p
    return out


def _pathloss_db_bounds(cfg: ExperimentConfig):
    s = cfg.system
    far = pathloss(s.area_size_m * math.sqrt(2.0) + np.linalg.norm(s.ris_position), s.carrier_freq_hz)
    near = pathloss(max(s.min_distance_m, 1e-3), s.carrier_freq_hz)
    return 10 * math.log10(far), 10 * math.log10(near)


def scenario_features(cfg: ExperimentConfig, geometry: NetworkGeometry, chs: ChannelSet, budget: LinkBudget):
    """Six normalized descriptors: user centroid (x, y), mean sine of the
    arrival angle at the RIS, cross-talk share, mean UE->RIS path-loss gain
    and per-user rate at the reference (all-zero) configuration."""
    s = cfg.system
    k = geometry.n_users
    zero = np.zeros(geometry.n_elements)
    h = np.sum(np.abs(chs.h_ue_ris @ chs.cascade) ** 2, axis=-1) * budget.powers(k)
    share = 0.0 if k == 1 else float(np.mean((h.sum() - h) / h.sum()))
    raw = {
        "loc": [*geometry.ue_positions.mean(axis=0), float(np.mean(np.sin(chs.aoa_ue)))],
        "interference": share,
        "pathloss": float(np.mean(10 * np.log10(pathloss(geometry.ue_ris_distances, s.carrier_freq_hz)))),
        "rate": spectral_efficiency(chs, zero, budget) / k,
    }
    lo, hi = _pathloss_db_bounds(cfg)
    bounds = {
        "loc": [(0.0, s.area_size_m), (0.0, s.area_size_m), (-1.0, 1.0)],
        "interference": (0.0, max((k - 1) / k, 1e-12)),
        "pathloss": (lo, hi),
        "rate": (0.0, RATE_MAX_BPSHZ),
    }
    return normalize_features(raw, bounds)


def _hop_gain(cfg):
    return 10 ** (cfg.system.hop_gain_db / 10)


def channels_for(cfg: ExperimentConfig, geometry: NetworkGeometry, seed) -> ChannelSet:
    s = cfg.system
    g = _hop_gain(cfg)
    return generate_channels(
        geometry,
        kappa_ue=s.rician_k_ue,
        kappa_ap=s.rician_k_ap,
        beta_ue=pathloss(geometry.ue_ris_distances, s.carrier_freq_hz) * g,
        beta_ap=pathloss(geometry.ris_ap_distance, s.carrier_freq_hz) * g,
        seed=seed,
    )


def _draw_scenario(cfg: ExperimentConfig, episode: int, seed: int):
    rng = np.random.default_rng([int(seed), int(episode)])
    geometry = build_geometry(cfg, draw_users(cfg, rng))
    chs = channels_for(cfg, geometry, seed=int(rng.integers(2**63)))
    return geometry, chs, link_budget(cfg)


def generate_scenario(cfg: ExperimentConfig, episode: int, seed: int):
    """Features, channels and link budget for one episode, fully determined by
    ``(seed, episode)``."""
    geometry, chs, budget = _draw_scenario(cfg, episode, seed)
    return scenario_features(cfg, geometry, chs, budget), chs, budget


# -- benchmark ---------------------------------------------------------------


@dataclass
class MethodSummary:
    method: str
    se_mean: float
    se_std: float
    objective_mean: float
    latency_ms_mean: float
    convergence_episode: float
    n_records: int


@dataclass
class BenchmarkResult:
    records: list = field(default_factory=list)
    summaries: dict = field(default_factory=dict)


def convergence_episode(se_trace) -> int:
    """First episode whose trailing-10 SE mean reaches 95% of the final
    trailing-10 mean."""
    se = np.asarray(se_trace, dtype=float)
    if se.size == 0:
        return 0
    trailing = np.array([se[max(0, i - TRAILING + 1) : i + 1].mean() for i in range(se.size)])
    target = 0.95 * trailing[-1]
    return int(np.argmax(trailing >= target))


def summarize(records) -> dict:
    by_method: dict = {}
    for r in records:
        by_method.setdefault(r.method, []).append(r)
    out = {}
    for method, recs in by_method.items():
        se = np.array([r.se for r in recs])
        per_seed: dict = {}
        for r in sorted(recs, key=lambda r: (r.seed, r.episode)):
            per_seed.setdefault(r.seed, []).append(r.se)
        conv = float(np.mean([convergence_episode(v) for v in per_seed.values()]))
        out[method] = MethodSummary(
            method=method,
            se_mean=float(se.mean()),
            se_std=float(se.std()),
            objective_mean=float(np.mean([r.objective for r in recs])),
            latency_ms_mean=float(np.mean([r.latency_ms for r in recs])),
            convergence_episode=conv,
            n_records=len(recs),
        )
    return out


def _baseline_record(name, cfg, chs_est, chs_true, budget, seed, episode):
    q = cfg.qmeta
    a1, a2, bits = q.alpha1, q.alpha2, q.quantize_bits
    rng_seed = [int(seed), int(episode), 2]
    if name == "random":
        res = baselines.random_phases(chs_est, budget, a1, a2, seed=rng_seed, quantize_bits=bits)
    elif name == "gradient":
        res = baselines.gradient_ascent(
            chs_est, budget, a1, a2, steps=cfg.gradient_steps, lr=cfg.gradient_lr, seed=rng_seed, quantize_bits=bits
        )
    elif name == "ao":
        res = baselines.alternating_opt(chs_est, budget, a1, a2, sweeps=cfg.ao_sweeps, quantize_bits=bits)
    else:
        raise ConfigError(f"unknown baseline {name!r}", field="baselines")
    return EpisodeRecord(
        episode=episode,
        seed=seed,
        method=name,
        se=spectral_efficiency(chs_true, res.phases, budget),
        objective=float(objective(chs_true, res.phases, budget, a1, a2)),
        energy=energy_cost(res.phases),
        latency_ms=res.wall_time * 1e3,
    )


def run_seed(cfg: ExperimentConfig, seed: int, registry: PathRegistry | None = None):
    """Sequential episode loop of one seed; path scores carry over between
    episodes.  Returns ``(records, final_registry)``."""
    registry = PathRegistry.initialize(cfg.qmeta) if registry is None else registry
    records = []
    for episode in range(cfg.episodes):
        geometry, chs, budget = _draw_scenario(cfg, episode, seed)
        # the optimizers only ever see the (possibly noisy) estimate
        chs_est = inject_csi_error(chs, cfg.csi_error, seed=[int(seed), int(episode), 1])
        features = scenario_features(cfg, geometry, chs_est, budget)
        _, rec, registry = run_episode(features, registry, cfg.qmeta, chs_est, budget, eval_chs=chs)
        rec.episode, rec.seed = episode, seed
        records.append(rec)
        for name in cfg.baselines:
            records.append(_baseline_record(name, cfg, chs_est, chs, budget, seed, episode))
    if not cfg.record_latency:
        for r in records:
            r.latency_ms = 0.0
    return records, registry


def run_benchmark(cfg: ExperimentConfig) -> BenchmarkResult:
    """All seeds, each with a fresh path registry."""
    records = []
    for i in range(cfg.seeds):
        seed = cfg.seed_offset + i
        t0 = time.perf_counter()
        recs, _ = run_seed(cfg, seed)
        records.extend(recs)
        log.info("seed %d: %d records in %.1f s", seed, len(recs), time.perf_counter() - t0)
    return BenchmarkResult(records=records, summaries=summarize(records))


def apply_axis(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "csi_error":
        if float(value) < 0:
            raise ConfigError("csi_error values must be >= 0", field="sweep")
        return cfg.replace(csi_error=float(value))
    if axis == "n_elements":
        if int(value) < 1 or int(value) != float(value):
            raise ConfigError("n_elements values must be positive integers", field="sweep")
        return cfg.with_system(n_elements=int(value))
    raise ConfigError(f"unknown sweep axis {axis!r} (choose from {', '.join(SWEEP_AXES)})", field="sweep")


def run_sweep(cfg: ExperimentConfig, axis: str, values) -> list:
    """One benchmark per value, same seeds throughout.  Returns
    ``[(value, BenchmarkResult), ...]``."""
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value", field="sweep")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r} (choose from {', '.join(SWEEP_AXES)})", field="sweep")
    return [(v, run_benchmark(apply_axis(cfg, axis, v))) for v in values]


# -- output ------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def records_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(
            [r.method, r.seed, r.episode, _fmt(r.se), _fmt(r.objective), _fmt(r.energy), _fmt(r.latency_ms), r.paths_label()]
        )
    return buf.getvalue()


def summaries_dict(summaries: dict) -> dict:
    return {m: dataclasses.asdict(s) for m, s in sorted(summaries.items())}


def emit_results(records, summaries, path, cfg: ExperimentConfig | None = None, sweep=None) -> tuple:
    """Write ``episodes.csv`` and ``summary.json`` under directory ``path``."""
    try:
        os.makedirs(path, exist_ok=True)
        csv_path = os.path.join(path, "episodes.csv")
        json_path = os.path.join(path, "summary.json")
        with open(csv_path, "w", newline="") as fh:
            fh.write(records_csv(records))
        doc = {"methods": summaries_dict(summaries)}
        if cfg is not None:
            doc["config"] = config_to_dict(cfg)
        if sweep is not None:
            doc["sweep"] = sweep
        with open(json_path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return csv_path, json_path


def emit_sweep(results, axis, path, cfg: ExperimentConfig | None = None) -> str:
    """Per-value result directories plus one ``sweep.csv`` summary row per
    (value, method)."""
    os.makedirs(path, exist_ok=True)
    rows = []
    for value, res in results:
        emit_results(res.records, res.summaries, os.path.join(path, f"{axis}={value}"), cfg, sweep={axis: value})
        for m, s in sorted(res.summaries.items()):
            rows.append([axis, value, m, _fmt(s.se_mean), _fmt(s.se_std), _fmt(s.latency_ms_mean), _fmt(s.convergence_episode)])
    out = os.path.join(path, "sweep.csv")
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["axis", "value", "method", "se_mean", "se_std", "latency_ms_mean", "convergence_episode"])
        w.writerows(rows)
    return out
