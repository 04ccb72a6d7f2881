"""Run orchestration: wire a protocol to the event kernel, run to the
horizon, and collect metrics (optionally with a replayable trace)."""

from __future__ import annotations

import dataclasses

from .config import ScenarioConfig
from .errors import ConfigError
from .kernel import Simulation
from .mac.centralized import CentralizedMac
from .mac.distributed import DistributedMac
from .mac.hybrid import HybridMac
from .metrics import Recorder, RunMetrics, energy_efficiency, jain_index, throughput_bps


def _protocol_actor(cfg: ScenarioConfig, recorder: Recorder):
    if cfg.protocol == "centralized":
        return CentralizedMac(cfg, recorder)
    if cfg.protocol == "distributed":
        return DistributedMac(cfg, recorder)
    if cfg.protocol.startswith("hybrid"):
        return HybridMac(cfg, recorder)
    raise ConfigError(f"unknown protocol {cfg.protocol!r}")


def run_scenario(cfg: ScenarioConfig, keep_trace: bool = False):
    """Simulate one scenario; returns (RunMetrics, trace-or-None)."""
    cfg.validate()
    recorder = Recorder(keep_trace=keep_trace)
    sim = Simulation(cfg.seed, recorder=recorder)
    actor = _protocol_actor(cfg, recorder)
    actor.start(sim)
    elapsed = sim.run_to_completion(cfg.horizon_s)
    metrics = recorder.finalize(elapsed)
    return metrics, recorder.trace


def metrics_row(cfg: ScenarioConfig, m: RunMetrics) -> dict:
    """One result row in the documented CSV schema."""
    return {
        "scenario": cfg.resolved_scenario(),
        "protocol": cfg.protocol,
        "ai": cfg.ai,
        "K": cfg.K,
        "num_ris": cfg.num_ris,
        "seed": cfg.seed,
        "throughput_bps": throughput_bps(m),
        "ee_bits_per_joule": energy_efficiency(m),
        "collisions": m.collisions,
        "jain_index": jain_index(m.user_bits_vector(cfg.K)),
        "mean_delay_s": m.mean_delay_s(),
        "frames": m.frames_completed,
    }


SWEEPABLE = tuple(
    f.name for f in dataclasses.fields(ScenarioConfig)
    if f.type in ("int", "float", int, float) and f.name != "seed"
)


def sweep_point(base: ScenarioConfig, variable: str, value, seed: int,
                protocol: str = None, ai: bool = None) -> ScenarioConfig:
    """Derive one sweep-point config; num_ris sweeps re-derive the dependent
    sub-channel count and scenario tag."""
    if variable not in SWEEPABLE:
        raise ConfigError(
            f"{variable!r} is not a sweepable numeric key (one of {SWEEPABLE})")
    overrides = {variable: value, "seed": seed}
    if protocol is not None:
        overrides["protocol"] = protocol
    if ai is not None:
        overrides["ai"] = ai
    if variable == "num_ris":
        overrides["num_subchannels"] = 0
        overrides["scenario"] = "auto"
    cfg = dataclasses.replace(base, **overrides)
    return cfg.validate()


def run_sweep(base: ScenarioConfig, variable: str, values, seeds,
              protocols=None):
    """One data row per (value, protocol, seed), in deterministic order, plus
    a summary row (mean +- sample std cells) per (value, protocol)."""
    import numpy as np

    protocols = list(protocols) if protocols else [base.protocol]
    numeric = ("throughput_bps", "ee_bits_per_joule", "collisions",
               "jain_index", "mean_delay_s", "frames")
    rows = []
    for value in values:
        for protocol in protocols:
            group = []
            for seed in seeds:
                cfg = sweep_point(base, variable, value, seed, protocol)
                m, _ = run_scenario(cfg)
                row = metrics_row(cfg, m)
                group.append(row)
                rows.append(row)
            summary = dict(group[0])
            summary["seed"] = "summary"
            for col in numeric:
                data = np.asarray([g[col] for g in group], dtype=float)
                mean = float(np.mean(data))
                std = float(np.std(data, ddof=1)) if len(data) > 1 else 0.0
                summary[col] = f"{mean:.6g}+-{std:.3g}"
            rows.append(summary)
    return rows
