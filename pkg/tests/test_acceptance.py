"""Acceptance suite: the headline ordering, trend, oracle, trace and
determinism criteria, each reported as one PASS/FAIL line.

Runs the full desk-scale evaluation (K up to 100, up to 16 RISs, 5 seeds per
point) with the shipped default configuration; only the swept keys change.
"""

import math

import numpy as np
import pytest

from rismac.channel import ChannelRealization
from rismac.config import ScenarioConfig
from rismac.kernel import RngStreams
from rismac.learning import QTable
from rismac.mac.distributed import DcfParams
from rismac.metrics import energy_efficiency, throughput_bps
from rismac.ris import align_phases, brute_force_best, config_gain, quantize
from rismac.simulate import metrics_row, run_scenario, sweep_point
from rismac.cli import write_rows

PROTOCOLS = ("centralized", "distributed", "hybrid1")
SEEDS = (1, 2, 3, 4, 5)
K_SWEEP = tuple(range(10, 101, 10))
RIS_SWEEP = (1, 2, 4, 8, 16)


def _report(criterion: str, passed: bool, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")


@pytest.fixture(scope="module")
def throughput_table():
    """mean throughput[(protocol, ai, K)] over the paired seeds."""
    base = ScenarioConfig(horizon_s=1.0)
    table = {}
    for protocol in PROTOCOLS:
        for ai in (True, False):
            for k in K_SWEEP:
                vals = []
                for seed in SEEDS:
                    cfg = sweep_point(base, "K", k, seed, protocol, ai)
                    m, _ = run_scenario(cfg)
                    vals.append(throughput_bps(m))
                table[(protocol, ai, k)] = float(np.mean(vals))
    return table


@pytest.fixture(scope="module")
def ee_table():
    """mean EE[(protocol, num_ris)] at K=100 with AI, over the seeds."""
    base = ScenarioConfig(K=100, horizon_s=1.0)
    table = {}
    for protocol in PROTOCOLS:
        for n in RIS_SWEEP:
            vals = []
            for seed in SEEDS:
                cfg = sweep_point(base, "num_ris", n, seed, protocol, True)
                m, _ = run_scenario(cfg)
                vals.append(energy_efficiency(m))
            table[(protocol, n)] = float(np.mean(vals))
    return table


def test_criterion_1_ai_uplift(throughput_table):
    """AI strictly beats non-AI for every protocol at every K (paired seeds)."""
    violations = [(p, k) for p in PROTOCOLS for k in K_SWEEP
                  if not throughput_table[(p, True, k)] >
                  throughput_table[(p, False, k)]]
    _report("1 ai-uplift", not violations,
            f"violations={violations or 'none'} over "
            f"{len(PROTOCOLS) * len(K_SWEEP)} (protocol, K) cells")
    assert violations == []


def test_criterion_2_centralized_saturation(throughput_table):
    """Centralized-AI throughput saturates: K=100 within 5% of K=80, and
    K=40 exceeds K=10 by at least 20%."""
    t = {k: throughput_table[("centralized", True, k)] for k in K_SWEEP}
    sat = abs(t[100] / t[80] - 1.0)
    growth = t[40] / t[10]
    ok = sat <= 0.05 and growth >= 1.2
    _report("2 saturation", ok,
            f"|K100/K80-1|={sat:.3f} (<=0.05), K40/K10={growth:.3f} (>=1.2)")
    assert sat <= 0.05
    assert growth >= 1.2


def test_criterion_3_crossover(throughput_table):
    """Distributed-AI leads at K=10, centralized-AI at K=100 with hybrid in
    between; the crossover lies in [10, 60]."""
    cent = {k: throughput_table[("centralized", True, k)] for k in K_SWEEP}
    dist = {k: throughput_table[("distributed", True, k)] for k in K_SWEEP}
    hyb = {k: throughput_table[("hybrid1", True, k)] for k in K_SWEEP}
    low_ok = dist[10] > cent[10]
    high_ok = cent[100] > dist[100]
    mid_ok = dist[100] < hyb[100] < cent[100]
    crossover = next((k for k in K_SWEEP if cent[k] >= dist[k]), None)
    cross_ok = crossover is not None and 10 <= crossover <= 60
    ok = low_ok and high_ok and mid_ok and cross_ok
    _report("3 crossover", ok,
            f"K=10: d={dist[10]/1e6:.1f} vs c={cent[10]/1e6:.1f} Mbps; "
            f"K=100: c={cent[100]/1e6:.1f} > h={hyb[100]/1e6:.1f} > "
            f"d={dist[100]/1e6:.1f} Mbps; K*={crossover}")
    assert low_ok and high_ok and mid_ok and cross_ok


def test_criterion_4_distributed_dip(throughput_table):
    """Distributed-AI at K=100 sits at least 1% below its own sweep maximum."""
    dist = [throughput_table[("distributed", True, k)] for k in K_SWEEP]
    dip = 1.0 - dist[-1] / max(dist)
    _report("4 distributed-dip", dip >= 0.01,
            f"K=100 is {dip * 100:.1f}% below the sweep max (>=1%)")
    assert dip >= 0.01


def test_criterion_5_ee_trends(ee_table):
    """At K=100 the EE of every protocol strictly decreases with the RIS
    count; centralized leads at 1-2 RISs, distributed from 4 RISs on."""
    monotone_bad = []
    for protocol in PROTOCOLS:
        curve = [ee_table[(protocol, n)] for n in RIS_SWEEP]
        if not all(a > b for a, b in zip(curve, curve[1:])):
            monotone_bad.append(protocol)
    order_bad = []
    for n in (1, 2):
        if not ee_table[("centralized", n)] > ee_table[("distributed", n)]:
            order_bad.append(("cent>dist", n))
    for n in (4, 8, 16):
        if not ee_table[("distributed", n)] > ee_table[("centralized", n)]:
            order_bad.append(("dist>cent", n))
    ok = not monotone_bad and not order_bad
    curves = {p: [round(ee_table[(p, n)] / 1e6, 2) for n in RIS_SWEEP]
              for p in PROTOCOLS}
    _report("5 ee-trends", ok,
            f"non-monotone={monotone_bad or 'none'}, "
            f"ordering-violations={order_bad or 'none'}, Mb/J curves={curves}")
    assert not monotone_bad
    assert not order_bad


def test_criterion_6_phase_oracle():
    """Over 1000 random small instances the exhaustive search never loses to
    the quantized alignment, and the continuous alignment attains the
    triangle bound to 1e-9 relative."""
    rng = np.random.default_rng(2024)
    brute_losses = 0
    worst_rel = 0.0
    for _ in range(1000):
        bits = int(rng.integers(1, 3))
        n = int(rng.integers(1, 9))
        h_t = rng.normal(size=n) + 1j * rng.normal(size=n)
        h_r = rng.normal(size=n) + 1j * rng.normal(size=n)
        h_d = complex(rng.normal(), rng.normal())
        r = ChannelRealization(h_direct=h_d, h_tx_ris=h_t, h_ris_rx=h_r)
        aligned = align_phases(r)
        oracle = config_gain(r, brute_force_best(r, bits=bits))
        snapped = config_gain(r, quantize(aligned, bits))
        if oracle < snapped - 1e-12:
            brute_losses += 1
        bound = abs(h_d) + float(np.sum(np.abs(h_r * h_t)))
        worst_rel = max(worst_rel,
                        abs(config_gain(r, aligned) - bound) / bound)
    ok = brute_losses == 0 and worst_rel <= 1e-9
    _report("6 phase-oracle", ok,
            f"oracle-losses={brute_losses}/1000, "
            f"worst alignment error={worst_rel:.2e} (<=1e-9)")
    assert brute_losses == 0
    assert worst_rel <= 1e-9


def test_criterion_7_protocol_trace_invariants():
    """100 seeded distributed runs at K=50: no overlapping data slots on a
    sub-channel and every data slot preceded by its request -> feedback
    handshake with exact SIFS gaps."""
    exclusivity = 0
    handshake = 0
    checked = 0
    for seed in range(1, 101):
        cfg = ScenarioConfig(K=50, protocol="distributed", seed=seed,
                             horizon_s=0.04).validate()
        params = DcfParams.from_config(cfg)
        _, trace = run_scenario(cfg, keep_trace=True)
        txs = [r for r in trace if r["kind"] == "tx"]
        spans = {}
        for r in txs:
            if r["bits"]:
                spans.setdefault(r["subch"], []).append((r["t"],
                                                         r["t"] + r["dur"]))
        for intervals in spans.values():
            intervals.sort()
            for (s0, e0), (s1, _e1) in zip(intervals, intervals[1:]):
                if s1 < e0 - 1e-12:
                    exclusivity += 1
        for d in (r for r in txs if r["bits"]):
            checked += 1
            fb = [r for r in txs if r["actor"] == f"ris:{d['subch']}" and
                  abs(r["t"] + r["dur"] + params.sifs - d["t"]) < 1e-12]
            req = [r for r in txs if r["actor"] == f"user:{d['user']}" and
                   not r["bits"] and fb and
                   abs(r["t"] + r["dur"] + params.sifs - fb[0]["t"]) < 1e-12]
            if len(fb) != 1 or len(req) != 1:
                handshake += 1
    ok = exclusivity == 0 and handshake == 0
    _report("7 trace-invariants", ok,
            f"exclusivity-violations={exclusivity}, "
            f"handshake-violations={handshake} over {checked} data slots "
            f"in 100 runs")
    assert exclusivity == 0
    assert handshake == 0


def test_criterion_8_determinism():
    """Rerunning any (config, seed) yields byte-identical CSV output."""
    reps = [ScenarioConfig(K=20, protocol="centralized", seed=11,
                           horizon_s=0.1),
            ScenarioConfig(K=15, protocol="distributed", seed=12,
                           horizon_s=0.1),
            ScenarioConfig(K=25, protocol="hybrid1", seed=13, horizon_s=0.1)]
    mismatches = []
    for cfg in reps:
        rows = []
        for _ in range(2):
            m, _ = run_scenario(cfg)
            rows.append(write_rows([metrics_row(cfg, m)]))
        if rows[0].encode() != rows[1].encode():
            mismatches.append(cfg.protocol)
    _report("8 determinism", not mismatches,
            f"byte-level mismatches={mismatches or 'none'} on 3 configs")
    assert mismatches == []


def test_criterion_9_bandit_convergence():
    """Two-action stationary bandit with a 0.5 mean-reward gap: the epsilon
    greedy agent (0.1 decaying to 0.01) picks the better arm >= 95% of the
    last 1000 of 10000 steps, on all 20 seeds."""
    failures = []
    for seed in range(1, 21):
        streams = RngStreams(seed)
        env_rng = streams.stream("scheduler")
        agent_rng = streams.stream("rl")
        q = QTable(actions=["A", "B"], learning_rate=0.02, discount=0.0,
                   epsilon=0.1, epsilon_min=0.01, epsilon_decay=0.999)
        picks_a = 0
        for step in range(10_000):
            action = q.select_action("s", agent_rng)
            q.step_epsilon()
            # arm A: mean reward +0.5; arm B: mean reward 0.0
            if action == "A":
                reward = 1.0 if env_rng.random() < 0.75 else -1.0
            else:
                reward = 1.0 if env_rng.random() < 0.5 else -1.0
            q.update("s", action, reward, "s")
            if step >= 9_000 and action == "A":
                picks_a += 1
        if picks_a < 950:
            failures.append((seed, picks_a))
    _report("9 rl-sanity", not failures,
            f"seeds-below-95%={failures or 'none'} (20 seeds)")
    assert failures == []
