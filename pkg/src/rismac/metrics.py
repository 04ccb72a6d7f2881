"""Throughput, energy, efficiency, fairness and latency accounting.

Every airtime, compute and sensing interval flows through one Recorder so a
run's metrics can be recomputed exactly from its persisted trace (same values
accumulated in the same order).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Energy ledger classes.
E_TX_USER = "tx_user"
E_TX_RIS = "tx_ris"          # controller feedback, backscatter-grade
E_COMPUTE_BS = "compute_bs"
E_COMPUTE_USER = "compute_user"
E_SENSE_USER = "sense_user"  # idle listening, distributed contention only


@dataclass
class RunMetrics:
    bits_total: float = 0.0
    bits_per_user: dict = field(default_factory=dict)
    energy_j: float = 0.0
    energy_by_class: dict = field(default_factory=dict)
    energy_by_period: dict = field(default_factory=dict)
    collisions: int = 0
    frames_completed: int = 0
    elapsed_s: float = 0.0
    delay_per_user: dict = field(default_factory=dict)  # user -> [seconds]

    def mean_delay_s(self) -> float:
        samples = [d for lst in self.delay_per_user.values() for d in lst]
        return float(np.mean(samples)) if samples else 0.0

    def user_bits_vector(self, num_users: int) -> np.ndarray:
        out = np.zeros(num_users)
        for user, bits in self.bits_per_user.items():
            out[user] = bits
        return out


def throughput_bps(m: RunMetrics) -> float:
    """Delivered bits over elapsed simulated time; 0 when nothing elapsed."""
    if m.elapsed_s <= 0.0:
        return 0.0
    return m.bits_total / m.elapsed_s


def energy_efficiency(m: RunMetrics) -> float:
    """Delivered bits per joule; 0 when both are zero."""
    if m.energy_j == 0.0:
        return 0.0
    return m.bits_total / m.energy_j


def jain_index(values) -> float:
    """(sum x)^2 / (n * sum x^2); 1.0 when all equal (including all-zero)."""
    x = np.asarray(list(values), dtype=float)
    if len(x) == 0 or not np.any(x):
        return 1.0
    return float(x.sum() ** 2 / (len(x) * (x ** 2).sum()))


class Recorder:
    """Accumulates RunMetrics and, optionally, a replayable event trace."""

    def __init__(self, keep_trace: bool = False):
        self.metrics = RunMetrics()
        self.trace = [] if keep_trace else None

    def _note(self, record: dict) -> None:
        if self.trace is not None:
            self.trace.append(record)

    def _add_energy(self, eclass: str, period: str, joules: float) -> None:
        m = self.metrics
        m.energy_j += joules
        m.energy_by_class[eclass] = m.energy_by_class.get(eclass, 0.0) + joules
        m.energy_by_period[period] = m.energy_by_period.get(period, 0.0) + joules

    def tx(self, t: float, dur: float, actor: str, power_w: float, period: str,
           bits: float = 0.0, user=None, rate=None, subch=None) -> None:
        """A transmission: user pilots/requests/data or controller feedback."""
        joules = power_w * dur
        eclass = E_TX_RIS if actor.startswith("ris") else E_TX_USER
        self._add_energy(eclass, period, joules)
        if bits:
            m = self.metrics
            m.bits_total += bits
            m.bits_per_user[user] = m.bits_per_user.get(user, 0.0) + bits
        self._note({"t": t, "dur": dur, "kind": "tx", "actor": actor,
                    "period": period, "bits": bits, "user": user, "rate": rate,
                    "subch": subch, "energy": joules, "eclass": eclass})

    def compute(self, t: float, dur: float, actor: str, power_w: float,
                period: str) -> None:
        joules = power_w * dur
        eclass = E_COMPUTE_BS if actor == "bs" else E_COMPUTE_USER
        self._add_energy(eclass, period, joules)
        self._note({"t": t, "dur": dur, "kind": "compute", "actor": actor,
                    "period": period, "energy": joules, "eclass": eclass})

    def sense(self, t: float, dur: float, actor: str, power_w: float,
              period: str) -> None:
        joules = power_w * dur
        self._add_energy(E_SENSE_USER, period, joules)
        self._note({"t": t, "dur": dur, "kind": "sense", "actor": actor,
                    "period": period, "energy": joules, "eclass": E_SENSE_USER})

    def collision(self, t: float, subch, users, period: str) -> None:
        self.metrics.collisions += 1
        self._note({"t": t, "kind": "collision", "subch": subch,
                    "users": list(users), "period": period})

    def delay(self, user, seconds: float) -> None:
        self.metrics.delay_per_user.setdefault(user, []).append(seconds)
        self._note({"kind": "delay", "user": user, "seconds": seconds})

    def frame_done(self) -> None:
        self.metrics.frames_completed += 1
        self._note({"kind": "frame_done"})

    def finalize(self, elapsed_s: float) -> RunMetrics:
        self.metrics.elapsed_s = elapsed_s
        return self.metrics


def recompute_from_trace(records, elapsed_s: float) -> RunMetrics:
    """Rebuild RunMetrics from a persisted trace, in trace order.

    Replaying performs the same additions in the same order as the live
    recorder, so the result matches bit for bit.
    """
    m = RunMetrics()
    for r in records:
        kind = r["kind"]
        if kind in ("tx", "compute", "sense"):
            joules = r["energy"]
            m.energy_j += joules
            m.energy_by_class[r["eclass"]] = (
                m.energy_by_class.get(r["eclass"], 0.0) + joules)
            m.energy_by_period[r["period"]] = (
                m.energy_by_period.get(r["period"], 0.0) + joules)
            if kind == "tx" and r["bits"]:
                m.bits_total += r["bits"]
                m.bits_per_user[r["user"]] = (
                    m.bits_per_user.get(r["user"], 0.0) + r["bits"])
        elif kind == "collision":
            m.collisions += 1
        elif kind == "frame_done":
            m.frames_completed += 1
        elif kind == "delay":
            m.delay_per_user.setdefault(r["user"], []).append(r["seconds"])
    m.elapsed_s = elapsed_s
    return m
