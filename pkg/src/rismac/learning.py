"""Configuration-compute cost model, tabular Q-learning agent and reward rule.

The centralized scheduler's "deep learning" step is realized analytically
elsewhere; this module prices it.  ai_central bills a fixed inference setup
plus a per-user term, while the non-AI baseline pays an iterative search
growing with users, RISs and phase groups.  Distributed agents pay a small
per-attempt inference whose cost scales with the number of RIS/sub-channel
options the local policy has to evaluate.
"""

from __future__ import annotations

import ast
import csv
from dataclasses import dataclass, field
from typing import Hashable

import numpy as np

from .errors import ConfigError

MODE_NONE_ITERATIVE = "none_iterative"
MODE_AI_CENTRAL = "ai_central"
MODE_AI_DISTRIBUTED = "ai_distributed"

_MODES = (MODE_NONE_ITERATIVE, MODE_AI_CENTRAL, MODE_AI_DISTRIBUTED)


@dataclass
class ComputeCostModel:
    """Latency/energy constants for RIS configuration computation.

    Defaults are calibration values: they were chosen so that the shipped
    scenario defaults reproduce the AI-uplift, saturation and EE-crossover
    orderings at desk scale (see tests/test_acceptance.py).
    """

    mode: str = MODE_AI_CENTRAL
    beta: float = 1.0e-3      # s per (user x RIS x group), iterative search
    t0: float = 6.0e-3        # s fixed inference setup
    gamma: float = 2.0e-5     # s per user, central inference
    t_local: float = 1.25e-4  # s per distributed attempt per RIS option
    p_bs: float = 5.0         # W while the BS computes
    p_user: float = 0.5       # W while a user computes
    est_coeff: float = 1.2e-5  # s per (user x RIS x group) of BS estimation DSP

    def __post_init__(self) -> None:
        if self.mode not in _MODES:
            raise ConfigError(f"unknown compute mode {self.mode!r}")


def compute_time(model: ComputeCostModel, k_users: int, n_ris: int,
                 groups: int) -> float:
    """Seconds of configuration compute for the model's mode.

    none_iterative: beta * K * n_ris * groups   (per frame)
    ai_central:     t0 + gamma * K              (per frame)
    ai_distributed: t_local * n_ris             (per attempt)
    """
    if k_users < 0:
        raise ConfigError(f"negative user count {k_users}")
    if model.mode == MODE_NONE_ITERATIVE:
        return model.beta * k_users * n_ris * groups
    if model.mode == MODE_AI_CENTRAL:
        return model.t0 + model.gamma * k_users
    return model.t_local * n_ris


def estimation_time(model: ComputeCostModel, k_users: int, n_ris: int,
                    groups: int) -> float:
    """Cascaded-channel estimation DSP time at the BS.

    Runs pipelined with pilot reception, so it costs energy but adds no frame
    airtime.  Paid in both AI and non-AI centralized modes (estimation is not
    the part the AI replaces).
    """
    return model.est_coeff * k_users * n_ris * groups


def reward(prev_rate: float, new_rate: float, collided: bool) -> float:
    """+1 for a rate improvement, -1 for a loss or collision, 0 on a tie."""
    if collided:
        return -1.0
    if new_rate > prev_rate:
        return 1.0
    if new_rate < prev_rate:
        return -1.0
    return 0.0


def rate_bucket(rate: float, num_buckets: int = 4,
                floor: float = 1e5, ceil: float = 1e9) -> int:
    """Quantize a rate into logarithmic buckets for the RL state."""
    if rate <= floor:
        return 0
    if rate >= ceil:
        return num_buckets - 1
    span = np.log10(ceil) - np.log10(floor)
    idx = int((np.log10(rate) - np.log10(floor)) / span * num_buckets)
    return min(idx, num_buckets - 1)


@dataclass
class QTable:
    """Tabular Q-learning with epsilon-greedy selection.

    Values default to 0 for unseen (state, action) pairs.  Ties in the greedy
    arm break toward the lowest action id.
    """

    actions: list
    learning_rate: float = 0.5
    discount: float = 0.3
    epsilon: float = 0.1
    epsilon_min: float = 0.01
    epsilon_decay: float = 1.0
    values: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.actions:
            raise ConfigError("action set must be non-empty")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ConfigError(f"epsilon {self.epsilon} outside [0, 1]")
        if not (0.0 < self.learning_rate <= 1.0):
            raise ConfigError(f"learning rate {self.learning_rate} outside (0, 1]")
        if not (0.0 <= self.discount < 1.0):
            raise ConfigError(f"discount {self.discount} outside [0, 1)")

    def value(self, state: Hashable, action: Hashable) -> float:
        return self.values.get((state, action), 0.0)

    def select_action(self, state: Hashable, rng: np.random.Generator):
        """Greedy with probability 1-epsilon, else uniform over all actions."""
        if self.epsilon > 0.0 and rng.random() < self.epsilon:
            return self.actions[int(rng.integers(len(self.actions)))]
        best = self.actions[0]
        best_q = self.value(state, best)
        for action in self.actions[1:]:
            q = self.value(state, action)
            if q > best_q:
                best, best_q = action, q
        return best

    def update(self, state, action, rew: float, next_state) -> "QTable":
        """Q(s,a) += lr * (r + discount * max_a' Q(s',a') - Q(s,a))."""
        best_next = max(self.value(next_state, a) for a in self.actions)
        q = self.value(state, action)
        self.values[(state, action)] = q + self.learning_rate * (
            rew + self.discount * best_next - q)
        return self

    def step_epsilon(self) -> None:
        self.epsilon = max(self.epsilon_min, self.epsilon * self.epsilon_decay)

    def save(self, path) -> None:
        """Dump as a plain tabular file (state, action, value) for warm starts."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["state", "action", "value"])
            for (state, action), value in sorted(self.values.items(), key=repr):
                writer.writerow([repr(state), repr(action), repr(value)])

    def load(self, path) -> "QTable":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["state", "action", "value"]:
                raise ConfigError(f"unexpected Q-table header {header}")
            for state_s, action_s, value_s in reader:
                state = ast.literal_eval(state_s)
                action = ast.literal_eval(action_s)
                self.values[(state, action)] = float(value_s)
        return self


def update_q(q: QTable, state, action, rew: float, next_state) -> QTable:
    return q.update(state, action, rew, next_state)


def select_action(q: QTable, state, rng: np.random.Generator):
    return q.select_action(state, rng)
