import numpy as np
import pytest

from rismac.learning import (MODE_AI_CENTRAL, MODE_AI_DISTRIBUTED,
                             MODE_NONE_ITERATIVE, ComputeCostModel, QTable,
                             compute_time, rate_bucket, reward)


def test_central_time_with_no_users_is_setup_only():
    model = ComputeCostModel(mode=MODE_AI_CENTRAL, t0=1e-3)
    assert compute_time(model, 0, 2, 8) == pytest.approx(1e-3)


def test_iterative_vs_central_formula_values():
    # beta=50us, t0=1ms, gamma=20us at K=100, 2 RISs, 8 groups:
    # iterative 50e-6*100*2*8 = 80 ms, central 1e-3 + 20e-6*100 = 3 ms
    iterative = ComputeCostModel(mode=MODE_NONE_ITERATIVE, beta=50e-6)
    central = ComputeCostModel(mode=MODE_AI_CENTRAL, t0=1e-3, gamma=20e-6)
    assert compute_time(iterative, 100, 2, 8) == pytest.approx(80e-3)
    assert compute_time(central, 100, 2, 8) == pytest.approx(3e-3)


def test_iterative_time_strictly_increasing_in_each_argument():
    model = ComputeCostModel(mode=MODE_NONE_ITERATIVE)
    base = compute_time(model, 10, 2, 8)
    assert compute_time(model, 11, 2, 8) > base
    assert compute_time(model, 10, 3, 8) > base
    assert compute_time(model, 10, 2, 9) > base


def test_distributed_time_scales_with_ris_options():
    model = ComputeCostModel(mode=MODE_AI_DISTRIBUTED, t_local=1e-4)
    assert compute_time(model, 1, 1, 8) == pytest.approx(1e-4)
    assert compute_time(model, 1, 4, 8) == pytest.approx(4e-4)


def test_shipped_defaults_keep_ai_faster_everywhere():
    # exhaustive over the whole sweep grid
    groups = 8
    for k in range(1, 101):
        for n_ris in range(1, 17):
            ai = compute_time(ComputeCostModel(mode=MODE_AI_CENTRAL), k, n_ris, groups)
            it = compute_time(ComputeCostModel(mode=MODE_NONE_ITERATIVE), k, n_ris, groups)
            assert ai < it, (k, n_ris)


def test_select_action_greedy_argmax():
    q = QTable(actions=["a", "b"], epsilon=0.0)
    q.values[("s", "a")] = 1.0
    q.values[("s", "b")] = 2.0
    assert q.select_action("s", np.random.default_rng(0)) == "b"


def test_select_action_tie_prefers_lowest_action_id():
    q = QTable(actions=[0, 1, 2], epsilon=0.0)
    q.values[("s", 1)] = 0.5
    q.values[("s", 2)] = 0.5
    q.values[("s", 0)] = 0.5
    assert q.select_action("s", np.random.default_rng(0)) == 0


def test_select_action_uniform_when_fully_exploring():
    q = QTable(actions=[0, 1, 2, 3], epsilon=1.0)
    rng = np.random.default_rng(123)
    counts = np.zeros(4)
    for _ in range(100_000):
        counts[q.select_action("s", rng)] += 1
    freqs = counts / counts.sum()
    assert np.all(np.abs(freqs - 0.25) < 0.01)


def test_update_full_learning_rate_writes_reward():
    q = QTable(actions=["a"], learning_rate=1.0, discount=0.0)
    q.update("s", "a", 2.5, "s2")
    assert q.value("s", "a") == 2.5


def test_update_zero_reward_zero_table_is_noop():
    q = QTable(actions=["a", "b"])
    q.update("s", "a", 0.0, "s2")
    assert q.value("s", "a") == 0.0


def test_update_arithmetic_case():
    # 1 + 0.5 * (1 + 0.9*2 - 1) = 1.9
    q = QTable(actions=["a"], learning_rate=0.5, discount=0.9)
    q.values[("s", "a")] = 1.0
    q.values[("s2", "a")] = 2.0
    q.update("s", "a", 1.0, "s2")
    assert q.value("s", "a") == pytest.approx(1.9)


def test_update_leaves_other_cells_bit_identical():
    rng = np.random.default_rng(7)
    q = QTable(actions=list(range(4)), learning_rate=0.3, discount=0.5)
    for s in range(5):
        for a in range(4):
            q.values[(s, a)] = float(rng.normal())
    before = dict(q.values)
    q.update(2, 1, 0.7, 3)
    for cell, value in before.items():
        if cell != (2, 1):
            assert q.values[cell] == value


def test_reward_signs():
    assert reward(1e6, 2e6, collided=False) == 1.0
    assert reward(2e6, 1e6, collided=False) == -1.0
    assert reward(1e6, 1e6, collided=False) == 0.0
    assert reward(0.0, 5e6, collided=True) == -1.0


def test_qtable_file_round_trip(tmp_path):
    q = QTable(actions=[(0, 0), (0, 1)])
    q.values[((1, (0, 0)), (0, 1))] = 0.75
    q.values[((2, (0, 1)), (0, 0))] = -0.25
    path = tmp_path / "qtable.csv"
    q.save(path)
    fresh = QTable(actions=[(0, 0), (0, 1)]).load(path)
    assert fresh.values == q.values


def test_rate_bucket_boundaries():
    assert rate_bucket(0.0) == 0
    assert rate_bucket(1e12) == 3
    buckets = [rate_bucket(r) for r in (1e5, 1e6, 1e7, 1e8, 1e9)]
    assert buckets == sorted(buckets)
    assert all(0 <= b <= 3 for b in buckets)
