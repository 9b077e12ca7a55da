import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collab_bandit.batched import (
    GLOBAL_CAP,
    PER_ARM_GRID,
    BatchConfig,
    EmptyInstance,
    analytic_regret_bound,
    analytic_round_bound,
    batch_grid,
    ceil_log,
    estimates_concentrated,
    elimination_within_r_of_a,
    r_of_arm,
    run_batched_mab,
)
from collab_bandit.core import Instance, RngStream


def _int_grid(lam: int, T: int) -> list[int]:
    """Grid for an integer factor by exact integer powers."""
    out, p = [], 1
    while True:
        p *= lam
        out.append(min(p, T))
        if p >= T:
            return out


@pytest.mark.parametrize(
    "lam,T,expect", [(2, 16, [2, 4, 8, 16]), (2, 10, [2, 4, 8, 10]), (3, 27, [3, 9, 27]), (2, 1, [1])]
)
def test_grid_examples(lam, T, expect):
    assert batch_grid(BatchConfig(lam, T)) == expect


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 12), st.integers(2, 10**7))
def test_grid_matches_integer_oracle(lam, T):
    assert batch_grid(BatchConfig(lam, T)) == _int_grid(lam, T)


@settings(max_examples=300, deadline=None)
@given(st.floats(2.0, 50.0), st.integers(1, 10**7))
def test_grid_monotone(lam, T):
    cfg = BatchConfig(lam, T)
    grid = batch_grid(cfg)
    assert all(b > a for a, b in zip(grid, grid[1:]))
    assert grid[-1] == T or len(grid) == cfg.max_batches
    assert grid[-1] <= T
    prev = 1
    for t in grid:
        assert t <= lam * prev + 1
        prev = t


def test_ceil_log():
    assert ceil_log(2, 1024) == 10
    assert ceil_log(2, 1025) == 11
    assert ceil_log(10, 1000) == 3
    assert ceil_log(2, 1) == 0


def test_config_validation():
    with pytest.raises(ValueError):
        BatchConfig(1.5, 100)
    with pytest.raises(ValueError):
        BatchConfig(2, 0)
    with pytest.raises(ValueError):
        BatchConfig(2, 10, "other")


def test_single_arm():
    run = run_batched_mab(Instance.bernoulli([0.4]), BatchConfig(2, 1000), RngStream(0))
    assert run.rounds_used == 1
    assert run.pulls_per_arm.tolist() == [1000]
    assert run.total_regret == 0.0


def test_empty_instance():
    with pytest.raises(EmptyInstance):
        run_batched_mab(Instance(()), BatchConfig(2, 10), RngStream(0))


def test_r_of_a_example(i1_plus):
    cfg = BatchConfig(2, 10**5)
    need = 64 * math.log(2e15) / 0.25
    assert 9000 < need < 9050
    assert r_of_arm(0.5, cfg, 2) == 14
    assert batch_grid(cfg)[13] == 16384
    assert batch_grid(cfg)[-2:] == [65536, 100000]


def test_analytic_round_bound_examples(i1_plus):
    assert analytic_round_bound(i1_plus, BatchConfig(2, 10**5)) == 15
    T = 2**20
    x = 64 * (3 * 20 * math.log(2) + math.log(2)) / 0.25
    assert analytic_round_bound(i1_plus, BatchConfig(2, T)) == min(math.ceil(math.log2(x)) + 1, 20)
    det = Instance.bernoulli([1.0, 0.0])
    x = 64 * math.log(2e18)
    assert analytic_round_bound(det, BatchConfig(2, 10**6)) == min(math.ceil(math.log2(x)) + 1, 20)
    assert analytic_round_bound(Instance.bernoulli([0.5, 0.5, 0.5]), BatchConfig(2, 1024)) == 10


def test_analytic_regret_bound_examples(i1_plus):
    assert analytic_regret_bound(i1_plus, BatchConfig(2, 10**5)) == pytest.approx(800 * math.log(2e5))
    assert analytic_regret_bound(i1_plus, BatchConfig(2, 10**5)) == pytest.approx(9764.858, abs=1e-3)
    assert analytic_regret_bound(Instance.bernoulli([0.3]), BatchConfig(2, 100)) == 0.0
    three = Instance.bernoulli([0.9, 0.4, 0.65])
    expect = 400 * math.log(3e4) * (1 / 0.5 + 1 / 0.25)
    assert analytic_regret_bound(three, BatchConfig(2, 10**4)) == pytest.approx(expect)
    assert math.isinf(analytic_regret_bound(Instance.bernoulli([0.5, 0.5]), BatchConfig(2, 100)))


def test_equal_means_per_arm_grid():
    inst = Instance.bernoulli([0.5, 0.5, 0.5])
    run = run_batched_mab(inst, BatchConfig(2, 1024, PER_ARM_GRID), RngStream(3))
    assert run.rounds_used == 10
    assert run.pulls_per_arm.tolist() == [1024, 1024, 1024]


def test_equal_means_global_cap():
    # the total budget of 1024 runs out inside the ninth batch
    run = run_batched_mab(Instance.bernoulli([0.5, 0.5, 0.5]), BatchConfig(2, 1024, GLOBAL_CAP), RngStream(3))
    assert run.rounds_used == 9
    assert run.truncated
    assert run.pulls_per_arm.tolist() == [342, 341, 341]


def test_budget_exhausted_exactly_stops():
    # grid 2,4,8,16,24 on 3 arms: three batches use the whole budget of 24
    run = run_batched_mab(Instance.bernoulli([0.5, 0.5, 0.5]), BatchConfig(2, 24), RngStream(1))
    assert run.rounds_used == 3
    assert run.pulls_per_arm.tolist() == [8, 8, 8]
    assert not run.truncated


@pytest.mark.parametrize("lam,elim_round", [(2, 7), (128, 1)])
def test_deterministic_arms(lam, elim_round):
    # deficit 1 beats the threshold 2 sqrt(ln(T^3 N) / n) once n > 4 ln(T^3 N) ~ 113.3
    inst = Instance.bernoulli([1.0, 0.0])
    run = run_batched_mab(inst, BatchConfig(lam, 10**4), RngStream(0))
    assert run.elimination_round.tolist() == [0, elim_round]
    assert run.pulls_per_arm[1] == 128
    assert run.total_regret == 128.0
    assert run.pulls_per_arm.sum() == 10**4
    cert = run.certificates[0]
    assert cert.deficit >= cert.threshold


def test_recorded_transcript_matches_counts(i1_plus):
    cfg = BatchConfig(2, 5000)
    a = run_batched_mab(i1_plus, cfg, RngStream(4, (1,)), record_transcript=True)
    b = run_batched_mab(i1_plus, cfg, RngStream(4, (1,)))
    assert np.array_equal(a.pulls_per_arm, b.pulls_per_arm)
    assert np.array_equal(a.transcript.pull_counts(2), a.pulls_per_arm)
    assert np.array_equal(a.est_means, b.est_means, equal_nan=True)
    assert a.transcript.rounds_nondecreasing()


def test_concentration_implies_elimination_and_round_bounds(i1_plus):
    cfg = BatchConfig(2, 10**4)
    for seed in range(200):
        run = run_batched_mab(i1_plus, cfg, RngStream(seed, (0,)))
        if estimates_concentrated(run, i1_plus, cfg):
            assert elimination_within_r_of_a(run, i1_plus, cfg)
            assert run.rounds_used <= analytic_round_bound(i1_plus, cfg)
        assert run.rounds_used <= cfg.max_batches


means = st.lists(st.sampled_from([0.0, 0.1, 0.3, 0.5, 0.55, 0.8, 1.0]), min_size=1, max_size=5)


@settings(max_examples=120, deadline=None)
@given(means, st.floats(2.0, 16.0), st.integers(1, 4000), st.sampled_from([GLOBAL_CAP, PER_ARM_GRID]), st.integers(0, 99))
def test_run_invariants(mu, lam, T, mode, seed):
    inst = Instance.bernoulli(mu)
    cfg = BatchConfig(lam, T, mode)
    run = run_batched_mab(inst, cfg, RngStream(seed))
    for a, b in zip(run.active_sets, run.active_sets[1:]):
        assert b <= a
    assert run.rounds_used <= cfg.max_batches + 1
    if mode == GLOBAL_CAP:
        assert run.pulls_per_arm.sum() <= T
        assert run.rounds_used <= cfg.max_batches
    for c in run.certificates:
        assert c.deficit >= c.threshold
        assert run.elimination_round[c.arm] == c.round
    assert run.total_regret >= 0
    assert run.batch_pulls.sum(axis=0).tolist() == run.pulls_per_arm.tolist()
