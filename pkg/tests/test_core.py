import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collab_bandit.core import (
    Arm,
    Instance,
    InvalidTranscript,
    RngStream,
    Transcript,
    arm_streams,
    expected_regret,
    hoeffding_halfwidth,
    regret_of_counts,
    regret_of_transcript,
    sample_reward,
)


def test_arm_validation():
    with pytest.raises(ValueError):
        Arm.discrete([(0.0, 0.5), (1.0, 0.6)])
    with pytest.raises(ValueError):
        Arm.discrete([(1.5, 1.0)])
    with pytest.raises(ValueError):
        Arm.bernoulli(1.2)
    arm = Arm.discrete([(0.5, 0.5), (0.0, 0.5)])
    assert arm.support == ((0.0, 0.5), (0.5, 0.5))
    assert arm.mean == pytest.approx(0.25)
    assert Arm.bernoulli(0.3).prob_of(1.0) == 0.3
    assert Arm.bernoulli(0.3).prob_of(0.5) == 0.0


def test_instance_star_gaps():
    inst = Instance.bernoulli([0.4, 0.7, 0.7, 0.1])
    assert inst.star_index == 1
    assert inst.gaps[1] == 0.0
    assert np.all(inst.gaps >= 0)
    assert inst.min_gap == pytest.approx(0.0)
    assert not inst.has_gap
    assert Instance.bernoulli([0.3]).min_gap is None
    assert Instance.bernoulli([0.75, 0.25]).min_gap == 0.5


@pytest.mark.parametrize("mean", [0.0, 1.0])
def test_degenerate_arms(mean):
    stream = RngStream(5, (0, 1, 2))
    for _ in range(20):
        assert sample_reward(Arm.bernoulli(mean), stream) == mean


def test_bernoulli_frequency():
    # Hoeffding at confidence 1 - 1e-4 over 10^6 draws gives ~0.0022; 0.002 has ample room at this seed
    counts = RngStream(2024, (0,)).draw_counts(Arm.bernoulli(0.75), 10**6)
    assert abs(counts[1] / 10**6 - 0.75) < 0.002


def test_streams_replay_and_differ():
    arm = Arm.discrete([(0.0, 0.2), (0.5, 0.3), (1.0, 0.5)])
    a = RngStream(9, (3, 1, 0)).draw_rewards(arm, 500)
    b = RngStream(9, (3, 1, 0)).draw_rewards(arm, 500)
    c = RngStream(9, (3, 1, 1)).draw_rewards(arm, 500)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert RngStream(9, (3,)).child(1, 0).stream_path == (3, 1, 0)
    assert [s.stream_path for s in arm_streams(RngStream(1, (4,)), 3)] == [(4, 0), (4, 1), (4, 2)]


def test_counts_match_indices():
    arm = Arm.discrete([(0.0, 0.2), (0.5, 0.3), (1.0, 0.5)])
    idx = RngStream(3, (1,)).draw_indices(arm, 1000)
    counts = RngStream(3, (1,)).draw_counts(arm, 1000)
    assert np.array_equal(np.bincount(idx, minlength=3), counts)


def test_transcript_validation_and_immutability():
    arms = np.array([0, 1, 1])
    t = Transcript(arms, [1.0, 0.0, 1.0])
    arms[0] = 5
    assert t.arms[0] == 0
    with pytest.raises(ValueError):
        t.arms[0] = 1
    with pytest.raises(InvalidTranscript):
        Transcript([0, 1], [0.5])
    with pytest.raises(InvalidTranscript):
        Transcript([0], [1.5])
    with pytest.raises(InvalidTranscript):
        t.pull_counts(1)
    assert Transcript([0, 0], [1, 1], [0, 0], [2, 1]).rounds_nondecreasing() is False
    assert Transcript([0, 0], [1, 1], [0, 1], [2, 1]).rounds_nondecreasing() is True


def test_regret_examples(i1_plus):
    assert regret_of_transcript(i1_plus, Transcript.from_pairs([(0, 1.0)] * 5)) == 0.0
    assert regret_of_transcript(i1_plus, Transcript.from_pairs([(1, 0.0), (1, 1.0)])) == 1.0
    i2_plus = Instance.bernoulli([0.5625, 0.4375])
    assert regret_of_transcript(i2_plus, Transcript.from_pairs([(1, 1.0)])) == 0.125
    with pytest.raises(InvalidTranscript):
        regret_of_transcript(i1_plus, Transcript.from_pairs([(2, 1.0)]))


def test_expected_regret_examples(i1_plus):
    t = Transcript.from_pairs([(1, 0.0), (1, 1.0)])
    est = expected_regret(i1_plus, [t, t])
    assert est.mean == 1.0
    assert expected_regret(i1_plus, [Transcript.empty()]).mean == 0.0
    with pytest.raises(ValueError):
        expected_regret(i1_plus, [])


def test_expected_regret_uniform_play(i1_plus):
    rng = np.random.default_rng(17)
    runs = [Transcript(rng.integers(0, 2, 100), np.zeros(100)) for _ in range(1000)]
    est = expected_regret(i1_plus, runs)
    # each step picks the bad arm with probability 1/2 at cost 0.5
    assert abs(est.mean - 25.0) <= est.halfwidth
    assert est.halfwidth == pytest.approx(hoeffding_halfwidth(50.0, 1000, 0.99))


def test_hoeffding_halfwidth_formula():
    assert hoeffding_halfwidth(1.0, 200, 0.95) == pytest.approx(math.sqrt(math.log(40) / 400))


transcripts = st.lists(st.tuples(st.integers(0, 3), st.sampled_from([0.0, 1.0])), max_size=60)


@settings(max_examples=200, deadline=None)
@given(transcripts, transcripts, st.randoms(use_true_random=False))
def test_regret_nonnegative_additive_permutation_invariant(p1, p2, rnd):
    inst = Instance.bernoulli([0.2, 0.9, 0.5, 0.9])
    t1, t2 = Transcript.from_pairs(p1), Transcript.from_pairs(p2)
    r1, r2 = regret_of_transcript(inst, t1), regret_of_transcript(inst, t2)
    assert r1 >= 0
    assert regret_of_transcript(inst, Transcript.concat([t1, t2])) == pytest.approx(r1 + r2, abs=1e-12)
    shuffled = list(p1)
    rnd.shuffle(shuffled)
    assert regret_of_transcript(inst, Transcript.from_pairs(shuffled)) == r1
    assert regret_of_counts(inst, t1.pull_counts(4)) == r1
