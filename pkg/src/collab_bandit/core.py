"""Arms, instances, keyed random streams, transcripts and regret accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels

PROB_TOL = 1e-12

# agent id used for per-arm streams shared between a batched run and its
# collaborative reduction; independent agents use ids 1..K
SHARED_AGENT = 0


class InvalidTranscript(ValueError):
    pass


@dataclass(frozen=True)
class Arm:
    """A reward distribution on a finite subset of [0, 1].

    ``support`` holds sorted ``(value, probability)`` pairs. Bernoulli arms
    use the support ``((0.0, 1 - mean), (1.0, mean))``.
    """

    kind: str
    mean: float
    support: tuple[tuple[float, float], ...]
    cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("bernoulli", "discrete"):
            raise ValueError(f"unknown arm kind {self.kind!r}")
        values = [v for v, _ in self.support]
        probs = [p for _, p in self.support]
        if not values:
            raise ValueError("arm support is empty")
        if any(v < 0.0 or v > 1.0 for v in values):
            raise ValueError("support values must lie in [0, 1]")
        if any(p < 0.0 for p in probs):
            raise ValueError("negative probability in support")
        if abs(math.fsum(probs) - 1.0) > PROB_TOL:
            raise ValueError("support probabilities must sum to 1")
        if sorted(values) != values or len(set(values)) != len(values):
            raise ValueError("support values must be strictly increasing")
        mean = math.fsum(v * p for v, p in self.support)
        if abs(mean - self.mean) > PROB_TOL:
            raise ValueError(f"mean {self.mean} inconsistent with support (got {mean})")
        cdf = np.cumsum(np.asarray(probs, dtype=np.float64))
        cdf[-1] = 1.0
        object.__setattr__(self, "cdf", cdf)

    @classmethod
    def bernoulli(cls, mean: float) -> "Arm":
        if not 0.0 <= mean <= 1.0:
            raise ValueError("Bernoulli mean must lie in [0, 1]")
        return cls("bernoulli", float(mean), ((0.0, 1.0 - mean), (1.0, float(mean))))

    @classmethod
    def discrete(cls, support: Iterable[tuple[float, float]]) -> "Arm":
        pairs = tuple(sorted((float(v), float(p)) for v, p in support))
        mean = math.fsum(v * p for v, p in pairs)
        return cls("discrete", mean, pairs)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.support], dtype=np.float64)

    def prob_of(self, reward: float) -> float:
        """Probability mass at ``reward`` (0.0 off the support)."""
        for v, p in self.support:
            if abs(v - reward) <= PROB_TOL:
                return p
        return 0.0


@dataclass(frozen=True)
class Instance:
    arms: tuple[Arm, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))

    @classmethod
    def bernoulli(cls, means: Sequence[float], label: str = "") -> "Instance":
        return cls(tuple(Arm.bernoulli(m) for m in means), label)

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def means(self) -> np.ndarray:
        return np.array([a.mean for a in self.arms], dtype=np.float64)

    @property
    def star_index(self) -> int:
        # argmax returns the lowest maximizing index
        return int(np.argmax(self.means))

    @property
    def best_mean(self) -> float:
        return float(self.means.max())

    @property
    def gaps(self) -> np.ndarray:
        return self.best_mean - self.means

    @property
    def min_gap(self) -> float | None:
        """Smallest gap over non-star arms; ``None`` for a single arm."""
        if self.n_arms < 2:
            return None
        g = np.delete(self.gaps, self.star_index)
        return float(g.min())

    @property
    def has_gap(self) -> bool:
        g = self.min_gap
        return g is not None and g > 0.0


class RngStream:
    """Reward randomness keyed by ``(master_seed, *stream_path)``.

    Streams with equal keys replay identical draws. The path is usually
    ``(trial, agent, arm)``. Not thread-safe: one owner at a time.
    """

    def __init__(self, master_seed: int, stream_path: Sequence[int] = ()):
        self.master_seed = int(master_seed)
        self.stream_path = tuple(int(p) for p in stream_path)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.stream_path)
        self.bit_generator = np.random.PCG64(seq)

    def child(self, *path: int) -> "RngStream":
        return RngStream(self.master_seed, self.stream_path + tuple(path))

    def draw_counts(self, arm: Arm, n: int) -> np.ndarray:
        """Counts of each support value over ``n`` fresh draws."""
        return kernels.draw_counts(self.bit_generator, int(n), arm.cdf)

    def draw_indices(self, arm: Arm, n: int) -> np.ndarray:
        return kernels.draw_indices(self.bit_generator, int(n), arm.cdf)

    def draw_rewards(self, arm: Arm, n: int) -> np.ndarray:
        return arm.values[self.draw_indices(arm, n)]

    def uniforms(self, n: int) -> np.ndarray:
        return np.random.Generator(self.bit_generator).random(n)


def arm_streams(stream: RngStream, n_arms: int) -> list[RngStream]:
    """One child stream per arm, keyed ``stream.stream_path + (arm,)``."""
    return [stream.child(a) for a in range(n_arms)]


def sample_reward(arm: Arm, stream: RngStream) -> float:
    return float(stream.draw_rewards(arm, 1)[0])


@dataclass(frozen=True)
class Transcript:
    """Ordered (arm, reward, agent, round) entries; arms are 0-based."""

    arms: np.ndarray
    rewards: np.ndarray
    agents: np.ndarray | None = None
    rounds: np.ndarray | None = None

    def __post_init__(self):
        arms = np.array(self.arms, dtype=np.intp)
        n = len(arms)
        rewards = np.array(self.rewards, dtype=np.float64)
        agents = np.zeros(n, dtype=np.intp) if self.agents is None else np.array(self.agents, dtype=np.intp)
        rounds = np.zeros(n, dtype=np.intp) if self.rounds is None else np.array(self.rounds, dtype=np.intp)
        if not (len(rewards) == len(agents) == len(rounds) == n):
            raise InvalidTranscript("transcript columns have different lengths")
        if n and (arms.min() < 0 or rewards.min() < 0.0 or rewards.max() > 1.0):
            raise InvalidTranscript("negative arm index or reward outside [0, 1]")
        for name, val in (("arms", arms), ("rewards", rewards), ("agents", agents), ("rounds", rounds)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]], agent: int = 0, round_id: int = 0) -> "Transcript":
        pairs = list(pairs)
        n = len(pairs)
        return cls(
            np.array([p[0] for p in pairs], dtype=np.intp),
            np.array([p[1] for p in pairs], dtype=np.float64),
            np.full(n, agent, dtype=np.intp),
            np.full(n, round_id, dtype=np.intp),
        )

    @classmethod
    def empty(cls) -> "Transcript":
        return cls.from_pairs([])

    @classmethod
    def concat(cls, parts: Sequence["Transcript"]) -> "Transcript":
        if not parts:
            return cls.empty()
        return cls(
            np.concatenate([p.arms for p in parts]),
            np.concatenate([p.rewards for p in parts]),
            np.concatenate([p.agents for p in parts]),
            np.concatenate([p.rounds for p in parts]),
        )

    def __len__(self) -> int:
        return len(self.arms)

    def __getitem__(self, idx) -> "Transcript":
        return Transcript(self.arms[idx], self.rewards[idx], self.agents[idx], self.rounds[idx])

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.arms.tolist(), self.rewards.tolist()))

    def pull_counts(self, n_arms: int) -> np.ndarray:
        if len(self) and self.arms.max() >= n_arms:
            raise InvalidTranscript(f"arm index {int(self.arms.max())} out of range for {n_arms} arms")
        return np.bincount(self.arms, minlength=n_arms).astype(np.int64)

    def rounds_nondecreasing(self) -> bool:
        for a in np.unique(self.agents):
            r = self.rounds[self.agents == a]
            if np.any(np.diff(r) < 0):
                return False
        return True


def regret_of_counts(instance: Instance, counts: np.ndarray) -> float:
    """Regret of pulling each arm ``counts[a]`` times; exact for dyadic gaps."""
    counts = np.asarray(counts)
    if len(counts) != instance.n_arms:
        raise InvalidTranscript("pull-count vector does not match the instance")
    return math.fsum(float(c) * float(g) for c, g in zip(counts.tolist(), instance.gaps.tolist()))


def regret_of_transcript(instance: Instance, transcript: Transcript) -> float:
    """Sum of gaps of the pulled arms. Depends only on the multiset of arm indices."""
    return regret_of_counts(instance, transcript.pull_counts(instance.n_arms))


@dataclass(frozen=True)
class RegretEstimate:
    mean: float
    halfwidth: float
    n_runs: int
    confidence: float

    @property
    def upper(self) -> float:
        return self.mean + self.halfwidth

    @property
    def lower(self) -> float:
        return self.mean - self.halfwidth


def hoeffding_halfwidth(value_range: float, n: int, confidence: float) -> float:
    """Two-sided Hoeffding halfwidth for the mean of ``n`` values in an interval of width ``value_range``."""
    if n < 1:
        raise ValueError("need at least one sample")
    delta = 1.0 - confidence
    return value_range * math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def summarize_regrets(regrets: Sequence[float], max_regret: float, confidence: float = 0.99) -> RegretEstimate:
    if len(regrets) == 0:
        raise ValueError("no runs to summarize")
    mean = math.fsum(regrets) / len(regrets)
    return RegretEstimate(mean, hoeffding_halfwidth(max_regret, len(regrets), confidence), len(regrets), confidence)


def expected_regret(instance: Instance, runs: Sequence[Transcript], confidence: float = 0.99) -> RegretEstimate:
    """Sample-mean regret over transcripts with a Hoeffding halfwidth.

    A collaborative run is passed as one transcript holding every agent's
    entries, so its regret is summed over agents.
    """
    if len(runs) == 0:
        raise ValueError("expected_regret needs at least one run")
    regrets = [regret_of_transcript(instance, t) for t in runs]
    max_regret = max(len(t) for t in runs) * float(instance.gaps.max())
    return summarize_regrets(regrets, max_regret, confidence)
