"""Batched successive elimination (BatchedMAB) and its analytic bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import Instance, RngStream, Transcript, arm_streams, regret_of_counts

GLOBAL_CAP = "global-cap"
PER_ARM_GRID = "per-arm-grid"

_REL_TOL = 1e-9


class EmptyInstance(ValueError):
    pass


def _ceil(x: float) -> int:
    """Ceiling that forgives floating-point noise just above an integer."""
    r = round(x)
    if abs(x - r) <= _REL_TOL * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def ceil_log(base: float, x: float) -> int:
    """Smallest integer i >= 0 with base**i >= x, tolerant of rounding in the power."""
    if x <= 1:
        return 0
    i = _ceil(math.log(x) / math.log(base))
    # nudge against log rounding on either side
    while i > 0 and base ** (i - 1) >= x * (1 - _REL_TOL):
        i -= 1
    while base**i < x * (1 - _REL_TOL):
        i += 1
    return i


@dataclass(frozen=True)
class BatchConfig:
    lambda_grid: float
    horizon_T: int
    budget_mode: str = GLOBAL_CAP

    def __post_init__(self):
        if not self.lambda_grid >= 2:
            raise ValueError("lambda_grid must be >= 2")
        if int(self.horizon_T) != self.horizon_T or self.horizon_T < 1:
            raise ValueError("horizon_T must be a positive integer")
        if self.budget_mode not in (GLOBAL_CAP, PER_ARM_GRID):
            raise ValueError(f"unknown budget_mode {self.budget_mode!r}")
        object.__setattr__(self, "horizon_T", int(self.horizon_T))

    @property
    def max_batches(self) -> int:
        return max(1, ceil_log(self.lambda_grid, self.horizon_T))

    def log_term(self, n_arms: int) -> float:
        """ln(T^3 N) from the elimination threshold."""
        return 3.0 * math.log(self.horizon_T) + math.log(n_arms)


def batch_grid(config: BatchConfig) -> list[int]:
    """Grid points T_1 < T_2 < ... (T_0 = 0 is implicit), last one clamped to T."""
    T = config.horizon_T
    grid: list[int] = []
    for i in range(1, config.max_batches + 1):
        t = min(_ceil(config.lambda_grid**i), T)
        if not grid or t > grid[-1]:
            grid.append(t)
    return grid


@dataclass(frozen=True)
class EliminationCertificate:
    arm: int
    round: int
    deficit: float
    threshold: float
    r_of_a: int | None


@dataclass
class BatchRun:
    """Record of one BatchedMAB execution.

    Rows of ``est_means`` and ``pull_counts_at`` correspond to elimination
    rounds 1..len(est_means); inactive arms hold NaN / their frozen count.
    ``elimination_round[a]`` is 0 for arms never eliminated.
    """

    grid: list[int]
    active_sets: list[frozenset[int]]
    batch_pulls: np.ndarray
    est_means: np.ndarray
    pull_counts_at: np.ndarray
    pulls_per_arm: np.ndarray
    rounds_used: int
    total_regret: float
    star_eliminated: bool
    elimination_round: np.ndarray
    certificates: list[EliminationCertificate]
    truncated: bool
    exploit_round: int | None
    transcript: Transcript | None = None

    @property
    def elimination_rounds_run(self) -> int:
        return len(self.est_means)


def r_of_arm(gap: float, config: BatchConfig, n_arms: int, grid: Sequence[int] | None = None) -> int | None:
    """Smallest round r with T_r > 64 ln(T^3 N) / gap^2, or None if the grid never gets there."""
    if gap <= 0:
        return None
    need = 64.0 * config.log_term(n_arms) / gap**2
    for r, t in enumerate(grid if grid is not None else batch_grid(config), start=1):
        if t > need:
            return r
    return None


# A pull executor receives {arm: n_pulls} for one batch and returns
# {arm: support-value counts}. The batched engine draws from its own per-arm
# streams; the collaborative reduction splits the same request among agents.
PullExecutor = Callable[[int, dict[int, int]], dict[int, np.ndarray]]


class SuccessiveElimination:
    """Coordinator state of BatchedMAB: grid, active set, per-arm statistics."""

    def __init__(self, instance: Instance, config: BatchConfig):
        if instance.n_arms == 0:
            raise EmptyInstance("instance has no arms")
        self.instance = instance
        self.config = config
        self.grid = batch_grid(config)
        self.n_arms = instance.n_arms
        self.log_term = config.log_term(self.n_arms)
        self.values = [a.values for a in instance.arms]
        self.active = list(range(self.n_arms))
        self.pulls = np.zeros(self.n_arms, dtype=np.int64)
        self.value_counts = [np.zeros(len(a.support), dtype=np.int64) for a in instance.arms]
        self.used = 0
        self.r = 0
        self.truncated = False
        self.exploit_round: int | None = None
        self.active_sets: list[frozenset[int]] = []
        self.batch_pulls: list[np.ndarray] = []
        self.est_rows: list[np.ndarray] = []
        self.count_rows: list[np.ndarray] = []
        self.elimination_round = np.zeros(self.n_arms, dtype=np.int64)
        self.certificates: list[EliminationCertificate] = []

    @property
    def budget_left(self) -> int:
        return self.config.horizon_T - self.used

    def wants_batch(self) -> bool:
        if self.config.budget_mode == GLOBAL_CAP and self.budget_left <= 0:
            return False
        return self.r < len(self.grid) and len(self.active) > 1 and not self.truncated

    def plan_batch(self) -> dict[int, int]:
        """Per-arm pull counts for the next elimination batch."""
        r = self.r + 1
        step = self.grid[r - 1] - (self.grid[r - 2] if r > 1 else 0)
        plan = {a: step for a in self.active}
        if self.config.budget_mode == GLOBAL_CAP and step * len(self.active) > self.budget_left:
            base, extra = divmod(self.budget_left, len(self.active))
            plan = {a: base + (1 if i < extra else 0) for i, a in enumerate(self.active)}
            self.truncated = True
        return plan

    def _record_batch(self, plan: dict[int, int], counts: dict[int, np.ndarray] | None):
        self.r += 1
        self.active_sets.append(frozenset(self.active))
        row = np.zeros(self.n_arms, dtype=np.int64)
        for a, n in plan.items():
            if counts is not None:
                c = counts[a]
                if int(c.sum()) != n:
                    raise RuntimeError(f"executor returned {int(c.sum())} draws for arm {a}, expected {n}")
                self.value_counts[a] += c
            row[a] = n
            self.pulls[a] += n
        self.used += int(row.sum())
        self.batch_pulls.append(row)

    def run_batch(self, execute: PullExecutor):
        plan = self.plan_batch()
        self._record_batch(plan, execute(self.r + 1, plan))
        self._eliminate()

    def _eliminate(self):
        means = np.full(self.n_arms, np.nan)
        for a in self.active:
            if self.pulls[a] > 0:
                means[a] = float(self.value_counts[a] @ self.values[a]) / float(self.pulls[a])
        self.est_rows.append(means)
        self.count_rows.append(self.pulls.copy())
        live = [a for a in self.active if self.pulls[a] > 0]
        if not live:
            return
        best = max(means[a] for a in live)
        keep = []
        for a in self.active:
            if self.pulls[a] == 0:
                keep.append(a)
                continue
            threshold = 2.0 * math.sqrt(self.log_term / float(self.pulls[a]))
            deficit = best - means[a]
            if deficit < threshold:
                keep.append(a)
            else:
                self.elimination_round[a] = self.r
                self.certificates.append(
                    EliminationCertificate(
                        a, self.r, float(deficit), threshold,
                        r_of_arm(float(self.instance.gaps[a]), self.config, self.n_arms, self.grid),
                    )
                )
        self.active = keep

    def exploit(self, execute: PullExecutor | None):
        """Give all remaining budget to the lone survivor as one final batch."""
        if len(self.active) != 1 or self.budget_left <= 0 or self.truncated:
            return
        a = self.active[0]
        plan = {a: self.budget_left}
        # no decision depends on these rewards, so they may be skipped
        self._record_batch(plan, None if execute is None else execute(self.r + 1, plan))
        self.exploit_round = self.r

    def result(self, transcript: Transcript | None = None) -> BatchRun:
        star = self.instance.star_index
        return BatchRun(
            grid=list(self.grid),
            active_sets=list(self.active_sets),
            batch_pulls=np.array(self.batch_pulls, dtype=np.int64).reshape(-1, self.n_arms),
            est_means=np.array(self.est_rows, dtype=np.float64).reshape(-1, self.n_arms),
            pull_counts_at=np.array(self.count_rows, dtype=np.int64).reshape(-1, self.n_arms),
            pulls_per_arm=self.pulls.copy(),
            rounds_used=self.r,
            total_regret=regret_of_counts(self.instance, self.pulls),
            star_eliminated=bool(self.elimination_round[star] > 0),
            elimination_round=self.elimination_round.copy(),
            certificates=list(self.certificates),
            truncated=self.truncated,
            exploit_round=self.exploit_round,
            transcript=transcript,
        )


def run_batched_mab(
    instance: Instance,
    config: BatchConfig,
    stream: RngStream,
    record_transcript: bool = False,
) -> BatchRun:
    """Run BatchedMAB once.

    Arm ``a`` draws its rewards from ``stream.child(a)``, so two runs whose
    streams share ``(master_seed, stream_path)`` see the same per-arm rewards.
    With ``record_transcript`` every pull is materialized (arm-major within a
    batch); otherwise only support-value counts are drawn, and the final
    exploitation batch draws nothing.
    """
    engine = SuccessiveElimination(instance, config)
    streams = arm_streams(stream, instance.n_arms)
    parts: list[Transcript] = []

    def execute(r: int, plan: dict[int, int]) -> dict[int, np.ndarray]:
        out = {}
        for a in sorted(plan):
            n = plan[a]
            arm = instance.arms[a]
            if record_transcript:
                idx = streams[a].draw_indices(arm, n)
                out[a] = np.bincount(idx, minlength=len(arm.support)).astype(np.int64)
                parts.append(Transcript(np.full(n, a), arm.values[idx], np.zeros(n), np.full(n, r)))
            else:
                out[a] = streams[a].draw_counts(arm, n)
        return out

    while engine.wants_batch():
        engine.run_batch(execute)
    engine.exploit(execute if record_transcript else None)
    return engine.result(Transcript.concat(parts) if record_transcript else None)


def estimates_concentrated(run: BatchRun, instance: Instance, config: BatchConfig) -> bool:
    """Per-trial check of the concentration event: every recorded estimate lies
    within sqrt(ln(T^3 N) / n) of its true mean, n being the arm's pull count."""
    log_term = config.log_term(instance.n_arms)
    mu = instance.means
    for means, counts in zip(run.est_means, run.pull_counts_at):
        ok = ~np.isnan(means)
        if not ok.any():
            continue
        radius = np.sqrt(log_term / counts[ok].astype(np.float64))
        if np.any(np.abs(means[ok] - mu[ok]) > radius):
            return False
    return True


def elimination_within_r_of_a(run: BatchRun, instance: Instance, config: BatchConfig) -> bool:
    """Every suboptimal arm is gone by round r(a), whenever the run reached a full round r(a)."""
    gaps = instance.gaps
    star = instance.star_index
    full_rounds = run.elimination_rounds_run - (1 if run.truncated else 0)
    for a in range(instance.n_arms):
        if a == star or gaps[a] <= 0:
            continue
        ra = r_of_arm(float(gaps[a]), config, instance.n_arms, run.grid)
        er = int(run.elimination_round[a])
        if er > 0:
            if ra is not None and er > ra:
                return False
        elif ra is not None and full_rounds >= ra:
            return False
    return True


def analytic_round_bound(instance: Instance, config: BatchConfig) -> int:
    """min{ceil(log_lambda(64 ln(T^3 N) / gap^2)) + 1, ceil(log_lambda T)}."""
    worst = config.max_batches
    if not instance.has_gap:
        return worst
    x = 64.0 * config.log_term(instance.n_arms) / instance.min_gap**2
    return min(ceil_log(config.lambda_grid, x) + 1, worst)


def analytic_regret_bound(instance: Instance, config: BatchConfig) -> float:
    """Sum over non-star arms of 200 lambda ln(T N) / gap; inf if some gap is zero."""
    star = instance.star_index
    gaps = [float(g) for a, g in enumerate(instance.gaps) if a != star]
    if any(g <= 0 for g in gaps):
        return math.inf
    c = 200.0 * config.lambda_grid * math.log(config.horizon_T * instance.n_arms)
    return math.fsum(c / g for g in gaps)
