"""K-agent round-structured runs: the batched-to-collaborative reduction,
the no-communication baseline, and round-boundary accounting."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .batched import (
    GLOBAL_CAP,
    BatchConfig,
    BatchRun,
    SuccessiveElimination,
    run_batched_mab,
)
from .core import (
    SHARED_AGENT,
    Instance,
    RngStream,
    Transcript,
    arm_streams,
    regret_of_counts,
    regret_of_transcript,
)


@dataclass(frozen=True)
class CollabConfig:
    K: int
    horizon_T: int
    lambda_grid: float
    budget_mode: str = GLOBAL_CAP
    rounds_R: int | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.horizon_T < 1:
            raise ValueError("horizon_T must be >= 1")
        if self.rounds_R is not None:
            if self.rounds_R < 1:
                raise ValueError("rounds_R must be >= 1")
            if self.inner.max_batches > self.rounds_R:
                raise ValueError(
                    f"lambda_grid={self.lambda_grid} needs {self.inner.max_batches} rounds, cap is {self.rounds_R}"
                )

    @property
    def inner(self) -> BatchConfig:
        """Configuration of the simulated batched algorithm (horizon K*T)."""
        return BatchConfig(self.lambda_grid, self.K * self.horizon_T, self.budget_mode)

    @property
    def agent_config(self) -> BatchConfig:
        return BatchConfig(self.lambda_grid, self.horizon_T, self.budget_mode)


@dataclass
class CollabRun:
    """One K-agent execution.

    ``round_boundaries`` holds t_1..t_R in per-agent time; ``agent_round_pulls``
    is an (R, K) table of pulls each agent made in each round (an agent with
    fewer pulls than the round length idles for the rest of it).
    """

    K: int
    horizon_T: int
    per_agent_transcripts: list[Transcript] | None
    round_boundaries: tuple[int, ...]
    comm_steps: int
    total_regret: float
    pulls_per_arm_total: np.ndarray
    per_agent_regret: np.ndarray
    agent_round_pulls: np.ndarray
    batch_run: BatchRun | None = None
    agent_runs: list[BatchRun] | None = None

    @property
    def rounds(self) -> int:
        return len(self.round_boundaries)

    def transcript(self) -> Transcript:
        """All agents' entries, agent by agent."""
        if self.per_agent_transcripts is None:
            raise ValueError("run was executed without transcripts")
        return Transcript.concat(self.per_agent_transcripts)


def split_evenly(z: int, K: int) -> list[int]:
    """Agent shares of a z-pull batch: floor or ceil of z/K, extras to the lowest indices."""
    base, extra = divmod(int(z), K)
    return [base + (1 if k < extra else 0) for k in range(K)]


def reduce_batched_to_collab(
    instance: Instance,
    config: CollabConfig,
    stream: RngStream,
    record_transcripts: bool = True,
) -> CollabRun:
    """Run BatchedMAB with budget K*T as a K-agent protocol.

    ``stream`` is the trial-level stream. Each batch is laid out arm by arm
    and cut into K contiguous pieces, one per agent. Agents draw in agent
    order from the shared per-arm streams ``stream.child(SHARED_AGENT, arm)``
    and report only per-arm counts; the coordinator merges the reports and
    eliminates. A batched run on ``stream.child(SHARED_AGENT)`` therefore sees
    the same per-arm rewards and makes every decision identically.
    """
    K = config.K
    engine = SuccessiveElimination(instance, config.inner)
    streams = arm_streams(stream.child(SHARED_AGENT), instance.n_arms)
    agent_parts: list[list[Transcript]] = [[] for _ in range(K)]
    agent_rows: list[list[int]] = []
    lengths: list[int] = []

    def execute(r: int, plan: dict[int, int], draw: bool = True) -> dict[int, np.ndarray] | None:
        layout = [(a, plan[a]) for a in sorted(plan) if plan[a] > 0]
        shares = split_evenly(sum(n for _, n in layout), K)
        agent_rows.append(shares)
        lengths.append(max(shares))
        if not draw:
            return None
        reports = []
        seg = 0
        used_in_seg = 0
        for k in range(K):
            need = shares[k]
            local: dict[int, np.ndarray] = {}
            while need > 0:
                a, n_a = layout[seg]
                take = min(need, n_a - used_in_seg)
                arm = instance.arms[a]
                if record_transcripts:
                    idx = streams[a].draw_indices(arm, take)
                    c = np.bincount(idx, minlength=len(arm.support)).astype(np.int64)
                    agent_parts[k].append(
                        Transcript(np.full(take, a), arm.values[idx], np.full(take, k), np.full(take, r))
                    )
                else:
                    c = streams[a].draw_counts(arm, take)
                local[a] = local.get(a, 0) + c
                need -= take
                used_in_seg += take
                if used_in_seg == n_a:
                    seg += 1
                    used_in_seg = 0
            reports.append(local)
        merged: dict[int, np.ndarray] = {}
        for local in reports:
            for a, c in local.items():
                merged[a] = merged.get(a, 0) + c
        for a in plan:
            if a not in merged:
                merged[a] = np.zeros(len(instance.arms[a].support), dtype=np.int64)
        return merged

    while engine.wants_batch():
        engine.run_batch(execute)
    if len(engine.active) == 1 and engine.budget_left > 0 and not engine.truncated:
        # the exploitation round's rewards are drawn only when transcripts are kept
        engine.exploit(lambda r, plan: execute(r, plan, draw=record_transcripts))
    batch_run = engine.result()

    boundaries = tuple(int(t) for t in np.cumsum(lengths))
    rows = np.array(agent_rows, dtype=np.int64).reshape(-1, K)
    transcripts = [Transcript.concat(p) for p in agent_parts] if record_transcripts else None
    if transcripts is not None:
        per_agent = np.array([regret_of_transcript(instance, t) for t in transcripts])
    else:
        per_agent = np.full(K, np.nan)
    return CollabRun(
        K=K,
        horizon_T=config.horizon_T,
        per_agent_transcripts=transcripts,
        round_boundaries=boundaries,
        comm_steps=len(boundaries) - 1,
        total_regret=regret_of_counts(instance, batch_run.pulls_per_arm),
        pulls_per_arm_total=batch_run.pulls_per_arm.copy(),
        per_agent_regret=per_agent,
        agent_round_pulls=rows,
        batch_run=batch_run,
    )


def run_no_comm_baseline(
    instance: Instance,
    config: CollabConfig,
    stream: RngStream,
    record_transcripts: bool = True,
) -> CollabRun:
    """Every agent runs BatchedMAB alone with horizon T; agent k uses
    ``stream.child(k + 1)`` so its arms never share a stream with another agent."""
    K = config.K
    runs = [
        run_batched_mab(instance, config.agent_config, stream.child(k + 1), record_transcript=record_transcripts)
        for k in range(K)
    ]
    transcripts = None
    if record_transcripts:
        transcripts = [
            Transcript(r.transcript.arms, r.transcript.rewards, np.full(len(r.transcript), k), np.ones(len(r.transcript)))
            for k, r in enumerate(runs)
        ]
    pulls = np.sum([r.pulls_per_arm for r in runs], axis=0)
    return CollabRun(
        K=K,
        horizon_T=config.horizon_T,
        per_agent_transcripts=transcripts,
        round_boundaries=(config.horizon_T,),
        comm_steps=0,
        total_regret=regret_of_counts(instance, pulls),
        pulls_per_arm_total=pulls,
        per_agent_regret=np.array([r.total_regret for r in runs]),
        agent_round_pulls=np.array([[int(r.pulls_per_arm.sum()) for r in runs]], dtype=np.int64),
        agent_runs=runs,
    )


def boundary_ratios(boundaries, K: int) -> list[Fraction]:
    """Exact ratios t_r / t_{r-1} for r = 1..R with t_0 = 1/K."""
    prev = Fraction(1, K)
    out = []
    for t in boundaries:
        t = Fraction(int(t))
        out.append(t / prev)
        prev = t
    return out


def ratio_meets(ratio: Fraction, K: int, T: int, R: int) -> bool:
    """ratio >= (K T)^(1/R), decided exactly as ratio^R >= K T."""
    return ratio**R >= K * T


def round_ratio_certificate(run: CollabRun) -> tuple[int, Fraction]:
    """First round r (1-based) maximizing t_r / t_{r-1}, and that ratio."""
    ratios = boundary_ratios(run.round_boundaries, run.K)
    if not ratios:
        raise ValueError("run has no rounds")
    best = max(ratios)
    return ratios.index(best) + 1, best


def ratio_certificate_holds(run: CollabRun) -> bool:
    _, ratio = round_ratio_certificate(run)
    return ratio_meets(ratio, run.K, run.horizon_T, run.rounds)
