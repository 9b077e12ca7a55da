"""Experiment configuration, seeded Monte Carlo orchestration and CSV/summary output."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import lower_bound as lb
from .batched import (
    GLOBAL_CAP,
    PER_ARM_GRID,
    BatchConfig,
    BatchRun,
    analytic_regret_bound,
    analytic_round_bound,
    estimates_concentrated,
    elimination_within_r_of_a,
    run_batched_mab,
)
from .collab import CollabConfig, ratio_certificate_holds, reduce_batched_to_collab, run_no_comm_baseline
from .core import SHARED_AGENT, Instance, RngStream, hoeffding_halfwidth

KINDS = ("batched", "collab-reduction", "no-comm-baseline", "tradeoff-sweep", "lb-checks")

TRIAL_COLUMNS = (
    "experiment",
    "instance",
    "R",
    "lambda_grid",
    "trial",
    "regret",
    "rounds_used",
    "comm_steps",
    "star_eliminated",
    "estimates_concentrated",
    "elimination_ok",
    "round_bound_ok",
    "ratio_ok",
)

AGGREGATE_COLUMNS = (
    "experiment",
    "instance",
    "R",
    "lambda_grid",
    "mean_regret",
    "halfwidth",
    "mean_rounds",
    "max_rounds",
    "analytic_regret_bound",
    "analytic_round_bound",
    "star_elim_count",
    "trials",
)

CHECK_COLUMNS = ("check", "passed", "detail")

DEFAULT_SWEEP_R = (2, 3, 4, 6, 8)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InstanceSpec:
    """Either explicit Bernoulli means or a hard-family level; ``sign=None``
    on a level selects both I_l^+ and I_l^-."""

    means: tuple[float, ...] | None = None
    level: int | None = None
    sign: int | None = None

    def build(self, beta: float) -> list[Instance]:
        if self.means is not None:
            label = "means=" + "/".join(format(m, "g") for m in self.means)
            return [Instance.bernoulli(self.means, label)]
        signs = (1, -1) if self.sign is None else (self.sign,)
        off = 1.0 / beta**self.level
        return [
            Instance.bernoulli([0.5 + s * off, 0.5 - s * off], f"I{self.level}{'+' if s > 0 else '-'}") for s in signs
        ]


@dataclass(frozen=True)
class LowerBoundParams:
    beta: float = lb.DEFAULT_BETA
    eps: float = lb.DEFAULT_EPS
    lambda_lb: float = lb.DEFAULT_LAMBDA_LB
    mc_lambda_lb: float = lb.SCALED_LAMBDA_LB
    mc_trials: int = 100_000
    step_bound_coeff: float = 5.0
    projection_runs: int = 20


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    T: int
    instance: InstanceSpec | None = None
    K: int = 1
    lambda_grid: float | None = None
    R_grid: tuple[int, ...] = ()
    budget_mode: str = GLOBAL_CAP
    trials: int = 100
    master_seed: int = 0
    confidence: float = 0.99
    threads: int = 1
    out: str = "runs/out"
    lower_bound: LowerBoundParams = field(default_factory=LowerBoundParams)

    def __post_init__(self):
        if self.experiment not in KINDS:
            raise ConfigError(f"experiment must be one of {', '.join(KINDS)}; got {self.experiment!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.K < 1 or self.T < 1:
            raise ConfigError("K and T must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not 0.0 < self.confidence < 1.0:
            raise ConfigError("confidence must lie in (0, 1)")
        if self.budget_mode not in (GLOBAL_CAP, PER_ARM_GRID):
            raise ConfigError(f"unknown budget_mode {self.budget_mode!r}")
        if self.experiment == "lb-checks":
            return
        if self.instance is None:
            raise ConfigError("instance is required")
        if self.experiment == "tradeoff-sweep":
            if not self.R_grid:
                raise ConfigError("tradeoff-sweep needs a nonempty R_grid")
            if self.lambda_grid is not None:
                raise ConfigError("tradeoff-sweep derives lambda_grid = (K T)^(1/R); do not set it")
            for R in self.R_grid:
                if R < 1 or sweep_lambda(self.K, self.T, R) < 2:
                    raise ConfigError(f"R={R} gives lambda_grid below 2 for K T = {self.K * self.T}")
        elif self.lambda_grid is None or self.lambda_grid < 2:
            raise ConfigError("lambda_grid >= 2 is required")


def sweep_lambda(K: int, T: int, R: int) -> float:
    return float(K * T) ** (1.0 / R)


_TOP_KEYS = {
    "experiment", "instance", "K", "T", "lambda_grid", "R_grid", "budget_mode",
    "trials", "seed", "confidence", "threads", "out", "lower_bound",
}


def _parse_instance(raw: Any) -> InstanceSpec:
    if not isinstance(raw, dict):
        raise ConfigError("instance must be a mapping")
    if ("means" in raw) == ("hard" in raw):
        raise ConfigError("instance needs exactly one of 'means' or 'hard'")
    if "means" in raw:
        means = tuple(float(m) for m in raw["means"])
        if not means or any(not 0.0 <= m <= 1.0 for m in means):
            raise ConfigError("means must be a nonempty list of values in [0, 1]")
        return InstanceSpec(means=means)
    hard = raw["hard"]
    if not isinstance(hard, dict) or "level" not in hard:
        raise ConfigError("hard needs a level")
    sign = hard.get("sign")
    if sign is not None and int(sign) not in (1, -1):
        raise ConfigError("hard.sign must be +1 or -1")
    level = int(hard["level"])
    if level < 1:
        raise ConfigError("hard.level must be >= 1")
    return InstanceSpec(level=level, sign=None if sign is None else int(sign))


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in ("experiment", "T"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    lb_raw = raw.get("lower_bound") or {}
    known_lb = set(LowerBoundParams.__dataclass_fields__)
    if set(lb_raw) - known_lb:
        raise ConfigError(f"unknown lower_bound keys: {', '.join(sorted(set(lb_raw) - known_lb))}")
    try:
        return ExperimentConfig(
            experiment=str(raw["experiment"]),
            T=int(raw["T"]),
            instance=_parse_instance(raw["instance"]) if "instance" in raw else None,
            K=int(raw.get("K", 1)),
            lambda_grid=None if raw.get("lambda_grid") is None else float(raw["lambda_grid"]),
            R_grid=tuple(int(r) for r in raw.get("R_grid", ()) or ()),
            budget_mode=str(raw.get("budget_mode", GLOBAL_CAP)),
            trials=int(raw.get("trials", 100)),
            master_seed=int(raw.get("seed", 0)),
            confidence=float(raw.get("confidence", 0.99)),
            threads=int(raw.get("threads", 1)),
            out=str(raw.get("out", "runs/out")),
            lower_bound=LowerBoundParams(**lb_raw),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path: str | os.PathLike, **overrides) -> ExperimentConfig:
    """Read a YAML config; keyword overrides (``None`` ignored) replace top-level fields."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    config = config_from_dict(raw)
    changes = {k: v for k, v in overrides.items() if v is not None}
    if changes:
        try:
            config = replace(config, **changes)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return config


# --- trial execution ---------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    """One (instance, R) combination of an experiment."""

    index: int
    instance: Instance
    R: int | None
    lambda_grid: float


@dataclass(frozen=True)
class TrialRecord:
    cell: int
    trial: int
    regret: float
    rounds_used: int
    comm_steps: int | None
    star_eliminated: bool
    estimates_concentrated: bool
    elimination_ok: bool
    round_bound_ok: bool
    ratio_ok: bool | None


def _batch_checks(runs: list[BatchRun], instance: Instance, config: BatchConfig) -> tuple[bool, bool, bool, bool]:
    """(star eliminated, estimates concentrated, elimination within r(a), round bound) over one or more runs."""
    star = any(r.star_eliminated for r in runs)
    conc_all = True
    elim_ok = True
    rounds_ok = True
    for r in runs:
        conc = estimates_concentrated(r, instance, config)
        conc_all &= conc
        if conc:
            elim_ok &= elimination_within_r_of_a(r, instance, config)
            rounds_ok &= r.rounds_used <= analytic_round_bound(instance, config)
        rounds_ok &= r.rounds_used <= config.max_batches
    return star, conc_all, elim_ok, rounds_ok


def _run_trial(config: ExperimentConfig, cell: Cell, trial: int) -> TrialRecord:
    stream = RngStream(config.master_seed, (cell.index, trial))
    kind = config.experiment
    if kind == "batched":
        bcfg = BatchConfig(cell.lambda_grid, config.T, config.budget_mode)
        run = run_batched_mab(cell.instance, bcfg, stream.child(SHARED_AGENT))
        star, conc, elim, rounds = _batch_checks([run], cell.instance, bcfg)
        return TrialRecord(cell.index, trial, run.total_regret, run.rounds_used, None, star, conc, elim, rounds, None)
    ccfg = CollabConfig(config.K, config.T, cell.lambda_grid, config.budget_mode, cell.R)
    if kind == "no-comm-baseline":
        crun = run_no_comm_baseline(cell.instance, ccfg, stream, record_transcripts=False)
        checks = _batch_checks(crun.agent_runs, cell.instance, ccfg.agent_config)
    else:
        crun = reduce_batched_to_collab(cell.instance, ccfg, stream, record_transcripts=False)
        checks = _batch_checks([crun.batch_run], cell.instance, ccfg.inner)
    ok = ratio_certificate_holds(crun) and crun.comm_steps == crun.rounds - 1
    return TrialRecord(cell.index, trial, crun.total_regret, crun.rounds, crun.comm_steps, *checks, ok)


def build_cells(config: ExperimentConfig) -> list[Cell]:
    instances = config.instance.build(config.lower_bound.beta)
    cells = []
    if config.experiment == "tradeoff-sweep":
        for R in config.R_grid:
            for inst in instances:
                cells.append(Cell(len(cells), inst, R, sweep_lambda(config.K, config.T, R)))
    else:
        for inst in instances:
            cells.append(Cell(len(cells), inst, None, config.lambda_grid))
    return cells


def run_trials(config: ExperimentConfig, cells: list[Cell]) -> list[TrialRecord]:
    """All (cell, trial) pairs, merged in (cell, trial) order whatever the thread count."""
    tasks = [(c, t) for c in cells for t in range(config.trials)]
    if config.threads == 1:
        return [_run_trial(config, c, t) for c, t in tasks]
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        return list(pool.map(lambda ct: _run_trial(config, *ct), tasks))


# --- aggregation -------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    R: int | None
    lambda_grid: float
    mean_regret: float
    halfwidth: float
    mean_rounds: float
    max_rounds: int
    analytic_regret_bound: float
    analytic_round_bound: int
    star_elim_count: int
    trials: int


def _cell_bounds(config: ExperimentConfig, cell: Cell) -> tuple[float, int, float]:
    """(regret bound, round bound, largest possible regret of one trial)."""
    inst = cell.instance
    max_gap = float(inst.gaps.max())
    if config.experiment == "batched":
        bcfg = BatchConfig(cell.lambda_grid, config.T, config.budget_mode)
        return analytic_regret_bound(inst, bcfg), analytic_round_bound(inst, bcfg), config.T * max_gap
    ccfg = CollabConfig(config.K, config.T, cell.lambda_grid, config.budget_mode, cell.R)
    span = config.K * config.T * max_gap
    if config.experiment == "no-comm-baseline":
        return config.K * analytic_regret_bound(inst, ccfg.agent_config), 1, span
    return analytic_regret_bound(inst, ccfg.inner), analytic_round_bound(inst, ccfg.inner), span


def aggregate(config: ExperimentConfig, cells: list[Cell], records: list[TrialRecord]) -> list[SweepRow]:
    rows = []
    for cell in cells:
        recs = [r for r in records if r.cell == cell.index]
        regret_bound, round_bound, span = _cell_bounds(config, cell)
        rounds = [r.rounds_used for r in recs]
        rows.append(
            SweepRow(
                R=cell.R,
                lambda_grid=cell.lambda_grid,
                mean_regret=math.fsum(r.regret for r in recs) / len(recs),
                halfwidth=hoeffding_halfwidth(span, len(recs), config.confidence),
                mean_rounds=sum(rounds) / len(rounds),
                max_rounds=max(rounds),
                analytic_regret_bound=regret_bound,
                analytic_round_bound=round_bound,
                star_elim_count=sum(r.star_eliminated for r in recs),
                trials=len(recs),
            )
        )
    return rows


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def trial_checks(cells: list[Cell], records: list[TrialRecord]) -> list[CheckResult]:
    out = []
    for name, attr in (
        ("elimination by r(a) under concentration", "elimination_ok"),
        ("round bound", "round_bound_ok"),
    ):
        bad = [r for r in records if not getattr(r, attr)]
        detail = "" if not bad else f"{len(bad)} trial(s), first: cell {bad[0].cell} trial {bad[0].trial}"
        out.append(CheckResult(name, not bad, detail))
    if any(r.ratio_ok is not None for r in records):
        bad = [r for r in records if r.ratio_ok is False]
        detail = "" if not bad else f"{len(bad)} trial(s), first: cell {bad[0].cell} trial {bad[0].trial}"
        out.append(CheckResult("round-ratio certificate and comm steps", not bad, detail))
    return out


def aggregate_checks(config: ExperimentConfig, cells: list[Cell], rows: list[SweepRow]) -> list[CheckResult]:
    out = []
    for cell, row in zip(cells, rows):
        tag = f"{cell.instance.label}" + ("" if cell.R is None else f" R={cell.R}")
        ok = row.mean_regret <= row.analytic_regret_bound + row.halfwidth
        out.append(
            CheckResult(
                f"regret bound [{tag}]",
                ok,
                f"mean {row.mean_regret:.6g} vs bound {row.analytic_regret_bound:.6g} + halfwidth {row.halfwidth:.6g}",
            )
        )
        if cell.instance.has_gap:
            out.append(
                CheckResult(f"star never eliminated [{tag}]", row.star_elim_count == 0, f"{row.star_elim_count} trial(s)")
            )
    if config.experiment == "tradeoff-sweep":
        out.extend(sweep_checks(config, cells, rows))
    return out


def worst_of_pair(cells: list[Cell], rows: list[SweepRow]) -> list[tuple[int, Cell, SweepRow]]:
    """Per R (ascending), the instance with the largest mean regret."""
    by_R: dict[int, tuple[Cell, SweepRow]] = {}
    for cell, row in zip(cells, rows):
        if cell.R not in by_R or row.mean_regret > by_R[cell.R][1].mean_regret:
            by_R[cell.R] = (cell, row)
    return [(R, *by_R[R]) for R in sorted(by_R)]


def sweep_checks(config: ExperimentConfig, cells: list[Cell], rows: list[SweepRow]) -> list[CheckResult]:
    worst = worst_of_pair(cells, rows)
    out = []
    mono_bad = []
    for (R0, _, a), (R1, _, b) in zip(worst, worst[1:]):
        if b.mean_regret > a.mean_regret + a.halfwidth + b.halfwidth:
            mono_bad.append(f"R={R0}->{R1}: {a.mean_regret:.6g} -> {b.mean_regret:.6g}")
    out.append(CheckResult("worst-of-pair regret non-increasing in R", not mono_bad, "; ".join(mono_bad)))
    KT = config.K * config.T
    hi = 8.0 * math.log2(KT)
    band_bad = []
    ratios = []
    for R, cell, row in worst:
        ratio = row.mean_regret * cell.instance.min_gap / sweep_lambda(config.K, config.T, R)
        ratios.append(f"R={R}:{ratio:.4g}")
        if not 1.0 / 8.0 <= ratio <= hi:
            band_bad.append(f"R={R}")
    detail = " ".join(ratios) + (f" outside [1/8, {hi:g}]: {', '.join(band_bad)}" if band_bad else "")
    out.append(CheckResult("regret*gap/(KT)^(1/R) within log-factor band", not band_bad, detail))
    return out


# --- lower-bound check suite -------------------------------------------------


def lb_check_suite(config: ExperimentConfig) -> list[CheckResult]:
    """Exhaustive per-step and drift bounds, round-partition and projection
    checks over simulated runs, and the event-E Monte Carlo in scaled mode."""
    p = config.lower_bound
    K, T = config.K, config.T
    family = lb.make_hard_family(K, T, p.beta, p.eps, p.lambda_lb)
    out = []

    bad = lb.step_bound_violations(family, coeff=p.step_bound_coeff)
    detail = f"L={family.L}, levels 1..{min(family.L, 6)}"
    if bad:
        w = bad[0]
        detail = (
            f"{len(bad)} cell(s); first: level={w.level} A={w.A} B={w.B} arm={w.arm + 1} "
            f"outcome={w.outcome} |ln ratio|={abs(w.value):.6g} > {w.bound:.6g}"
        )
    out.append(CheckResult("per-step log-ratio bound (exhaustive)", not bad, detail))

    bad_d = lb.drift_bound_violations(family)
    detail = f"L={family.L}, levels 1..{min(family.L, 6)}"
    if bad_d:
        level, a, b, i, arm, d = bad_d[0]
        detail = f"{len(bad_d)} case(s); first: level={level} A={a} B={b} I={i} arm={arm + 1} drift={d:.6g}"
    out.append(CheckResult("drift bound (exhaustive)", not bad_d, detail))

    # with the default lambda_lb every level band lies below t_0 = 1/K, so
    # the projection checks use the scaled family to be non-vacuous
    scaled = lb.make_hard_family(K, T, p.beta, p.eps, p.mc_lambda_lb)
    out.extend(_round_checks(config, scaled))
    out.extend(event_e_monte_carlo(scaled, p.mc_trials, RngStream(config.master_seed, (10**6,))))
    return out


def _round_checks(config: ExperimentConfig, family: lb.HardFamily) -> list[CheckResult]:
    K, T = config.K, config.T
    R_values = config.R_grid or tuple(R for R in DEFAULT_SWEEP_R if sweep_lambda(K, T, R) >= 2)
    ratio_bad, part_bad = [], []
    budget_bad, band_bad = [], []
    checked = band_checked = 0
    for i in range(config.trials):
        R = R_values[i % len(R_values)]
        sign = 1 if (i // len(R_values)) % 2 == 0 else -1
        inst = family.instance(1, sign)
        ccfg = CollabConfig(K, T, sweep_lambda(K, T, R), config.budget_mode, R)
        keep = i < config.lower_bound.projection_runs
        run = reduce_batched_to_collab(inst, ccfg, RngStream(config.master_seed, (0, i)), record_transcripts=keep)
        if not ratio_certificate_holds(run):
            ratio_bad.append(i)
        rep = lb.round_index_report(run, family, run.rounds)
        if not rep.partition_ok:
            part_bad.append(i)
        if not keep:
            continue
        starts = [0] + list(run.round_boundaries)
        for ell in range(1, family.L + 1):
            tau = lb.tau_of(run, ell, family)
            if tau is None:
                continue
            zeta = family.zeta(ell, R)
            for k in range(K):
                proj = lb.projection(run, k, tau, zeta)
                checked += 1
                if len(proj.proj) > K * starts[tau - 1] + math.floor(zeta):
                    budget_bad.append((i, ell, k))
                if lb.r_range_ok(family.L, K, R):
                    band_checked += 1
                    limit = K * family.beta ** (2 * ell) / (family.alpha * K) + zeta
                    if len(proj.proj) > limit:
                        band_bad.append((i, ell, k))
    out = [
        CheckResult("round-ratio certificate", not ratio_bad, f"{config.trials} runs" + (f"; failing {ratio_bad[:5]}" if ratio_bad else "")),
        CheckResult("exactly one F_r per run", not part_bad, f"{config.trials} runs" + (f"; failing {part_bad[:5]}" if part_bad else "")),
        CheckResult(
            "projection length within round budget",
            not budget_bad,
            f"{checked} projections (lambda_lb={family.lambda_lb:g})" + (f"; failing {budget_bad[:5]}" if budget_bad else ""),
        ),
    ]
    if band_checked:
        out.append(CheckResult("projection length within level budget", not band_bad, f"{band_checked} projections"))
    else:
        out.append(CheckResult("projection length within level budget", True, "skipped: R outside its admissible range"))
    return out


def event_e_monte_carlo(family: lb.HardFamily, trials: int, stream: RngStream) -> list[CheckResult]:
    """Uniform-play failure frequency of event E at each level's maximal qualifying length."""
    if family.degenerate:
        return [CheckResult("event E Monte Carlo", True, "degenerate family (L <= 1): vacuous pass")]
    play = family.instance(family.L, 1)
    rng = np.random.Generator(stream.bit_generator)
    out = []
    for level in range(1, family.L + 1):
        n = int(math.floor(family.length_threshold(level)))
        if n < 1:
            continue
        fails = 0
        done = 0
        while done < trials:
            m = min(50_000, trials - done)
            tables = lb.uniform_play_tables(play, n, m, rng)
            fails += int((~lb.event_E_from_tables(family, tables, n)).sum())
            done += m
        freq = fails / trials
        sd = math.sqrt(freq * (1 - freq) / trials)
        bound = lb.azuma_failure_bound(family, n)
        out.append(
            CheckResult(
                f"event E Monte Carlo [level {level}, n={n}]",
                freq <= bound + 3 * sd,
                f"failure freq {freq:.6g} (sd {sd:.3g}) vs Azuma sum {bound:.6g}",
            )
        )
    return out


# --- output ------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    checks: list[CheckResult]
    rows: list[SweepRow] = field(default_factory=list)
    records: list[TrialRecord] = field(default_factory=list)
    out_dir: Path | None = None

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_status(self) -> int:
        return 0 if self.ok else 1


def _summary(config: ExperimentConfig, checks: list[CheckResult], rows: list[SweepRow], cells: list[Cell]) -> str:
    lines = [
        f"experiment: {config.experiment}",
        f"K={config.K} T={config.T} trials={config.trials} seed={config.master_seed} budget_mode={config.budget_mode}",
    ]
    if rows:
        lines.append(
            f"halfwidths: two-sided Hoeffding at confidence {config.confidence:g} on [0, budget * max gap] per trial"
        )
        for cell, row in zip(cells, rows):
            tag = cell.instance.label + ("" if cell.R is None else f" R={cell.R}")
            lines.append(
                f"  {tag}: lambda={row.lambda_grid:.6g} mean_regret={row.mean_regret:.6g} +- {row.halfwidth:.6g} "
                f"rounds mean={row.mean_rounds:.4g} max={row.max_rounds}"
            )
    lines.append("checks:")
    for c in checks:
        lines.append(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}" + (f": {c.detail}" if c.detail else ""))
    failed = sum(not c.passed for c in checks)
    lines.append("status: ok" if not failed else f"status: {failed} check(s) failed")
    return "\n".join(lines) + "\n"


def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run ``config`` and, with ``write``, emit CSVs and summary.txt under ``config.out``."""
    out_dir = Path(config.out)
    if write:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out_dir}: {exc}") from exc
        if not os.access(out_dir, os.W_OK):
            raise ConfigError(f"output directory {out_dir} is not writable")

    if config.experiment == "lb-checks":
        checks = lb_check_suite(config)
        result = ExperimentResult(config, checks, out_dir=out_dir if write else None)
        if write:
            _write_csv(out_dir / "checks.csv", CHECK_COLUMNS, [(c.name, c.passed, c.detail) for c in checks])
            (out_dir / "summary.txt").write_text(_summary(config, checks, [], []), encoding="utf-8")
        return result

    cells = build_cells(config)
    records = run_trials(config, cells)
    rows = aggregate(config, cells, records)
    checks = trial_checks(cells, records) + aggregate_checks(config, cells, rows)
    result = ExperimentResult(config, checks, rows, records, out_dir if write else None)
    if write:
        trial_rows = []
        for r in records:
            cell = cells[r.cell]
            trial_rows.append(
                (
                    config.experiment, cell.instance.label, cell.R, cell.lambda_grid, r.trial, r.regret,
                    r.rounds_used, r.comm_steps, r.star_eliminated, r.estimates_concentrated, r.elimination_ok,
                    r.round_bound_ok, r.ratio_ok,
                )
            )
        _write_csv(out_dir / "trials.csv", TRIAL_COLUMNS, trial_rows)
        agg_rows = [
            (
                config.experiment, cell.instance.label, row.R, row.lambda_grid, row.mean_regret, row.halfwidth,
                row.mean_rounds, row.max_rounds, row.analytic_regret_bound, row.analytic_round_bound,
                row.star_elim_count, row.trials,
            )
            for cell, row in zip(cells, rows)
        ]
        _write_csv(out_dir / "aggregate.csv", AGGREGATE_COLUMNS, agg_rows)
        (out_dir / "summary.txt").write_text(_summary(config, checks, rows, cells), encoding="utf-8")
    return result

