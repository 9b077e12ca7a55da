"""Hard two-arm instance family and the likelihood-ratio machinery used to
argue that short transcripts cannot tell its members apart.

Likelihoods use natural logs; L, alpha and the event-E length threshold use
base-2 logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .collab import CollabRun, boundary_ratios, ratio_meets
from .core import Instance, Transcript, regret_of_transcript

DEFAULT_BETA = 4.0
DEFAULT_EPS = 0.1
DEFAULT_LAMBDA_LB = 1e-6
# preset for desk-scale Monte Carlo checks: makes the event-E length threshold bind at ~100s of pulls
SCALED_LAMBDA_LB = 0.1

_EXTENDED_DPS = 40


class PreconditionError(ValueError):
    pass


class UndefinedRatio(ArithmeticError):
    pass


class BoundViolation(AssertionError):
    pass


@dataclass(frozen=True)
class HardInput:
    level: int
    sign: int
    instance: Instance

    @property
    def label(self) -> str:
        return f"I{self.level}{'+' if self.sign > 0 else '-'}"


@dataclass(frozen=True)
class HardFamily:
    K: int
    T: int
    L: int
    beta: float
    eps: float
    lambda_lb: float
    inputs: tuple[HardInput, ...]

    @property
    def log2_L(self) -> float:
        return math.log2(self.L)

    @property
    def alpha(self) -> float:
        return self.log2_L / (2.0 * self.lambda_lb)

    @property
    def degenerate(self) -> bool:
        """log2(L) <= 0: the event-E level condition can never hold."""
        return self.L <= 1

    def gap(self, level: int) -> float:
        return 2.0 / self.beta**level

    def get(self, level: int, sign: int) -> HardInput:
        for h in self.inputs:
            if h.level == level and h.sign == sign:
                return h
        raise KeyError((level, sign))

    def instance(self, level: int, sign: int) -> Instance:
        return self.get(level, sign).instance

    def suffix(self, level: int) -> tuple[HardInput, ...]:
        """Members of levels >= ``level``, in family order."""
        return tuple(h for h in self.inputs if h.level >= level)

    def length_threshold(self, level: int) -> float:
        """lambda_lb * beta^(2 level) / log2 L; infinite when the family is degenerate."""
        if self.degenerate:
            return math.inf
        return self.lambda_lb * self.beta ** (2 * level) / self.log2_L

    def qualifying_levels(self, n: int) -> list[int]:
        if self.degenerate:
            return []
        return [l for l in range(1, self.L + 1) if self.length_threshold(l) >= n]

    def zeta(self, level: int, R: int) -> float:
        """Length of the agent-k tail segment, computed in extended precision."""
        if self.degenerate:
            return math.inf
        with mpmath.workdps(_EXTENDED_DPS):
            b = mpmath.mpf(self.beta)
            alpha = mpmath.log(self.L, 2) / (2 * mpmath.mpf(self.lambda_lb))
            z = b ** (2 * level) / alpha * b ** (2 * (mpmath.mpf(self.L) / R - 1)) / (8 * self.K)
            return float(z)


def make_hard_family(
    K: int,
    T: int,
    beta: float = DEFAULT_BETA,
    eps: float = DEFAULT_EPS,
    lambda_lb: float = DEFAULT_LAMBDA_LB,
) -> HardFamily:
    """The 2L inputs with arm means 1/2 + sigma/beta^l and 1/2 - sigma/beta^l,
    L = floor(log2(4KT) / 4)."""
    if K < 1 or T < 1:
        raise PreconditionError("K and T must be >= 1")
    if beta <= 1:
        raise PreconditionError("beta must exceed 1")
    if 4 * K * T < 16:
        raise PreconditionError("need 4KT >= 16 for at least one level")
    L = max(1, ((4 * K * T).bit_length() - 1) // 4)
    inputs = []
    for level in range(1, L + 1):
        off = 1.0 / beta**level
        if not (0.0 < 0.5 - off and 0.5 + off < 1.0):
            raise PreconditionError(f"level {level}: means 1/2 +- {off} leave (0, 1)")
        for sign in (1, -1):
            inst = Instance.bernoulli([0.5 + sign * off, 0.5 - sign * off])
            inputs.append(HardInput(level, sign, Instance(inst.arms, f"I{level}{'+' if sign > 0 else '-'}")))
    return HardFamily(K, T, L, float(beta), float(eps), float(lambda_lb), tuple(inputs))


# --- likelihoods -------------------------------------------------------------


def step_log_probs(instance: Instance, transcript: Transcript) -> np.ndarray:
    """ln Pr[arm j_t yields o_t] per entry; -inf where the reward is off the support."""
    n = len(transcript)
    out = np.full(n, -np.inf)
    if n == 0:
        return out
    if transcript.arms.max() >= instance.n_arms:
        raise PreconditionError("transcript pulls an arm the instance does not have")
    for a, arm in enumerate(instance.arms):
        mask = transcript.arms == a
        if not mask.any():
            continue
        r = transcript.rewards[mask]
        vals = out[mask]
        for v, p in arm.support:
            if p > 0:
                vals[np.abs(r - v) <= 1e-12] = math.log(p)
        out[mask] = vals
    return out


def transcript_log_likelihood(instance: Instance, transcript: Transcript) -> float:
    """ln g_I(gamma); -inf when some reward cannot occur."""
    return math.fsum(step_log_probs(instance, transcript).tolist()) if len(transcript) else 0.0


def transcript_likelihood(instance: Instance, transcript: Transcript) -> float:
    """g_I(gamma): probability that pulling j(gamma) on ``instance`` yields o(gamma)."""
    ll = transcript_log_likelihood(instance, transcript)
    return 0.0 if ll == -math.inf else math.exp(ll)


@dataclass(frozen=True)
class LikelihoodTrace:
    log_ratio: np.ndarray
    Z: np.ndarray
    steps: np.ndarray
    step_bound: float
    drift: float

    @property
    def max_abs_step(self) -> float:
        return float(np.abs(self.steps).max()) if len(self.steps) else 0.0

    @property
    def within_bound(self) -> bool:
        return self.max_abs_step <= self.step_bound


def llr_trace(A: Instance, B: Instance, transcript: Transcript, ell: int, beta: float = DEFAULT_BETA) -> LikelihoodTrace:
    """Running ln(g_A/g_B) over prefixes, and Z_t = ln-ratio - (11/beta^(2 ell)) t."""
    la = step_log_probs(A, transcript)
    lb = step_log_probs(B, transcript)
    if np.isneginf(la).any() or np.isneginf(lb).any():
        raise UndefinedRatio("transcript has zero likelihood under A or B")
    steps = la - lb
    log_ratio = np.concatenate([[0.0], np.cumsum(steps)])
    drift = 11.0 / beta ** (2 * ell)
    Z = log_ratio - drift * np.arange(len(log_ratio))
    return LikelihoodTrace(log_ratio, Z, steps, 5.0 / beta**ell, drift)


def _member_offsets(inst: Instance, ell: int, beta: float) -> np.ndarray:
    if inst.n_arms != 2 or any(a.kind != "bernoulli" for a in inst.arms):
        raise PreconditionError("drift check needs two Bernoulli arms")
    d = inst.means - 0.5
    if np.any(np.abs(d) > 1.0 / beta**ell + 1e-15):
        raise PreconditionError(f"{inst.label or inst.means} has an arm farther than 1/beta^{ell} from 1/2")
    return d


@dataclass(frozen=True)
class DriftReport:
    drifts: tuple[float, float]
    bound: float

    @property
    def ok(self) -> bool:
        return all(d <= self.bound for d in self.drifts)


def drift_bound_check(A: Instance, B: Instance, I: Instance, ell: int, beta: float = DEFAULT_BETA) -> DriftReport:
    """Exact expected one-step change of ln(g_A/g_B) when the reward comes from I, per arm."""
    dA = _member_offsets(A, ell, beta)
    dB = _member_offsets(B, ell, beta)
    dI = _member_offsets(I, ell, beta)
    drifts = []
    for j in range(2):
        a, b, i = dA[j], dB[j], dI[j]
        drifts.append(
            float((0.5 + i) * math.log((1 + 2 * a) / (1 + 2 * b)) + (0.5 - i) * math.log((1 - 2 * a) / (1 - 2 * b)))
        )
    return DriftReport((drifts[0], drifts[1]), 11.0 / beta ** (2 * ell))


@dataclass(frozen=True)
class CellWitness:
    level: int
    A: str
    B: str
    arm: int
    outcome: int
    value: float
    bound: float


def step_bound_violations(family: HardFamily, max_level: int = 6, coeff: float = 5.0) -> list[CellWitness]:
    """Every (level, A, B, arm, outcome) cell with |ln(P_A/P_B)| > coeff / beta^level.

    Cells are visited level by level, pairs in family order, arm 0 before
    arm 1, reward 1 before reward 0.
    """
    bad = []
    for level in range(1, min(family.L, max_level) + 1):
        bound = coeff / family.beta**level
        members = family.suffix(level)
        for hA in members:
            for hB in members:
                for arm in range(2):
                    for outcome in (1, 0):
                        pa = hA.instance.arms[arm].prob_of(outcome)
                        pb = hB.instance.arms[arm].prob_of(outcome)
                        v = math.log(pa / pb)
                        if abs(v) > bound:
                            bad.append(CellWitness(level, hA.label, hB.label, arm, outcome, v, bound))
    return bad


def drift_bound_violations(family: HardFamily, max_level: int = 6) -> list[tuple[int, str, str, str, int, float]]:
    """(level, A, B, I, arm, drift) for every triple in the level's suffix whose drift exceeds 11/beta^(2 level)."""
    bad = []
    for level in range(1, min(family.L, max_level) + 1):
        members = family.suffix(level)
        for hA in members:
            for hB in members:
                for hI in members:
                    rep = drift_bound_check(hA.instance, hB.instance, hI.instance, level, family.beta)
                    for arm, d in enumerate(rep.drifts):
                        if d > rep.bound:
                            bad.append((level, hA.label, hB.label, hI.label, arm, d))
    return bad


# --- event E -----------------------------------------------------------------


def outcome_table(transcript: Transcript) -> np.ndarray:
    """2x2 counts of (arm, reward) for a two-arm 0/1 transcript."""
    r = transcript.rewards
    if len(r) and not np.all((r == 0.0) | (r == 1.0)):
        raise PreconditionError("event E is defined for 0/1 rewards")
    if len(r) and transcript.arms.max() > 1:
        raise PreconditionError("event E is defined for two-arm transcripts")
    table = np.zeros((2, 2), dtype=np.int64)
    np.add.at(table, (transcript.arms, r.astype(np.intp)), 1)
    return table


def family_log_likelihoods(members: Sequence[HardInput], tables: np.ndarray) -> np.ndarray:
    """ln g_I for each member from (..., 2, 2) outcome tables; shape (..., len(members))."""
    logp = np.array(
        [[[math.log(h.instance.arms[a].prob_of(o)) for o in (0, 1)] for a in range(2)] for h in members]
    )
    return np.einsum("...ao,mao->...m", tables.astype(np.float64), logp)


@dataclass(frozen=True)
class EventEResult:
    holds: bool
    degenerate: bool
    levels: tuple[int, ...]
    witness: tuple[int, str, str, float] | None = None


def event_E_from_tables(family: HardFamily, tables: np.ndarray, n: int) -> np.ndarray:
    """Vectorized event E over many length-``n`` transcripts given their outcome tables."""
    levels = family.qualifying_levels(n)
    if not levels:
        return np.ones(tables.shape[:-2], dtype=bool)
    ll = family_log_likelihoods(family.suffix(min(levels)), tables)
    return (ll.max(axis=-1) - ll.min(axis=-1)) <= 2 * family.eps


def event_E_check(family: HardFamily, transcript: Transcript) -> EventEResult:
    """For every level whose length threshold admits |gamma|, all pairwise
    ln(g_A/g_B) over the level's suffix stay within 2 eps."""
    if family.degenerate:
        return EventEResult(True, True, ())
    n = len(transcript)
    levels = tuple(family.qualifying_levels(n))
    if not levels:
        return EventEResult(True, False, levels)
    # the suffixes are nested, so the smallest qualifying level covers every pair
    members = family.suffix(min(levels))
    ll = family_log_likelihoods(members, outcome_table(transcript))
    ia, ib = int(np.argmax(ll)), int(np.argmin(ll))
    gap = float(ll[ia] - ll[ib])
    if gap <= 2 * family.eps:
        return EventEResult(True, False, levels)
    hA, hB = members[ia], members[ib]
    return EventEResult(False, False, levels, (min(hA.level, hB.level), hA.label, hB.label, gap))


def azuma_failure_bound(family: HardFamily, n: int) -> float:
    """Union of exp(-eps^2 beta^(2l) / (200 n)) over qualifying levels and ordered pairs."""
    total = 0.0
    for level in family.qualifying_levels(n):
        m = len(family.suffix(level))
        total += m * m * math.exp(-(family.eps**2) * family.beta ** (2 * level) / (200.0 * n))
    return total


def uniform_play_tables(instance: Instance, n: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Outcome tables of ``trials`` transcripts where each pull picks an arm uniformly at random.

    Uniform play is non-adaptive, so the table is sampled through its
    binomial sufficient statistics rather than pull by pull.
    """
    mu = instance.means
    n0 = rng.binomial(n, 0.5, size=trials)
    n1 = n - n0
    s0 = rng.binomial(n0, mu[0])
    s1 = rng.binomial(n1, mu[1])
    tables = np.empty((trials, 2, 2), dtype=np.int64)
    tables[:, 0, 1] = s0
    tables[:, 0, 0] = n0 - s0
    tables[:, 1, 1] = s1
    tables[:, 1, 0] = n1 - s1
    return tables


# --- round partition, level index, projections -------------------------------


def _level_band(level: int, beta: float, alpha_K: mpmath.mpf) -> tuple[mpmath.mpf, mpmath.mpf]:
    b = mpmath.mpf(beta)
    return b ** (2 * (level - 1)) / alpha_K, b ** (2 * level) / alpha_K


def level_of_time(t: Fraction, family: HardFamily, K: int) -> int | None:
    """The integer l with beta^(2(l-1)) / (alpha K) <= t < beta^(2l) / (alpha K); None if alpha is 0."""
    if family.degenerate:
        return None
    with mpmath.workdps(_EXTENDED_DPS):
        alpha_K = mpmath.log(family.L, 2) / (2 * mpmath.mpf(family.lambda_lb)) * K
        x = mpmath.mpf(t.numerator) / t.denominator * alpha_K
        level = int(mpmath.floor(mpmath.log(x) / mpmath.log(mpmath.mpf(family.beta) ** 2))) + 1
        # settle rounding at band edges by direct comparison
        tt = mpmath.mpf(t.numerator) / t.denominator
        while True:
            lo, hi = _level_band(level, family.beta, alpha_K)
            if tt < lo:
                level -= 1
            elif tt >= hi:
                level += 1
            else:
                return level


@dataclass(frozen=True)
class RoundIndexReport:
    F: tuple[bool, ...]
    r_of_gamma: int | None
    ell_raw: int | None
    ell_of_gamma: int | None
    clamped: bool
    tau: int | None
    zeta: float
    m_r: Fraction | None
    r_range_ok: bool
    claim2_precondition: bool

    @property
    def partition_ok(self) -> bool:
        return sum(self.F) == 1


def r_range_ok(L: int, K: int, R: int) -> bool:
    """4L / log2 K <= R <= 2L / log2 log2 L."""
    if K < 2 or L < 2:
        return False
    lo = 4 * L / math.log2(K)
    ll = math.log2(math.log2(L))
    hi = math.inf if ll <= 0 else 2 * L / ll
    return lo <= R <= hi


def _times(run: CollabRun) -> list[Fraction]:
    return [Fraction(1, run.K)] + [Fraction(int(t)) for t in run.round_boundaries]


def tau_of(run: CollabRun, ell: int, family: HardFamily, r_of_gamma: int | None = None) -> int | None:
    """Round whose starting time t_{tau-1} falls in level ``ell``'s band.

    When several rounds qualify, r(gamma) wins if it is among them, otherwise
    the latest one.
    """
    times = _times(run)
    hits = [r for r in range(1, run.rounds + 1) if level_of_time(times[r - 1], family, run.K) == ell]
    if not hits:
        return None
    if r_of_gamma in hits:
        return r_of_gamma
    return hits[-1]


def round_index_report(run: CollabRun, family: HardFamily, R: int, ell: int | None = None) -> RoundIndexReport:
    """F_r flags, r(gamma), l(gamma), tau(gamma, l), zeta_l and m_r for one run.

    ``ell`` selects the level for tau and zeta; it defaults to l(gamma).
    l(gamma) is clamped into [1, L] with ``clamped`` set when it falls
    outside, which happens whenever R is outside its admissible range at
    desk-scale sizes.
    """
    K, T = run.K, run.horizon_T
    ratios = boundary_ratios(run.round_boundaries, K)
    meets = [ratio_meets(q, K, T, R) for q in ratios]
    F = tuple(meets[r] and not any(meets[:r]) for r in range(len(meets)))
    r_g = F.index(True) + 1 if any(F) else None
    times = _times(run)
    ell_raw = level_of_time(times[r_g - 1], family, K) if r_g is not None else None
    clamped = ell_raw is None or not (1 <= ell_raw <= family.L)
    ell_g = None if r_g is None else (min(max(ell_raw, 1), family.L) if ell_raw is not None else 1)
    target = ell if ell is not None else ell_g
    tau = tau_of(run, target, family, r_g) if target is not None else None
    zeta = family.zeta(target, R) if target is not None else math.nan
    # pulls per agent in round r(gamma); lengths count from time 0, not t_0 = 1/K
    starts = [0] + list(run.round_boundaries)
    m_r = Fraction(starts[r_g] - starts[r_g - 1]) if r_g is not None else None
    if family.degenerate:
        claim2 = False
    else:
        claim2 = family.L / R >= math.log(family.alpha, family.beta) / 2 + 1
    return RoundIndexReport(F, r_g, ell_raw, ell_g, clamped, tau, zeta, m_r, r_range_ok(family.L, K, R), claim2)


def event_Q(report: RoundIndexReport, ell_star: int) -> bool:
    return report.ell_of_gamma == ell_star


@dataclass(frozen=True)
class Projection:
    proj: Transcript
    last: Transcript
    tau: int
    zeta: float
    truncated: bool

    @property
    def empty_tail(self) -> bool:
        return len(self.last) == 0


def _entry_times(run: CollabRun, transcript: Transcript) -> np.ndarray:
    """Per-agent time step of each entry: round start plus position within the round."""
    starts = np.concatenate([[0], np.asarray(run.round_boundaries, dtype=np.int64)])
    times = np.empty(len(transcript), dtype=np.int64)
    for r in np.unique(transcript.rounds):
        idx = np.flatnonzero(transcript.rounds == r)
        times[idx] = starts[r - 1] + np.arange(1, len(idx) + 1)
    return times


def projection(run: CollabRun, k: int, tau: int, zeta: float) -> Projection:
    """Round-robin interleaving of all agents through round tau-1, then agent
    k's first floor(zeta) entries of round tau."""
    if run.per_agent_transcripts is None:
        raise ValueError("projection needs per-agent transcripts")
    if not 0 <= k < run.K:
        raise ValueError(f"agent {k} out of range")
    if not 1 <= tau <= run.rounds:
        raise ValueError(f"round {tau} out of range")
    heads, keys = [], []
    for agent, t in enumerate(run.per_agent_transcripts):
        early = t[t.rounds < tau]
        heads.append(early)
        keys.append(np.stack([_entry_times(run, early), np.full(len(early), agent)], axis=1))
    head = Transcript.concat(heads)
    if len(head):
        key = np.concatenate(keys)
        order = np.lexsort((key[:, 1], key[:, 0]))
        head = head[order]
    own = run.per_agent_transcripts[k]
    in_tau = own[own.rounds == tau]
    cut = len(in_tau) if math.isinf(zeta) else int(math.floor(zeta))
    last = in_tau[: min(cut, len(in_tau))]
    return Projection(Transcript.concat([head, last]), last, tau, zeta, cut > len(in_tau))


def project_transcript(run: CollabRun, k: int, ell: int, family: HardFamily, R: int) -> Projection:
    if not 1 <= ell <= family.L:
        raise ValueError(f"level {ell} outside [1, {family.L}]")
    rep = round_index_report(run, family, R, ell)
    if rep.tau is None:
        raise ValueError(f"no round starts inside level {ell}'s band")
    return projection(run, k, rep.tau, rep.zeta)


def paired_regret_lower(
    last_segments: Sequence[Transcript], family: HardFamily, ell: int, zeta: int | None = None
) -> tuple[float, float]:
    """U = sum of regrets under I_l^+, V = same under I_l^-.

    With ``zeta`` given and every segment exactly that long, checks
    U + V >= (#segments) * gap_l * zeta; otherwise the relaxed
    U + V >= gap_l * (total length).
    """
    plus, minus = family.instance(ell, 1), family.instance(ell, -1)
    U = math.fsum(regret_of_transcript(plus, s) for s in last_segments)
    V = math.fsum(regret_of_transcript(minus, s) for s in last_segments)
    gap = family.gap(ell)
    full = zeta is not None and all(len(s) == zeta for s in last_segments)
    need = len(last_segments) * gap * zeta if full else gap * sum(len(s) for s in last_segments)
    if U + V < need * (1 - 1e-12):
        raise BoundViolation(f"U + V = {U + V} below {need}")
    return U, V
