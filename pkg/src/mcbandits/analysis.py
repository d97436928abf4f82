"""Verification oracles: brute-force eps-Nash checking, exhaustive
unique-interval-intersection verification, a Monte Carlo check of the
positive-probability lower bound, regret-trend classification, and the
golden/bad classification soundness audit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .env import SUBGAUSSIAN, ArmSpec

LOGARITHMIC = "logarithmic-consistent"
SQRT = "sqrt-consistent"
LINEAR = "linear-consistent"
UNCLASSIFIED = "unclassified"

TREND_TARGETS = {LOGARITHMIC: 1.0, SQRT: math.sqrt(2.0), LINEAR: 2.0}
TREND_TOLERANCE = 0.15


class InsufficientDataError(ValueError):
    pass


# ---------------------------------------------------------------------------
# eps-Nash verification


@dataclass
class NashReport:
    assignment: tuple
    eps: float
    is_eps_nash: bool
    worst_deviation: tuple  # (player, alternative action, improvement)
    utilities: tuple


def _utility(assignment, j, action, means_row):
    if action == 0:
        return 0.0
    for i, a in enumerate(assignment):
        if i != j and a == action:
            return 0.0  # occupied (or collided) target pays nothing
    return float(means_row[action - 1])


def verify_nash(assignment, per_player_means, eps) -> NashReport:
    """Check no unilateral deviation gains more than eps.

    per_player_means: m rows of K means; action 0 is the dummy action."""
    assignment = tuple(int(a) for a in assignment)
    m = len(assignment)
    if len(per_player_means) != m:
        raise ValueError("need one means row per player")
    K = len(per_player_means[0])
    utilities = tuple(
        _utility(assignment, j, assignment[j], per_player_means[j]) for j in range(m)
    )
    worst = (0, assignment[0], 0.0)
    for j in range(m):
        for alt in range(0, K + 1):
            if alt == assignment[j]:
                continue
            gain = _utility(assignment, j, alt, per_player_means[j]) - utilities[j]
            if gain > worst[2]:
                worst = (j, alt, gain)
    return NashReport(assignment, float(eps), worst[2] <= eps, worst, utilities)


# ---------------------------------------------------------------------------
# unique interval intersection (integer exponents)


def count_intersecting_integers(a, b, c, d, p, n_lo=-64, n_hi=64):
    """Integers n with [a*p^n, b*p^n] intersecting [c, d]."""
    lo = math.floor(math.log(c / b) / math.log(p)) - 2
    hi = math.ceil(math.log(d / a) / math.log(p)) + 2
    count = 0
    for n in range(max(lo, n_lo), min(hi, n_hi) + 1):
        scale = p**n
        if a * scale <= d and b * scale >= c:
            count += 1
    return count


@dataclass
class Lemma4Report:
    p: float
    points: int
    passed: bool
    double_count: int
    zero_count: int
    counterexamples: list = field(default_factory=list)  # (a, b, c, d, count)


def lemma4_grid(p, points=10_000, width_exponent=0.4, z_span=6):
    """Deterministic quadruple grid: base interval [a, b] and target
    [c, d], both of width ratio <= p**width_exponent, linked by an exact
    relation x * p^z = y with x in [a, b], y in [c, d]."""
    out = []
    for k in range(points):
        f1 = (k + 0.5) / points
        f2 = ((k * 31 + 7) % points + 0.5) / points
        f3 = ((k * 113 + 3) % points + 0.5) / points
        f4 = ((k * 197 + 11) % points + 0.5) / points
        x = p**f1  # anchor in [1, p)
        z = (k % (2 * z_span + 1)) - z_span
        wa = width_exponent * (0.05 + 0.95 * f2)
        wc = width_exponent * (0.05 + 0.95 * f3)
        a = x * p ** (-wa * f4)
        b = a * p**wa
        y = x * p**z
        c = y * p ** (-wc * (1.0 - f4))
        d = c * p**wc
        out.append((a, b, c, d))
    return out


def verify_lemma4_grid(p, grid_spec=None) -> Lemma4Report:
    """Count intersecting integers over a quadruple grid; pass iff the
    count is exactly 1 everywhere."""
    spec = dict(grid_spec or {})
    grid = spec.pop("grid", None)
    if grid is None:
        grid = lemma4_grid(p, **spec)
    doubles = zeros = 0
    bad = []
    for (a, b, c, d) in grid:
        n = count_intersecting_integers(a, b, c, d, p)
        if n != 1:
            if n == 0:
                zeros += 1
            else:
                doubles += 1
            if len(bad) < 32:
                bad.append((a, b, c, d, n))
    return Lemma4Report(p, len(grid), not bad, doubles, zeros, bad)


# ---------------------------------------------------------------------------
# positive-probability lower bound (Monte Carlo)


@dataclass
class Lemma5Report:
    mu: float
    sigma: float
    samples: int
    estimate: float
    bound: float
    passed: bool


def lemma5_bound(mu, sigma):
    """min{|mu / (sigma * ln(sigma/mu))|, 1} / 99; the ln(1) = 0 case is
    read as min{+inf, 1} = 1."""
    if mu <= 0 or sigma <= 0:
        raise ValueError("need mu > 0 and sigma > 0")
    log = math.log(sigma / mu)
    first = math.inf if log == 0.0 else abs(mu / (sigma * log))
    return min(first, 1.0) / 99.0

def check_lemma5_bound(mu, sigma, sample_count, *, seed=0) -> Lemma5Report:
    """Empirical P(X > 0) for the truncated-subgaussian kind with mean mu,
    plus 3-sigma binomial slack, must exceed the bound."""
    if sample_count < 10**5:
        raise ValueError("need at least 1e5 samples")
    spec = ArmSpec(mean=mu, kind=SUBGAUSSIAN, sigma=sigma)
    stream = rng.arm_stream(seed, 0)
    positive = 0
    block = 1 << 20
    t = 1
    remaining = sample_count
    while remaining:
        n = min(block, remaining)
        x = spec.sample_array(stream.units(t, n))
        positive += int((x > 0).sum())
        t += n
        remaining -= n
    phat = positive / sample_count
    slack = 3.0 * math.sqrt(phat * (1.0 - phat) / sample_count)
    bound = lemma5_bound(mu, sigma)
    return Lemma5Report(mu, sigma, sample_count, phat, bound, phat + slack >= bound)


# ---------------------------------------------------------------------------
# regret-trend classification


@dataclass
class TrendReport:
    checkpoints: tuple
    ratios: tuple
    used_ratios: tuple
    descriptor: str
    mean_ratio: float


def fit_regret_trend(checkpoints, fixation_round=None) -> TrendReport:
    """Classify regret growth from regret(2t)/regret(t) ratios.

    Default: the last 3 ratios decide.  With fixation_round given, only
    ratios whose earlier checkpoint lies at or after fixation are used
    (pre-fixation growth is dominated by exploration constants)."""
    cps = sorted((int(t), float(r)) for t, r in checkpoints)
    if len(cps) < 4:
        raise InsufficientDataError("need at least 4 checkpoints")
    ratios = []
    for (t0, r0), (t1, r1) in zip(cps, cps[1:]):
        ratios.append((t0, t1, (r1 / r0) if r0 else math.inf))
    if fixation_round is None:
        used = [r for (_, _, r) in ratios[-3:]]
    else:
        used = [r for (t0, _, r) in ratios if t0 >= fixation_round]
        if not used:
            used = [ratios[-1][2]]
    descriptor = UNCLASSIFIED
    for name, target in TREND_TARGETS.items():
        if all(abs(r - target) <= TREND_TOLERANCE for r in used):
            descriptor = name
            break
    mean_ratio = float(np.mean(used))
    return TrendReport(
        tuple(cps), tuple(r for (_, _, r) in ratios), tuple(used), descriptor,
        mean_ratio,
    )


# ---------------------------------------------------------------------------
# classification soundness audit


@dataclass
class AuditReport:
    flags: list  # (player, epoch, arm, kind)  kind in {wrongly_bad, wrongly_golden}
    mc_failures: list  # (player, epoch, arm): mu-good silver arm never estimated
    confidence_violations: list  # (player, epoch, arm, muhat, halfwidth)
    clean: bool  # no flags

    @property
    def bad_events(self):
        """Everything the soundness analysis conditions on."""
        return [
            (j, e, f"mc failure: arm {a} missed") for (j, e, a) in self.mc_failures
        ] + [
            (j, e, f"confidence violation on arm {a}")
            for (j, e, a, _, _) in self.confidence_violations
        ]

    @property
    def logged_bad_events(self):
        """Bad events evident from the trace alone (no true means needed):
        a player finished an epoch without occupying every reachable
        mu-good silver arm, i.e. repeated musical-chairs failures."""
        return self.mc_failures


def audit_classification(player_events, true_means, *, mu_good=0.0) -> AuditReport:
    """Soundness check of golden/bad classification against true means.

    player_events: one instrumentation stream per player, each a list of
        ("mc_end", epoch, iteration, sub, target, held)
        ("estimate", epoch, arm, muhat, halfwidth)
        ("classify", epoch, golden, bad, silver)
        ("golden_occupied", epoch, arm) / ("leave", epoch)
    A bad arm is wrong iff fewer than m other arms have mean >= its own
    (it belongs to every top-m set); a golden arm is wrong iff at least m
    arms have strictly larger mean.  An MC failure is charged per epoch:
    a mu-good silver arm the player never estimated although it was not
    golden-occupied by another player (a single failed targeted run is
    retried in later iterations and is harmless on its own)."""
    means = list(true_means)
    m = len(player_events)
    K = len(means)
    flags = []
    mc_failures = []
    confidence_violations = []

    # permanently occupied golden arms, per player: (epoch it started, arm)
    golden_holds = {}
    left_at = {}  # player -> epoch of leaving
    for j, events in enumerate(player_events):
        for ev in events or ():
            if ev[0] == "golden_occupied":
                golden_holds[j] = (ev[1], ev[2])
            elif ev[0] == "leave":
                left_at[j] = ev[1]

    for j, events in enumerate(player_events):
        if not events:
            continue
        estimated = {}  # epoch -> set of arms with an estimate this epoch
        silver_after = {}  # epoch -> silver set at that epoch's end
        for ev in events:
            kind = ev[0]
            if kind == "estimate":
                _, epoch, arm, muhat, halfwidth = ev
                estimated.setdefault(epoch, set()).add(arm)
                if abs(muhat - means[arm - 1]) > halfwidth:
                    confidence_violations.append((j, epoch, arm, muhat, halfwidth))
            elif kind == "classify":
                _, epoch, golden, bad, silver = ev
                silver_after[epoch] = set(silver)
                for arm in bad:
                    better_eq = sum(
                        1 for i, mu in enumerate(means)
                        if i != arm - 1 and mu >= means[arm - 1]
                    )
                    if better_eq < m:
                        flags.append((j, epoch, arm, "wrongly_bad"))
                for arm in golden:
                    strictly_better = sum(1 for mu in means if mu > means[arm - 1])
                    if strictly_better >= m:
                        flags.append((j, epoch, arm, "wrongly_golden"))
        # exploration completeness, epoch by epoch
        for epoch in sorted(silver_after):
            if j in golden_holds and golden_holds[j][0] <= epoch:
                continue  # stopped exploring mid-epoch
            if j in left_at and left_at[j] <= epoch:
                continue
            silver_start = (
                silver_after.get(epoch - 1, set(range(1, K + 1)))
                if epoch > 1
                else set(range(1, K + 1))
            )
            blocked = {
                arm
                for j2, (e0, arm) in golden_holds.items()
                if j2 != j and e0 <= epoch
            }
            for arm in sorted(silver_start):
                if means[arm - 1] < mu_good or arm in blocked:
                    continue
                if arm not in estimated.get(epoch, ()):
                    mc_failures.append((j, epoch, arm))

    return AuditReport(flags, mc_failures, confidence_violations, not flags)
