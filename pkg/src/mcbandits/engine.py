"""Game engine: drives m player objects against an environment.

Players implement:
    choose(t, u) -> arm            u = the player's own unit draw for round t
    observe(t, arm, reward, collision=None)
    committed() -> (arm, n) | None n = None means "forever"
    observe_block(t0, n, arm, rewards, collided)
    has_left, phase_tag, fixed_arm (properties)

When every player is committed the engine advances whole blocks at once:
the per-round regret increment is constant, reward arrays are only
materialised for arms whose player actually consumes them, and checkpoint
values inside the block are interpolated exactly.  Both paths draw player
randomness as a pure function of (seed, player, round), so mixing them is
bit-identical to stepping every round.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .env import (
    REWARD_AND_COLLISION,
    Environment,
    EnvironmentConfig,
    resolve_round,
)

TOP_M = "top_m"
TOP_K_MINUS_1 = "top_k_minus_1"
TOP_K_LEAVING = "top_k_leaving"

_REGRET_MODES = (TOP_M, TOP_K_MINUS_1, TOP_K_LEAVING)


def regret_baseline(means: np.ndarray, m: int, mode: str = TOP_M) -> float:
    """Per-round benchmark the regret is measured against."""
    s = np.sort(np.asarray(means, dtype=float))[::-1]
    if mode == TOP_M:
        return float(s[: min(m, len(s))].sum())
    if mode == TOP_K_MINUS_1:
        return float(s[:-1].sum())
    if mode == TOP_K_LEAVING:
        return float(s.sum())
    raise ValueError(f"unknown regret mode {mode!r}; expected one of {_REGRET_MODES}")


class RegretLedger:
    """Accumulates regret; the collided and dummy actions earn nothing."""

    def __init__(self, means, m, mode=TOP_M):
        self.means = np.asarray(means, dtype=float)
        self.mode = mode
        self.baseline = regret_baseline(self.means, m, mode)
        self.total = 0.0
        self.last_nonzero_round = 0

    def round_increment(self, actions, collision) -> float:
        earned = 0.0
        for a in actions:
            if a > 0 and not collision[a - 1]:
                earned += self.means[a - 1]
        return self.baseline - earned

    def add(self, t_end: int, increment: float, n: int = 1):
        if increment != 0.0:
            self.last_nonzero_round = t_end
        self.total += increment * n


@dataclass
class RoundRecord:
    t: int
    actions: tuple
    rewards: tuple
    collided: tuple  # per player
    phases: tuple = ()  # per-player phase tags (informational only)


@dataclass
class GameTrace:
    config: EnvironmentConfig
    regret_mode: str
    rounds: int = 0
    regret: float = 0.0
    fixation_round: int = 0  # last round with a nonzero regret increment
    checkpoints: list = field(default_factory=list)  # (t, cumulative regret)
    fixed_arms: tuple = ()
    has_left: tuple = ()
    phase_tags: tuple = ()
    records: list = field(default_factory=list)  # RoundRecord, full fidelity only
    player_events: tuple = ()  # instrumentation streams, one per player

    @property
    def fixated(self) -> bool:
        return self.fixation_round < self.rounds

    def to_csv(self, path):
        """Full-fidelity action/reward log, one row per (round, player)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "player", "action", "reward", "collided", "phase"])
            for rec in self.records:
                for j, a in enumerate(rec.actions):
                    phase = rec.phases[j] if rec.phases else ""
                    w.writerow(
                        [rec.t, j, a, rec.rewards[j], int(rec.collided[j]), phase]
                    )


def run_game(
    config: EnvironmentConfig,
    players,
    *,
    regret_mode: str = TOP_M,
    checkpoints=(),
    record_rounds: bool = False,
    t_start: int = 0,
    initial_regret: float = 0.0,
    initial_fixation_round: int = 0,
    prior_checkpoints=(),
    bulk: bool = True,
    env: Environment | None = None,
) -> GameTrace:
    """Play rounds t_start+1 .. horizon.

    t_start / initial_* let a vectorised prefix runner hand over mid-game
    with players whose state already reflects the skipped rounds.
    """
    if len(players) != config.m:
        raise ValueError(f"expected {config.m} players, got {len(players)}")
    env = env or Environment(config)
    T = config.horizon
    ledger = RegretLedger(config.means, config.m, regret_mode)
    ledger.total = initial_regret
    ledger.last_nonzero_round = initial_fixation_round
    strong = config.feedback == REWARD_AND_COLLISION
    per_player_env = config.per_player_means is not None

    player_streams = [
        rng.player_stream(config.master_seed, j) for j in range(config.m)
    ]
    cps = sorted({int(c) for c in checkpoints if t_start < int(c) <= T})
    cp_values = list(prior_checkpoints)
    cp_idx = 0

    trace = GameTrace(config=config, regret_mode=regret_mode)
    t = t_start
    while t < T:
        commits = [p.committed() for p in players] if bulk else [None]
        if all(c is not None for c in commits):
            arms = [c[0] for c in commits]
            spans = [c[1] for c in commits if c[1] is not None]
            n = min(spans) if spans else T - t
            n = min(n, T - t)
            counts = np.bincount(arms, minlength=config.K + 1)
            collision = counts[1:] >= 2
            inc = ledger.round_increment(arms, collision)
            blocks = {}  # arm -> shared reward array
            for j, a in enumerate(arms):
                if a == 0 or collision[a - 1]:
                    rewards = blocks.setdefault(0, np.zeros(n))
                    collided = a != 0
                elif per_player_env:
                    mean = config.per_player_means[j][a - 1]
                    u = env.arm_player_streams[j][a - 1].units(t + 1, n)
                    rewards = (u < mean).astype(float)
                    collided = False
                else:
                    rewards = blocks.get(a)
                    if rewards is None:
                        rewards = blocks[a] = env.arm_rewards_block(a, t + 1, n)
                    collided = False
                players[j].observe_block(t + 1, n, a, rewards, collided)
            while cp_idx < len(cps) and cps[cp_idx] <= t + n:
                c = cps[cp_idx]
                cp_values.append((c, ledger.total + inc * (c - t)))
                cp_idx += 1
            ledger.add(t + n, inc, n)
            t += n
        else:
            tr = t + 1
            us = [s.unit(tr) for s in player_streams]
            actions = [p.choose(tr, u) for p, u in zip(players, us)]
            rewards = (
                env.per_player_round_rewards(tr)
                if per_player_env
                else env.round_rewards(tr)
            )
            out = resolve_round(
                config,
                actions,
                rewards,
                leaving_allowed=[getattr(p, "has_left", False) for p in players],
            )
            for j, p in enumerate(players):
                flag = bool(out.per_player_collision_observed[j]) if strong else None
                p.observe(tr, actions[j], float(out.per_player_reward[j]), flag)
            inc = ledger.round_increment(actions, out.per_arm_collision)
            ledger.add(tr, inc)
            if record_rounds:
                per_player_coll = [
                    a > 0 and bool(out.per_arm_collision[a - 1]) for a in actions
                ]
                trace.records.append(
                    RoundRecord(
                        tr,
                        tuple(actions),
                        tuple(float(r) for r in out.per_player_reward),
                        tuple(per_player_coll),
                        tuple(str(getattr(p, "phase_tag", "")) for p in players),
                    )
                )
            if cp_idx < len(cps) and cps[cp_idx] == tr:
                cp_values.append((tr, ledger.total))
                cp_idx += 1
            t = tr

    trace.rounds = T
    trace.regret = ledger.total
    trace.fixation_round = ledger.last_nonzero_round
    trace.checkpoints = cp_values
    trace.fixed_arms = tuple(getattr(p, "fixed_arm", None) for p in players)
    trace.has_left = tuple(bool(getattr(p, "has_left", False)) for p in players)
    trace.phase_tags = tuple(getattr(p, "phase_tag", "") for p in players)
    trace.player_events = tuple(getattr(p, "events", None) for p in players)
    return trace


def compute_regret(records, means, m, mode=TOP_M) -> float:
    """Recompute cumulative regret from a full-fidelity record list;
    used to cross-check the engine's running ledger during replay."""
    means = np.asarray(means, dtype=float)
    base = regret_baseline(means, m, mode)
    total = 0.0
    for rec in records:
        earned = sum(
            means[a - 1]
            for a, c in zip(rec.actions, rec.collided)
            if a > 0 and not c
        )
        total += base - earned
    return total


def replay_diff(records_a, records_b):
    """First (t, player, field) where two full-fidelity traces diverge,
    or None when identical."""
    for ra, rb in zip(records_a, records_b):
        if ra.t != rb.t:
            return (min(ra.t, rb.t), None, "t")
        for j, (xa, xb) in enumerate(zip(ra.actions, rb.actions)):
            if xa != xb:
                return (ra.t, j, "action")
        for j, (xa, xb) in enumerate(zip(ra.rewards, rb.rewards)):
            if xa != xb:
                return (ra.t, j, "reward")
        for j, (xa, xb) in enumerate(zip(ra.collided, rb.collided)):
            if xa != xb:
                return (ra.t, j, "collided")
    if len(records_a) != len(records_b):
        t = min(len(records_a), len(records_b))
        return (t + 1, None, "length")
    return None
