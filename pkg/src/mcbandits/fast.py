"""Vectorised runners for the long all-players-pull-uniformly prefixes.

While every player pulls uniformly at random, the whole game is a pure
function of the round index, so it can be simulated in numpy chunks:
actions come from the same per-player counter streams the engine uses,
rewards from the same per-arm streams, and per-arm cumulative sums use
the same sequential accumulation order.  The runners then inject the
resulting state into ordinary player objects and hand the tail of the
game to the per-round engine, which is bit-identical to having stepped
every round (up to float association in the carried regret cumsum,
which differs by at most a few ulps).
"""

from __future__ import annotations

import numpy as np

from . import rng
from .alg_logregret import Alg1Player, EXPLORE, WAIT, top_m_arms
from .engine import GameTrace, regret_baseline, run_game
from .env import Environment
from .extensions import AntiCoordPlayer, EstimateMPlayer, PROBE

_CHUNK = 1 << 15


def _uniform_chunk(env, player_streams, t0, n):
    """Actions, shared rewards, collisions and received rewards for n
    rounds in which every player pulls uniformly at random."""
    cfg = env.config
    m, K = cfg.m, cfg.K
    A = np.empty((m, n), dtype=np.int64)
    for j, s in enumerate(player_streams):
        A[j] = (s.units(t0, n) * K).astype(np.int64) + 1
    counts = np.zeros((n, K), dtype=np.int64)
    rows = np.arange(n)
    for j in range(m):
        counts[rows, A[j] - 1] += 1
    coll = counts >= 2
    if cfg.per_player_means is not None:
        R = np.empty((m, n))
        for j in range(m):
            for i in range(K):
                mean = cfg.per_player_means[j][i]
                y = (env.arm_player_streams[j][i].units(t0, n) < mean).astype(float)
                hit = A[j] == i + 1
                R[j][hit] = np.where(coll[rows, i][hit], 0.0, y[hit])
    else:
        Y = env.round_rewards_block(t0, n)
        R = np.where(coll[rows[None, :], A - 1], 0.0, Y[rows[None, :], A - 1])
    return A, R, coll


def _prefix_regret(A, coll, means, baseline):
    """Per-round regret increments, matching the engine's float order."""
    n = A.shape[1]
    rows = np.arange(n)
    earned = np.zeros(n)
    for j in range(A.shape[0]):
        earned = earned + np.where(coll[rows, A[j] - 1], 0.0, means[A[j] - 1])
    return baseline - earned


class _PrefixLedger:
    def __init__(self, means, m, mode, checkpoints):
        self.baseline = regret_baseline(means, m, mode)
        self.means = np.asarray(means, dtype=float)
        self.total = 0.0
        self.last_nonzero = 0
        self.cps = sorted({int(c) for c in checkpoints})
        self.cp_idx = 0
        self.cp_values = []

    def absorb(self, t0, inc):
        """t0 = 1-based round index of inc[0]."""
        n = len(inc)
        cum = self.total + np.cumsum(inc)
        nz = np.flatnonzero(inc != 0.0)
        if nz.size:
            self.last_nonzero = t0 + int(nz[-1])
        while self.cp_idx < len(self.cps) and self.cps[self.cp_idx] < t0 + n:
            c = self.cps[self.cp_idx]
            if c >= t0:
                self.cp_values.append((c, float(cum[c - t0])))
            self.cp_idx += 1
        self.total = float(cum[-1])


def run_alg1_fast(config, *, c_scale=1.0, regret_mode="top_m", checkpoints=(),
                  chunk=_CHUNK) -> GameTrace:
    """Log-regret players: vectorise the random phases 1-2 until the first
    player starts musical chairs, then switch to the per-round engine."""
    cfg = config
    m, K, T = cfg.m, cfg.K, cfg.horizon
    env = Environment(cfg)
    player_streams = [rng.player_stream(cfg.master_seed, j) for j in range(m)]
    means = cfg.means
    probe = Alg1Player(K, m, T, c_scale=c_scale)
    g, corr = probe.g, probe.correction

    # carried per-player accumulators for the gap-stopping scan
    csum = np.zeros((m, K))
    ccount = np.zeros((m, K), dtype=np.int64)
    tau = [None] * m  # stopping round per player
    frozen = [None] * m  # (counts, sums, estimates) at the stopping round
    hi = min(m, K - 1)  # sorted position the stopping gap straddles

    ledger = _PrefixLedger(means, m, regret_mode, checkpoints)
    t = 0
    switch = None  # min_j 25*tau_j: last round the all-random prefix is valid
    while t < T and (switch is None or t < switch):
        n = min(chunk, T - t)
        if switch is not None:
            n = min(n, switch - t)
        A, R, coll = _uniform_chunk(env, player_streams, t + 1, n)
        # pass 1: find each still-exploring player's candidate stopping round
        rows = {}
        cand = {}
        for j in range(m):
            if tau[j] is not None:
                continue
            onehot = np.zeros((n, K))
            onehot[np.arange(n), A[j] - 1] = 1.0
            cnt = ccount[j] + np.cumsum(onehot, axis=0).astype(np.int64)
            sm = csum[j] + np.cumsum(onehot * R[j][:, None], axis=0)
            with np.errstate(invalid="ignore", divide="ignore"):
                est = np.where(cnt > 0, (sm / np.where(cnt > 0, cnt, 1)) / corr, 0.0)
            s = np.sort(est, axis=1)[:, ::-1]
            gaps = s[:, hi - 1] - s[:, hi]
            taus = t + 1 + np.arange(n)
            ok = gaps >= 3.0 * np.sqrt(g / taus)
            idx = np.flatnonzero(ok)
            rows[j] = (cnt, sm, est)
            if idx.size:
                cand[j] = int(idx[0])
        # a stop found mid-chunk can pull the switch point inside the chunk;
        # truncate before committing so no invalid rounds are absorbed
        new_switch = switch
        for j, k in cand.items():
            s25 = 25 * (t + 1 + k)
            if new_switch is None or s25 < new_switch:
                new_switch = s25
        n_eff = n if new_switch is None else min(n, new_switch - t)
        for j, (cnt, sm, est) in rows.items():
            k = cand.get(j)
            if k is not None and k < n_eff:
                tau[j] = t + 1 + k
                frozen[j] = (cnt[k].tolist(), sm[k].tolist(), est[k].tolist())
            else:
                ccount[j], csum[j] = cnt[n_eff - 1], sm[n_eff - 1]
        ledger.absorb(
            t + 1, _prefix_regret(A[:, :n_eff], coll[:n_eff], means, ledger.baseline)
        )
        t += n_eff
        switch = new_switch

    players = []
    for j in range(m):
        p = Alg1Player(K, m, T, c_scale=c_scale)
        if tau[j] is None or tau[j] > t:
            p.phase = EXPLORE
            p.counts, p.sums = ccount[j].tolist(), csum[j].tolist()
            with np.errstate(invalid="ignore", divide="ignore"):
                est = np.where(
                    ccount[j] > 0,
                    (csum[j] / np.where(ccount[j] > 0, ccount[j], 1)) / corr,
                    0.0,
                )
            p.estimates = est.tolist()
            p.tau = t
        else:
            cnts, sums, ests = frozen[j]
            p.counts, p.sums, p.estimates = list(cnts), list(sums), list(ests)
            p.tau = tau[j]
            p.best_m = top_m_arms(ests, m)
            remaining = 25 * tau[j] - t
            if remaining > 0:
                p.phase = WAIT
                p.wait_remaining = remaining
            else:
                p._start_occupy()
        players.append(p)

    return run_game(
        cfg,
        players,
        regret_mode=regret_mode,
        checkpoints=checkpoints,
        t_start=t,
        initial_regret=ledger.total,
        initial_fixation_round=ledger.last_nonzero,
        prior_checkpoints=ledger.cp_values,
        env=env,
    )


def _run_random_explore(env, players, n_explore, ledger, chunk):
    """Shared uniform-exploration prefix: returns per-player (counts, sums)
    accumulated over rounds 1..n_explore."""
    cfg = env.config
    m, K = cfg.m, cfg.K
    player_streams = [rng.player_stream(cfg.master_seed, j) for j in range(m)]
    counts = np.zeros((m, K), dtype=np.int64)
    sums = np.zeros((m, K))
    t = 0
    while t < n_explore:
        n = min(chunk, n_explore - t)
        A, R, coll = _uniform_chunk(env, player_streams, t + 1, n)
        for j in range(m):
            counts[j] += np.bincount(A[j] - 1, minlength=K)
            sums[j] += np.bincount(A[j] - 1, weights=R[j], minlength=K)
        ledger.absorb(t + 1, _prefix_regret(A, coll, cfg.means, ledger.baseline))
        t += n
    return counts, sums


def run_anticoord_fast(config, *, eps, delta, regret_mode="top_m",
                       checkpoints=(), chunk=_CHUNK) -> GameTrace:
    """Anti-coordination players: vectorise the exploration prefix, then
    inject the estimates and let the engine run the K singleton stages."""
    cfg = config
    m, K = cfg.m, cfg.K
    env = Environment(cfg)
    players = [AntiCoordPlayer(K, m, eps, delta) for _ in range(m)]
    n_explore = players[0].explore_rounds
    if cfg.horizon < n_explore:
        raise ValueError("horizon shorter than the exploration schedule")
    ledger = _PrefixLedger(cfg.means, m, regret_mode, checkpoints)
    counts, sums = _run_random_explore(env, players, n_explore, ledger, chunk)
    for j, p in enumerate(players):
        p.counts, p.sums = counts[j].tolist(), sums[j].tolist()
        p.estimates = [
            (s / c) / p.correction if c else 0.0
            for s, c in zip(p.sums, p.counts)
        ]
        p.order = top_m_arms(p.estimates, K)
        p.pos = n_explore  # consumed; _start_stage resets it
        p.phase = "stages"
        p._start_stage(1)
    return run_game(
        cfg,
        players,
        regret_mode=regret_mode,
        checkpoints=checkpoints,
        t_start=n_explore,
        initial_regret=ledger.total,
        initial_fixation_round=ledger.last_nonzero,
        prior_checkpoints=ledger.cp_values,
        env=env,
    )


def run_estimate_m_fast(config, *, mu_lower, delta, regret_mode="top_m",
                        checkpoints=(), chunk=_CHUNK):
    """Player-count estimation: vectorise the sigma-exploration prefix;
    the probe blocks then ride the engine's committed fast path.

    Returns (trace, players)."""
    cfg = config
    m, K = cfg.m, cfg.K
    env = Environment(cfg)
    players = [EstimateMPlayer(K, mu_lower, delta) for _ in range(m)]
    n_explore = players[0].explore_rounds
    if cfg.horizon < n_explore:
        raise ValueError("horizon shorter than the exploration schedule")
    ledger = _PrefixLedger(cfg.means, m, regret_mode, checkpoints)
    counts, sums = _run_random_explore(env, players, n_explore, ledger, chunk)
    for j, p in enumerate(players):
        p.counts, p.sums = counts[j].tolist(), sums[j].tolist()
        p.sigma = [s / c if c else 0.0 for s, c in zip(p.sums, p.counts)]
        p.best = max(range(K), key=lambda i: (p.sigma[i], -i)) + 1
        p.phase = PROBE
        p.pos = 0
    trace = run_game(
        cfg,
        players,
        regret_mode=regret_mode,
        checkpoints=checkpoints,
        t_start=n_explore,
        initial_regret=ledger.total,
        initial_fixation_round=ledger.last_nonzero,
        prior_checkpoints=ledger.cp_values,
        env=env,
    )
    return trace, players
