"""Relaxations of the base assumptions, plus the anti-coordination player.

* DoublingPlayer: unknown horizon, restart the inner algorithm on guessed
  horizons 1, 2, 4, ...
* EstimateMPlayer / recover_m: unknown player count; estimate the
  collision-shrunk mean of the best arm, then its true mean, and read m
  off the ratio via unique interval intersection.
* AntiCoordPlayer: reach an eps-Nash equilibrium of a stochastic
  anti-coordination game (explore, then K singleton musical-chairs
  stages in descending-estimate order, dummy action as fallback).
* MoreThanKPlayer: the two m > K strategies (occupy the best K-1 arms
  with the rest on the worst arm, or leave the game on failure).
"""

from __future__ import annotations

import math

from .alg_logregret import sorted_gap, top_m_arms
from .subroutines import MC2, MC3, MusicalChairs


class NoCandidateError(ValueError):
    """No integer makes the scaled interval intersect the target one."""


class AmbiguousRecoveryError(ValueError):
    """Two or more integers intersect: the interval-width precondition of
    the uniqueness lemma was violated (eps too large)."""


class EstimationFailedError(RuntimeError):
    """All probe iterations elapsed without a usable solo block."""


def estimate_m_epsilon(K: int, mu_lower: float) -> float:
    return mu_lower * ((1.0 - 1.0 / K) ** (-2.0 / 5.0) - 1.0) / 48.0


def recover_m(mu_hat, sigma_l, eps, K, m_max=None):
    """The unique m with [(mu_hat-eps)q^(m-1), (mu_hat+eps)q^(m-1)]
    intersecting [sigma_l-eps, sigma_l+eps], q = 1-1/K."""
    if mu_hat - eps <= 0 or sigma_l - eps <= 0:
        raise ValueError("need mu_hat - eps > 0 and sigma_l - eps > 0")
    q = 1.0 - 1.0 / K
    lo_t, hi_t = sigma_l - eps, sigma_l + eps
    hits = []
    m = 1
    while True:
        scale = q ** (m - 1)
        lo, hi = (mu_hat - eps) * scale, (mu_hat + eps) * scale
        if hi < lo_t:  # intervals only sink as m grows; nothing further can hit
            break
        if lo <= hi_t and hi >= lo_t:
            hits.append(m)
        m += 1
        if m_max is not None and m > m_max:
            break
    if not hits:
        raise NoCandidateError(
            f"no integer m intersects: mu_hat={mu_hat}, sigma={sigma_l}, eps={eps}"
        )
    if len(hits) > 1:
        raise AmbiguousRecoveryError(f"multiple candidates {hits}")
    return hits[0]


class DoublingPlayer:
    """Unknown-horizon wrapper: behaves as inner(2^k) during rounds
    (2^k - 1, 2^(k+1) - 1], rebuilt from scratch at each boundary."""

    def __init__(self, inner_factory):
        self.inner_factory = inner_factory
        self.guess = 1
        self.used = 0
        self.inner = inner_factory(1)
        self.segment_starts = [0]  # rounds consumed before each segment

    def _roll(self):
        while self.used >= self.guess:
            self.used -= self.guess
            self.guess *= 2
            self.inner = self.inner_factory(self.guess)

    def choose(self, t, u):
        return self.inner.choose(self.used + 1, u)

    def observe(self, t, arm, reward, collision=None):
        self.inner.observe(self.used + 1, arm, reward, collision)
        self.used += 1
        self._roll()

    def committed(self):
        c = self.inner.committed()
        if c is None:
            return None
        arm, n = c
        seg_left = self.guess - self.used
        return (arm, seg_left if n is None else min(n, seg_left))

    def observe_block(self, t0, n, arm, rewards, collided):
        self.inner.observe_block(t0, n, arm, rewards, collided)
        self.used += n
        self._roll()

    @property
    def has_left(self):
        return getattr(self.inner, "has_left", False)

    @property
    def phase_tag(self):
        return f"T^={self.guess}:{getattr(self.inner, 'phase_tag', '?')}"

    @property
    def fixed_arm(self):
        return None  # fixation never survives the next restart


EXPLORE = "estimate_sigma"
PROBE = "block_probe"
DONE = "done"
FAILED = "failed"


class EstimateMPlayer:
    """Player-count estimation (all players run this in lockstep)."""

    def __init__(self, K, mu_lower, delta):
        if K < 2 or mu_lower <= 0 or not 0 < delta < 1:
            raise ValueError("need K >= 2, mu_lower > 0, 0 < delta < 1")
        self.K = K
        self.mu_lower = mu_lower
        self.delta = delta
        self.eps = estimate_m_epsilon(K, mu_lower)
        self.explore_rounds = math.ceil(
            8.0 * K * math.log(K * K / (9.0 * delta)) / self.eps**2
        )
        self.block_len = math.ceil(math.log(6.0 / delta) / self.eps**2)
        self.probe_iterations = math.ceil(4.0 * K * math.log(6.0 * K / (mu_lower * delta)))

        self.phase = EXPLORE
        self.pos = 0
        self.counts = [0] * K
        self.sums = [0.0] * K
        self.sigma = None
        self.best = None
        self.block_arm = 0
        self.block_sum = 0.0
        self.probes_used = 0
        self.m_out = None

    def choose(self, t, u):
        if self.phase == EXPLORE:
            return int(u * self.K) + 1
        if self.phase == PROBE:
            if self.pos == 0:
                self.block_arm = int(u * self.K) + 1
                self.block_sum = 0.0
            return self.block_arm
        return 0  # done or failed: idle on the dummy action

    def observe(self, t, arm, reward, collision=None):
        if self.phase == EXPLORE:
            self.counts[arm - 1] += 1
            self.sums[arm - 1] += reward
            self.pos += 1
            if self.pos == self.explore_rounds:
                self.sigma = [
                    s / c if c else 0.0 for s, c in zip(self.sums, self.counts)
                ]
                self.best = max(range(self.K), key=lambda i: (self.sigma[i], -i)) + 1
                self.phase = PROBE
                self.pos = 0
        elif self.phase == PROBE:
            self.block_sum += reward
            self.pos += 1
            if self.pos == self.block_len:
                self._end_block()

    def _end_block(self):
        mu_hat = self.block_sum / self.block_len
        self.probes_used += 1
        self.pos = 0
        if self.block_arm == self.best and mu_hat > 0:
            self.m_out = recover_m(mu_hat, self.sigma[self.best - 1], self.eps, self.K)
            self.phase = DONE
        elif self.probes_used >= self.probe_iterations:
            self.phase = FAILED

    def committed(self):
        if self.phase in (DONE, FAILED):
            return (0, None)
        if self.phase == PROBE and self.pos > 0:
            return (self.block_arm, self.block_len - self.pos)
        return None

    def observe_block(self, t0, n, arm, rewards, collided):
        if self.phase in (DONE, FAILED):
            return
        if not collided:
            self.block_sum += float(rewards.sum())
        self.pos += n
        if self.pos == self.block_len:
            self._end_block()

    @property
    def has_left(self):
        return self.phase in (DONE, FAILED)

    @property
    def phase_tag(self):
        return self.phase

    @property
    def fixed_arm(self):
        return None


class UnknownMPlayer:
    """Composite pipeline: run the m-estimation protocol, then hand over
    to an algorithm built with the recovered player count."""

    def __init__(self, K, mu_lower, delta, inner_factory, T):
        self.estimator = EstimateMPlayer(K, mu_lower, delta)
        self.inner_factory = inner_factory  # (m, T_remaining) -> player
        self.T = T
        self.inner = None
        self.rounds_used = 0
        self.inner_used = 0

    def _maybe_switch(self):
        if self.inner is None and self.estimator.phase == DONE:
            remaining = max(1, self.T - self.rounds_used)
            self.inner = self.inner_factory(self.estimator.m_out, remaining)

    def choose(self, t, u):
        if self.inner is not None:
            return self.inner.choose(self.inner_used + 1, u)
        return self.estimator.choose(t, u)

    def observe(self, t, arm, reward, collision=None):
        if self.inner is not None:
            self.inner.observe(self.inner_used + 1, arm, reward, collision)
            self.inner_used += 1
        else:
            self.estimator.observe(t, arm, reward, collision)
        self.rounds_used += 1
        self._maybe_switch()

    def committed(self):
        active = self.inner if self.inner is not None else self.estimator
        return active.committed()

    def observe_block(self, t0, n, arm, rewards, collided):
        if self.inner is not None:
            self.inner.observe_block(t0, n, arm, rewards, collided)
            self.inner_used += n
        else:
            self.estimator.observe_block(t0, n, arm, rewards, collided)
        self.rounds_used += n
        self._maybe_switch()

    @property
    def has_left(self):
        return getattr(self.inner, "has_left", False) or (
            self.inner is None and self.estimator.phase == FAILED
        )

    @property
    def phase_tag(self):
        if self.inner is not None:
            return f"inner:{getattr(self.inner, 'phase_tag', '?')}"
        return f"estimate_m:{self.estimator.phase}"

    @property
    def fixed_arm(self):
        return getattr(self.inner, "fixed_arm", None) if self.inner else None


class AntiCoordPlayer:
    """Reach an eps-Nash equilibrium of an anti-coordination game."""

    def __init__(self, K, m, eps, delta):
        self.K = K
        self.m = m
        self.eps = eps
        self.delta = delta
        self.correction = (1.0 - 1.0 / K) ** (m - 1)
        self.explore_rounds = math.ceil(
            512.0 * K * math.log(6.0 * m * K / delta) / eps**2
        )
        self.stage_budget = math.ceil(4.0 * K * math.log(2.0 * m * K / delta) / eps)
        self.total_rounds = self.explore_rounds + K * self.stage_budget

        self.phase = "explore"
        self.pos = 0
        self.counts = [0] * K
        self.sums = [0.0] * K
        self.estimates = [0.0] * K
        self.order = None
        self.stage = 0
        self.mc = None
        self.chosen = 0  # 0 = dummy

    def _start_stage(self, j):
        self.stage = j
        self.pos = 0
        self.mc = MusicalChairs(
            MC2, [self.order[j - 1]], self.K, budget=self.stage_budget
        )

    def choose(self, t, u):
        if self.phase == "explore":
            return int(u * self.K) + 1
        if self.phase == "stages":
            if self.chosen:
                return self.chosen
            return self.mc.choose(u)
        return self.chosen

    def observe(self, t, arm, reward, collision=None):
        if self.phase == "explore":
            self.counts[arm - 1] += 1
            self.sums[arm - 1] += reward
            self.pos += 1
            if self.pos == self.explore_rounds:
                self.estimates = [
                    (s / c) / self.correction if c else 0.0
                    for s, c in zip(self.sums, self.counts)
                ]
                self.order = top_m_arms(self.estimates, self.K)
                self.phase = "stages"
                self._start_stage(1)
        elif self.phase == "stages":
            if not self.chosen:
                self.mc.observe(arm, reward)
                if self.mc.occupied is not None:
                    self.chosen = self.mc.occupied
            self.pos += 1
            if self.pos == self.stage_budget:
                if self.stage < self.K:
                    self._start_stage(self.stage + 1)
                    if self.chosen:
                        self.mc = None
                else:
                    self.phase = "done"

    def committed(self):
        if self.phase == "done":
            return (self.chosen, None)
        if self.phase == "stages" and self.chosen:
            return (self.chosen, self.stage_budget - self.pos)
        return None

    def observe_block(self, t0, n, arm, rewards, collided):
        if self.phase == "stages":
            self.pos += n
            if self.pos == self.stage_budget:
                if self.stage < self.K:
                    self._start_stage(self.stage + 1)
                    self.mc = None
                else:
                    self.phase = "done"

    @property
    def has_left(self):
        return self.chosen == 0 and self.phase == "done"

    @property
    def phase_tag(self):
        if self.phase == "stages":
            return f"stage{self.stage}"
        return self.phase

    @property
    def fixed_arm(self):
        return self.chosen if self.phase == "done" and self.chosen else None


ORIGINAL = "original"
LEAVING = "leaving"


class MoreThanKPlayer:
    """m > K strategies.

    original: learn the (K-1, K) gap, wait 24*tau, musical-chairs on the
    best K-1 arms, and fall back to the worst arm if unoccupied.
    leaving: one musical-chairs run (MC2 with a known mean lower bound,
    MC3 under collision feedback); leave permanently on failure.
    """

    def __init__(self, K, m, T, mode=ORIGINAL, C=128.0, mu_lower=None,
                 collision_info=False, c_scale=1.0):
        if mode not in (ORIGINAL, LEAVING):
            raise ValueError(f"unknown mode {mode!r}")
        self.K = K
        self.m = m
        self.mode = mode
        self.p = (1.0 - 1.0 / K) ** (m - 1)
        C = C * c_scale
        self.C = C
        self.T = T
        self.has_left = False
        self.occupied = None
        if mode == ORIGINAL:
            self.g = C * K * math.log(K * T) / self.p**2
            self.correction = self.p
            self.counts = [0] * K
            self.sums = [0.0] * K
            self.estimates = [0.0] * K
            self.tau = 0
            self.phase = "explore"
            self.wait_remaining = 0
            self.mc = None
            self.fallback = None
        else:
            if mu_lower is None and not collision_info:
                raise ValueError("leaving mode needs mu_lower or collision feedback")
            scale = C * math.log(T * K) * K * math.exp(2.0 * m / K)
            if collision_info:
                budget = math.ceil(scale)
                self.mc = MusicalChairs(MC3, range(1, K + 1), K, budget=budget)
            else:
                budget = math.ceil(scale / mu_lower)
                self.mc = MusicalChairs(MC2, range(1, K + 1), K, budget=budget)
            self.phase = "mc"

    def choose(self, t, u):
        if self.occupied is not None:
            return self.occupied
        if self.has_left:
            return 0
        if self.phase in ("explore", "wait"):
            return int(u * self.K) + 1
        if self.phase == "mc":
            return self.mc.choose(u)
        return self.fallback

    def observe(self, t, arm, reward, collision=None):
        if self.occupied is not None or self.has_left:
            return
        if self.phase == "explore":
            i = arm - 1
            self.counts[i] += 1
            self.sums[i] += reward
            self.estimates[i] = (self.sums[i] / self.counts[i]) / self.correction
            self.tau += 1
            gap = sorted_gap(self.estimates, self.K - 1)
            if gap >= 3.0 * math.sqrt(self.g / self.tau):
                self.phase = "wait"
                self.wait_remaining = 24 * self.tau
        elif self.phase == "wait":
            self.wait_remaining -= 1
            if self.wait_remaining == 0:
                budget = math.ceil(
                    self.C * self.K * math.log(self.K * self.T)
                    * math.sqrt(self.tau / self.g) / self.p
                )
                best = top_m_arms(self.estimates, self.K - 1)
                self.mc = MusicalChairs(MC2, best, self.K, budget=budget)
                self.phase = "mc"
        elif self.phase == "mc":
            self.mc.observe(
                arm, reward, collision if self.mc.variant == MC3 else None
            )
            if self.mc.occupied is not None:
                self.occupied = self.mc.occupied
            elif self.mc.terminal:
                if self.mode == LEAVING:
                    self.has_left = True
                else:
                    self.fallback = min(
                        range(self.K), key=lambda i: (self.estimates[i], i)
                    ) + 1
                    self.phase = "fallback"

    def committed(self):
        if self.occupied is not None:
            return (self.occupied, None)
        if self.has_left:
            return (0, None)
        if self.phase == "fallback":
            return (self.fallback, None)
        if self.phase == "mc" and self.mc.occupied is not None:
            return (self.mc.occupied, self.mc.remaining())
        return None

    def observe_block(self, t0, n, arm, rewards, collided):
        if self.phase == "mc" and self.mc.occupied is not None:
            self.occupied = self.mc.occupied

    @property
    def phase_tag(self):
        if self.occupied is not None:
            return "fixated"
        if self.has_left:
            return "left"
        return self.phase

    @property
    def fixed_arm(self):
        if self.occupied is not None:
            return self.occupied
        if self.phase == "fallback":
            return self.fallback
        return None
