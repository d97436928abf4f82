"""Four-phase log-regret player for the no-collision-information model.

Phase 1 explores uniformly with collision-corrected mean estimates until
the sorted estimates show a gap of 3*sqrt(g/tau) around position m;
phase 2 keeps pulling uniformly for 24*tau rounds so slower players keep
unbiased estimators; phase 3 runs unbudgeted musical chairs on the
learned top-m set; phase 4 pulls the occupied arm forever.
"""

from __future__ import annotations

import math

from .subroutines import MC1, MusicalChairs

EXPLORE = "explore1"
WAIT = "wait2"
OCCUPY = "occupy3"
EXPLOIT = "exploit4"


def top_m_arms(estimates, m):
    """Top-m arm indices (1-based), stable: estimate descending, index
    ascending on ties."""
    order = sorted(range(len(estimates)), key=lambda i: (-estimates[i], i))
    return [i + 1 for i in order[:m]]


def sorted_gap(estimates, m):
    """Gap between the m-th and (m+1)-th sorted-descending estimates.

    With m == K there is no (m+1)-th entry; the gap degrades to the one
    between the last two estimates (every arm is wanted anyway, the rule
    only decides when estimation is confident enough to stop).
    """
    s = sorted(estimates, reverse=True)
    hi = min(m, len(s) - 1)
    return s[hi - 1] - s[hi]


class Alg1Player:
    def __init__(self, K, m, T, c_scale=1.0):
        if T < 1:
            raise ValueError("horizon must be >= 1")
        self.K = K
        self.m = m
        self.g = c_scale * 128.0 * K * math.log(3.0 * K * m * m * T * T)
        self.correction = (1.0 - 1.0 / K) ** (m - 1)
        self.counts = [0] * K
        self.sums = [0.0] * K
        self.estimates = [0.0] * K
        self.tau = 0
        self.phase = EXPLORE
        self.best_m = None
        self.wait_remaining = 0
        self.mc = None
        self.occupied = None
        self.has_left = False

    def choose(self, t, u):
        if self.phase == EXPLOIT:
            return self.occupied
        if self.phase == OCCUPY:
            return self.mc.choose(u)
        return int(u * self.K) + 1

    def observe(self, t, arm, reward, collision=None):
        if self.phase == EXPLORE:
            i = arm - 1
            self.counts[i] += 1
            self.sums[i] += reward
            self.estimates[i] = (self.sums[i] / self.counts[i]) / self.correction
            self.tau += 1
            gap = sorted_gap(self.estimates, self.m)
            if gap >= 3.0 * math.sqrt(self.g / self.tau):
                self.best_m = top_m_arms(self.estimates, self.m)
                self.wait_remaining = 24 * self.tau
                self.phase = WAIT
                if self.wait_remaining == 0:  # cannot happen (tau >= 1)
                    self._start_occupy()
        elif self.phase == WAIT:
            self.wait_remaining -= 1
            if self.wait_remaining == 0:
                self._start_occupy()
        elif self.phase == OCCUPY:
            self.mc.observe(arm, reward)
            if self.mc.occupied is not None:
                self.occupied = self.mc.occupied
                self.phase = EXPLOIT

    def _start_occupy(self):
        self.mc = MusicalChairs(MC1, self.best_m, self.K)
        self.phase = OCCUPY

    def committed(self):
        if self.phase == EXPLOIT:
            return (self.occupied, None)
        return None

    def observe_block(self, t0, n, arm, rewards, collided):
        pass  # only committed in phase 4, where observations are ignored

    @property
    def phase_tag(self):
        return self.phase

    @property
    def fixed_arm(self):
        return self.occupied if self.phase == EXPLOIT else None
