"""Epoch-based gap-independent player (variants a, b, c).

Arms are partitioned into golden (certified top-m), bad (certified not
top-m) and silver (undecided).  Each epoch i: try to grab a golden arm
for good; then K+m-1 iterations of [occupy an unexplored silver arm /
occupy any silver arm / pull it for 2^i estimation rounds]; finally
reclassify from the confidence intervals of halfwidth sqrt(g/2^i).

Variant a: weak feedback, known lower bound mu for mu_m (MC2).
Variant b: strong feedback (MC3); no mu is needed, alpha loses the 1/mu
           factor, and the mu-threshold conjuncts of the golden rules
           are dropped.
Variant c: like a, but a player that reaches an estimation block empty
           handed leaves the game for good.

All durations are derived from (K, m, T, mu, c_scale) only, identically
for every player, so epochs and iterations are synchronized in absolute
round indices without any communication.
"""

from __future__ import annotations

import math

from .subroutines import MC2, MC3, MusicalChairs

VARIANTS = ("a", "b", "c")

# segment kinds
SEG_GOLDEN = "golden_mc"
SEG_A = "explore_mc"
SEG_B = "fallback_mc"
SEG_C = "estimate"


def alg2_g(K, m, T, c_scale=1.0):
    return c_scale * math.log(4.0 * m**3 * T**2 * K) / 2.0

def alg2_alpha(K, m, T, mu_lower, variant, c_scale=1.0):
    base = c_scale * 4.0 * K * math.log(6.0 * K * m * m * T)
    if variant == "b":
        return math.ceil(base)
    return math.ceil(base / mu_lower)


class Alg2Player:
    def __init__(self, K, m, T, mu_lower=None, variant="a", c_scale=1.0,
                 instrument=False):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        if variant != "b" and (mu_lower is None or mu_lower <= 0):
            raise ValueError("variants a/c need a positive mu_lower")
        self.K = K
        self.m = m
        self.T = T
        self.variant = variant
        self.mu_lower = mu_lower
        self.g = alg2_g(K, m, T, c_scale)
        self.alpha = alg2_alpha(K, m, T, mu_lower, variant, c_scale)
        self.mc_variant = MC3 if variant == "b" else MC2

        self.golden = set()
        self.bad = set()
        self.silver = set(range(1, K + 1))
        self.explored = set()
        self.estimates = [0.0] * K
        self.halfwidth = [float("inf")] * K

        self.epoch = 1
        self.iteration = 0  # 0 = golden segment, 1..K+m-1 = exploration
        self.seg = SEG_GOLDEN
        self.pos = 0
        self.seg_len = self.alpha
        self.mc = self._new_mc(self.golden)
        self.held = 0          # arm held through the current iteration
        self.block_sum = 0.0
        self.occupied_golden = None
        self.has_left = False

        self.instrument = instrument
        self.events = []

    def _new_mc(self, target):
        return MusicalChairs(self.mc_variant, target, self.K, budget=self.alpha)

    # ------------------------------------------------------------ engine API

    def choose(self, t, u):
        if self.occupied_golden is not None:
            return self.occupied_golden
        if self.has_left:
            return 0
        if self.seg in (SEG_GOLDEN, SEG_A, SEG_B):
            if self.mc is not None:
                return self.mc.choose(u)
            if self.held:  # sticky through segment B
                return self.held
            return int(u * self.K) + 1  # idle random pulls
        # estimation segment
        if self.held:
            return self.held
        return int(u * self.K) + 1  # failed both MCs (variants a/b): waste time

    def observe(self, t, arm, reward, collision=None):
        if self.occupied_golden is not None or self.has_left:
            return
        if self.mc is not None:
            self.mc.observe(arm, reward,
                            collision if self.mc_variant == MC3 else None)
        elif self.seg == SEG_C and self.held:
            self.block_sum += reward
        self.pos += 1
        if self.pos == self.seg_len:
            self._end_segment()

    def committed(self):
        """(arm, rounds) the player is pinned to, or None if she still
        randomizes round by round."""
        if self.occupied_golden is not None:
            return (self.occupied_golden, None)
        if self.has_left:
            return (0, None)
        left = self.seg_len - self.pos
        if self.mc is not None and self.mc.occupied is not None:
            return (self.mc.occupied, left)
        if self.mc is None and self.held:
            return (self.held, left)
        return None

    def observe_block(self, t0, n, arm, rewards, collided):
        if self.occupied_golden is None and not self.has_left:
            if self.seg == SEG_C and self.held and not collided:
                self.block_sum += float(rewards.sum())
            self.pos += n
            if self.pos == self.seg_len:
                self._end_segment()

    # --------------------------------------------------------- segment logic

    def _emit(self, *event):
        if self.instrument:
            self.events.append(event)

    def _end_segment(self):
        if self.seg == SEG_GOLDEN:
            out = self.mc.output
            self._emit("mc_end", self.epoch, 0, "G", frozenset(self.golden), out)
            self.mc = None
            if out > 0:
                self.occupied_golden = out
                self._emit("golden_occupied", self.epoch, out)
                return
            self.explored = set()
            self._start_iteration(1)
        elif self.seg == SEG_A:
            target = None
            if self.mc is not None:
                self.held = self.mc.output
                target = self.mc.target
            self._emit("mc_end", self.epoch, self.iteration, "A",
                       frozenset(target) if target is not None else None, self.held)
            self.mc = None
            self.seg = SEG_B
            self.pos = 0
            self.seg_len = self.alpha
            if self.held == 0:
                self.mc = self._new_mc(self.silver)
        elif self.seg == SEG_B:
            target = None
            if self.mc is not None:
                self.held = self.mc.output
                target = self.mc.target
            self._emit("mc_end", self.epoch, self.iteration, "B",
                       frozenset(target) if target is not None else None, self.held)
            self.mc = None
            if self.held == 0 and self.variant == "c":
                self.has_left = True
                self._emit("leave", self.epoch)
                return
            self.seg = SEG_C
            self.pos = 0
            self.seg_len = 2 ** self.epoch
            self.block_sum = 0.0
        else:  # estimation block finished
            if self.held:
                j = self.held
                self.estimates[j - 1] = self.block_sum / self.seg_len
                self.halfwidth[j - 1] = math.sqrt(self.g / 2 ** self.epoch)
                self.explored.add(j)
                self._emit("estimate", self.epoch, j,
                           self.estimates[j - 1], self.halfwidth[j - 1])
            if self.iteration < self.K + self.m - 1:
                self._start_iteration(self.iteration + 1)
            else:
                self._classify_unexplored()
                self._update_classifications()
                self._emit("classify", self.epoch, frozenset(self.golden),
                           frozenset(self.bad), frozenset(self.silver))
                self.epoch += 1
                self.iteration = 0
                self.seg = SEG_GOLDEN
                self.pos = 0
                self.seg_len = self.alpha
                self.mc = self._new_mc(self.golden)

    def _start_iteration(self, k):
        self.iteration = k
        self.seg = SEG_A
        self.pos = 0
        self.seg_len = self.alpha
        self.held = 0
        unexplored = self.silver - self.explored
        self.mc = self._new_mc(unexplored) if unexplored else None

    # --------------------------------------------------------- classification

    def _classify_unexplored(self):
        """End of epoch i: an unexplored silver arm is either occupied by
        another player (hence golden) or mu-bad; its stale estimate against
        the previous epoch's halfwidth sqrt(g/2^(i-1)) tells which."""
        hw_prev = math.sqrt(self.g / 2 ** (self.epoch - 1))
        threshold = 0.0 if self.variant == "b" else self.mu_lower
        for j in sorted(self.silver - self.explored):
            if self.estimates[j - 1] - hw_prev > threshold:
                self.silver.discard(j)
                self.golden.add(j)
            else:
                self.silver.discard(j)
                self.bad.add(j)

    def _update_classifications(self):
        """Confidence-interval domination rules, both evaluated against a
        snapshot of (G, B, S) taken before any arm moves."""
        hw = math.sqrt(self.g / 2 ** self.epoch)
        silver = sorted(self.silver)
        n_golden = len(self.golden)
        n_bad = len(self.bad)
        est = self.estimates
        to_bad, to_golden = [], []
        for j in silver:
            above = sum(
                1 for l in silver
                if l != j and est[l - 1] - hw > est[j - 1] + hw
            )
            if above >= self.m - n_golden:
                to_bad.append(j)
                continue
            if self.variant != "b" and not (
                est[j - 1] > self.mu_lower + 3.0 * hw
            ):
                continue
            below = sum(
                1 for l in silver
                if l != j and est[l - 1] + hw < est[j - 1] - hw
            )
            if below >= self.K - self.m - n_bad:
                to_golden.append(j)
        for j in to_bad:
            self.silver.discard(j)
            self.bad.add(j)
        for j in to_golden:
            self.silver.discard(j)
            self.golden.add(j)

    # ----------------------------------------------------------------- misc

    @property
    def phase_tag(self):
        if self.occupied_golden is not None:
            return "fixated"
        if self.has_left:
            return "left"
        return f"epoch{self.epoch}:{self.seg}"

    @property
    def fixed_arm(self):
        return self.occupied_golden

    def classification_snapshot(self):
        return (frozenset(self.golden), frozenset(self.bad), frozenset(self.silver))
