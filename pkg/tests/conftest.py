"""Shared test helpers: minimal players implementing the engine protocol."""

from __future__ import annotations


class RandomPlayer:
    """Pulls a uniformly random arm every round, forever."""

    def __init__(self, K):
        self.K = K
        self.has_left = False
        self.fixed_arm = None
        self.phase_tag = "random"

    def choose(self, t, u):
        return int(u * self.K) + 1

    def observe(self, t, arm, reward, collision=None):
        pass

    def committed(self):
        return None

    def observe_block(self, t0, n, arm, rewards, collided):
        pass


class ScriptedPlayer:
    """Plays a fixed action sequence (cycled if the game is longer)."""

    def __init__(self, actions):
        self.actions = list(actions)
        self.has_left = False
        self.fixed_arm = None
        self.phase_tag = "scripted"
        self.observations = []

    def choose(self, t, u):
        return self.actions[(t - 1) % len(self.actions)]

    def observe(self, t, arm, reward, collision=None):
        self.observations.append((t, arm, reward, collision))

    def committed(self):
        return None

    def observe_block(self, t0, n, arm, rewards, collided):
        pass


class MCWrapper:
    """Drives a single MusicalChairs state machine inside the engine;
    sticks to the occupied arm (or idles on the last pulled arm after an
    exhausted budget)."""

    def __init__(self, mc):
        self.mc = mc
        self.has_left = False
        self.phase_tag = "mc"
        self.last_arm = 1

    def choose(self, t, u):
        if self.mc.occupied is not None:
            return self.mc.occupied
        if self.mc.terminal:
            return self.last_arm
        self.last_arm = self.mc.choose(u)
        return self.last_arm

    def observe(self, t, arm, reward, collision=None):
        if self.mc.occupied is None and not self.mc.terminal:
            needs_flag = self.mc.variant == "MC3"
            self.mc.observe(arm, reward, collision if needs_flag else None)

    def committed(self):
        if self.mc.occupied is not None:
            return (self.mc.occupied, None)
        if self.mc.terminal:
            return (self.last_arm, None)
        return None

    def observe_block(self, t0, n, arm, rewards, collided):
        pass

    @property
    def fixed_arm(self):
        return self.mc.occupied
