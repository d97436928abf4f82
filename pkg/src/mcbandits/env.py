"""Arms, reward distributions, collision resolution and feedback models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from . import rng

BERNOULLI = "bernoulli"
UNIFORM = "uniform"
SUBGAUSSIAN = "subgaussian"

REWARD_ONLY = "reward"
REWARD_AND_COLLISION = "reward_collision"


class InvalidActionError(ValueError):
    def __init__(self, player: int, action, K: int):
        self.player = player
        self.action = action
        super().__init__(
            f"player {player} chose invalid action {action!r} (valid: 0..{K})"
        )


class ConfigError(ValueError):
    pass


def _clipped_normal_mean(loc: float, sigma: float) -> float:
    """E[max(0, N(loc, sigma))]."""
    z = loc / sigma
    return loc * ndtr(z) + sigma * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class ArmSpec:
    """One arm: a mean in [0, 1] and a distribution kind.

    * bernoulli: reward in {0, 1} with P(1) = mean.
    * uniform: uniform on an interval inside [0, 1] with the given mean
      (piecewise: [0, 2*mean] if mean <= 1/2, else [2*mean-1, 1]).
    * subgaussian: max(0, Normal(loc, sigma)), with loc solved so the
      achieved mean equals `mean` (the clipping raises the mean of the
      underlying normal, so loc < mean in general).  Nonnegative, and its
      upper tail is dominated by the Normal(mean, sigma) tail.
    """

    mean: float
    kind: str = BERNOULLI
    sigma: float = 1.0
    loc: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.kind not in (BERNOULLI, UNIFORM, SUBGAUSSIAN):
            raise ConfigError(f"unknown distribution kind {self.kind!r}")
        if self.kind == SUBGAUSSIAN:
            if self.mean <= 0 or self.sigma <= 0:
                raise ConfigError("subgaussian arms need mean > 0 and sigma > 0")
            lo = self.mean - 10 * self.sigma
            loc = brentq(
                lambda v: _clipped_normal_mean(v, self.sigma) - self.mean,
                lo, self.mean + 1e-9,
            )
            object.__setattr__(self, "loc", float(loc))
        else:
            if not 0.0 <= self.mean <= 1.0:
                raise ConfigError(f"mean {self.mean} outside [0, 1]")

    def sample(self, u: float) -> float:
        """Map a uniform draw in [0, 1) to a reward sample."""
        if self.kind == BERNOULLI:
            return 1.0 if u < self.mean else 0.0
        if self.kind == UNIFORM:
            if self.mean <= 0.5:
                return 2.0 * self.mean * u
            return 1.0 - 2.0 * (1.0 - self.mean) * u
        # subgaussian: inverse-CDF normal, clipped at zero
        return max(0.0, self.loc + self.sigma * float(ndtri(max(u, 5e-324))))

    def sample_array(self, u: np.ndarray) -> np.ndarray:
        """Vectorized `sample`; bit-identical to the scalar path."""
        if self.kind == BERNOULLI:
            return (u < self.mean).astype(np.float64)
        if self.kind == UNIFORM:
            if self.mean <= 0.5:
                return 2.0 * self.mean * u
            return 1.0 - 2.0 * (1.0 - self.mean) * u
        return np.maximum(0.0, self.loc + self.sigma * ndtri(np.maximum(u, 5e-324)))


@dataclass(frozen=True)
class EnvironmentConfig:
    K: int
    m: int
    arms: tuple
    feedback: str = REWARD_ONLY
    horizon: int = 1
    master_seed: int = 0
    per_player_means: tuple | None = None  # m rows of K outcomes each
    dummy_action_enabled: bool = False

    def __post_init__(self):
        if self.K < 2:
            raise ConfigError("need K >= 2 arms")
        if self.m < 1:
            raise ConfigError("need m >= 1 players")
        if len(self.arms) != self.K:
            raise ConfigError(f"expected {self.K} arm specs, got {len(self.arms)}")
        if self.feedback not in (REWARD_ONLY, REWARD_AND_COLLISION):
            raise ConfigError(f"unknown feedback model {self.feedback!r}")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.per_player_means is not None:
            if len(self.per_player_means) != self.m or any(
                len(row) != self.K for row in self.per_player_means
            ):
                raise ConfigError("per_player_means must be m rows of K values")
            if any(not 0.0 <= v <= 1.0 for row in self.per_player_means for v in row):
                raise ConfigError("per_player_means entries must lie in [0, 1]")

    @property
    def means(self) -> np.ndarray:
        return np.array([a.mean for a in self.arms])

    @property
    def sorted_means(self) -> np.ndarray:
        return np.sort(self.means)[::-1]

    @property
    def gap(self) -> float:
        """Delta = mu_(m) - mu_(m+1); defined only for m < K."""
        if self.m >= self.K:
            raise ConfigError("gap is defined only when m < K")
        s = self.sorted_means
        return float(s[self.m - 1] - s[self.m])

    @property
    def gap_positive(self) -> float:
        """Delta' = max{Delta, min positive drop below mu_(m)}."""
        s = self.sorted_means
        mu_m = s[self.m - 1]
        drops = [mu_m - v for v in self.means if mu_m - v > 0]
        best = min(drops) if drops else 0.0
        return float(max(self.gap, best)) if self.m < self.K else float(best)


def config_from_means(
    means, m, *, kind=BERNOULLI, sigma=1.0, **kwargs
) -> EnvironmentConfig:
    arms = tuple(ArmSpec(mean=float(v), kind=kind, sigma=sigma) for v in means)
    return EnvironmentConfig(K=len(arms), m=m, arms=arms, **kwargs)


@dataclass
class RoundOutcome:
    per_player_reward: np.ndarray
    per_arm_collision: np.ndarray  # K booleans
    per_player_collision_observed: np.ndarray | None  # only under strong feedback


class Environment:
    """Immutable environment; round resolution is a pure function of
    (config, actions, rewards) so parallel replications can share nothing."""

    def __init__(self, config: EnvironmentConfig):
        self.config = config
        seed = config.master_seed
        self.arm_streams = [rng.arm_stream(seed, i) for i in range(config.K)]
        if config.per_player_means is not None:
            self.arm_player_streams = [
                [rng.arm_player_stream(seed, i, j) for i in range(config.K)]
                for j in range(config.m)
            ]
        else:
            self.arm_player_streams = None

    def round_rewards(self, t: int) -> np.ndarray:
        """One sample per arm for round t (every arm is sampled every round)."""
        cfg = self.config
        return np.array(
            [cfg.arms[i].sample(self.arm_streams[i].unit(t)) for i in range(cfg.K)]
        )

    def round_rewards_block(self, t0: int, n: int) -> np.ndarray:
        """Rewards for rounds t0..t0+n-1, shape (n, K)."""
        cfg = self.config
        out = np.empty((n, cfg.K))
        for i in range(cfg.K):
            out[:, i] = cfg.arms[i].sample_array(self.arm_streams[i].units(t0, n))
        return out

    def arm_rewards_block(self, arm: int, t0: int, n: int) -> np.ndarray:
        """Rewards of a single arm (1-based) for rounds t0..t0+n-1."""
        spec = self.config.arms[arm - 1]
        return spec.sample_array(self.arm_streams[arm - 1].units(t0, n))

    def per_player_round_rewards(self, t: int) -> np.ndarray:
        """Anti-coordination games: per-(player, arm) samples, shape (m, K)."""
        cfg = self.config
        out = np.empty((cfg.m, cfg.K))
        for j in range(cfg.m):
            for i in range(cfg.K):
                mean = cfg.per_player_means[j][i]
                u = self.arm_player_streams[j][i].unit(t)
                out[j, i] = 1.0 if u < mean else 0.0  # bernoulli outcomes
        return out


def sample_round_rewards(config: EnvironmentConfig, t: int) -> np.ndarray:
    """Reward vector for round t; the same (seed, round) always yields the
    same vector."""
    if not 1 <= t <= config.horizon:
        raise ValueError(f"round {t} outside [1, {config.horizon}]")
    return Environment(config).round_rewards(t)


def resolve_round(
    config: EnvironmentConfig,
    actions,
    rewards,
    *,
    leaving_allowed=None,
) -> RoundOutcome:
    """Apply collision semantics: r_j = Y_{A_j} * (1 - C_{A_j}).

    `leaving_allowed` is an optional per-player boolean sequence marking
    players that have left the game (action 0 is then legal for them even
    when the dummy action is disabled).
    """
    K, m = config.K, config.m
    if len(actions) != m:
        raise ValueError(f"expected {m} actions, got {len(actions)}")
    counts = np.zeros(K + 1, dtype=np.int64)
    for j, a in enumerate(actions):
        if not isinstance(a, (int, np.integer)) or not 0 <= a <= K:
            raise InvalidActionError(j, a, K)
        if a == 0:
            allowed = config.dummy_action_enabled or (
                leaving_allowed is not None and leaving_allowed[j]
            )
            if not allowed:
                raise InvalidActionError(j, a, K)
        counts[a] += 1
    collision = counts[1:] >= 2  # dummy action never collides
    per_player = np.zeros(m)
    rewards = np.asarray(rewards)
    for j, a in enumerate(actions):
        if a > 0 and not collision[a - 1]:
            # rewards is (K,) normally, (m, K) in per-player-means games
            per_player[j] = rewards[a - 1] if rewards.ndim == 1 else rewards[j, a - 1]
    observed = None
    if config.feedback == REWARD_AND_COLLISION:
        observed = np.array(
            [a > 0 and bool(collision[a - 1]) for a in actions], dtype=bool
        )
    return RoundOutcome(per_player, collision, observed)


def no_collision_probability(K: int, m: int) -> float:
    """(1 - 1/K)^(m-1): chance a uniform random pull avoids all of m-1
    other uniform random pullers."""
    if K < 1 or m < 1:
        raise ValueError("need K >= 1 and m >= 1")
    return (1.0 - 1.0 / K) ** (m - 1)
