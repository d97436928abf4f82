"""Multiplayer stochastic bandits with collisions: simulation library and
experiment harness.

K arms, m players, no communication; players pulling the same arm in the
same round collide and earn nothing.  The library implements the
musical-chairs occupation subroutines, a four-phase log-regret algorithm
for the reward-only feedback model, an epoch-based golden/silver/bad
classification algorithm (three variants), relaxations (unknown horizon,
unknown player count, more players than arms), the anti-coordination
eps-Nash algorithm, verification oracles, and a seeded experiment CLI.
"""

from .alg_epochs import Alg2Player, alg2_alpha, alg2_g
from .alg_logregret import Alg1Player, sorted_gap, top_m_arms
from .analysis import (
    AuditReport,
    Lemma4Report,
    Lemma5Report,
    NashReport,
    TrendReport,
    audit_classification,
    check_lemma5_bound,
    fit_regret_trend,
    verify_lemma4_grid,
    verify_nash,
)
from .engine import (
    TOP_K_LEAVING,
    TOP_K_MINUS_1,
    TOP_M,
    GameTrace,
    RegretLedger,
    compute_regret,
    regret_baseline,
    replay_diff,
    run_game,
)
from .env import (
    BERNOULLI,
    REWARD_AND_COLLISION,
    REWARD_ONLY,
    SUBGAUSSIAN,
    UNIFORM,
    ArmSpec,
    ConfigError,
    Environment,
    EnvironmentConfig,
    InvalidActionError,
    config_from_means,
    no_collision_probability,
    resolve_round,
    sample_round_rewards,
)
from .extensions import (
    AmbiguousRecoveryError,
    AntiCoordPlayer,
    DoublingPlayer,
    EstimateMPlayer,
    MoreThanKPlayer,
    NoCandidateError,
    UnknownMPlayer,
    recover_m,
)
from .fast import run_alg1_fast, run_anticoord_fast, run_estimate_m_fast
from .harness import (
    ExperimentResult,
    ExperimentSpec,
    SpecValidationError,
    run_experiment,
    run_replication,
)
from .subroutines import MC1, MC2, MC3, ContractViolation, MusicalChairs

__version__ = "1.0.0"
