"""Experiment harness: TOML specs, seeded replications, CSV/JSON output.

Config grammar (TOML):

    [environment]
    K = 4
    m = 2
    means = [0.9, 0.8, 0.3, 0.2]
    kind = "bernoulli"              # bernoulli | uniform | subgaussian
    feedback = "reward"             # reward | reward_collision
    horizon = 200000
    # per_player_means = [[...], ...]   # anti-coordination games
    # dummy_action_enabled = true

    [algorithm]
    name = "alg1"    # alg1 | alg2 | anticoord | estimate_m | doubling | more_than_k
    c_scale = 0.01
    # mu_lower, variant, eps, delta, mode, collision_info, inner, constant

    [experiment]
    replications = 100
    base_seed = 1
    seed_increment = 1
    # checkpoints = [1024, 2048, ...]   # default: powers of two up to horizon
    # regret_mode = "top_m"
    # fast = true

Derived quantities (g, alpha, epsilon, budgets) are always computed from
the primitives; they can not be entered directly.
"""

from __future__ import annotations

import csv
import json
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

try:
    import tomllib as tomli  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli

from . import engine, fast
from .alg_epochs import Alg2Player
from .alg_logregret import Alg1Player, top_m_arms
from .analysis import verify_nash
from .env import (
    BERNOULLI,
    REWARD_AND_COLLISION,
    REWARD_ONLY,
    SUBGAUSSIAN,
    UNIFORM,
    EnvironmentConfig,
    config_from_means,
)
from .extensions import (
    AntiCoordPlayer,
    DoublingPlayer,
    EstimateMPlayer,
    MoreThanKPlayer,
)

ALGORITHMS = ("alg1", "alg2", "anticoord", "estimate_m", "doubling", "more_than_k")


class SpecValidationError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid experiment spec:\n  " + "\n  ".join(self.violations))


def default_checkpoints(T):
    cps = []
    t = 1 << 10
    while t <= T:
        cps.append(t)
        t <<= 1
    if not cps or cps[-1] != T:
        cps.append(T)
    return cps


@dataclass
class ExperimentSpec:
    environment: dict
    algorithm: dict
    replications: int = 1
    base_seed: int = 0
    seed_increment: int = 1
    checkpoints: list | None = None
    regret_mode: str = engine.TOP_M
    fast: bool = True

    @classmethod
    def from_dict(cls, data) -> "ExperimentSpec":
        violations = []
        env = dict(data.get("environment") or {})
        alg = dict(data.get("algorithm") or {})
        exp = dict(data.get("experiment") or {})
        if not env:
            violations.append("[environment] section missing")
        if alg.get("name") not in ALGORITHMS:
            violations.append(
                f"[algorithm] name must be one of {ALGORITHMS}, got {alg.get('name')!r}"
            )
        for key in ("K", "m", "means", "horizon"):
            if key not in env:
                violations.append(f"[environment] {key} missing")
        if "means" in env and "K" in env and len(env["means"]) != env["K"]:
            violations.append("[environment] means length must equal K")
        kind = env.get("kind", BERNOULLI)
        if kind not in (BERNOULLI, UNIFORM, SUBGAUSSIAN):
            violations.append(f"[environment] unknown kind {kind!r}")
        feedback = env.get("feedback", REWARD_ONLY)
        if feedback not in (REWARD_ONLY, REWARD_AND_COLLISION):
            violations.append(f"[environment] unknown feedback {feedback!r}")
        R = int(exp.get("replications", 1))
        if R < 1:
            violations.append("[experiment] replications must be >= 1")
        inc = int(exp.get("seed_increment", 1))
        if inc == 0:
            violations.append("[experiment] seed_increment must be nonzero")
        name = alg.get("name")
        if name == "alg2" and alg.get("variant", "a") not in ("a", "b", "c"):
            violations.append("[algorithm] variant must be a, b or c")
        if name == "alg2" and alg.get("variant", "a") != "b" and "mu_lower" not in alg:
            violations.append("[algorithm] alg2 variants a/c need mu_lower")
        if name == "anticoord":
            for key in ("eps", "delta"):
                if key not in alg:
                    violations.append(f"[algorithm] anticoord needs {key}")
        if name == "estimate_m":
            for key in ("mu_lower", "delta"):
                if key not in alg:
                    violations.append(f"[algorithm] estimate_m needs {key}")
        if name == "more_than_k":
            if "m" in env and "K" in env and env["m"] <= env["K"]:
                violations.append("[environment] more_than_k expects m > K")
            mode = alg.get("mode", "original")
            if mode not in ("original", "leaving"):
                violations.append("[algorithm] mode must be original or leaving")
            if (
                mode == "leaving"
                and "mu_lower" not in alg
                and feedback != REWARD_AND_COLLISION
            ):
                violations.append(
                    "[algorithm] leaving mode needs mu_lower or collision feedback"
                )
        if violations:
            raise SpecValidationError(violations)
        return cls(
            environment=env,
            algorithm=alg,
            replications=R,
            base_seed=int(exp.get("base_seed", 0)),
            seed_increment=inc,
            checkpoints=[int(c) for c in exp["checkpoints"]]
            if "checkpoints" in exp
            else None,
            regret_mode=exp.get("regret_mode", _default_regret_mode(alg)),
            fast=bool(exp.get("fast", True)),
        )

    @classmethod
    def from_toml(cls, path) -> "ExperimentSpec":
        with open(path, "rb") as fh:
            return cls.from_dict(tomli.load(fh))

    def config(self, seed) -> EnvironmentConfig:
        env = self.environment
        kwargs = {}
        if "per_player_means" in env:
            kwargs["per_player_means"] = tuple(
                tuple(row) for row in env["per_player_means"]
            )
        if env.get("dummy_action_enabled") or self.algorithm["name"] in (
            "anticoord",
            "estimate_m",
        ):
            kwargs["dummy_action_enabled"] = True
        return config_from_means(
            env["means"],
            env["m"],
            kind=env.get("kind", BERNOULLI),
            sigma=float(env.get("sigma", 1.0)),
            feedback=env.get("feedback", REWARD_ONLY),
            horizon=int(env["horizon"]),
            master_seed=int(seed),
            **kwargs,
        )

    def seeds(self):
        return [
            self.base_seed + k * self.seed_increment for k in range(self.replications)
        ]


def _default_regret_mode(alg):
    if alg.get("name") == "more_than_k":
        return (
            engine.TOP_K_LEAVING
            if alg.get("mode", "original") == "leaving"
            else engine.TOP_K_MINUS_1
        )
    return engine.TOP_M


def build_players(spec: ExperimentSpec, config: EnvironmentConfig):
    alg = spec.algorithm
    name = alg["name"]
    K, m, T = config.K, config.m, config.horizon
    c_scale = float(alg.get("c_scale", 1.0))
    if name == "alg1":
        return [Alg1Player(K, m, T, c_scale=c_scale) for _ in range(m)]
    if name == "alg2":
        variant = alg.get("variant", "a")
        mu = alg.get("mu_lower")
        instrument = bool(alg.get("instrument", False))
        return [
            Alg2Player(K, m, T, mu_lower=mu, variant=variant, c_scale=c_scale,
                       instrument=instrument)
            for _ in range(m)
        ]
    if name == "anticoord":
        return [
            AntiCoordPlayer(K, m, float(alg["eps"]), float(alg["delta"]))
            for _ in range(m)
        ]
    if name == "estimate_m":
        return [
            EstimateMPlayer(K, float(alg["mu_lower"]), float(alg["delta"]))
            for _ in range(m)
        ]
    if name == "doubling":
        inner = alg.get("inner", "alg1")
        if inner == "alg1":
            factory = lambda T_hat: Alg1Player(K, m, T_hat, c_scale=c_scale)
        else:
            factory = lambda T_hat: Alg2Player(
                K, m, T_hat, mu_lower=alg.get("mu_lower"),
                variant=alg.get("variant", "a"), c_scale=c_scale,
            )
        return [DoublingPlayer(factory) for _ in range(m)]
    if name == "more_than_k":
        return [
            MoreThanKPlayer(
                K, m, T,
                mode=alg.get("mode", "original"),
                C=float(alg.get("constant", 128.0)),
                mu_lower=alg.get("mu_lower"),
                collision_info=config.feedback == REWARD_AND_COLLISION,
                c_scale=c_scale,
            )
            for _ in range(m)
        ]
    raise SpecValidationError([f"unknown algorithm {name!r}"])


def _success(spec: ExperimentSpec, config, trace, players):
    name = spec.algorithm["name"]
    if name in ("alg1", "alg2", "doubling"):
        best = set(top_m_arms(list(config.means), min(config.m, config.K)))
        arms = [a for a in trace.fixed_arms if a]
        return (
            len(arms) == config.m
            and len(set(arms)) == config.m
            and set(arms) == best
            and trace.fixated
        )
    if name == "anticoord":
        assignment = [a if a else 0 for a in trace.fixed_arms]
        rows = config.per_player_means or tuple(
            tuple(config.means) for _ in range(config.m)
        )
        return verify_nash(assignment, rows, float(spec.algorithm["eps"])).is_eps_nash
    if name == "estimate_m":
        return all(p.m_out == config.m for p in players)
    if name == "more_than_k":
        return all(a is not None or left
                   for a, left in zip(trace.fixed_arms, trace.has_left))
    return trace.fixated


def run_replication(spec: ExperimentSpec, seed: int):
    """One seeded game; returns (trace, players)."""
    config = spec.config(seed)
    cps = spec.checkpoints or default_checkpoints(config.horizon)
    name = spec.algorithm["name"]
    alg = spec.algorithm
    if spec.fast and name == "alg1":
        trace = fast.run_alg1_fast(
            config, c_scale=float(alg.get("c_scale", 1.0)),
            regret_mode=spec.regret_mode, checkpoints=cps,
        )
        return trace, None
    if spec.fast and name == "anticoord":
        trace = fast.run_anticoord_fast(
            config, eps=float(alg["eps"]), delta=float(alg["delta"]),
            regret_mode=spec.regret_mode, checkpoints=cps,
        )
        return trace, None
    if spec.fast and name == "estimate_m":
        trace, players = fast.run_estimate_m_fast(
            config, mu_lower=float(alg["mu_lower"]), delta=float(alg["delta"]),
            regret_mode=spec.regret_mode, checkpoints=cps,
        )
        return trace, players
    players = build_players(spec, config)
    trace = engine.run_game(
        config, players, regret_mode=spec.regret_mode, checkpoints=cps
    )
    return trace, players


def _one_row(args):
    spec, k, seed = args
    config = spec.config(seed)
    trace, players = run_replication(spec, seed)
    success = _success(spec, config, trace, players or [])
    fixation = trace.fixation_round if trace.fixated else math.inf
    return {
        "replication": k,
        "seed": seed,
        "final_regret": trace.regret,
        "fixation_round": fixation,
        "success": bool(success),
        "checkpoints": list(trace.checkpoints),
    }


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list = field(default_factory=list)

    @property
    def aggregates(self):
        regrets = [r["final_regret"] for r in self.rows]
        fix = [r["fixation_round"] for r in self.rows if math.isfinite(r["fixation_round"])]
        qs = (
            statistics.quantiles(regrets, n=4, method="inclusive")
            if len(regrets) >= 2
            else [regrets[0]] * 3
        )
        return {
            "replications": len(self.rows),
            "regret_mean": statistics.fmean(regrets),
            "regret_std": statistics.pstdev(regrets) if len(regrets) > 1 else 0.0,
            "regret_quantiles": {"q25": qs[0], "q50": qs[1], "q75": qs[2]},
            "success_rate": sum(r["success"] for r in self.rows) / len(self.rows),
            "fixation_mean": statistics.fmean(fix) if fix else None,
            "fixated_fraction": len(fix) / len(self.rows),
        }

    def write(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "results.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replication", "seed", "final_regret", "fixation_round",
                        "success"])
            for r in self.rows:
                w.writerow([r["replication"], r["seed"], r["final_regret"],
                            r["fixation_round"], int(r["success"])])
        with open(
            os.path.join(out_dir, "regret_checkpoints.csv"), "w", newline=""
        ) as fh:
            w = csv.writer(fh)
            w.writerow(["replication", "t", "cumulative_regret"])
            for r in self.rows:
                for t, reg in r["checkpoints"]:
                    w.writerow([r["replication"], t, reg])
        with open(os.path.join(out_dir, "aggregates.json"), "w") as fh:
            json.dump(self.aggregates, fh, indent=2, default=str)


def run_experiment(spec: ExperimentSpec, out_dir=None, workers=None) -> ExperimentResult:
    if workers is None:
        workers = int(os.environ.get("MCBANDITS_WORKERS", "1"))
    jobs = [(spec, k, seed) for k, seed in enumerate(spec.seeds())]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_one_row, jobs))
    else:
        rows = [_one_row(j) for j in jobs]
    result = ExperimentResult(spec, rows)
    if out_dir:
        result.write(out_dir)
    return result
