"""Acceptance suite: 14 criteria, one pass/fail line each.

Each test prints `AC<n> <name>: PASS|FAIL <evidence>` so the suite
doubles as a human-readable acceptance report (run with `pytest -s`).
"""

import glob
import math
import os
import random

import numpy as np
import pytest

from mcbandits import cli, rng
from mcbandits.alg_epochs import Alg2Player
from mcbandits.alg_logregret import Alg1Player
from mcbandits.analysis import (
    audit_classification,
    check_lemma5_bound,
    fit_regret_trend,
    verify_lemma4_grid,
    verify_nash,
)
from mcbandits.engine import RoundRecord, compute_regret, run_game
from mcbandits.env import REWARD_AND_COLLISION, Environment, config_from_means
from mcbandits.extensions import AntiCoordPlayer, EstimateMPlayer
from mcbandits.fast import (
    _uniform_chunk,
    run_alg1_fast,
    run_anticoord_fast,
    run_estimate_m_fast,
)
from mcbandits.subroutines import MC1, MC2, MC3, MusicalChairs

from conftest import MCWrapper

GOLDEN_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "golden")


def _report(n, name, ok, detail=""):
    print(f"\nAC{n} {name}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"AC{n} {name} failed: {detail}"


# ---------------------------------------------------------------------- 1


def test_ac1_musical_chairs_exclusivity():
    means = [0.9, 0.8, 0.7, 0.6, 0.5]
    K, m = 5, 3
    violations = 0
    runs = 0
    for variant in (MC1, MC2, MC3):
        feedback = REWARD_AND_COLLISION if variant == MC3 else "reward"
        for seed in range(1000):
            cfg = config_from_means(means, m=m, horizon=60, master_seed=seed,
                                    feedback=feedback)
            budget = None if variant == MC1 else 60
            players = [
                MCWrapper(MusicalChairs(variant, range(1, K + 1), K,
                                        budget=budget))
                for _ in range(m)
            ]
            run_game(cfg, players, regret_mode="top_m")
            occ = [p.mc.occupied for p in players if p.mc.occupied is not None]
            violations += len(occ) != len(set(occ))
            runs += 1
    _report(1, "musical-chairs exclusivity", violations == 0,
            f"({runs} runs, {violations} duplicate occupations)")


# ---------------------------------------------------------------------- 2


def test_ac2_mc2_failure_rate_bound():
    K, m, mu, R = 4, 3, 0.5, 10**4
    results = []
    ok = True
    for alpha in (50, 100, 200):
        rnd = random.Random(alpha)
        fails = 0
        for _ in range(R):
            mc = MusicalChairs(MC2, range(1, K + 1), K, budget=alpha)
            while not mc.terminal and mc.occupied is None:
                a = mc.choose(rnd.random())
                # m-1 = 2 other players pull uniformly at random
                collided = any(rnd.randrange(K) + 1 == a for _ in range(m - 1))
                y = 1.0 if rnd.random() < mu else 0.0
                mc.observe(a, 0.0 if collided else y)
            fails += mc.occupied is None
        bound = math.exp(-alpha * mu / (4 * K))
        limit = bound + 3 * math.sqrt(bound * (1 - bound) / R)
        rate = fails / R
        results.append(f"alpha={alpha}: {rate:.4f} <= {limit:.4f}")
        ok = ok and rate <= limit
    _report(2, "MC2 failure-rate bound", ok, "(" + "; ".join(results) + ")")


# ---------------------------------------------------------------------- 3


def test_ac3_phase1_estimator_unbiased():
    means = [0.9, 0.6, 0.3]
    K, m, n = 3, 2, 10**5
    q = (1 - 1 / K) ** (m - 1)
    good = 0
    for seed in range(100):
        cfg = config_from_means(means, m=m, horizon=n, master_seed=seed)
        env = Environment(cfg)
        streams = [rng.player_stream(seed, j) for j in range(m)]
        players = [Alg1Player(K, m, 10**12, c_scale=100.0) for _ in range(m)]
        A, R, _ = _uniform_chunk(env, streams, 1, n)
        for j, p in enumerate(players):
            actions, rewards = A[j].tolist(), R[j].tolist()
            for t in range(n):
                p.observe(t + 1, actions[t], rewards[t])
        seed_ok = True
        for p in players:
            assert p.phase == "explore1"
            for i, mu in enumerate(means):
                # received reward is Bernoulli(mu*q); the estimate divides
                # the average by q, so SE = sqrt(mu*q*(1-mu*q)/count)/q
                se = math.sqrt(mu * q * (1 - mu * q) / p.counts[i]) / q
                if abs(p.estimates[i] - mu) > 3 * se:
                    seed_ok = False
        good += seed_ok
    _report(3, "phase-1 estimator unbiasedness", good >= 95,
            f"({good}/100 seeds within 3 SE; need >= 95)")


# ---------------------------------------------------------------------- 4


_AC4_MEANS = [0.9, 0.8, 0.3, 0.2]


def test_ac4_alg1_end_to_end():
    T = 2 * 10**5
    good = 0
    for seed in range(100):
        cfg = config_from_means(_AC4_MEANS, m=2, horizon=T, master_seed=seed)
        trace = run_alg1_fast(cfg, c_scale=0.01)
        arms = [a for a in trace.fixed_arms if a]
        # trace.fixated <=> zero regret increments after fixation_round
        good += (len(arms) == 2 and set(arms) == {1, 2} and trace.fixated)
    _report(4, "alg1 end-to-end (scaled)", good >= 95,
            f"({good}/100 seeds fixated on the true top-2; need >= 95)")


# ---------------------------------------------------------------------- 5


def test_ac5_alg1_logarithmic_trend():
    T = 2**19
    cps = [2**k for k in range(14, 20)]
    curves, fixes = [], []
    for seed in range(50):
        cfg = config_from_means(_AC4_MEANS, m=2, horizon=T, master_seed=seed)
        trace = run_alg1_fast(cfg, c_scale=0.01, checkpoints=cps)
        curves.append([v for _, v in trace.checkpoints])
        fixes.append(trace.fixation_round)
    mean_curve = np.mean(curves, axis=0)
    rep = fit_regret_trend(list(zip(cps, mean_curve)),
                           fixation_round=max(fixes))
    ok = rep.descriptor == "logarithmic-consistent"
    _report(5, "alg1 regret trend", ok,
            f"(descriptor={rep.descriptor}, post-fixation ratios="
            f"{tuple(round(r, 3) for r in rep.used_ratios)})")


# ---------------------------------------------------------------------- 6


def test_ac6_alg2_classification_soundness():
    T = 10**6
    means = [0.9, 0.7, 0.5, 0.45]
    runs_with_bad_events = 0
    flags_without_bad_events = 0
    for seed in range(100):
        cfg = config_from_means(means, m=2, horizon=T, master_seed=seed)
        players = [Alg2Player(4, 2, T, mu_lower=0.4, c_scale=0.05,
                              instrument=True) for _ in range(2)]
        trace = run_game(cfg, players, regret_mode="top_m")
        rep = audit_classification(trace.player_events, cfg.means,
                                   mu_good=0.4)
        if rep.logged_bad_events:
            runs_with_bad_events += 1
        elif not rep.clean:
            flags_without_bad_events += 1
    ok = flags_without_bad_events == 0 and runs_with_bad_events <= 5
    _report(6, "alg2 classification soundness", ok,
            f"({flags_without_bad_events} flagged runs without bad events; "
            f"{runs_with_bad_events}/100 runs with logged bad events, "
            f"need <= 5)")


# ---------------------------------------------------------------------- 7


def test_ac7_variant_b_zero_gap_sublinear():
    T0 = 2**18
    ratios = []
    for seed in range(50):
        cfg = config_from_means([0.6, 0.6, 0.6], m=2, horizon=2 * T0,
                                master_seed=seed,
                                feedback=REWARD_AND_COLLISION)
        players = [Alg2Player(3, 2, 2 * T0, variant="b", c_scale=0.05)
                   for _ in range(2)]
        trace = run_game(cfg, players, regret_mode="top_m",
                         checkpoints=[T0, 2 * T0])
        (_, r1), (_, r2) = trace.checkpoints
        ratios.append(r2 / r1)
    ratio = float(np.mean(ratios))
    _report(7, "variant-b zero-gap sublinearity", ratio < 1.9,
            f"(mean regret(2T0)/regret(T0) = {ratio:.3f} < 1.9 over 50 seeds)")


# ---------------------------------------------------------------------- 8


def test_ac8_variant_c_leaving():
    T = 2**17
    good = 0
    for seed in range(100):
        cfg = config_from_means([0.9, 0.7, 0.1], m=3, horizon=T,
                                master_seed=seed)
        players = [Alg2Player(3, 3, T, variant="c", mu_lower=0.5,
                              c_scale=0.05) for _ in range(3)]
        run_game(cfg, players, regret_mode="top_m")
        left = [p for p in players if p.has_left]
        occ = sorted(p.occupied_golden for p in players
                     if p.occupied_golden is not None)
        good += len(left) == 1 and occ == [1, 2]
    _report(8, "variant-c leaving", good >= 90,
            f"({good}/100 seeds: one leaver, two players on the mu-good "
            f"arms; need >= 90)")


# ---------------------------------------------------------------------- 9


def test_ac9_estimate_m_full_constants():
    proto = EstimateMPlayer(3, 0.5, 0.1)
    T = proto.explore_rounds + proto.probe_iterations * proto.block_len
    good = 0
    schedule_ok = True
    for seed in range(10):
        cfg = config_from_means([0.9, 0.6, 0.3], m=2, horizon=T,
                                master_seed=seed, dummy_action_enabled=True)
        _, players = run_estimate_m_fast(cfg, mu_lower=0.5, delta=0.1)
        good += all(p.m_out == 2 for p in players)
        for p in players:
            # schedule exactness: the protocol consumes exactly
            # explore + probes_used * block_len rounds, per the formulas
            if (p.explore_rounds != proto.explore_rounds
                    or p.block_len != proto.block_len
                    or p.explore_rounds + p.probes_used * p.block_len > T):
                schedule_ok = False
    ok = good >= 9 and schedule_ok
    _report(9, "estimate-m full constants", ok,
            f"({good}/10 seeds recovered m=2, need >= 9; "
            f"explore={proto.explore_rounds}, block={proto.block_len}, "
            f"schedule exact: {schedule_ok})")


# --------------------------------------------------------------------- 10


def test_ac10_lemma4_exhaustive():
    ok = True
    details = []
    for p in (1.1, 1.25, 1.5, 2.0):
        rep = verify_lemma4_grid(p, {"points": 10**4, "width_exponent": 0.4})
        details.append(f"p={p}: {'pass' if rep.passed else 'fail'}")
        ok = ok and rep.passed
    bad = verify_lemma4_grid(2.0, {"points": 10**4, "width_exponent": 0.7})
    ok = ok and bad.double_count >= 1
    details.append(f"violation grid doubles={bad.double_count}")
    _report(10, "unique interval intersection", ok,
            "(" + "; ".join(details) + ")")


# --------------------------------------------------------------------- 11


_AC11_PPM = ((0.9, 0.7, 0.5, 0.3),
             (0.4, 0.8, 0.6, 0.2),
             (0.3, 0.5, 0.9, 0.6))


def test_ac11_anticoord_nash():
    K, m, eps, delta = 4, 3, 0.2, 0.1
    proto = AntiCoordPlayer(K, m, eps, delta)
    expected = (math.ceil(512 * K * math.log(6 * m * K / delta) / eps**2)
                + K * math.ceil(4 * K * math.log(2 * m * K / delta) / eps))
    count_ok = proto.total_rounds == expected
    good = 0
    for seed in range(100):
        cfg = config_from_means([0.5] * K, m=m, horizon=proto.total_rounds,
                                master_seed=seed, per_player_means=_AC11_PPM,
                                dummy_action_enabled=True)
        trace = run_anticoord_fast(cfg, eps=eps, delta=delta)
        assignment = [a if a else 0 for a in trace.fixed_arms]
        good += verify_nash(assignment, _AC11_PPM, eps).is_eps_nash
    ok = count_ok and good >= 90
    _report(11, "anti-coordination Nash convergence", ok,
            f"(round count {proto.total_rounds} == {expected}: {count_ok}; "
            f"{good}/100 seeds eps-Nash, need >= 90)")


# --------------------------------------------------------------------- 12


def test_ac12_regret_oracle_equivalence():
    rnd = random.Random(0)
    worst = 0.0
    for _ in range(500):
        K = rnd.randint(2, 4)
        m = rnd.randint(1, 4)
        T = rnd.randint(1, 20)
        means = [rnd.random() for _ in range(K)]
        records = []
        for t in range(1, T + 1):
            actions = tuple(rnd.randint(0 if rnd.random() < 0.2 else 1, K)
                            for _ in range(m))
            collided = tuple(
                a > 0 and sum(1 for b in actions if b == a) >= 2
                for a in actions
            )
            rewards = tuple(0.0 if c or a == 0 else means[a - 1]
                            for a, c in zip(actions, collided))
            records.append(RoundRecord(t, actions, rewards, collided))
        got = compute_regret(records, means, m, "top_m")
        # literal double sum: T*sum(top-m means) - sum_t sum_j mu*(1-C)
        top = sorted(means, reverse=True)[:m]
        expect = T * sum(top)
        for rec in records:
            for a, c in zip(rec.actions, rec.collided):
                if a > 0 and not c:
                    expect -= means[a - 1]
        worst = max(worst, abs(got - expect))
    _report(12, "regret oracle equivalence", worst <= 1e-12,
            f"(max |difference| = {worst:.2e} over 500 traces)")


# --------------------------------------------------------------------- 13


def test_ac13_lemma5_monte_carlo():
    ok = True
    details = []
    for mu, sigma in ((0.5, 1.0), (0.1, 1.0), (0.05, 1.0), (1.0, 1.0)):
        rep = check_lemma5_bound(mu, sigma, 10**6, seed=hash((mu, sigma)) & 0xFFFF)
        details.append(f"mu={mu}: P(X>0)~{rep.estimate:.4f} >= {rep.bound:.5f}")
        ok = ok and rep.passed
    _report(13, "positive-probability bound", ok, "(" + "; ".join(details) + ")")


# --------------------------------------------------------------------- 14


# the generator pins each fixture's seed; read them back from its table
def _golden_seeds():
    import importlib.util

    path = os.path.join(GOLDEN_DIR, "generate.py")
    spec = importlib.util.spec_from_file_location("golden_generate", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return {name: seed for name, (_, seed) in mod.CASES.items()}


def test_ac14_golden_replay(capsys):
    seeds = _golden_seeds()
    specs = sorted(glob.glob(os.path.join(GOLDEN_DIR, "*.toml")))
    divergent = []
    for toml_path in specs:
        name = os.path.splitext(os.path.basename(toml_path))[0]
        csv_path = os.path.join(GOLDEN_DIR, f"{name}.csv")
        code = cli.main(["replay", "--config", toml_path,
                         "--seed", str(seeds[name]),
                         "--trace", csv_path])
        capsys.readouterr()
        if code != 0:
            divergent.append(name)
    ok = len(specs) == 20 and not divergent
    _report(14, "golden trace replay", ok,
            f"({len(specs)} traces, divergent: {divergent or 'none'})")
