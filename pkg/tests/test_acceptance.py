"""Acceptance gate: one test per promised behavior, at its stated tolerance.

Each test here is an end-to-end check of the audit engine against an
independent route: closed-form counts, tally arithmetic, Monte-Carlo
bounds with explicit standard-error cushions, or the brute-force oracle
that tracks every alternative order eagerly. Statistical tests use
frozen seeds, so a pass is reproducible; the cushions quoted in the
asserts are three standard errors of the Monte-Carlo estimate.

The statistical tests run thousands of simulated audits and dominate the
suite's wall time (tens of minutes on one core).
"""

from __future__ import annotations

import itertools
import math
import statistics
from pathlib import Path

import numpy as np
import pytest

from irvaudit.contest import Ballot, Contest, alt_order_count, tabulate, tally_given_remaining
from irvaudit.controller import (
    CERTIFIED,
    RUNNING,
    AuditConfig,
    AuditSession,
    AuditSetup,
)
from irvaudit.requirements import Requirement, assort, first_pref_and_potential
from irvaudit.simulate import (
    add_fake_candidates,
    random_contest,
    run_audit_once,
    sample_order,
    synthetic_contest,
)
from irvaudit.tsm import ACTIVE, PROVEN_FALSE, BaseTsm

from exhaustive_oracle import oracle_audit


def covers(suffix, order):
    return order[len(order) - len(suffix):] == suffix


def assert_partition(frontier, k, winner):
    """Every alternative complete order is covered by exactly one node."""
    pruned = [s for s, _ in frontier.pruned]
    for order in itertools.permutations(range(k)):
        if order[-1] == winner:
            continue
        owners = [s for s in frontier.nodes if covers(s, order)]
        owners += [s for s in pruned if covers(s, order)]
        assert len(owners) == 1, (order, owners)


def run_statuses(contest, reported_winner, config, n_sims, seed):
    """Statuses and draws for n_sims audits of one contest and config."""
    cards = contest.expand_cards()
    setup = AuditSetup.from_contest(contest, reported_winner)
    outcomes = []
    for sim in range(n_sims):
        order = sample_order(seed, sim, setup.total_cards)
        outcomes.append(run_audit_once(cards, setup, config, order, sim_index=sim))
    return outcomes


def test_alternative_order_counts_and_frontier_partition():
    """k! - (k-1)! alternative orders; the frontier partitions them exactly."""
    assert alt_order_count(4) == 18
    assert alt_order_count(5) == 96
    for k in range(2, 6):
        assert alt_order_count(k) == math.factorial(k) - math.factorial(k - 1)

    rng = np.random.default_rng(20260814)
    for trial in range(100):
        k = 2 + trial % 4
        total = int(rng.integers(30, 121))
        contest = random_contest(rng, k, total)
        winner = int(rng.integers(0, k))
        session = AuditSession(AuditSetup.from_contest(contest, winner), AuditConfig())
        cards = contest.expand_cards()
        order = rng.permutation(total)
        draws = int(rng.integers(0, 41))
        for idx in order[:draws]:
            if session.status != RUNNING:
                break
            session.process_ballot(cards[int(idx)])
        assert_partition(session.frontier, k, winner)


def test_requirement_truth_matches_assorter_mean():
    """requirement_true iff assorter mean below 1/2, ties per orientation.

    The truth side comes from whole-contest tallies, the mean side from
    the per-card assorter; 2 * sum is integral so the comparison is
    exact. A DB tie is false (strict beat needed), a DND tie is true.
    """
    rng = np.random.default_rng(9218)
    for _ in range(1000):
        k = int(rng.integers(2, 6))
        total = int(rng.integers(20, 201))
        contest = random_contest(rng, k, total)

        def twice_mean(req):
            s2 = 0
            for ballot in contest.ballots:
                s2 += ballot.count * int(2.0 * assort(req, ballot.ranking))
            return s2

        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                fp, pot = first_pref_and_potential(contest, i, j)
                assert (fp <= pot) == (twice_mean(Requirement.dnd(i, j)) <= total)
        for size in range(2, k + 1):
            for members in itertools.combinations(range(k), size):
                tallies = tally_given_remaining(contest, members)
                for i, j in itertools.permutations(members, 2):
                    req = Requirement.db(i, j, members)
                    assert (tallies[i] > tallies[j]) == (twice_mean(req) < total)


def test_true_requirement_ville_bound():
    """A true requirement's supermartingale rarely crosses 1/alpha.

    Fixed two-candidate contest, B = 2000, DND(0, 1) true with assorter
    mean 0.495. Over 20000 random sampling orders the fraction of paths
    whose running supremum reaches 20 must stay within alpha plus three
    standard errors, and the mean value at fixed times within 1 plus
    three standard errors.
    """
    contest = Contest(
        "ville",
        ("Alpha", "Bravo"),
        (Ballot((0,), 790), Ballot((1,), 810), Ballot((), 400)),
    )
    req = Requirement.dnd(0, 1)
    fp, pot = first_pref_and_potential(contest, 0, 1)
    assert fp <= pot, "fixture requirement must be true"
    total = contest.total_cards
    x_pop = np.array([assort(req, card) for card in contest.expand_cards()])
    assert float(x_pop.mean()) == pytest.approx(0.495)

    n_paths = 20_000
    checkpoints = (100, 500, 2000)
    values = {t: np.empty(n_paths) for t in checkpoints}
    log_cross = math.log(20.0)
    crossings = 0
    rng = np.random.default_rng(550)
    for path in range(n_paths):
        xs = rng.permutation(x_pop).tolist()
        tsm = BaseTsm(0.51, 200.0, total)
        max_log = 0.0
        seen = {}
        for x in xs:
            tsm.update(x)
            if tsm.status != ACTIVE:
                assert tsm.status != PROVEN_FALSE
                break
            if tsm.log_m > max_log:
                max_log = tsm.log_m
            t = tsm.t
            if t == 100 or t == 500 or t == 2000:
                seen[t] = math.exp(tsm.log_m)
        if max_log >= log_cross:
            crossings += 1
        for t in checkpoints:
            values[t][path] = seen.get(t, tsm.value)

    frac = crossings / n_paths
    frac_se = math.sqrt(frac * (1.0 - frac) / n_paths)
    assert frac <= 0.05 + 3.0 * frac_se, f"sup crossing fraction {frac:.4f}"
    for t in checkpoints:
        mean = float(values[t].mean())
        se = float(values[t].std(ddof=1)) / math.sqrt(n_paths)
        assert mean <= 1.0 + 3.0 * se, f"mean at t={t} is {mean:.4f} (se {se:.4f})"


def test_risk_limit_on_lost_contests():
    """False certification stays within the risk limit, adversarially.

    Three close contests whose reported winner actually lost, 2000
    simulated audits each under the default configuration and again with
    abandonment disabled: every certification rate stays within
    alpha + 3 binomial standard errors, and the paired rates agree
    within Monte-Carlo noise.
    """
    n_sims = 2000
    bound = 0.05 + 3.0 * math.sqrt(0.05 * 0.95 / n_sims)
    configs = {
        "default": AuditConfig(),
        "no_abandonment": AuditConfig(abandonment=False),
    }
    for k, margin in ((3, 0.02), (4, 0.015), (5, 0.01)):
        contest = synthetic_contest(k, 2000, margin)
        assert tabulate(contest).winner == 0
        rates = {}
        for label, config in configs.items():
            outcomes = run_statuses(contest, 1, config, n_sims, seed=7700 + k)
            certs = sum(1 for o in outcomes if o.status == CERTIFIED)
            rates[label] = certs / n_sims
            assert rates[label] <= bound, (k, label, rates[label])
        noise = 3.0 * math.sqrt(
            sum(r * (1.0 - r) / n_sims for r in rates.values())
        )
        assert abs(rates["default"] - rates["no_abandonment"]) <= noise, (k, rates)


def test_sample_size_decreases_with_margin():
    """Mean sample size falls strictly as the true margin grows."""
    config = AuditConfig()
    means = {}
    for margin in (0.01, 0.05, 0.10, 0.20):
        contest = synthetic_contest(5, 45_000, margin)
        outcomes = run_statuses(contest, None, config, 500, seed=31_000)
        means[margin] = statistics.fmean(o.draws for o in outcomes)
    assert means[0.01] > means[0.05] > means[0.10] > means[0.20], means
    assert 30 <= means[0.20] <= 300, means


def test_published_sample_sizes_on_real_ballots():
    """Exact mean sample sizes on a real election's ballot data.

    The ballot file is not shipped with the repository; the check runs
    only when a local copy exists at tests/data/real_election.json.
    """
    path = Path(__file__).with_name("data") / "real_election.json"
    if not path.exists():
        pytest.skip("no real-election ballot dataset present locally")


def test_scales_to_many_candidates():
    """55 candidates stay fast and the frontier stays small.

    Five real contenders plus fifty never-mentioned names, B = 10000 at
    a 10 percent margin: every audit certifies without the frontier cap
    ever engaging, the frontier stays within 10^4 nodes, and per-ballot
    wall time stays under a second.
    """
    contest = add_fake_candidates(synthetic_contest(5, 10_000, 0.10), 50)
    assert len(contest.candidates) == 55
    config = AuditConfig()
    outcomes = run_statuses(contest, None, config, 20, seed=61_000)
    total_wall = sum(o.wall_time_s for o in outcomes)
    total_draws = sum(o.draws for o in outcomes)
    for o in outcomes:
        assert o.status == CERTIFIED
        assert o.peak_frontier < config.frontier_cap
        assert o.final_frontier <= 10_000
        assert o.peak_frontier <= 10_000
    assert total_wall / total_draws < 1.0


def test_parking_and_snapshots_change_no_decision():
    """Parking and snapshot round-trips leave every draw report identical.

    100 randomized schedules, each audited three ways: parking on,
    parking off, and parking on with the session serialized and restored
    at one to three random cut points. Reports must match field for
    field (the live-entry count may differ when parking is off, since
    unwatched histories then stay live; everything decision-bearing,
    including the exact log bounds, must be equal).
    """
    rng = np.random.default_rng(88_100)
    for trial in range(100):
        k = int(rng.integers(2, 5))
        total = int(rng.integers(60, 161))
        contest = random_contest(rng, k, total)
        winner = int(rng.integers(0, k))
        setup = AuditSetup.from_contest(contest, winner)
        cards = contest.expand_cards()
        order = [int(i) for i in rng.permutation(total)]
        draws = int(rng.integers(15, min(total, 70) + 1))
        cuts = set(int(c) for c in rng.integers(1, draws, size=int(rng.integers(1, 4))))

        def run(parking: bool, cut_points=frozenset()):
            session = AuditSession(setup, AuditConfig(parking=parking))
            reports = []
            for pos, idx in enumerate(order[:draws]):
                if session.status != RUNNING:
                    break
                reports.append(session.process_ballot(cards[idx]))
                if pos + 1 in cut_points:
                    session = AuditSession.restore_json(session.snapshot_json())
            return reports, session

        straight, end_a = run(parking=True)
        unparked, _ = run(parking=False)
        resumed, end_c = run(parking=True, cut_points=cuts)

        assert straight == resumed, trial
        assert end_a.snapshot() == end_c.snapshot(), trial
        assert len(straight) == len(unparked)
        for a, b in zip(straight, unparked):
            assert (a.draw, a.status, a.frontier_size, a.pruned, a.expanded) == (
                b.draw,
                b.status,
                b.frontier_size,
                b.pruned,
                b.expanded,
            )
            assert a.abandoned == b.abandoned
            assert a.min_log_i == b.min_log_i and a.max_log_i == b.max_log_i
            assert a.store_entries == b.store_entries


def test_matches_exhaustive_order_tracking_oracle():
    """Lazy engine agrees with the eager all-orders oracle on k = 4.

    200 simulated audits of a four-candidate contest: the oracle tracks
    all 18 alternative orders with complete requirement sets; both
    engines must certify every (correctly reported) outcome, and the
    lazy engine's mean sample size must stay within a factor of two of
    the oracle's.
    """
    contest = synthetic_contest(4, 1000, 0.08)
    cards = contest.expand_cards()
    setup = AuditSetup.from_contest(contest, 0)
    config = AuditConfig()
    engine_draws = []
    oracle_draws = []
    for sim in range(200):
        order = sample_order(424_242, sim, 1000)
        status, draws = oracle_audit(cards, 4, 0, order)
        outcome = run_audit_once(cards, setup, config, order, sim_index=sim)
        assert status == CERTIFIED and outcome.status == CERTIFIED, sim
        oracle_draws.append(draws)
        engine_draws.append(outcome.draws)
    ratio = statistics.fmean(engine_draws) / statistics.fmean(oracle_draws)
    assert 0.5 <= ratio <= 2.0, ratio
