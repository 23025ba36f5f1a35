"""Simulation harness: synthetic contests, seeding, aggregates, CSV."""

import numpy as np
import pytest

from irvaudit.contest import last_round_margin, tabulate
from irvaudit.controller import AuditConfig, AuditSetup
from irvaudit.simulate import (
    CSV_COLUMNS,
    add_fake_candidates,
    export_results,
    random_contest,
    read_results,
    run_audit_once,
    run_simulations,
    sample_order,
    synthetic_contest,
)


def strip_wall(outcomes):
    return [
        (o.config, o.sim_index, o.draws, o.status, o.timed_out,
         o.final_frontier, o.peak_frontier, o.peak_entries)
        for o in outcomes
    ]


def test_synthetic_contest_shape():
    contest = synthetic_contest(5, 1000, 0.1)
    assert contest.candidates == ("Alpha", "Bravo", "C02", "C03", "C04")
    assert contest.total_cards == 1000
    tab = tabulate(contest)
    assert tab.winner == 0
    # minors (2% each) go out first, then Bravo loses the final round
    assert tab.elimination_order[-1] == 0
    assert set(tab.elimination_order[:3]) == {2, 3, 4}
    assert tab.last_round_margin_cards == 100
    assert last_round_margin(tab, 1000) == pytest.approx(0.1)


def test_synthetic_contest_margin_within_one_card():
    for k, total, margin in [(2, 999, 0.05), (4, 517, 0.013), (5, 45000, 0.01)]:
        tab = tabulate(synthetic_contest(k, total, margin))
        assert abs(tab.last_round_margin_cards - round(margin * total)) <= 1


def test_synthetic_contest_validation():
    with pytest.raises(ValueError, match="margin too small"):
        synthetic_contest(3, 100, 0.001)
    with pytest.raises(ValueError, match="two candidates"):
        synthetic_contest(1, 100, 0.1)
    with pytest.raises(ValueError, match="outpoll"):
        synthetic_contest(5, 100, 0.1, minor_share=0.3)  # minors swallow everything


def test_add_fake_candidates_never_mentioned():
    base = synthetic_contest(3, 200, 0.1)
    padded = add_fake_candidates(base, 2)
    assert padded.candidates == base.candidates + ("Fake00", "Fake01")
    assert padded.total_cards == base.total_cards
    mentioned = {c for b in padded.ballots for c in b.ranking}
    assert mentioned <= {0, 1, 2}
    tab = tabulate(padded)
    assert tab.winner == tabulate(base).winner
    assert set(tab.elimination_order[:2]) == {3, 4}  # zero-tally fakes go first
    with pytest.raises(ValueError, match="negative"):
        add_fake_candidates(base, -1)


def test_random_contest_accounts_every_card():
    rng = np.random.default_rng(5)
    for _ in range(20):
        contest = random_contest(rng, 4, 57)
        assert contest.total_cards == 57
        tabulate(contest)  # must be well formed


def test_sample_order_reproducible_permutation():
    a = sample_order(7, 3, 100)
    b = sample_order(7, 3, 100)
    assert np.array_equal(a, b)
    assert sorted(a.tolist()) == list(range(100))
    assert not np.array_equal(a, sample_order(7, 4, 100))
    assert not np.array_equal(a, sample_order(8, 3, 100))


def test_run_audit_once_right_winner_certifies():
    contest = synthetic_contest(3, 400, 0.2)
    setup = AuditSetup.from_contest(contest)
    cards = contest.expand_cards()
    order = sample_order(1, 0, 400)
    outcome = run_audit_once(cards, setup, AuditConfig(), order, "base", 4)
    assert outcome.certified
    assert outcome.status == "certified"
    assert outcome.config == "base" and outcome.sim_index == 4
    assert 0 < outcome.draws < 400
    assert outcome.final_frontier == 0
    assert outcome.peak_frontier >= 2
    assert outcome.wall_time_s >= 0.0


def test_run_audit_once_wrong_winner_exhausts():
    contest = synthetic_contest(3, 400, 0.2)
    setup = AuditSetup.from_contest(contest, reported_winner=1)
    outcome = run_audit_once(
        contest.expand_cards(), setup, AuditConfig(), sample_order(1, 0, 400)
    )
    assert outcome.status == "full_hand_count"
    assert outcome.draws == 400
    assert not outcome.timed_out
    assert outcome.final_frontier >= 1


def test_run_audit_once_timeout():
    contest = synthetic_contest(3, 400, 0.2)
    setup = AuditSetup.from_contest(contest, reported_winner=1)
    outcome = run_audit_once(
        contest.expand_cards(),
        setup,
        AuditConfig(),
        sample_order(1, 0, 400),
        timeout_s=0.0,
    )
    assert outcome.timed_out
    assert outcome.status == "full_hand_count"
    assert outcome.draws == 400  # pinned to the population


def test_run_simulations_order_and_aggregate():
    contest = synthetic_contest(3, 300, 0.15)
    configs = [("base", AuditConfig()), ("lrm", AuditConfig(eta0_mode="lrm"))]
    batch = run_simulations(contest, configs, n_sims=6, master_seed=9)
    assert batch.margin == last_round_margin(tabulate(contest), 300)
    assert batch.config_labels() == ["base", "lrm"]
    assert [(o.sim_index, o.config) for o in batch.outcomes] == [
        (i, label) for i in range(6) for label in ("base", "lrm")
    ]
    for label in ("base", "lrm"):
        outcomes = batch.for_config(label)
        draws = np.array([o.draws for o in outcomes], dtype=float)
        agg = batch.aggregate(label)
        assert agg["n_sims"] == 6
        assert agg["mean_draws"] == pytest.approx(draws.mean())
        assert agg["se_draws"] == pytest.approx(draws.std(ddof=1) / np.sqrt(6))
        assert agg["p90_draws"] == pytest.approx(np.percentile(draws, 90))
        assert agg["certified_rate"] == sum(o.certified for o in outcomes) / 6
        assert agg["max_peak_frontier"] == max(o.peak_frontier for o in outcomes)


def test_parallel_jobs_match_sequential():
    contest = synthetic_contest(3, 200, 0.2)
    configs = [("base", AuditConfig())]
    seq = run_simulations(contest, configs, n_sims=5, master_seed=2, jobs=1)
    par = run_simulations(contest, configs, n_sims=5, master_seed=2, jobs=2)
    assert strip_wall(seq.outcomes) == strip_wall(par.outcomes)


def test_same_order_shared_across_configs():
    # a config that cannot change the draw sequence it sees: both configs
    # must consume the identical permutation for each sim index
    contest = synthetic_contest(3, 200, 0.2)
    configs = [
        ("park", AuditConfig(parking=True)),
        ("nopark", AuditConfig(parking=False)),
    ]
    batch = run_simulations(contest, configs, n_sims=4, master_seed=13)
    for i in range(4):
        a, b = batch.for_config("park")[i], batch.for_config("nopark")[i]
        # parking is an efficiency device: identical audit trajectory
        assert (a.draws, a.status, a.final_frontier, a.peak_frontier) == (
            b.draws, b.status, b.final_frontier, b.peak_frontier
        )


def test_run_simulations_validation():
    with pytest.raises(ValueError, match="at least one simulation"):
        run_simulations(synthetic_contest(2, 50, 0.2), [("a", AuditConfig())], 0, 1)


def test_export_and_read_round_trip(tmp_path):
    contest = synthetic_contest(3, 200, 0.15)
    configs = [("base", AuditConfig())]
    batch = run_simulations(contest, configs, n_sims=4, master_seed=3)
    path = tmp_path / "results.csv"
    export_results(batch, path)
    header = path.read_text().splitlines()[0]
    assert header.split(",") == CSV_COLUMNS
    sims, aggs = read_results(path)
    assert len(sims) == 4 and len(aggs) == 1
    for row, outcome in zip(sims, batch.outcomes):
        assert row["row_type"] == "sim"
        assert row["contest"] == contest.name
        assert row["sim_index"] == outcome.sim_index
        assert row["draws"] == outcome.draws
        assert row["status"] == outcome.status
        assert row["timed_out"] == int(outcome.timed_out)
        assert row["wall_time_s"] == pytest.approx(outcome.wall_time_s)
    agg = batch.aggregate("base")
    for key in ("n_sims", "mean_draws", "se_draws", "certified_rate"):
        assert aggs[0][key] == pytest.approx(agg[key])
