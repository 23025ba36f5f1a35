"""Monte-Carlo harness: synthetic contests, seeded sampling, aggregates.

Sampling plans are reproducible and comparable across configurations: the
permutation for simulation i comes from ``numpy.random.default_rng((seed,
i))`` (PCG64 seeded through SeedSequence, Fisher-Yates shuffle), so every
configuration sees the same draw order for the same (seed, i). Plotting
stays out of this module; the CLI report path renders figures from the
exported CSV.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .contest import Ballot, Contest, last_round_margin, tabulate
from .controller import FULL_HAND_COUNT, RUNNING, AuditConfig, AuditSession, AuditSetup

CSV_COLUMNS = [
    "row_type",
    "contest",
    "margin",
    "config",
    "seed",
    "sim_index",
    "draws",
    "status",
    "timed_out",
    "final_frontier",
    "peak_frontier",
    "peak_entries",
    "wall_time_s",
    "n_sims",
    "mean_draws",
    "se_draws",
    "p50_draws",
    "p90_draws",
    "p99_draws",
    "certified_rate",
    "full_count_rate",
    "mean_final_frontier",
    "max_peak_frontier",
    "mean_wall_time_s",
]


def synthetic_contest(
    k: int,
    total_cards: int,
    margin: float,
    name: str | None = None,
    minor_share: float = 0.02,
) -> Contest:
    """Two front-runners plus k-2 minor candidates with exhausting ballots.

    Candidate 0 wins every such contest; candidate 1 is the runner-up and
    the last-round margin in cards is round(margin * total_cards) (within
    one card for parity). Minor candidates draw ``minor_share`` of the
    cards each as single-preference ballots, so their elimination
    exhausts them and the final round is exactly 0 versus 1.
    """
    if k < 2:
        raise ValueError("need at least two candidates")
    gap = round(margin * total_cards)
    if gap < 1:
        raise ValueError("margin too small for the contest size")
    minor = round(minor_share * total_cards)
    rest = total_cards - (k - 2) * minor
    n_b = (rest - gap) // 2
    n_a = rest - n_b
    if n_b <= minor or minor < 0 or n_b < 1:
        raise ValueError("front-runners must outpoll every minor candidate")
    labels = [f"C{i:02d}" for i in range(k)]
    labels[0] = "Alpha"
    labels[1] = "Bravo"
    ballots = [Ballot((0,), n_a), Ballot((1,), n_b)]
    ballots.extend(Ballot((i,), minor) for i in range(2, k) if minor > 0)
    return Contest(
        name or f"synthetic-k{k}-m{margin:g}",
        tuple(labels),
        tuple(ballots),
    )


def add_fake_candidates(contest: Contest, n: int, prefix: str = "Fake") -> Contest:
    """Append n candidates that no ballot mentions."""
    if n < 0:
        raise ValueError("cannot add a negative number of candidates")
    labels = list(contest.candidates) + [f"{prefix}{i:02d}" for i in range(n)]
    return Contest(contest.name, tuple(labels), contest.ballots)


def random_contest(rng: np.random.Generator, k: int, total_cards: int) -> Contest:
    """A haphazard profile: random partial rankings, random multiplicities."""
    groups = int(rng.integers(1, min(total_cards, 3 * k) + 1))
    cuts = sorted(rng.integers(1, total_cards + 1, size=groups - 1).tolist())
    counts = np.diff([0] + cuts + [total_cards])
    ballots = []
    for count in counts:
        if count == 0:
            continue
        depth = int(rng.integers(0, k + 1))
        ranking = tuple(int(c) for c in rng.permutation(k)[:depth])
        ballots.append(Ballot(ranking, int(count)))
    if not ballots:
        ballots.append(Ballot((), total_cards))
    return Contest(
        f"random-k{k}-b{total_cards}",
        tuple(f"C{i:02d}" for i in range(k)),
        tuple(ballots),
    )


@dataclass(frozen=True)
class SimOutcome:
    config: str
    sim_index: int
    draws: int
    status: str
    timed_out: bool
    final_frontier: int
    peak_frontier: int
    peak_entries: int
    wall_time_s: float

    @property
    def certified(self) -> bool:
        return self.status == "certified"


def sample_order(master_seed: int, sim_index: int, total_cards: int) -> np.ndarray:
    """The shared card permutation for one simulated audit."""
    rng = np.random.default_rng((master_seed, sim_index))
    return rng.permutation(total_cards)


def run_audit_once(
    cards: Sequence[tuple[int, ...]],
    setup: AuditSetup,
    config: AuditConfig,
    order: Sequence[int],
    config_label: str = "default",
    sim_index: int = 0,
    timeout_s: float | None = None,
) -> SimOutcome:
    """Drive one audit over ``cards`` in ``order`` until it terminates.

    A session still running after the whole order is consumed is a full
    hand count by definition (the order covers the population). Hitting
    the wall-clock timeout is recorded the same way, with the sample size
    pinned to the population, plus a flag.
    """
    session = AuditSession(setup, config)
    start = time.perf_counter()
    timed_out = False
    for pos, idx in enumerate(order):
        if session.status != RUNNING:
            break
        session.process_ballot(cards[idx])
        if timeout_s is not None and pos % 64 == 63:
            if time.perf_counter() - start > timeout_s:
                timed_out = True
                break
    wall = time.perf_counter() - start
    status = session.status
    draws = session.t
    if timed_out and status == RUNNING:
        status = FULL_HAND_COUNT
        draws = setup.total_cards
    frontier = session.frontier
    return SimOutcome(
        config=config_label,
        sim_index=sim_index,
        draws=draws,
        status=status,
        timed_out=timed_out,
        final_frontier=0 if frontier is None else len(frontier.nodes),
        peak_frontier=0 if frontier is None else frontier.peak_size,
        peak_entries=session.store.peak_entries,
        wall_time_s=wall,
    )


@dataclass(frozen=True)
class SimBatch:
    contest_name: str
    margin: float
    master_seed: int
    outcomes: tuple[SimOutcome, ...]

    def for_config(self, label: str) -> list[SimOutcome]:
        return [o for o in self.outcomes if o.config == label]

    def config_labels(self) -> list[str]:
        seen: dict[str, None] = {}
        for o in self.outcomes:
            seen.setdefault(o.config, None)
        return list(seen)

    def aggregate(self, label: str) -> dict:
        outcomes = self.for_config(label)
        draws = np.array([o.draws for o in outcomes], dtype=float)
        final = np.array([o.final_frontier for o in outcomes], dtype=float)
        n = len(outcomes)
        se = float(draws.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return {
            "config": label,
            "n_sims": n,
            "mean_draws": float(draws.mean()),
            "se_draws": se,
            "p50_draws": float(np.percentile(draws, 50)),
            "p90_draws": float(np.percentile(draws, 90)),
            "p99_draws": float(np.percentile(draws, 99)),
            "certified_rate": sum(o.certified for o in outcomes) / n,
            "full_count_rate": sum(o.status == FULL_HAND_COUNT for o in outcomes) / n,
            "mean_final_frontier": float(final.mean()),
            "max_peak_frontier": max(o.peak_frontier for o in outcomes),
            "mean_wall_time_s": float(np.mean([o.wall_time_s for o in outcomes])),
        }


def _run_sim_block(args) -> list[SimOutcome]:
    contest_dict, reported_winner, labeled_configs, master_seed, indices, timeout_s = args
    from .contest import contest_from_dict

    contest = contest_from_dict(contest_dict)
    setup = AuditSetup.from_contest(contest, reported_winner)
    cards = contest.expand_cards()
    out = []
    for sim_index in indices:
        order = sample_order(master_seed, sim_index, setup.total_cards)
        for label, config in labeled_configs:
            out.append(
                run_audit_once(cards, setup, config, order, label, sim_index, timeout_s)
            )
    return out


def run_simulations(
    contest: Contest,
    configs: Sequence[tuple[str, AuditConfig]],
    n_sims: int,
    master_seed: int,
    reported_winner: int | None = None,
    timeout_s: float | None = None,
    jobs: int = 1,
) -> SimBatch:
    """Audit ``contest`` n_sims times per configuration.

    Simulation i uses the same card order for every configuration. With
    jobs > 1 the sim indices are split across processes; results are
    identical to the sequential run because every order is derived from
    (master_seed, i) alone.
    """
    if n_sims < 1:
        raise ValueError("need at least one simulation")
    tab = tabulate(contest)
    margin = last_round_margin(tab, contest.total_cards)
    indices = list(range(n_sims))
    if jobs <= 1:
        blocks = [
            _run_sim_block(
                (contest.to_dict(), reported_winner, list(configs), master_seed, indices, timeout_s)
            )
        ]
    else:
        chunks = [indices[i::jobs] for i in range(jobs) if indices[i::jobs]]
        args = [
            (contest.to_dict(), reported_winner, list(configs), master_seed, chunk, timeout_s)
            for chunk in chunks
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            blocks = list(pool.map(_run_sim_block, args))
    config_order = {label: pos for pos, (label, _) in enumerate(configs)}
    outcomes = [o for block in blocks for o in block]
    outcomes.sort(key=lambda o: (o.sim_index, config_order[o.config]))
    return SimBatch(contest.name, margin, master_seed, tuple(outcomes))


def export_results(batch: SimBatch, path) -> None:
    """Write per-sim rows plus one aggregate row per configuration."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        base = {
            "contest": batch.contest_name,
            "margin": batch.margin,
            "seed": batch.master_seed,
        }
        for o in batch.outcomes:
            writer.writerow(
                {
                    **base,
                    "row_type": "sim",
                    "config": o.config,
                    "sim_index": o.sim_index,
                    "draws": o.draws,
                    "status": o.status,
                    "timed_out": int(o.timed_out),
                    "final_frontier": o.final_frontier,
                    "peak_frontier": o.peak_frontier,
                    "peak_entries": o.peak_entries,
                    "wall_time_s": o.wall_time_s,
                }
            )
        for label in batch.config_labels():
            agg = batch.aggregate(label)
            writer.writerow({**base, "row_type": "aggregate", **agg})


def read_results(path) -> tuple[list[dict], list[dict]]:
    """Load an exported CSV back into (sim_rows, aggregate_rows)."""
    sims: list[dict] = []
    aggs: list[dict] = []
    int_fields = {
        "seed", "sim_index", "draws", "timed_out", "final_frontier",
        "peak_frontier", "peak_entries", "n_sims", "max_peak_frontier",
    }
    float_fields = {
        "margin", "wall_time_s", "mean_draws", "se_draws", "p50_draws",
        "p90_draws", "p99_draws", "certified_rate", "full_count_rate",
        "mean_final_frontier", "mean_wall_time_s",
    }
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for key, value in row.items():
                if value is None or value == "":
                    continue
                if key in int_fields:
                    parsed[key] = int(value)
                elif key in float_fields:
                    parsed[key] = float(value)
                else:
                    parsed[key] = value
            (sims if parsed.get("row_type") == "sim" else aggs).append(parsed)
    return sims, aggs
