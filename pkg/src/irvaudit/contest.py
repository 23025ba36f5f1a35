"""Contest data model and instant-runoff tabulation.

Candidates are referred to by index throughout the engine; labels only
matter at the parsing and reporting boundaries. A ballot is a strict
partial ranking: a tuple of distinct candidate indices, possibly empty,
not necessarily complete. Multiplicities live on the ballot record so a
contest file stays compact; ``expand_cards`` flattens to one entry per
physical card when an audit needs to draw them individually.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence


class ContestFormatError(ValueError):
    """A contest document is malformed (bad JSON, labels, or rankings)."""


@dataclass(frozen=True)
class Ballot:
    """A ranking together with the number of identical cards."""

    ranking: tuple[int, ...]
    count: int = 1


@dataclass(frozen=True)
class Contest:
    name: str
    candidates: tuple[str, ...]
    ballots: tuple[Ballot, ...]

    def __post_init__(self) -> None:
        if len(self.candidates) < 1:
            raise ContestFormatError("contest needs at least one candidate")
        if len(set(self.candidates)) != len(self.candidates):
            raise ContestFormatError("candidate labels must be distinct")
        k = len(self.candidates)
        for ballot in self.ballots:
            if ballot.count < 1:
                raise ContestFormatError("ballot count must be >= 1")
            seen = set()
            for idx in ballot.ranking:
                if not 0 <= idx < k:
                    raise ContestFormatError(f"candidate index {idx} out of range")
                if idx in seen:
                    raise ContestFormatError(f"candidate index {idx} repeated in ranking")
                seen.add(idx)
        if self.total_cards < 1:
            raise ContestFormatError("contest needs at least one card")

    @property
    def num_candidates(self) -> int:
        return len(self.candidates)

    @property
    def total_cards(self) -> int:
        return sum(b.count for b in self.ballots)

    def index_of(self, label: str) -> int:
        try:
            return self.candidates.index(label)
        except ValueError:
            raise KeyError(f"unknown candidate label {label!r}") from None

    def expand_cards(self) -> list[tuple[int, ...]]:
        """One entry per physical card, in file order then multiplicity."""
        cards: list[tuple[int, ...]] = []
        for ballot in self.ballots:
            cards.extend([ballot.ranking] * ballot.count)
        return cards

    def ranking_from_labels(self, labels: Sequence[str]) -> tuple[int, ...]:
        ranking = tuple(self.index_of(label) for label in labels)
        if len(set(ranking)) != len(ranking):
            raise ContestFormatError("ranking repeats a candidate")
        return ranking

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "candidates": list(self.candidates),
            "ballots": [
                {"ranking": [self.candidates[i] for i in b.ranking], "count": b.count}
                for b in self.ballots
            ],
        }


def contest_from_dict(data: dict) -> Contest:
    if not isinstance(data, dict):
        raise ContestFormatError("contest document must be a JSON object")
    try:
        name = data["name"]
        labels = data["candidates"]
        raw_ballots = data["ballots"]
    except (KeyError, TypeError) as exc:
        raise ContestFormatError(f"contest document missing field: {exc}") from None
    if not isinstance(name, str):
        raise ContestFormatError("contest name must be a string")
    if not isinstance(labels, list) or not all(isinstance(c, str) for c in labels):
        raise ContestFormatError("candidates must be a list of strings")
    if len(set(labels)) != len(labels):
        raise ContestFormatError("candidate labels must be distinct")
    index = {label: i for i, label in enumerate(labels)}
    if not isinstance(raw_ballots, list):
        raise ContestFormatError("ballots must be a list")
    ballots = []
    for pos, entry in enumerate(raw_ballots):
        if not isinstance(entry, dict) or "ranking" not in entry:
            raise ContestFormatError(f"ballot {pos}: expected object with a ranking")
        ranking = entry["ranking"]
        count = entry.get("count", 1)
        if not isinstance(ranking, list):
            raise ContestFormatError(f"ballot {pos}: ranking must be a list")
        if not isinstance(count, int) or isinstance(count, bool) or count < 1:
            raise ContestFormatError(f"ballot {pos}: count must be a positive integer")
        indices = []
        for rank_pos, label in enumerate(ranking):
            if label not in index:
                raise ContestFormatError(
                    f"ballot {pos}: unknown candidate {label!r} at rank {rank_pos}"
                )
            indices.append(index[label])
        if len(set(indices)) != len(indices):
            raise ContestFormatError(f"ballot {pos}: ranking repeats a candidate")
        ballots.append(Ballot(tuple(indices), count))
    return Contest(name, tuple(labels), tuple(ballots))


def parse_contest(text: str | bytes) -> Contest:
    """Parse the JSON contest format, reporting the position of bad input."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ContestFormatError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    return contest_from_dict(data)


def load_contest(path) -> Contest:
    with open(path, "rb") as fh:
        return parse_contest(fh.read())


@dataclass(frozen=True)
class Tabulation:
    """Outcome of an IRV count.

    elimination_order lists candidates in the order they left the count,
    winner last. round_tallies[r] maps each candidate still standing at
    round r to its tally. last_round_margin_cards is the winner's tally
    minus the runner-up's in the final two-candidate round (the winner's
    full tally when only one candidate ever stood).
    """

    elimination_order: tuple[int, ...]
    round_tallies: tuple[dict[int, int], ...]
    last_round_margin_cards: int

    @property
    def winner(self) -> int:
        return self.elimination_order[-1]


def tally_given_remaining(contest: Contest, remaining: Iterable[int]) -> dict[int, int]:
    """First preferences among ``remaining``; exhausted cards count nowhere."""
    standing = set(remaining)
    tallies = {c: 0 for c in sorted(standing)}
    for ballot in contest.ballots:
        for idx in ballot.ranking:
            if idx in standing:
                tallies[idx] += ballot.count
                break
    return tallies


def lowest_index_tie_break(tied: Sequence[int], tallies: dict[int, int]) -> int:
    return min(tied)


def tabulate(
    contest: Contest,
    tie_break: Callable[[Sequence[int], dict[int, int]], int] = lowest_index_tie_break,
) -> Tabulation:
    """Run the IRV count to completion.

    Each round eliminates one candidate with the minimal tally; ties go to
    ``tie_break`` (default: lowest index). Rounds run until one candidate
    stands, so a k-candidate contest has k-1 elimination rounds plus the
    final stand; a single-candidate contest has one round.
    """
    remaining = list(range(contest.num_candidates))
    eliminated: list[int] = []
    rounds: list[dict[int, int]] = []
    margin = 0
    while True:
        tallies = tally_given_remaining(contest, remaining)
        rounds.append(tallies)
        if len(remaining) == 1:
            margin = tallies[remaining[0]] if not eliminated else margin
            break
        low = min(tallies[c] for c in remaining)
        tied = [c for c in remaining if tallies[c] == low]
        loser = tie_break(tied, tallies)
        if loser not in tied:
            raise ValueError("tie_break must pick one of the tied candidates")
        if len(remaining) == 2:
            other = remaining[0] if remaining[1] == loser else remaining[1]
            margin = tallies[other] - tallies[loser]
        eliminated.append(loser)
        remaining.remove(loser)
    order = tuple(eliminated) + (remaining[0],)
    return Tabulation(order, tuple(rounds), margin)


def last_round_margin(tabulation: Tabulation, total_cards: int) -> float:
    """Final-round margin diluted by the total number of cards."""
    return tabulation.last_round_margin_cards / total_cards


def alt_order_count(k: int) -> int:
    """Number of complete elimination orders not won by a fixed candidate."""
    if k < 2:
        raise ValueError("need at least two candidates")
    return math.factorial(k) - math.factorial(k - 1)
