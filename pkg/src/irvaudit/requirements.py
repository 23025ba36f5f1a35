"""Pairwise requirements over elimination orders and their assorters.

Two requirement kinds cover every way an alternative elimination order can
hold:

* ``DB(i, j, S)`` — i directly beats j when exactly the candidates in S
  remain standing (i and j both in S): tally_S(i) > tally_S(j).
* ``DND(i, j)`` — i does not dominate j: fp(i) <= pot(j), where fp(i) is
  i's first-preference count and pot(j) counts cards ranking j ahead of i
  or ranking j without mentioning i.

Assorters map a card to {0, 1/2, 1} and are oriented so a TRUE requirement
has population mean <= 1/2. A test supermartingale against the null
"mean <= 1/2" therefore accumulates evidence that the requirement is
false; an alternative order survives only while every requirement it needs
still looks plausible.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .contest import Contest, tally_given_remaining

DB = "DB"
DND = "DND"


@dataclass(frozen=True, eq=False)
class Requirement:
    """Hashable requirement key; ``smask`` is a candidate-index bitmask, 0 for DND."""

    kind: str
    i: int
    j: int
    smask: int = 0

    def __post_init__(self) -> None:
        if self.kind not in (DB, DND):
            raise ValueError(f"unknown requirement kind {self.kind!r}")
        if self.i == self.j:
            raise ValueError("requirement needs two distinct candidates")
        if self.i < 0 or self.j < 0:
            raise ValueError("candidate indices must be non-negative")
        if self.kind == DB:
            both = (1 << self.i) | (1 << self.j)
            if self.smask & both != both:
                raise ValueError("DB requires i and j to be members of S")
        elif self.smask != 0:
            raise ValueError("DND carries no candidate set")
        # profiling hot spot: store lookups hash the same key many times per draw
        object.__setattr__(self, "_hash", hash((self.kind, self.i, self.j, self.smask)))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if not isinstance(other, Requirement):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.i == other.i
            and self.j == other.j
            and self.smask == other.smask
        )

    @classmethod
    def db(cls, i: int, j: int, members: Iterable[int]) -> "Requirement":
        smask = 0
        for c in members:
            smask |= 1 << c
        return cls(DB, i, j, smask)

    @classmethod
    def dnd(cls, i: int, j: int) -> "Requirement":
        return cls(DND, i, j)

    def members(self) -> tuple[int, ...]:
        out = []
        mask = self.smask
        c = 0
        while mask:
            if mask & 1:
                out.append(c)
            mask >>= 1
            c += 1
        return tuple(out)

    def sort_key(self) -> tuple:
        return (self.kind, self.i, self.j, self.smask)

    def label(self, labels: Sequence[str]) -> str:
        if self.kind == DND:
            return f"DND({labels[self.i]},{labels[self.j]})"
        members = ",".join(labels[c] for c in self.members())
        return f"DB({labels[self.i]},{labels[self.j]},{{{members}}})"


def assort(req: Requirement, ranking: tuple[int, ...]) -> float:
    """Assorter value of one card for ``req``: 0.0, 0.5, or 1.0."""
    if req.kind == DB:
        smask = req.smask
        for idx in ranking:
            if smask >> idx & 1:
                if idx == req.j:
                    return 1.0
                if idx == req.i:
                    return 0.0
                return 0.5
        return 0.5
    # DND(i, j): 1 if the card is a first preference for i, 0 if it counts
    # toward pot(j), 1/2 otherwise.
    if not ranking:
        return 0.5
    if ranking[0] == req.i:
        return 1.0
    i_pos = j_pos = -1
    for pos, idx in enumerate(ranking):
        if idx == req.i:
            i_pos = pos
        elif idx == req.j:
            j_pos = pos
    if j_pos >= 0 and (i_pos < 0 or j_pos < i_pos):
        return 0.0
    return 0.5


def first_pref_and_potential(contest: Contest, i: int, j: int) -> tuple[int, int]:
    """fp(i) and pot(j) for the DND(i, j) requirement."""
    fp = 0
    pot = 0
    for ballot in contest.ballots:
        ranking = ballot.ranking
        if ranking and ranking[0] == i:
            fp += ballot.count
        i_pos = j_pos = -1
        for pos, idx in enumerate(ranking):
            if idx == i:
                i_pos = pos
            elif idx == j:
                j_pos = pos
        if j_pos >= 0 and (i_pos < 0 or j_pos < i_pos):
            pot += ballot.count
    return fp, pot


def requirement_true(req: Requirement, contest: Contest) -> bool:
    """Whether ``req`` holds on the full contest (population truth)."""
    if req.kind == DB:
        tallies = tally_given_remaining(contest, req.members())
        return tallies[req.i] > tallies[req.j]
    fp, pot = first_pref_and_potential(contest, req.i, req.j)
    return fp <= pot


def mean_assorter(req: Requirement, contest: Contest) -> Fraction:
    """Exact population mean of the assorter over the contest's cards."""
    twice = 0
    total = 0
    for ballot in contest.ballots:
        twice += int(2 * assort(req, ballot.ranking)) * ballot.count
        total += ballot.count
    return Fraction(twice, 2 * total)


def root_requirements(alt_winner: int, k: int) -> list[Requirement]:
    """Watchlist for a fresh root suffix [alt_winner]."""
    if not 0 <= alt_winner < k:
        raise ValueError("alternative winner out of range")
    return [Requirement.dnd(c, alt_winner) for c in range(k) if c != alt_winner]


def extension_requirements(
    suffix: Sequence[int], new: int, k: int
) -> list[Requirement]:
    """Requirements added when ``suffix`` is extended by ``new``.

    ``suffix`` is stored eliminations-first: suffix[-1] is the alternative
    winner and suffix[0] the most recently prepended (earliest of the
    suffix's eliminations). The child suffix is (new,) + suffix, asserting
    that ``new`` is eliminated when exactly set(suffix) + {new} remain. The
    added set has one DND per still-unmentioned candidate plus one DB per
    suffix member, always k-1 requirements in total.
    """
    mentioned = set(suffix)
    if new in mentioned or not 0 <= new < k:
        raise ValueError("extension candidate must be unmentioned and in range")
    if len(suffix) >= k - 1:
        raise ValueError("suffix already pins a complete order")
    members = list(suffix) + [new]
    reqs = [
        Requirement.dnd(c, new)
        for c in range(k)
        if c != new and c not in mentioned
    ]
    reqs.extend(Requirement.db(s, new, members) for s in suffix)
    return reqs


def suffix_requirements(suffix: Sequence[int], k: int) -> list[Requirement]:
    """Whole watchlist of a suffix, built non-incrementally.

    Equals root_requirements of suffix[-1] plus the union of the
    extension sets along the path; kept as an independent construction so
    the incremental bookkeeping can be checked against it.
    """
    order = list(suffix)
    reqs = root_requirements(order[-1], k)
    for pos in range(len(order) - 2, -1, -1):
        reqs.extend(extension_requirements(order[pos + 1 :], order[pos], k))
    return reqs


def requirement_count(k: int) -> int:
    """Distinct DB identities over k candidates: k(k-1)2^(k-2)."""
    if k < 2:
        raise ValueError("need at least two candidates")
    return k * (k - 1) * 2 ** (k - 2)
