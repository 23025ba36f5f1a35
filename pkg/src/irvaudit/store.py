"""Shared requirement store: one base TSM per distinct requirement.

Many suffixes watch the same requirement, so entries are reference
counted. An entry whose last watcher releases it is parked, not dropped:
its state freezes and the draw history (kept here) lets a later request
replay exactly the missed draws through the same scalar update path,
making parked-and-resumed values bit-identical to continuously updated
ones. Abandonment marks entries whose evidence can no longer help any
node (proven true, or contradicted by a sibling requirement's strong
evidence); abandoned keys are sticky, so re-requests start abandoned.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

from .requirements import DB, Requirement
from .tsm import ACTIVE as TSM_ACTIVE
from .tsm import PROVEN_TRUE, BaseTsm, assorter_value_fn

LIVE = "active"
PARKED = "parked"
ABANDONED = "abandoned"


class StoreEntry:
    __slots__ = ("req", "tsm", "lifecycle", "refcount", "parked_at", "assort")

    def __init__(self, req: Requirement, tsm: BaseTsm) -> None:
        self.req = req
        self.tsm = tsm
        self.lifecycle = LIVE
        self.refcount = 0
        self.parked_at = 0
        self.assort = assorter_value_fn(req)

    @property
    def abandoned(self) -> bool:
        return self.lifecycle == ABANDONED


class RequirementStore:
    """Keyed TSM pool over a single sample history.

    Parameters
    ----------
    total_cards : population size B shared by every TSM.
    eta0_resolver : requirement -> eta0 in (1/2, 1).
    d : shrinkage weight for every TSM.
    abandon_threshold : TSM value at which a DB entry's evidence of
        falseness triggers implication abandonment (typically 1/alpha).
    use_implications : whether the contradiction rules run at all;
        proven_true entries are abandoned regardless.
    parking : when False, zero-refcount entries keep updating live
        (parking is purely an efficiency device and must not change
        behaviour; this switch exists to check that).
    """

    def __init__(
        self,
        total_cards: int,
        eta0_resolver: Callable[[Requirement], float],
        d: float = 200.0,
        abandon_threshold: float = 20.0,
        use_implications: bool = True,
        parking: bool = True,
    ) -> None:
        self.total_cards = total_cards
        self.eta0_resolver = eta0_resolver
        self.d = d
        if abandon_threshold <= 1.0:
            raise ValueError("abandon threshold must exceed 1")
        self.abandon_threshold = abandon_threshold
        self._log_abandon = math.log(abandon_threshold)
        self.use_implications = use_implications
        self.parking = parking
        self.history: list[tuple[int, ...]] = []
        self.entries: dict[Requirement, StoreEntry] = {}
        self.abandoned_keys: set[Requirement] = set()
        self.peak_entries = 0
        self._live_cache: list[StoreEntry] | None = None

    @property
    def t(self) -> int:
        return len(self.history)

    def _new_entry(self, req: Requirement) -> StoreEntry:
        entry = StoreEntry(req, BaseTsm(self.eta0_resolver(req), self.d, self.total_cards))
        self.entries[req] = entry
        if len(self.entries) > self.peak_entries:
            self.peak_entries = len(self.entries)
        return entry

    def _catch_up(self, entry: StoreEntry) -> None:
        start = entry.tsm.t
        if start < len(self.history) and entry.tsm.status == TSM_ACTIVE:
            assort = entry.assort
            entry.tsm.replay(assort(r) for r in self.history[start:])
        entry.parked_at = len(self.history)

    def request(self, req: Requirement) -> StoreEntry:
        """Take a watcher reference; creates or unparks the entry as needed."""
        entry = self.entries.get(req)
        if entry is None:
            entry = self._new_entry(req)
            if req in self.abandoned_keys:
                entry.lifecycle = ABANDONED
            else:
                self._catch_up(entry)
                self._live_cache = None
        elif entry.lifecycle == PARKED:
            self._catch_up(entry)
            entry.lifecycle = LIVE
            self._live_cache = None
        entry.refcount += 1
        return entry

    def peek(self, req: Requirement) -> StoreEntry:
        """Current entry state without taking a reference.

        Absent keys are materialized parked (abandoned if sticky); parked
        entries are caught up to the present so look-ahead scoring sees
        live values. The refcount is untouched.
        """
        entry = self.entries.get(req)
        if entry is None:
            entry = self._new_entry(req)
            if req in self.abandoned_keys:
                entry.lifecycle = ABANDONED
                return entry
            self._catch_up(entry)
            if self.parking:
                entry.lifecycle = PARKED
            else:
                self._live_cache = None
        elif entry.lifecycle == PARKED:
            self._catch_up(entry)
        return entry

    def release(self, req: Requirement) -> None:
        """Drop a watcher reference; parks the entry when none remain."""
        entry = self.entries[req]
        if entry.refcount <= 0:
            raise ValueError(f"release without matching request: {req}")
        entry.refcount -= 1
        if (
            entry.refcount == 0
            and entry.lifecycle == LIVE
            and self.parking
        ):
            entry.lifecycle = PARKED
            entry.parked_at = len(self.history)
            self._live_cache = None

    def ingest(self, ranking: tuple[int, ...]) -> None:
        """Append one drawn card and update every live, non-terminal TSM."""
        self.history.append(ranking)
        live = self._live_cache
        if live is None:
            live = self._live_cache = [
                e
                for e in self.entries.values()
                if e.lifecycle == LIVE and e.tsm.status == TSM_ACTIVE
            ]
        went_terminal = False
        for entry in live:
            tsm = entry.tsm
            tsm.update(entry.assort(ranking))
            if tsm.status != TSM_ACTIVE:
                went_terminal = True
        if went_terminal:
            self._live_cache = None

    def apply_abandonment(self) -> list[Requirement]:
        """Abandon entries no longer worth watching; returns newly abandoned keys.

        proven_true entries always go (their value is pinned at 0). When
        implications are on, a DB(i, j, S) entry at or above the threshold
        is strong evidence its requirement is false, which entails
        DB(j, i, S) and DND(i, j) are not worth testing. Sources are
        collected before any target is marked, so sweep order is moot.

        The rule reads every non-abandoned entry at its current value, so
        parked entries are caught up first; otherwise a parked source
        would fire later than its always-live twin and parking would
        change audit decisions.
        """
        newly: dict[Requirement, None] = {}
        targets: list[Requirement] = []
        for entry in self.entries.values():
            if entry.lifecycle == ABANDONED:
                continue
            if entry.lifecycle == PARKED:
                self._catch_up(entry)
            status = entry.tsm.status
            if status == PROVEN_TRUE:
                newly[entry.req] = None
                continue
            if not self.use_implications or entry.req.kind != DB:
                continue
            if status == TSM_ACTIVE and entry.tsm.log_m < self._log_abandon:
                continue
            req = entry.req
            targets.append(Requirement(DB, req.j, req.i, req.smask))
            targets.append(Requirement.dnd(req.i, req.j))
        for req in targets:
            if req not in self.abandoned_keys and req not in newly:
                newly[req] = None
        for req in newly:
            self.abandoned_keys.add(req)
            entry = self.entries.get(req)
            if entry is not None:
                entry.lifecycle = ABANDONED
        if newly:
            self._live_cache = None
        return list(newly)

    def entry(self, req: Requirement) -> StoreEntry:
        return self.entries[req]

    def active_count(self) -> int:
        return sum(1 for e in self.entries.values() if e.lifecycle == LIVE)

    def diagnostic_rows(self, labels: Sequence[str]) -> list[dict]:
        rows = []
        for req in sorted(self.entries, key=Requirement.sort_key):
            entry = self.entries[req]
            rows.append(
                {
                    "requirement": req.label(labels),
                    "lifecycle": entry.lifecycle,
                    "status": entry.tsm.status,
                    "t": entry.tsm.t,
                    "log_m": entry.tsm.log_m,
                    "refcount": entry.refcount,
                }
            )
        return rows
