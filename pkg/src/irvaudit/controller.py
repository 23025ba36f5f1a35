"""Audit session: per-draw orchestration, terminal states, snapshots.

Each accepted ballot flows through a fixed order: ingest into the store,
apply abandonment, fold ratios into every node's intersection TSM, prune,
then run the expansion policy. The audit certifies when the frontier
empties and falls back to a full hand count when the sample reaches the
population with nodes still standing (or on operator escalation).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

from .contest import Contest, contest_from_dict, last_round_margin, tabulate
from .frontier import ExpansionPolicy, Frontier, Node
from .requirements import Requirement
from .store import RequirementStore, StoreEntry
from .tsm import BaseTsm, Eta0Policy, make_eta0_resolver

RUNNING = "running"
CERTIFIED = "certified"
FULL_HAND_COUNT = "full_hand_count"

SNAPSHOT_FORMAT = "irvaudit-session"
SNAPSHOT_VERSION = 1


class TerminalStateError(RuntimeError):
    """Raised when a ballot (or escalation) is submitted to a finished session."""


class SnapshotError(ValueError):
    """Raised when a snapshot cannot be restored faithfully."""


@dataclass(frozen=True)
class AuditConfig:
    alpha: float = 0.05
    eta0_mode: str = "fixed_051"
    d: float = 200.0
    policy: ExpansionPolicy = field(default_factory=ExpansionPolicy)
    abandonment: bool = True
    parking: bool = True
    frontier_cap: int = 10**6
    abandon_threshold: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.eta0_mode not in Eta0Policy.MODES:
            raise ValueError(f"unknown eta0 mode {self.eta0_mode!r}")
        if self.d <= 0:
            raise ValueError("d must be positive")
        if self.frontier_cap < 1:
            raise ValueError("frontier cap must be positive")
        if self.abandon_threshold is not None and self.abandon_threshold <= 1.0:
            raise ValueError("abandon threshold must exceed 1")

    def describe(self) -> str:
        parts = [
            f"alpha={self.alpha:g}",
            f"eta0={self.eta0_mode}",
            f"d={self.d:g}",
            f"policy={self.policy.describe()}",
            f"abandon={'on' if self.abandonment else 'off'}",
            f"parking={'on' if self.parking else 'off'}",
        ]
        return ";".join(parts)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "eta0_mode": self.eta0_mode,
            "d": self.d,
            "policy": {
                "trigger": self.policy.trigger,
                "trigger_value": self.policy.trigger_value,
                "lookahead": self.policy.lookahead,
                "lookahead_value": self.policy.lookahead_value,
            },
            "abandonment": self.abandonment,
            "parking": self.parking,
            "frontier_cap": self.frontier_cap,
            "abandon_threshold": self.abandon_threshold,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AuditConfig":
        policy = data.get("policy", {})
        return cls(
            alpha=data.get("alpha", 0.05),
            eta0_mode=data.get("eta0_mode", "fixed_051"),
            d=data.get("d", 200.0),
            policy=ExpansionPolicy(
                policy.get("trigger", "below"),
                policy.get("trigger_value", 1.0),
                policy.get("lookahead", "tight"),
                policy.get("lookahead_value", math.exp(0.5)),
            ),
            abandonment=data.get("abandonment", True),
            parking=data.get("parking", True),
            frontier_cap=data.get("frontier_cap", 10**6),
            abandon_threshold=data.get("abandon_threshold"),
        )


@dataclass(frozen=True)
class AuditSetup:
    """What the audit knows before sampling starts."""

    contest_name: str
    candidates: tuple[str, ...]
    total_cards: int
    reported_winner: int
    cvrs: Contest | None = None
    reported_last_round_margin: float | None = None

    def __post_init__(self) -> None:
        if len(self.candidates) < 1 or len(set(self.candidates)) != len(self.candidates):
            raise ValueError("candidates must be distinct and non-empty")
        if not 0 <= self.reported_winner < len(self.candidates):
            raise ValueError("reported winner out of range")
        if self.total_cards < 1:
            raise ValueError("need at least one card")
        if self.cvrs is not None and self.cvrs.candidates != self.candidates:
            raise ValueError("reported ballots disagree on the candidate list")

    @classmethod
    def from_contest(
        cls, contest: Contest, reported_winner: int | None = None
    ) -> "AuditSetup":
        """Treat the contest's ballots as reported (CVR) data."""
        tab = tabulate(contest)
        winner = tab.winner if reported_winner is None else reported_winner
        return cls(
            contest_name=contest.name,
            candidates=contest.candidates,
            total_cards=contest.total_cards,
            reported_winner=winner,
            cvrs=contest,
            reported_last_round_margin=last_round_margin(tab, contest.total_cards),
        )

    def to_dict(self) -> dict:
        return {
            "contest_name": self.contest_name,
            "candidates": list(self.candidates),
            "total_cards": self.total_cards,
            "reported_winner": self.reported_winner,
            "cvrs": None if self.cvrs is None else self.cvrs.to_dict(),
            "reported_last_round_margin": self.reported_last_round_margin,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AuditSetup":
        cvrs = data.get("cvrs")
        return cls(
            contest_name=data["contest_name"],
            candidates=tuple(data["candidates"]),
            total_cards=data["total_cards"],
            reported_winner=data["reported_winner"],
            cvrs=None if cvrs is None else contest_from_dict(cvrs),
            reported_last_round_margin=data.get("reported_last_round_margin"),
        )


@dataclass(frozen=True)
class DrawReport:
    """What one accepted ballot did to the audit."""

    draw: int
    status: str
    frontier_size: int
    min_log_i: float
    max_log_i: float
    pruned: tuple[tuple[int, ...], ...]
    expanded: tuple[tuple[tuple[int, ...], int], ...]
    abandoned: tuple[Requirement, ...]
    active_requirements: int
    store_entries: int

    def min_progress(self, alpha: float) -> float:
        """min over nodes of I * alpha, clipped to [0, 1]; 1.0 when certified."""
        if self.frontier_size == 0:
            return 1.0
        return min(1.0, math.exp(self.min_log_i) * alpha)

    def to_dict(self, labels) -> dict:
        return {
            "draw": self.draw,
            "status": self.status,
            "frontier_size": self.frontier_size,
            "min_log_i": self.min_log_i,
            "max_log_i": self.max_log_i,
            "pruned": [[labels[c] for c in s] for s in self.pruned],
            "expanded": [
                {"suffix": [labels[c] for c in s], "children": n}
                for s, n in self.expanded
            ],
            "abandoned": [r.label(labels) for r in self.abandoned],
            "active_requirements": self.active_requirements,
            "store_entries": self.store_entries,
        }


def _build_eta0_policy(setup: AuditSetup, config: AuditConfig) -> Eta0Policy:
    if config.eta0_mode == "lrm":
        margin = setup.reported_last_round_margin
        if margin is None:
            raise ValueError("lrm eta0 mode needs a reported last-round margin")
        return Eta0Policy("lrm", last_round_margin=margin)
    if config.eta0_mode == "am":
        if setup.cvrs is None:
            raise ValueError("am eta0 mode needs reported ballots")
        return Eta0Policy("am", cvrs=setup.cvrs)
    return Eta0Policy()


class AuditSession:
    """A running audit over one contest.

    Single-candidate contests certify immediately (there is no
    alternative order to refute). Everything else starts with the root
    frontier and consumes ballots until certification, exhaustion, or
    escalation.
    """

    def __init__(self, setup: AuditSetup, config: AuditConfig) -> None:
        self.setup = setup
        self.config = config
        self.k = len(setup.candidates)
        resolver = make_eta0_resolver(_build_eta0_policy(setup, config))
        threshold = config.abandon_threshold
        if threshold is None:
            threshold = 1.0 / config.alpha
        self.store = RequirementStore(
            setup.total_cards,
            resolver,
            d=config.d,
            abandon_threshold=threshold,
            use_implications=config.abandonment,
            parking=config.parking,
        )
        self.t = 0
        self.reports: list[DrawReport] = []
        if self.k == 1:
            self.frontier = None
            self.status = CERTIFIED
            return
        self.frontier = Frontier(
            self.k, setup.reported_winner, config.policy, config.alpha, config.frontier_cap
        )
        self.frontier.init_roots(self.store)
        self.status = RUNNING

    def validate_ranking(self, ranking: tuple[int, ...]) -> None:
        k = self.k
        seen = set()
        for idx in ranking:
            if not 0 <= idx < k:
                raise ValueError(f"candidate index {idx} out of range")
            if idx in seen:
                raise ValueError(f"candidate index {idx} repeated in ranking")
            seen.add(idx)

    def process_ballot(self, ranking: tuple[int, ...]) -> DrawReport:
        if self.status != RUNNING:
            raise TerminalStateError(f"audit already {self.status}")
        ranking = tuple(ranking)
        self.validate_ranking(ranking)
        draw = self.t + 1
        frontier = self.frontier
        store = self.store
        store.ingest(ranking)
        abandoned = store.apply_abandonment()
        frontier.step_intersection(store)
        pruned = frontier.prune(store, draw)
        expanded = frontier.policy_step(draw, store) if frontier.nodes else []
        self.t = draw
        if not frontier.nodes:
            self.status = CERTIFIED
        elif draw >= self.setup.total_cards:
            self.status = FULL_HAND_COUNT
        # empty frontier: both extremes are +inf (everything reached 1/alpha)
        min_log = math.inf
        max_log = math.inf if not frontier.nodes else -math.inf
        for node in frontier.nodes.values():
            if node.log_i < min_log:
                min_log = node.log_i
            if node.log_i > max_log:
                max_log = node.log_i
        report = DrawReport(
            draw=draw,
            status=self.status,
            frontier_size=len(frontier.nodes),
            min_log_i=min_log,
            max_log_i=max_log,
            pruned=tuple(pruned),
            expanded=tuple(expanded),
            abandoned=tuple(abandoned),
            active_requirements=store.active_count(),
            store_entries=len(store.entries),
        )
        self.reports.append(report)
        return report

    def escalate(self) -> str:
        """Operator-forced full hand count; idempotent, invalid once certified."""
        if self.status == CERTIFIED:
            raise TerminalStateError("audit already certified")
        self.status = FULL_HAND_COUNT
        return self.status

    def frontier_view(self) -> list[dict]:
        if self.frontier is None:
            return []
        labels = self.setup.candidates
        store = self.store
        out = []
        for suffix, node in self.frontier.nodes.items():
            score_log = self.frontier.score_log(node, store)
            out.append(
                {
                    "suffix": [labels[c] for c in suffix],
                    "log_i": node.log_i,
                    "score_log": score_log,
                    "watch_size": len(node.watch),
                    "progress": min(1.0, math.exp(node.log_i) * self.config.alpha),
                }
            )
        return out

    # ------------------------------------------------------------------
    # snapshots

    def snapshot(self) -> dict:
        """JSON-able full state; floats round-trip exactly via repr."""
        store = self.store
        body = {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "setup": self.setup.to_dict(),
            "config": self.config.to_dict(),
            "t": self.t,
            "status": self.status,
            "history": [list(r) for r in store.history],
            "store": {
                "abandoned_keys": sorted(
                    ([r.kind, r.i, r.j, r.smask] for r in store.abandoned_keys)
                ),
                "peak_entries": store.peak_entries,
                "entries": [
                    {
                        "req": [e.req.kind, e.req.i, e.req.j, e.req.smask],
                        "eta0": e.tsm.eta0,
                        "t": e.tsm.t,
                        "s_prev": e.tsm.s_prev,
                        "log_m": e.tsm.log_m,
                        "prev_log_m": e.tsm.prev_log_m,
                        "status": e.tsm.status,
                        "lifecycle": e.lifecycle,
                        "refcount": e.refcount,
                        "parked_at": e.parked_at,
                    }
                    for e in store.entries.values()
                ],
            },
            "frontier": None
            if self.frontier is None
            else {
                "nodes": [
                    {
                        "suffix": list(node.suffix),
                        "watch": [[r.kind, r.i, r.j, r.smask] for r in node.watch],
                        "log_i": node.log_i,
                        "born_at": node.born_at,
                    }
                    for node in self.frontier.nodes.values()
                ],
                "pruned": [[list(s), d] for s, d in self.frontier.pruned],
                "peak_size": self.frontier.peak_size,
                "cap_skips": self.frontier.cap_skips,
            },
        }
        body["checksum"] = _checksum(body)
        return body

    @classmethod
    def restore(cls, snap: dict) -> "AuditSession":
        if not isinstance(snap, dict) or snap.get("format") != SNAPSHOT_FORMAT:
            raise SnapshotError("not a session snapshot")
        if snap.get("version") != SNAPSHOT_VERSION:
            raise SnapshotError(f"unsupported snapshot version {snap.get('version')!r}")
        body = {k: v for k, v in snap.items() if k != "checksum"}
        if _checksum(body) != snap.get("checksum"):
            raise SnapshotError("snapshot checksum mismatch")
        setup = AuditSetup.from_dict(snap["setup"])
        config = AuditConfig.from_dict(snap["config"])
        session = cls(setup, config)
        if session.frontier is not None:
            # wipe the freshly initialized roots; state comes from the snapshot
            for suffix in list(session.frontier.nodes):
                node = session.frontier.nodes.pop(suffix)
                for req in node.watch:
                    session.store.release(req)
        session.store.entries.clear()
        session.store.abandoned_keys.clear()
        session.store._live_cache = None
        session.t = snap["t"]
        session.status = snap["status"]
        store = session.store
        store.history = [tuple(r) for r in snap["history"]]
        store.peak_entries = snap["store"]["peak_entries"]
        store.abandoned_keys = {
            Requirement(k_, i, j, m) for k_, i, j, m in snap["store"]["abandoned_keys"]
        }
        for row in snap["store"]["entries"]:
            kind, i, j, smask = row["req"]
            req = Requirement(kind, i, j, smask)
            tsm = BaseTsm(row["eta0"], config.d, setup.total_cards)
            tsm.t = row["t"]
            tsm.s_prev = row["s_prev"]
            tsm.log_m = row["log_m"]
            tsm.prev_log_m = row["prev_log_m"]
            tsm.status = row["status"]
            entry = StoreEntry(req, tsm)
            entry.lifecycle = row["lifecycle"]
            entry.refcount = row["refcount"]
            entry.parked_at = row["parked_at"]
            store.entries[req] = entry
        if len(store.entries) > store.peak_entries:
            store.peak_entries = len(store.entries)
        if session.frontier is not None:
            fr = snap["frontier"]
            for row in fr["nodes"]:
                watch = tuple(
                    Requirement(k_, i, j, m) for k_, i, j, m in row["watch"]
                )
                suffix = tuple(row["suffix"])
                session.frontier.nodes[suffix] = Node(
                    suffix, watch, row["log_i"], row["born_at"]
                )
            session.frontier.pruned = [(tuple(s), d) for s, d in fr["pruned"]]
            session.frontier.peak_size = fr["peak_size"]
            session.frontier.cap_skips = fr["cap_skips"]
        return session

    def snapshot_json(self) -> str:
        return json.dumps(self.snapshot())

    @classmethod
    def restore_json(cls, text: str | bytes) -> "AuditSession":
        try:
            snap = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SnapshotError(f"snapshot is not valid JSON: {exc.msg}") from None
        return cls.restore(snap)


def _checksum(body: dict) -> str:
    canon = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def start_audit(setup: AuditSetup, config: AuditConfig | None = None) -> AuditSession:
    return AuditSession(setup, config if config is not None else AuditConfig())
