"""Lazily expanded frontier of alternative-order suffixes.

Every complete elimination order that does not end with the reported
winner is covered by exactly one frontier node: a suffix [c_l, ..., c_1]
(winner c_1 last, stored eliminations-first) stands for all orders ending
that way. Each node tracks an intersection TSM over its watched
requirements; when it reaches 1/alpha every order under the suffix is
ruled out and the node is pruned. Certification is an empty frontier.

Expansion replaces a node by its children (one per unmentioned
candidate), splitting the suffix's order set into finer pieces whose
watchlists pick up the added requirements. The policy decides when: a
trigger (Every i-th draw: the single lowest-scoring node; Below x: every
node scoring under x) proposes nodes, and a look-ahead (Loose: some child
would outscore the parent; Tight y: and that child also exceeds y) vetoes
pointless splits. A node's score is its best non-abandoned watched TSM
value, the signal that some requirement is accumulating evidence the
suffix can be refuted once it is isolated in a child.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .requirements import Requirement, extension_requirements, root_requirements
from .store import ABANDONED, RequirementStore
from .tsm import ACTIVE as TSM_ACTIVE
from .tsm import PROVEN_FALSE

INF = math.inf


@dataclass(frozen=True)
class ExpansionPolicy:
    """Trigger ("every" with period i / "below" with threshold x) plus
    look-ahead ("loose" / "tight" with bar y)."""

    trigger: str = "below"
    trigger_value: float = 1.0
    lookahead: str = "tight"
    lookahead_value: float = math.exp(0.5)

    def __post_init__(self) -> None:
        if self.trigger not in ("every", "below"):
            raise ValueError(f"unknown trigger {self.trigger!r}")
        if self.lookahead not in ("loose", "tight"):
            raise ValueError(f"unknown look-ahead {self.lookahead!r}")
        if self.trigger == "every":
            if self.trigger_value != int(self.trigger_value) or self.trigger_value < 1:
                raise ValueError("every needs a positive integer period")
        elif self.trigger_value <= 0:
            raise ValueError("below needs a positive score threshold")

    @classmethod
    def parse(cls, text: str) -> "ExpansionPolicy":
        """Parse flag grammar like ``below:1,tight:1.6487`` or ``every:50,loose``."""
        parts = [p.strip() for p in text.split(",")]
        if not 1 <= len(parts) <= 2:
            raise ValueError(f"cannot parse policy {text!r}")
        trig = parts[0].split(":")
        if len(trig) != 2 or trig[0] not in ("every", "below"):
            raise ValueError(f"cannot parse policy trigger {parts[0]!r}")
        if trig[0] == "every":
            tval = float(int(trig[1]))
        else:
            tval = float(trig[1])
        look, lval = "tight", math.exp(0.5)
        if len(parts) == 2:
            spec = parts[1].split(":")
            if spec[0] == "loose":
                if len(spec) != 1:
                    raise ValueError("loose takes no value")
                look, lval = "loose", 0.0
            elif spec[0] == "tight" and len(spec) == 2:
                look, lval = "tight", float(spec[1])
            else:
                raise ValueError(f"cannot parse look-ahead {parts[1]!r}")
        return cls(trig[0], tval, look, lval)

    def describe(self) -> str:
        if self.trigger == "every":
            head = f"every:{int(self.trigger_value)}"
        else:
            head = f"below:{self.trigger_value:g}"
        if self.lookahead == "loose":
            return f"{head},loose"
        return f"{head},tight:{self.lookahead_value:g}"


class Node:
    """One frontier suffix with its watchlist and intersection TSM (log domain).

    ``_entries`` and ``_ext`` are per-session caches (store entry objects
    are stable for a store's lifetime; extension sets depend only on the
    suffix); they are rebuilt lazily and never serialized.
    """

    __slots__ = ("suffix", "watch", "log_i", "born_at", "_entries", "_ext")

    def __init__(
        self, suffix: tuple[int, ...], watch: tuple[Requirement, ...], log_i: float, born_at: int
    ) -> None:
        self.suffix = suffix
        self.watch = watch
        self.log_i = log_i
        self.born_at = born_at
        self._entries = None
        self._ext = None

    def watch_entries(self, store: RequirementStore):
        cached = self._entries
        if cached is None:
            entries = store.entries
            cached = self._entries = tuple(entries[req] for req in self.watch)
        return cached

    def extensions(self, k: int) -> dict[int, list[Requirement]]:
        cached = self._ext
        if cached is None:
            mentioned = set(self.suffix)
            cached = self._ext = {
                c: extension_requirements(self.suffix, c, k)
                for c in range(k)
                if c not in mentioned
            }
        return cached


class Frontier:
    def __init__(
        self,
        k: int,
        winner: int,
        policy: ExpansionPolicy,
        alpha: float,
        cap: int = 10**6,
    ) -> None:
        if k < 2:
            raise ValueError("need at least two candidates")
        if not 0 <= winner < k:
            raise ValueError("winner index out of range")
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if cap < k - 1:
            raise ValueError("frontier cap cannot hold the roots")
        self.k = k
        self.winner = winner
        self.policy = policy
        self.alpha = alpha
        self.log_threshold = -math.log(alpha)
        self.cap = cap
        self.nodes: dict[tuple[int, ...], Node] = {}
        self.pruned: list[tuple[tuple[int, ...], int]] = []
        self.peak_size = 0
        self.cap_skips = 0

    def init_roots(self, store: RequirementStore) -> None:
        """One root per alternative winner, watching its DND requirements."""
        if self.nodes or self.pruned:
            raise ValueError("frontier already initialized")
        for c in range(self.k):
            if c == self.winner:
                continue
            watch = tuple(sorted(root_requirements(c, self.k), key=Requirement.sort_key))
            for req in watch:
                store.request(req)
            self.nodes[(c,)] = Node((c,), watch, 0.0, 0)
        self.peak_size = len(self.nodes)

    def step_intersection(self, store: RequirementStore) -> None:
        """Fold the latest draw's base-TSM ratios into every node's TSM.

        Weighting puts everything on the watched entries that were largest
        before the draw (ties share equally). A proven-false entry makes
        the whole intersection +inf at once; if every watched entry is
        abandoned the node's TSM freezes.
        """
        exp = math.exp
        for node in self.nodes.values():
            watched = node.watch_entries(store)
            best = None
            for e in watched:
                if e.lifecycle == ABANDONED:
                    continue
                tsm = e.tsm
                if tsm.status == PROVEN_FALSE:
                    node.log_i = INF
                    best = None
                    break
                prev = tsm.prev_log_m if tsm.status == TSM_ACTIVE else -INF
                if best is None or prev > best:
                    best = prev
            if best is None:
                continue
            rsum = 0.0
            ties = 0
            for e in watched:
                if e.lifecycle == ABANDONED:
                    continue
                tsm = e.tsm
                if tsm.status == TSM_ACTIVE:
                    if tsm.prev_log_m == best:
                        rsum += exp(tsm.log_m - tsm.prev_log_m)
                        ties += 1
                elif best == -INF:
                    rsum += 1.0
                    ties += 1
            node.log_i += math.log(rsum / ties)

    def prune(self, store: RequirementStore, draw: int) -> list[tuple[int, ...]]:
        """Remove nodes whose intersection TSM reached 1/alpha."""
        removed = [s for s, node in self.nodes.items() if node.log_i >= self.log_threshold]
        for suffix in removed:
            node = self.nodes.pop(suffix)
            for req in node.watch:
                store.release(req)
            self.pruned.append((suffix, draw))
        return removed

    def score_log(self, node: Node, store: RequirementStore) -> float:
        """log of the node's score: max watched non-abandoned TSM value.

        -inf when everything is abandoned (or pinned at value 0), +inf
        when a watched entry is proven false.
        """
        best = -INF
        for e in node.watch_entries(store):
            if e.lifecycle == ABANDONED:
                continue
            tsm = e.tsm
            if tsm.status == TSM_ACTIVE:
                if tsm.log_m > best:
                    best = tsm.log_m
            elif tsm.status == PROVEN_FALSE:
                return INF
        return best

    def _score_reaches(self, node: Node, store: RequirementStore, bar: float) -> bool:
        """Whether the node's score is already >= bar (early exit scan)."""
        for e in node.watch_entries(store):
            if e.lifecycle == ABANDONED:
                continue
            status = e.tsm.status
            if status == TSM_ACTIVE:
                if e.tsm.log_m >= bar:
                    return True
            elif status == PROVEN_FALSE:
                return True
        return False

    def expand(self, node: Node, store: RequirementStore, draw: int) -> list[Node]:
        """Replace ``node`` by one child per unmentioned candidate.

        Children request every watch key (inherited ones included) before
        the parent releases, so shared entries never park in between; each
        child starts from the parent's intersection TSM.
        """
        children = []
        for c, added in node.extensions(self.k).items():
            watch = tuple(
                sorted(set(node.watch).union(added), key=Requirement.sort_key)
            )
            for req in watch:
                store.request(req)
            child = Node((c,) + node.suffix, watch, node.log_i, draw)
            self.nodes[child.suffix] = child
            children.append(child)
        for req in node.watch:
            store.release(req)
        del self.nodes[node.suffix]
        if len(self.nodes) > self.peak_size:
            self.peak_size = len(self.nodes)
        return children

    def _lookahead_passes(
        self, node: Node, parent_log: float, store: RequirementStore
    ) -> bool:
        best_child = -INF
        for added in node.extensions(self.k).values():
            child_log = parent_log
            for req in added:
                e = store.peek(req)
                if e.lifecycle == ABANDONED:
                    continue
                tsm = e.tsm
                if tsm.status == TSM_ACTIVE:
                    if tsm.log_m > child_log:
                        child_log = tsm.log_m
                elif tsm.status == PROVEN_FALSE:
                    child_log = INF
            if child_log > best_child:
                best_child = child_log
        if best_child <= parent_log:
            return False
        if self.policy.lookahead == "tight":
            return best_child > math.log(self.policy.lookahead_value)
        return True

    def policy_step(
        self, draw: int, store: RequirementStore
    ) -> list[tuple[tuple[int, ...], int]]:
        """Run the expansion policy for this draw; returns (suffix, children) events.

        Children born this draw are exempt until the next one: candidates
        are snapshotted (with scores) before any expansion happens.
        """
        policy = self.policy
        if policy.trigger == "every":
            if draw % int(policy.trigger_value) != 0:
                return []
            candidates = [
                (self.score_log(node, store), node.suffix)
                for node in self.nodes.values()
                if len(node.suffix) < self.k - 1
            ]
            if not candidates:
                return []
            candidates = [min(candidates)]
        else:
            bar = math.log(policy.trigger_value)
            max_len = self.k - 1
            candidates = sorted(
                (self.score_log(node, store), node.suffix)
                for node in self.nodes.values()
                if len(node.suffix) < max_len
                and not self._score_reaches(node, store, bar)
            )
        events = []
        for parent_log, suffix in candidates:
            node = self.nodes[suffix]
            n_children = self.k - len(suffix)
            if len(self.nodes) - 1 + n_children > self.cap:
                self.cap_skips += 1
                continue
            if not self._lookahead_passes(node, parent_log, store):
                continue
            children = self.expand(node, store, draw)
            events.append((suffix, len(children)))
        return events
