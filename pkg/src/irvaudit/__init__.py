"""Risk-limiting audits of instant-runoff elections.

The engine tests a reported winner by covering every alternative
elimination order with a lazily expanded frontier of order suffixes,
each backed by an intersection of ALPHA test supermartingales over
shared pairwise requirements.
"""

__version__ = "0.1.0"

from .contest import (
    Ballot,
    Contest,
    ContestFormatError,
    Tabulation,
    alt_order_count,
    contest_from_dict,
    last_round_margin,
    load_contest,
    parse_contest,
    tabulate,
    tally_given_remaining,
)
from .controller import (
    CERTIFIED,
    FULL_HAND_COUNT,
    RUNNING,
    AuditConfig,
    AuditSession,
    AuditSetup,
    DrawReport,
    SnapshotError,
    TerminalStateError,
    start_audit,
)
from .frontier import ExpansionPolicy, Frontier, Node
from .requirements import (
    Requirement,
    assort,
    extension_requirements,
    mean_assorter,
    requirement_count,
    requirement_true,
    root_requirements,
    suffix_requirements,
)
from .simulate import (
    SimBatch,
    SimOutcome,
    add_fake_candidates,
    export_results,
    random_contest,
    read_results,
    run_audit_once,
    run_simulations,
    sample_order,
    synthetic_contest,
)
from .store import RequirementStore, StoreEntry
from .tsm import BaseTsm, Eta0Policy, make_eta0_resolver

__all__ = [
    "AuditConfig",
    "AuditSession",
    "AuditSetup",
    "Ballot",
    "BaseTsm",
    "CERTIFIED",
    "Contest",
    "ContestFormatError",
    "DrawReport",
    "Eta0Policy",
    "ExpansionPolicy",
    "FULL_HAND_COUNT",
    "Frontier",
    "Node",
    "RUNNING",
    "Requirement",
    "RequirementStore",
    "SimBatch",
    "SimOutcome",
    "SnapshotError",
    "StoreEntry",
    "Tabulation",
    "TerminalStateError",
    "add_fake_candidates",
    "alt_order_count",
    "assort",
    "contest_from_dict",
    "export_results",
    "extension_requirements",
    "last_round_margin",
    "load_contest",
    "make_eta0_resolver",
    "mean_assorter",
    "parse_contest",
    "random_contest",
    "read_results",
    "requirement_count",
    "requirement_true",
    "root_requirements",
    "run_audit_once",
    "run_simulations",
    "sample_order",
    "start_audit",
    "suffix_requirements",
    "synthetic_contest",
    "tabulate",
    "tally_given_remaining",
]
