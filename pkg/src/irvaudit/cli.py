"""Command-line entry points.

Exit codes: 0 success, 2 usage errors (argparse), 1 runtime failures.
All randomness flows from --seed, so a fixed seed reproduces output
byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .contest import ContestFormatError, last_round_margin, load_contest, tabulate
from .controller import AuditConfig, AuditSession, AuditSetup, RUNNING
from .frontier import ExpansionPolicy
from .simulate import export_results, run_simulations, sample_order


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irvaudit",
        description="Risk-limiting audits of instant-runoff elections.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tabulate", help="run the IRV count on a contest file")
    p.add_argument("contest", help="contest JSON file")
    p.set_defaults(func=cmd_tabulate)

    p = sub.add_parser("audit", help="replay an audit over a drawn card order")
    p.add_argument("contest", help="contest JSON file")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--seed", type=int, help="derive the card order from this seed")
    group.add_argument("--order", help="file with one 0-based card index per line")
    p.add_argument("--trace", action="store_true", help="emit one JSON object per draw")
    p.add_argument("--max-draws", type=int, help="stop after this many draws")
    _config_flags(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("simulate", help="Monte-Carlo audits of one contest")
    p.add_argument("contest", help="contest JSON file")
    p.add_argument("--sims", type=int, default=100, help="simulations per configuration")
    p.add_argument("--seed", type=int, default=1, help="master seed")
    p.add_argument("--out", required=True, help="results CSV path")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--timeout", type=float, help="wall-clock budget per simulation (s)")
    p.add_argument(
        "--figures",
        metavar="DIR",
        help="also render report figures into DIR after exporting",
    )
    _config_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="render figures from a results CSV")
    p.add_argument("results", help="CSV produced by simulate")
    p.add_argument("--outdir", help="figure directory (default: alongside the CSV)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the audit service over HTTP")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--state-dir", help="directory for session snapshots")
    p.set_defaults(func=cmd_serve)

    return parser


def _config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.05, help="risk limit")
    p.add_argument(
        "--eta0",
        default="fixed_051",
        choices=("fixed_051", "lrm", "am"),
        help="tuning-value policy",
    )
    p.add_argument("--d", type=float, default=200.0, help="shrinkage weight")
    p.add_argument(
        "--policy",
        default=None,
        metavar="SPEC",
        help="expansion policy, e.g. below:1,tight:1.6487 or every:50,loose",
    )
    p.add_argument(
        "--no-abandonment",
        action="store_true",
        help="disable implication-based abandonment",
    )
    p.add_argument(
        "--no-parking", action="store_true", help="keep zero-watcher entries live"
    )
    p.add_argument("--frontier-cap", type=int, default=10**6)
    p.add_argument(
        "--reported-winner",
        help="candidate label to audit as winner (default: tabulated winner)",
    )


def config_from_args(args) -> AuditConfig:
    policy = (
        ExpansionPolicy()
        if args.policy is None
        else ExpansionPolicy.parse(args.policy)
    )
    return AuditConfig(
        alpha=args.alpha,
        eta0_mode=args.eta0,
        d=args.d,
        policy=policy,
        abandonment=not args.no_abandonment,
        parking=not args.no_parking,
        frontier_cap=args.frontier_cap,
    )


def _setup_from_args(args):
    contest = load_contest(args.contest)
    winner = None
    if args.reported_winner is not None:
        try:
            winner = contest.index_of(args.reported_winner)
        except KeyError as exc:
            raise ValueError(exc.args[0]) from None
    return contest, AuditSetup.from_contest(contest, winner)


def cmd_tabulate(args) -> int:
    contest = load_contest(args.contest)
    tab = tabulate(contest)
    labels = contest.candidates
    print(f"contest: {contest.name}")
    print(f"cards: {contest.total_cards}")
    for rnd, tallies in enumerate(tab.round_tallies, start=1):
        shown = ", ".join(f"{labels[c]}={n}" for c, n in sorted(tallies.items()))
        print(f"round {rnd}: {shown}")
    order = " < ".join(labels[c] for c in tab.elimination_order)
    print(f"elimination order: {order}")
    print(f"winner: {labels[tab.winner]}")
    print(
        "last-round margin: "
        f"{tab.last_round_margin_cards} cards "
        f"({last_round_margin(tab, contest.total_cards):.6f} diluted)"
    )
    return 0


def cmd_audit(args) -> int:
    contest, setup = _setup_from_args(args)
    config = config_from_args(args)
    cards = contest.expand_cards()
    if args.order is not None:
        with open(args.order) as fh:
            order = [int(line) for line in fh if line.strip()]
        seen = set()
        for idx in order:
            if not 0 <= idx < len(cards) or idx in seen:
                raise ValueError(f"order file entry {idx} is out of range or repeated")
            seen.add(idx)
    else:
        seed = args.seed if args.seed is not None else 1
        order = sample_order(seed, 0, len(cards)).tolist()
    session = AuditSession(setup, config)
    labels = setup.candidates
    for idx in order:
        if session.status != RUNNING:
            break
        if args.max_draws is not None and session.t >= args.max_draws:
            break
        report = session.process_ballot(cards[idx])
        if args.trace:
            payload = report.to_dict(labels)
            payload["requirements"] = session.store.diagnostic_rows(labels)
            print(json.dumps(payload))
        else:
            progress = report.min_progress(config.alpha)
            print(
                f"draw={report.draw} frontier={report.frontier_size} "
                f"progress={progress:.4f} status={report.status}"
            )
    print(f"final: status={session.status} draws={session.t}", file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    contest, setup = _setup_from_args(args)
    config = config_from_args(args)
    batch = run_simulations(
        contest,
        [(config.describe(), config)],
        n_sims=args.sims,
        master_seed=args.seed,
        reported_winner=setup.reported_winner,
        timeout_s=args.timeout,
        jobs=args.jobs,
    )
    export_results(batch, args.out)
    agg = batch.aggregate(batch.config_labels()[0])
    print(
        f"sims={agg['n_sims']} mean_draws={agg['mean_draws']:.2f} "
        f"certified={agg['certified_rate']:.3f} "
        f"full_count={agg['full_count_rate']:.3f} -> {args.out}"
    )
    if args.figures:
        from .report import render_report

        for path in render_report(args.out, args.figures):
            print(f"figure: {path}")
    return 0


def cmd_report(args) -> int:
    from .report import render_report

    outdir = args.outdir
    if outdir is None:
        import os

        outdir = os.path.dirname(os.path.abspath(args.results)) or "."
    for path in render_report(args.results, outdir):
        print(f"figure: {path}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(state_dir=args.state_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ContestFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
