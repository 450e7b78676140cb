"""Command-line entry point: ``qbfzero <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .checkpoint import load_checkpoint
from .game import Player
from .graph import encode
from .mcts import SearchConfig
from .pipeline import RunConfig, apply_overrides, arena, coverage_stats, parse_config, run_training
from .qbf import (
    DEFAULT_ORACLE_BOUND,
    count_game_states,
    oracle_truth,
    parse_qdimacs,
    random_qbf,
    serialize_qdimacs,
)
from .verify import MoveRecord, global_correctness, local_summary, network_handle

log = logging.getLogger("qbfzero")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _read_qbf(path):
    return parse_qdimacs(Path(path).read_text())


def _run_config(args) -> RunConfig:
    text = Path(args.config).read_text() if args.config else ""
    cfg = parse_config(text)
    has_seed = any(l.split("#", 1)[0].split("=", 1)[0].strip() == "seed" for l in text.splitlines())
    if args.seed is None and not has_seed:
        raise UsageError(f"{args.command}: --seed is required (or set 'seed' in the config file)")
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "threads", None):
        overrides["threads"] = args.threads
    return apply_overrides(cfg, overrides)


def _load_pair(ckpt_dir):
    d = Path(ckpt_dir)
    return load_checkpoint(d / "P.ckpt")[0], load_checkpoint(d / "OP.ckpt")[0]


def cmd_gen(args):
    if args.truth == "balanced":
        targets = [True] * (args.count // 2) + [False] * (args.count - args.count // 2)
    else:
        targets = [{"true": True, "false": False, "any": None}[args.truth]] * args.count
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, target in enumerate(targets):
        q = random_qbf(args.vars, args.clauses, seed=args.seed * 100_003 + i, target_truth=target)
        (out / f"{args.name}_{i:03d}.qdimacs").write_text(serialize_qdimacs(q))
    print(f"wrote {len(targets)} files to {out}")


def cmd_oracle(args):
    print("true" if oracle_truth(_read_qbf(args.file), args.bound) else "false")


def cmd_train(args):
    q = _read_qbf(args.file)
    cfg = _run_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res = run_training(q, cfg, checkpoint_dir=out, report_path=out / "reports.jsonl",
                       arena_log_path=out / "arena.jsonl")
    return res


def cmd_solve(args):
    res = cmd_train(args)
    last = res.reports[-1]
    share_p = last.wins_p / (last.wins_p + last.wins_op)
    verdict = share_p > args.threshold
    print(json.dumps({"verdict": verdict, "wins_p": last.wins_p, "wins_op": last.wins_op}),
          file=sys.stderr)
    print("true" if verdict else "false")


def cmd_arena(args):
    import numpy as np

    q = _read_qbf(args.file)
    p, op = _load_pair(args.checkpoints)
    res = arena(q, p, op, args.rounds, SearchConfig(iterations=args.iterations),
                np.random.default_rng(args.seed))
    if args.log:
        Path(args.log).write_text("".join(m.to_json() + "\n" for m in res.moves))
    print(json.dumps({"wins_p": res.wins_p, "wins_op": res.wins_op, "rounds": args.rounds}))


def cmd_verify_local(args):
    moves = [MoveRecord.from_json(l) for l in Path(args.log).read_text().splitlines() if l.strip()]
    players = [Player.P, Player.OP] if args.player == "both" else [Player(args.player)]
    summary = {p.value: local_summary(moves, p, args.all_moves, args.bound) for p in players}
    print(json.dumps(summary if len(players) > 1 else summary[players[0].value]))


def cmd_verify_global(args):
    q = _read_qbf(args.file)
    p, op = _load_pair(args.checkpoints)
    policy = network_handle(p, op, SearchConfig(iterations=args.iterations))
    ratio, walked, leaves = global_correctness(q, policy, bound=args.bound, return_tree=True)
    side = Player.P if oracle_truth(q, args.bound) else Player.OP
    print(json.dumps({"ratio": ratio, "leaves": leaves, "side": side.value}))


def cmd_encode(args):
    print(encode(_read_qbf(args.file)).to_json())


def cmd_stats(args):
    q = _read_qbf(args.file)
    out = {
        "vars": q.num_quantified,
        "clauses": q.clause_count,
        "nodes": 2 * q.num_quantified + q.clause_count,
        "truth": oracle_truth(q, args.bound),
        "game_states": count_game_states(q, args.bound),
    }
    if args.reports:
        counts = []
        for line in Path(args.reports).read_text().splitlines():
            if line.strip():
                counts += json.loads(line)["states_accessed"]
        counts, avg = coverage_stats(counts)
        out["states_accessed"] = counts
        out["moving_average"] = avg
    print(json.dumps(out))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qbfzero", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write random QDIMACS instances")
    g.add_argument("--vars", type=int, required=True)
    g.add_argument("--clauses", type=int, required=True)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--truth", choices=["true", "false", "balanced", "any"], default="any")
    g.add_argument("--out", default=".")
    g.add_argument("--name", default="qbf")
    g.set_defaults(func=cmd_gen)

    o = sub.add_parser("oracle", help="print the truth value of a formula")
    o.add_argument("file")
    o.add_argument("--bound", type=int, default=DEFAULT_ORACLE_BOUND)
    o.set_defaults(func=cmd_oracle)

    for name, func, helptext in (("train", cmd_train, "self-play training run"),
                                 ("solve", cmd_solve, "train, then report the dominant side")):
        t = sub.add_parser(name, help=helptext)
        t.add_argument("file")
        t.add_argument("--config")
        t.add_argument("--seed", type=int)
        t.add_argument("--out", default="run")
        t.add_argument("--threads", type=int, default=None)
        if name == "solve":
            t.add_argument("--threshold", type=float, default=0.5)
        t.set_defaults(func=func)

    a = sub.add_parser("arena", help="play two checkpoints against each other")
    a.add_argument("file")
    a.add_argument("--checkpoints", required=True, help="directory holding P.ckpt and OP.ckpt")
    a.add_argument("--rounds", type=int, default=20)
    a.add_argument("--iterations", type=int, default=25)
    a.add_argument("--seed", type=int, required=True)
    a.add_argument("--log")
    a.set_defaults(func=cmd_arena)

    vl = sub.add_parser("verify-local", help="local correctness of logged arena moves")
    vl.add_argument("log")
    vl.add_argument("--player", choices=["P", "OP", "both"], default="both")
    vl.add_argument("--all-moves", action="store_true")
    vl.add_argument("--bound", type=int, default=DEFAULT_ORACLE_BOUND)
    vl.set_defaults(func=cmd_verify_local)

    vg = sub.add_parser("verify-global", help="enumerate the losing side against a checkpoint")
    vg.add_argument("file")
    vg.add_argument("--checkpoints", required=True)
    vg.add_argument("--iterations", type=int, default=25)
    vg.add_argument("--bound", type=int, default=DEFAULT_ORACLE_BOUND)
    vg.set_defaults(func=cmd_verify_global)

    e = sub.add_parser("encode", help="dump the graph encoding as JSON")
    e.add_argument("file")
    e.set_defaults(func=cmd_encode)

    s = sub.add_parser("stats", help="instance statistics and state coverage")
    s.add_argument("file")
    s.add_argument("--reports", help="reports.jsonl from a training run")
    s.add_argument("--bound", type=int, default=DEFAULT_ORACLE_BOUND)
    s.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"qbfzero {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
