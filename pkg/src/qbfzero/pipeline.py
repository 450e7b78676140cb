"""Self-play, per-player training, arena evaluation and run bookkeeping.

One run learns a single QBF: every epoch plays ``episodes_per_epoch`` self-play
games, trains each player's network on its own moves, then pits the two new
networks against each other in the arena.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .checkpoint import save_checkpoint
from .game import GameState, Outcome, Player, apply_action, initial_state, terminal_outcome
from .ggnn import (
    GgnnConfig,
    GgnnParams,
    OptimizerState,
    TrainingExample,
    batch_loss_and_gradients,
    init_params,
    optimizer_step,
)
from .graph import encode
from .mcts import NetEvaluator, SearchConfig, SearchTree, as_evaluator, run_search, sample_action
from .qbf import DEFAULT_ORACLE_BOUND, Qbf, count_game_states
from .verify import MoveRecord, local_correctness_ratio

log = logging.getLogger(__name__)

COVERAGE_WINDOW = 10


@dataclass
class RunConfig:
    epochs: int = 32
    episodes_per_epoch: int = 10
    arena_rounds: int = 20
    batch_size: int = 8
    seed: int = 0
    oracle_bound: int = DEFAULT_ORACLE_BOUND
    all_moves: bool = False  # local-correctness denominator: every move instead of winnable ones
    threads: int = 1
    search: SearchConfig = field(default_factory=SearchConfig)
    ggnn: GgnnConfig = field(default_factory=GgnnConfig)

    def __post_init__(self):
        for name in ("epochs", "episodes_per_epoch", "arena_rounds", "batch_size", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


# flat config-file key -> (section, attribute)
CONFIG_KEYS = {
    "epochs": (None, "epochs"),
    "episodes_per_epoch": (None, "episodes_per_epoch"),
    "arena_rounds": (None, "arena_rounds"),
    "batch_size": (None, "batch_size"),
    "seed": (None, "seed"),
    "oracle_bound": (None, "oracle_bound"),
    "all_moves": (None, "all_moves"),
    "threads": (None, "threads"),
    "iterations": ("search", "iterations"),
    "c_puct": ("search", "c_puct"),
    "hidden_size": ("ggnn", "hidden_size"),
    "passes": ("ggnn", "passes"),
    "mlp_hidden": ("ggnn", "mlp_hidden"),
    "learning_rate": ("ggnn", "learning_rate"),
    "weight_decay": ("ggnn", "weight_decay"),
    "optimizer": ("ggnn", "optimizer"),
}


def _coerce(raw: str, like):
    if isinstance(like, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return type(like)(raw)


def parse_config(text: str, base: Optional[RunConfig] = None) -> RunConfig:
    """Read flat ``key = value`` lines (``#`` starts a comment)."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in CONFIG_KEYS:
            raise ValueError(f"config line {lineno}: unknown or malformed entry {raw.strip()!r}")
        values[key] = value.strip()
    return apply_overrides(base or RunConfig(), values)


def apply_overrides(cfg: RunConfig, values: dict) -> RunConfig:
    top = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    search = asdict(cfg.search)
    ggnn = asdict(cfg.ggnn)
    sections = {None: top, "search": search, "ggnn": ggnn}
    for key, value in values.items():
        section, attr = CONFIG_KEYS[key]
        target = sections[section]
        target[attr] = _coerce(value, target[attr]) if isinstance(value, str) else value
    top["search"] = SearchConfig(**search)
    top["ggnn"] = GgnnConfig(**ggnn)
    return RunConfig(**top)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------------


@dataclass
class Step:
    state: GameState
    pi: np.ndarray
    player: Player


@dataclass
class Episode:
    steps: list[Step]
    outcome: Outcome
    final: GameState
    states_accessed: int


@dataclass
class EpochReport:
    epoch: int
    wins_p: int
    wins_op: int
    local_p: Optional[float]
    local_op: Optional[float]
    local_mean: Optional[float]
    loss_p: Optional[float]
    loss_op: Optional[float]
    states_accessed: list[int]
    coverage_avg: float
    total_states: Optional[int] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def self_play_episode(q: Qbf, nets, cfg: SearchConfig, rng: np.random.Generator) -> Episode:
    """Play one game with both sides searching and sampling from the visit counts."""
    evaluate = as_evaluator(nets)
    s = initial_state(q)
    steps = []
    seen: set[str] = set()
    while terminal_outcome(s) is None:
        tree = SearchTree()
        pi = run_search(s, evaluate, cfg, tree=tree)
        seen.update(tree)
        steps.append(Step(s, pi, s.to_move))
        s = apply_action(s, sample_action(pi, "sample", rng))
    seen.add(s.key())
    return Episode(steps, terminal_outcome(s), s, len(seen))


def play_episodes(q: Qbf, evaluate, cfg: SearchConfig, seeds, threads: int = 1) -> list[Episode]:
    """One episode per seed, returned in seed order whatever the thread count."""
    def one(seq):
        return self_play_episode(q, evaluate, cfg, np.random.default_rng(seq))

    if threads <= 1:
        return [one(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, seeds))


def label_examples(ep: Episode) -> tuple[list[TrainingExample], list[TrainingExample]]:
    """Split an episode into (P examples, OP examples), values from each mover's side."""
    buffers: dict[Player, list[TrainingExample]] = {Player.P: [], Player.OP: []}
    for st in ep.steps:
        z = 1.0 if st.player is ep.outcome.winner else -1.0
        buffers[st.player].append(TrainingExample(encode(st.state.residual), st.pi.copy(), z))
    return buffers[Player.P], buffers[Player.OP]


def train_player(params: GgnnParams, opt: OptimizerState, buffer: Sequence[TrainingExample],
                 batch_size: int, rng: np.random.Generator):
    """One shuffled pass over ``buffer``. Returns (params, opt_state, mean batch loss)."""
    order = rng.permutation(len(buffer))
    losses = []
    for start in range(0, len(order), batch_size):
        batch = [buffer[i] for i in order[start:start + batch_size]]
        l, grads = batch_loss_and_gradients(params, batch)
        params, opt = optimizer_step(params, grads, params.config, opt)
        losses.append(l)
    return params, opt, float(np.mean(losses))


def train_epoch(params_p, params_op, buffers, cfg: RunConfig, rng, opt_states=None):
    """Train each player on its own buffer; an empty buffer leaves that player untouched.

    Returns ``(params_p, params_op, opt_states, (loss_p, loss_op))`` with
    ``None`` losses for skipped players.
    """
    opt_states = dict(opt_states or {Player.P: OptimizerState(), Player.OP: OptimizerState()})
    params = {Player.P: params_p, Player.OP: params_op}
    losses: dict[Player, Optional[float]] = {}
    for player, buf in zip((Player.P, Player.OP), buffers):
        if not buf:
            log.info("empty buffer for %s, skipping", player.value)
            losses[player] = None
            continue
        params[player], opt_states[player], losses[player] = train_player(
            params[player], opt_states[player], buf, cfg.batch_size, rng)
    return params[Player.P], params[Player.OP], opt_states, (losses[Player.P], losses[Player.OP])


@dataclass
class ArenaResult:
    wins_p: int
    wins_op: int
    moves: list[MoveRecord]
    finals: list[GameState]


def arena(q: Qbf, params_p, params_op, rounds: int, cfg: SearchConfig, rng,
          policies: Optional[dict] = None) -> ArenaResult:
    """Play ``rounds`` sampled games and log every move.

    ``policies`` may replace a side's search with a fixed ``GameState -> action``
    function, keyed by Player.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    policies = policies or {}
    evaluate = NetEvaluator(params_p, params_op) if len(policies) < 2 else None
    wins = {Player.P: 0, Player.OP: 0}
    moves, finals = [], []
    for game in range(rounds):
        s = initial_state(q)
        while terminal_outcome(s) is None:
            if s.to_move in policies:
                a = policies[s.to_move](s)
            else:
                a = sample_action(run_search(s, evaluate, cfg), "sample", rng)
            moves.append(MoveRecord(s.residual, s.to_move, a, game, s.move_index))
            s = apply_action(s, a)
        wins[terminal_outcome(s).winner] += 1
        finals.append(s)
    return ArenaResult(wins[Player.P], wins[Player.OP], moves, finals)


def coverage_stats(episodes, window: int = COVERAGE_WINDOW) -> tuple[list[int], list[float]]:
    """Per-episode distinct states and their trailing moving average."""
    counts = [e.states_accessed if isinstance(e, Episode) else int(e) for e in episodes]
    avg = [float(np.mean(counts[max(0, i + 1 - window):i + 1])) for i in range(len(counts))]
    return counts, avg


def _mean_present(*xs):
    xs = [x for x in xs if x is not None]
    return float(np.mean(xs)) if xs else None


@dataclass
class RunResult:
    reports: list[EpochReport]
    params_p: GgnnParams
    params_op: GgnnParams
    opt_states: dict


def run_training(q: Qbf, cfg: RunConfig, checkpoint_dir=None, report_path=None,
                 arena_log_path=None) -> RunResult:
    if q.is_decided() or not q.prefix:
        raise ValueError("cannot train on a decided formula")
    root_seq = np.random.SeedSequence(cfg.seed)
    init_p, init_op, epoch_root = root_seq.spawn(3)
    p_seed, op_seed = (int(s.generate_state(1)[0]) for s in (init_p, init_op))
    params_p = init_params(cfg.ggnn, p_seed)
    params_op = init_params(cfg.ggnn, op_seed)
    opt_states = {Player.P: OptimizerState(), Player.OP: OptimizerState()}
    try:
        total_states = count_game_states(q, cfg.oracle_bound)
    except ValueError:
        total_states = None

    if checkpoint_dir is not None:
        Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)
    report_fh = open(report_path, "w") if report_path else None
    arena_fh = open(arena_log_path, "w") if arena_log_path else None
    all_counts: list[int] = []
    reports = []
    try:
        for epoch, epoch_seq in enumerate(epoch_root.spawn(cfg.epochs)):
            *episode_seqs, train_seq, arena_seq = epoch_seq.spawn(cfg.episodes_per_epoch + 2)
            episodes = play_episodes(q, NetEvaluator(params_p, params_op), cfg.search,
                                     episode_seqs, cfg.threads)
            buf_p, buf_op = [], []
            for ep in episodes:
                bp, bo = label_examples(ep)
                buf_p += bp
                buf_op += bo
            params_p, params_op, opt_states, (loss_p, loss_op) = train_epoch(
                params_p, params_op, (buf_p, buf_op), cfg, np.random.default_rng(train_seq), opt_states)

            res = arena(q, params_p, params_op, cfg.arena_rounds, cfg.search,
                        np.random.default_rng(arena_seq))
            lp = local_correctness_ratio(res.moves, Player.P, cfg.all_moves, cfg.oracle_bound)
            lo = local_correctness_ratio(res.moves, Player.OP, cfg.all_moves, cfg.oracle_bound)
            counts = [e.states_accessed for e in episodes]
            all_counts += counts
            _, avg = coverage_stats(all_counts)
            report = EpochReport(epoch, res.wins_p, res.wins_op, lp, lo, _mean_present(lp, lo),
                                 loss_p, loss_op, counts, avg[-1], total_states)
            reports.append(report)
            log.info("epoch %d: arena P %d / OP %d, local P %s OP %s", epoch, res.wins_p,
                     res.wins_op, lp, lo)
            if report_fh:
                report_fh.write(report.to_json() + "\n")
                report_fh.flush()
            if arena_fh:
                for m in res.moves:
                    arena_fh.write(m.to_json() + "\n")
            if checkpoint_dir is not None:
                save_checkpoint(params_p, Path(checkpoint_dir) / "P.ckpt", opt_states[Player.P])
                save_checkpoint(params_op, Path(checkpoint_dir) / "OP.ckpt", opt_states[Player.OP])
    finally:
        if report_fh:
            report_fh.close()
        if arena_fh:
            arena_fh.close()
    return RunResult(reports, params_p, params_op, opt_states)
