"""Move-level and strategy-level correctness checks against the brute-force oracle."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional

import numpy as np

from .game import ACTIONS, GameState, Player, apply_action, initial_state, terminal_outcome
from .mcts import SearchConfig, as_evaluator, run_search
from .qbf import DEFAULT_ORACLE_BOUND, Qbf, oracle_policy, oracle_truth, parse_qdimacs, serialize_qdimacs, simplify

Policy = Callable[[GameState], int]


@dataclass(frozen=True)
class MoveRecord:
    residual: Qbf
    player: Player
    action: int
    game: int = 0
    move_index: int = 0

    @property
    def variable(self) -> int:
        return self.residual.head[1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "game": self.game,
                "move_index": self.move_index,
                "variable": self.variable,
                "value": self.action,
                "player": self.player.value,
                "residual": serialize_qdimacs(self.residual),
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "MoveRecord":
        d = json.loads(line)
        return cls(parse_qdimacs(d["residual"]), Player(d["player"]), int(d["value"]),
                   int(d.get("game", 0)), int(d.get("move_index", 0)))


def winnable(residual: Qbf, player: Player, bound: int = DEFAULT_ORACLE_BOUND) -> bool:
    return oracle_truth(residual, bound) == (player is Player.P)


def local_correct(state: GameState, action: int, bound: int = DEFAULT_ORACLE_BOUND) -> bool:
    """Does ``action`` keep the mover in a won position?"""
    if state.is_terminal:
        raise ValueError("local correctness is undefined at terminal states")
    after = simplify(state.residual, state.head_var, action)
    return oracle_truth(after, bound) == (state.to_move is Player.P)


def local_correctness_counts(moves: Iterable[MoveRecord], player: Player, all_moves: bool = False,
                             bound: int = DEFAULT_ORACLE_BOUND) -> tuple[int, int, int]:
    """(correct, eligible, total) for ``player``'s moves.

    A move is eligible when the mover still had a winning option; with
    ``all_moves`` every move is eligible.
    """
    correct = eligible = total = 0
    for m in moves:
        if m.player is not player:
            continue
        total += 1
        if not all_moves and not winnable(m.residual, player, bound):
            continue
        eligible += 1
        correct += local_correct(GameState(m.residual), m.action, bound)
    return correct, eligible, total


def local_correctness_ratio(moves: Iterable[MoveRecord], player: Player, all_moves: bool = False,
                            bound: int = DEFAULT_ORACLE_BOUND) -> Optional[float]:
    correct, eligible, _ = local_correctness_counts(moves, player, all_moves, bound)
    return correct / eligible if eligible else None


def local_summary(moves, player, all_moves=False, bound=DEFAULT_ORACLE_BOUND) -> dict:
    correct, eligible, total = local_correctness_counts(list(moves), player, all_moves, bound)
    return {"ratio": correct / eligible if eligible else None, "eligible": eligible, "total": total}


# ---------------------------------------------------------------------------
# policies


def oracle_handle(bound: int = DEFAULT_ORACLE_BOUND) -> Policy:
    return lambda s: oracle_policy(s.residual, bound)


def constant_handle(value: int = 0, overrides: Optional[Mapping[int, int]] = None) -> Policy:
    overrides = dict(overrides or {})
    return lambda s: overrides.get(s.head_var, value)


def random_handle(seed: int) -> Policy:
    rng = np.random.default_rng(seed)
    return lambda s: int(rng.integers(2))


def network_handle(params_p, params_op, cfg: Optional[SearchConfig] = None) -> Policy:
    """Deterministic strategy: argmax of the search distribution."""
    cfg = SearchConfig(iterations=(cfg or SearchConfig()).iterations,
                       c_puct=(cfg or SearchConfig()).c_puct, mode="argmax")
    evaluate = as_evaluator((params_p, params_op))
    return lambda s: int(np.argmax(run_search(s, evaluate, cfg)))


# ---------------------------------------------------------------------------
# enumeration


def global_correctness(q: Qbf, policy: Policy, side: Optional[Player] = None,
                       bound: int = DEFAULT_ORACLE_BOUND, return_tree: bool = False):
    """Fraction of enumerated opponent lines that ``policy`` wins.

    The policy plays the side the oracle says should win; the other side
    branches on both values at each of its turns. Leaves are the terminal
    states of that walk.
    """
    winner = Player.P if oracle_truth(q, bound) else Player.OP
    if side is not None and side is not winner:
        raise ValueError(f"policy side {side.value} cannot win this formula; {winner.value} does")
    if q.num_quantified > bound:
        raise ValueError(f"{q.num_quantified} variables exceeds enumeration bound {bound}")

    won = leaves = 0
    walked: list[tuple[GameState, int]] = []
    stack = [initial_state(q)]
    while stack:
        s = stack.pop()
        out = terminal_outcome(s)
        if out is not None:
            leaves += 1
            won += out.winner is winner
            continue
        if s.to_move is winner:
            a = policy(s)
            walked.append((s, a))
            stack.append(apply_action(s, a))
        else:
            stack.extend(apply_action(s, a) for a in reversed(ACTIONS))
    ratio = won / leaves
    return (ratio, walked, leaves) if return_tree else ratio
