"""The QSAT game: players assign prefix variables in order until the matrix is decided."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, Optional

from .qbf import Qbf, Quantifier, simplify

ACTIONS = (0, 1)


class Player(enum.Enum):
    P = "P"  # existential
    OP = "OP"  # universal

    @property
    def other(self) -> "Player":
        return Player.OP if self is Player.P else Player.P

    @classmethod
    def owner(cls, quant: Quantifier) -> "Player":
        return cls.P if quant is Quantifier.EXISTS else cls.OP


class GameError(ValueError):
    pass


@dataclass(frozen=True)
class Outcome:
    winner: Player


@dataclass(frozen=True)
class GameState:
    residual: Qbf
    history: tuple[tuple[int, int], ...] = ()

    @property
    def move_index(self) -> int:
        return len(self.history)

    @property
    def is_terminal(self) -> bool:
        return self.residual.is_decided() or not self.residual.prefix

    @property
    def to_move(self) -> Optional[Player]:
        if self.is_terminal:
            return None
        return Player.owner(self.residual.head[0])

    @property
    def head_var(self) -> int:
        return self.residual.head[1]

    def key(self) -> str:
        mover = self.to_move.value if self.to_move else "-"
        return f"{mover}:{self.residual.key()}"


def initial_state(q: Qbf) -> GameState:
    if not q.prefix or not q.matrix:
        raise GameError("game needs a nonempty prefix and matrix")
    return GameState(q)


def apply_action(s: GameState, a: int) -> GameState:
    if s.is_terminal:
        raise GameError("no moves from a terminal state")
    if a not in ACTIONS:
        raise GameError(f"illegal action {a!r}")
    var = s.head_var
    return GameState(simplify(s.residual, var, a), s.history + ((var, a),))


def terminal_outcome(s: GameState) -> Optional[Outcome]:
    r = s.residual
    if not r.matrix:
        return Outcome(Player.P)
    if r.has_empty_clause():
        return Outcome(Player.OP)
    # every clause loses a literal per assigned variable, so an exhausted
    # prefix always leaves the matrix decided
    assert r.prefix, "exhausted prefix with undecided matrix"
    return None


def play(q: Qbf, actions: Iterable[int]) -> GameState:
    s = initial_state(q)
    for a in actions:
        s = apply_action(s, a)
    return s


def minimax_value(s: GameState) -> int:
    """+1 if P wins with best play from ``s``, -1 otherwise. Plain game-tree search."""
    out = terminal_outcome(s)
    if out is not None:
        return 1 if out.winner is Player.P else -1
    vals = [minimax_value(apply_action(s, a)) for a in ACTIONS]
    return max(vals) if s.to_move is Player.P else min(vals)


def trace_records(s: GameState, original: Qbf) -> list[dict]:
    """JSON-ready move records for the history of ``s``."""
    return [
        {
            "move_index": i,
            "variable": var,
            "value": val,
            "player": Player.owner(original.quantifier_of(var)).value,
        }
        for i, (var, val) in enumerate(s.history)
    ]


def dump_trace(s: GameState, original: Qbf) -> str:
    return "\n".join(json.dumps(r) for r in trace_records(s, original))
