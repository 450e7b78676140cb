"""PUCT search over QSAT game states with one network per player."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .game import ACTIONS, GameState, Player, apply_action, terminal_outcome
from .ggnn import GgnnParams, forward
from .graph import encode

# state -> (prior over ACTIONS, value for the player to move)
Evaluator = Callable[[GameState], tuple[np.ndarray, float]]


@dataclass
class SearchConfig:
    iterations: int = 25
    c_puct: float = 1.0
    mode: str = "sample"  # "sample" or "argmax"

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.c_puct <= 0:
            raise ValueError("c_puct must be positive")
        if self.mode not in ("sample", "argmax"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class EdgeStats:
    N: int = 0
    W: float = 0.0
    P: float = 0.0

    @property
    def Q(self) -> float:
        return self.W / (self.N + 1)

    def update(self, value: float) -> None:
        # running mean on Q; W is kept so that Q == W / (N + 1)
        q = (self.Q * self.N + value) / (self.N + 1)
        self.N += 1
        self.W = q * (self.N + 1)


@dataclass
class Node:
    state: GameState
    edges: list[EdgeStats] = field(default_factory=list)
    expanded: bool = False
    passes: int = 0
    outcome_value: Optional[float] = None  # P-perspective, terminal states only

    @property
    def to_move(self) -> Optional[Player]:
        return self.state.to_move


class SearchTree(dict):
    """State key -> Node."""

    def node(self, state: GameState) -> Node:
        key = state.key()
        n = self.get(key)
        if n is None:
            n = Node(state)
            out = terminal_outcome(state)
            if out is not None:
                n.outcome_value = 1.0 if out.winner is Player.P else -1.0
            self[key] = n
        return n


class NetEvaluator:
    """Evaluate states with the mover's network, memoized by state key.

    The cache is only valid while both parameter sets stay fixed.
    """

    def __init__(self, params_p: GgnnParams, params_op: GgnnParams):
        self.nets = {Player.P: params_p, Player.OP: params_op}
        self.cache: dict[str, tuple[np.ndarray, float]] = {}

    def __call__(self, state: GameState) -> tuple[np.ndarray, float]:
        key = state.key()
        hit = self.cache.get(key)
        if hit is None:
            pv = forward(self.nets[state.to_move], encode(state.residual))
            hit = self.cache[key] = (pv.policy, pv.value)
        return hit


def as_evaluator(nets: Union[Evaluator, tuple[GgnnParams, GgnnParams]]) -> Evaluator:
    if isinstance(nets, tuple):
        return NetEvaluator(*nets)
    return nets


def puct_score(e: EdgeStats, sibling_visit_sum: int, c: float) -> float:
    return e.Q + c * e.P * math.sqrt(sibling_visit_sum) / (e.N + 1)


def _expand(node: Node, evaluate: Evaluator) -> float:
    prior, value = evaluate(node.state)
    node.edges = [EdgeStats(P=float(prior[a])) for a in ACTIONS]
    node.expanded = True
    return value if node.to_move is Player.P else -value


def _select(node: Node, c: float) -> int:
    total = sum(e.N for e in node.edges)
    scores = [puct_score(e, total, c) for e in node.edges]
    return int(np.argmax(scores))  # first maximum on ties


def backup(tree: SearchTree, path: list[tuple[str, int]], leaf_value: float,
           leaf_player: Player) -> None:
    """Add ``leaf_value`` (from ``leaf_player``'s side) to every edge on ``path``."""
    for key, a in path:
        node = tree.get(key)
        if node is None or not node.expanded:
            raise KeyError(f"no edge for state {key!r}")
        v = leaf_value if node.to_move is leaf_player else -leaf_value
        node.edges[a].update(v)


def run_search(root: GameState, nets, cfg: SearchConfig, rng=None,
               tree: Optional[SearchTree] = None) -> np.ndarray:
    """Visit-count distribution over ACTIONS at ``root`` after ``cfg.iterations`` playouts.

    ``nets`` is an evaluator or a ``(params_P, params_OP)`` pair. Pass ``tree``
    to inspect the search afterwards.
    """
    if root.is_terminal:
        raise ValueError("cannot search from a terminal state")
    evaluate = as_evaluator(nets)
    tree = SearchTree() if tree is None else tree
    root_node = tree.node(root)
    if not root_node.expanded:
        _expand(root_node, evaluate)

    for _ in range(cfg.iterations):
        node = root_node
        path = []
        while node.expanded and node.outcome_value is None:
            a = _select(node, cfg.c_puct)
            node.passes += 1
            path.append((node.state.key(), a))
            node = tree.node(apply_action(node.state, a))
        if node.outcome_value is not None:
            value_p = node.outcome_value
        else:
            value_p = _expand(node, evaluate)
        backup(tree, path, value_p, Player.P)

    counts = np.array([e.N for e in root_node.edges], dtype=float)
    return counts / counts.sum()


def sample_action(pi: np.ndarray, mode: str, rng: np.random.Generator) -> int:
    if mode == "argmax":
        return int(np.argmax(pi))
    return int(rng.choice(len(pi), p=pi))


def search_dump(tree: SearchTree, root: GameState) -> str:
    node = tree[root.key()]
    return json.dumps(
        {
            "move_index": root.move_index,
            "player": node.to_move.value,
            "actions": [{"action": a, "N": e.N, "Q": e.Q, "P": e.P} for a, e in enumerate(node.edges)],
        }
    )
