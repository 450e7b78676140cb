"""Scaled dominance experiment: train on small random instances and score the result.

For each instance the run records the final-epoch arena share of the
oracle-favored side, the global correctness of that side's argmax policy, and
the local-correctness curve of whichever side dominated the final arena.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .game import Player
from .pipeline import RunConfig, run_training
from .qbf import count_game_states, random_qbf
from .verify import global_correctness, network_handle


@dataclass
class InstanceResult:
    index: int
    seed: int
    truth: bool
    game_states: int
    favored_share: float
    dominant: str
    global_ratio: float
    first5: Optional[float]
    last5: Optional[float]
    curve: list
    seconds: float

    @property
    def improved(self) -> bool:
        return self.first5 is not None and self.last5 is not None and self.last5 > self.first5

    def to_dict(self) -> dict:
        return asdict(self)


def _window_mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def run_instance(index: int, seed: int, truth: bool, num_vars: int = 7, num_clauses: int = 4,
                 cfg: Optional[RunConfig] = None) -> InstanceResult:
    q = random_qbf(num_vars, num_clauses, seed, target_truth=truth)
    cfg = cfg or RunConfig(seed=seed)
    t0 = time.perf_counter()
    res = run_training(q, cfg)
    last = res.reports[-1]
    rounds = last.wins_p + last.wins_op
    favored = Player.P if truth else Player.OP
    favored_share = (last.wins_p if truth else last.wins_op) / rounds
    dominant = Player.P if last.wins_p / rounds > 0.5 else Player.OP
    curve = [r.local_p if dominant is Player.P else r.local_op for r in res.reports]
    ratio = global_correctness(q, network_handle(res.params_p, res.params_op, cfg.search), favored)
    return InstanceResult(index, seed, truth, count_game_states(q), favored_share, dominant.value,
                          ratio, _window_mean(curve[:5]), _window_mean(curve[-5:]), curve,
                          time.perf_counter() - t0)


def dominance_sweep(count: int = 10, base_seed: int = 0, num_vars: int = 7, num_clauses: int = 4,
                    cfg_factory=None, progress=None) -> list[InstanceResult]:
    """First half of the instances are true, the rest false."""
    out = []
    for i in range(count):
        seed = base_seed + i
        cfg = cfg_factory(seed) if cfg_factory else None
        r = run_instance(i, seed, i < count // 2, num_vars, num_clauses, cfg)
        if progress:
            progress(r)
        out.append(r)
    return out


def summarize(results: list[InstanceResult]) -> dict:
    return {
        "instances": len(results),
        "dominant_ok": sum(r.favored_share >= 0.7 for r in results),
        "global_ok": sum(r.global_ratio == 1.0 for r in results),
        "global_mean": float(np.mean([r.global_ratio for r in results])),
        "improved": sum(r.improved for r in results),
        "max_seconds": max(r.seconds for r in results),
    }
