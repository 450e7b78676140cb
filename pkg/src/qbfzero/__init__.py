"""Self-play neural MCTS for quantified Boolean formulas."""

__version__ = "0.1.0"
