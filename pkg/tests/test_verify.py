import pytest

from conftest import fixtures, small_instances
from qbfzero.game import ACTIONS, Player, apply_action, initial_state, minimax_value, terminal_outcome
from qbfzero.ggnn import GgnnConfig, init_params
from qbfzero.mcts import SearchConfig
from qbfzero.qbf import parse_qdimacs
from qbfzero.verify import (
    MoveRecord,
    constant_handle,
    global_correctness,
    local_correct,
    local_correctness_ratio,
    local_summary,
    network_handle,
    oracle_handle,
    random_handle,
)

LOST_OP = parse_qdimacs("p cnf 3 1\na 2 0\ne 3 0\n2 3 0\n")  # ∀x2∃x3.(x2∨x3)


def states(q):
    out, stack = [], [initial_state(q)]
    while stack:
        s = stack.pop()
        if terminal_outcome(s) is None:
            out.append(s)
            stack.extend(apply_action(s, a) for a in ACTIONS)
    return out


def test_local_correct_fig1(fig1):
    s = initial_state(fig1)
    assert local_correct(s, 1) is True
    assert local_correct(s, 0) is False


def test_local_correct_lost_op():
    s = initial_state(LOST_OP)
    assert s.to_move is Player.OP
    assert not local_correct(s, 0) and not local_correct(s, 1)


def test_local_correct_terminal(unit1):
    with pytest.raises(ValueError):
        local_correct(apply_action(initial_state(unit1), 1), 0)


def test_local_correct_matches_minimax():
    for q in small_instances(150, seed=10):
        for s in states(q):
            for a in ACTIONS:
                v = minimax_value(apply_action(s, a))
                assert local_correct(s, a) == (v == (1 if s.to_move is Player.P else -1))


def test_ratio_examples(fig1):
    root = fig1
    good = MoveRecord(root, Player.P, 1)
    bad = MoveRecord(root, Player.P, 0)
    assert local_correctness_ratio([good, good], Player.P) == 1.0
    assert local_correctness_ratio([good, good, bad], Player.P) == pytest.approx(2 / 3)
    assert local_correctness_ratio([], Player.P) is None
    lost = MoveRecord(LOST_OP, Player.OP, 0)
    assert local_correctness_ratio([lost, good], Player.OP) is None
    assert local_correctness_ratio([lost], Player.OP, all_moves=True) == 0.0
    assert local_summary([lost, good, bad], Player.P) == {"ratio": 0.5, "eligible": 2, "total": 2}
    assert local_summary([lost], Player.OP) == {"ratio": None, "eligible": 0, "total": 1}


def test_move_record_json(fig1):
    m = MoveRecord(apply_action(initial_state(fig1), 0).residual, Player.OP, 1, game=3, move_index=1)
    back = MoveRecord.from_json(m.to_json())
    assert back == m and back.variable == 2


def test_global_oracle_fig1(fig1):
    ratio, walked, leaves = global_correctness(fig1, oracle_handle(), Player.P, return_tree=True)
    assert ratio == 1.0 and leaves == 2


def test_global_contra(contra):
    assert global_correctness(contra, constant_handle(0), Player.OP) == 1.0
    assert global_correctness(contra, random_handle(1)) == 1.0


def test_global_partial_strategy(fig1):
    policy = constant_handle(0, overrides={3: 1})
    assert global_correctness(fig1, policy, Player.P) == 0.5


def test_global_side_mismatch(fig1):
    with pytest.raises(ValueError, match="cannot win"):
        global_correctness(fig1, oracle_handle(), Player.OP)


def test_global_bound(fig1):
    with pytest.raises(ValueError):
        global_correctness(fig1, oracle_handle(), bound=2)


def test_global_oracle_always_certifies():
    for q in small_instances(200, seed=11) + fixtures():
        assert global_correctness(q, oracle_handle()) == 1.0


def test_certificate_implies_locally_correct_moves():
    certified = 0
    for i, q in enumerate(small_instances(200, seed=12)):
        policy = random_handle(i)
        ratio, walked, _ = global_correctness(q, policy, return_tree=True)
        if ratio == 1.0:
            certified += 1
            assert all(local_correct(s, a) for s, a in walked)
    assert certified > 10


def test_network_policy_deterministic(fig1):
    cfg = GgnnConfig(hidden_size=8, passes=2, mlp_hidden=8)
    p, op = init_params(cfg, 0), init_params(cfg, 1)
    a = global_correctness(fig1, network_handle(p, op, SearchConfig(iterations=10)))
    b = global_correctness(fig1, network_handle(p, op, SearchConfig(iterations=10)))
    assert a == b
