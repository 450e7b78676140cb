"""Gated graph neural network with policy and value readouts, in plain numpy.

Row-vector convention throughout: node states are rows of an ``(N, H)`` matrix
and a linear map is ``x @ W``. Each forward pass runs ``passes`` rounds of

    msg = sum_e adj_e @ h @ A_e
    z   = sigmoid(msg @ Wz + h @ Uz + bz)
    r   = sigmoid(msg @ Wr + h @ Ur + br)
    c   = tanh(msg @ Wc + (r * h) @ Uc + bc)
    h   = (1 - z) * h + z * c

followed by two gated-sum readouts ``R = sum_v sigmoid(f([h_T, h_0])) * g(h_T)``.
The policy readout (width 2) goes through softmax, the value readout (width 1)
through tanh. Gradients are derived by hand; see ``tests/test_ggnn.py`` for the
finite-difference check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .graph import EdgeType, QbfGraph, init_features

HEADS = ("pol", "val")
NUM_EDGE_TYPES = len(EdgeType)


@dataclass
class GgnnConfig:
    hidden_size: int = 128
    passes: int = 10
    mlp_hidden: int = 128
    action_count: int = 2
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    optimizer: str = "adam"  # "adam" (adaptive-moment) or "sgd" (plain-gradient)

    def __post_init__(self):
        if self.hidden_size < 3:
            raise ValueError("hidden_size must be >= 3")
        if self.passes < 1:
            raise ValueError("passes must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def head_width(self, head: str) -> int:
        return self.action_count if head == "pol" else 1

    def shapes(self) -> dict[str, tuple[int, ...]]:
        H, M = self.hidden_size, self.mlp_hidden
        shapes: dict[str, tuple[int, ...]] = {"A": (NUM_EDGE_TYPES, H, H)}
        for gate in "zrc":
            shapes[f"W{gate}"] = (H, H)
            shapes[f"U{gate}"] = (H, H)
            shapes[f"b{gate}"] = (H,)
        for head in HEADS:
            out = self.head_width(head)
            shapes[f"{head}_f_W1"] = (2 * H, M)
            shapes[f"{head}_f_b1"] = (M,)
            shapes[f"{head}_f_W2"] = (M, out)
            shapes[f"{head}_f_b2"] = (out,)
            shapes[f"{head}_g_W1"] = (H, M)
            shapes[f"{head}_g_b1"] = (M,)
            shapes[f"{head}_g_W2"] = (M, out)
            shapes[f"{head}_g_b2"] = (out,)
        return shapes


@dataclass
class GgnnParams:
    config: GgnnConfig
    tensors: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def copy(self) -> "GgnnParams":
        return GgnnParams(self.config, {k: v.copy() for k, v in self.tensors.items()})

    def sq_norm(self) -> float:
        return float(sum(np.sum(v * v) for v in self.tensors.values()))

    def allclose(self, other: "GgnnParams", atol: float = 0.0) -> bool:
        return self.tensors.keys() == other.tensors.keys() and all(
            np.allclose(v, other.tensors[k], rtol=0.0, atol=atol) for k, v in self.tensors.items()
        )


@dataclass(frozen=True)
class PolicyValue:
    policy: np.ndarray
    value: float
    logits: np.ndarray = field(repr=False, default=None)
    value_pre: float = field(repr=False, default=0.0)


@dataclass
class TrainingExample:
    graph: QbfGraph
    target_policy: np.ndarray
    target_value: float


def init_params(cfg: GgnnConfig, seed: int) -> GgnnParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in cfg.shapes().items():
        if len(shape) == 1:
            tensors[name] = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[-2])
            tensors[name] = rng.uniform(-bound, bound, size=shape)
    return GgnnParams(cfg, tensors)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softmax(x):
    e = np.exp(x - x.max())
    return e / e.sum()


def _flat_types(x):
    """(E, N, H) -> (N, E*H) with edge types laid out blockwise."""
    return x.transpose(1, 0, 2).reshape(x.shape[1], -1)


def _forward(params: GgnnParams, g: QbfGraph, keep: bool):
    p = params.tensors
    adj = g.adjacency
    h0 = init_features(g, params.config.hidden_size)
    h = h0
    A_flat = p["A"].reshape(-1, p["A"].shape[-1])
    steps = []
    for _ in range(params.config.passes):
        ah = adj @ h  # (E, N, H)
        msg = _flat_types(ah) @ A_flat
        z = _sigmoid(msg @ p["Wz"] + h @ p["Uz"] + p["bz"])
        r = _sigmoid(msg @ p["Wr"] + h @ p["Ur"] + p["br"])
        c = np.tanh(msg @ p["Wc"] + (r * h) @ p["Uc"] + p["bc"])
        if keep:
            steps.append((h, ah, msg, z, r, c))
        h = (1.0 - z) * h + z * c
    hT = h
    fin = np.concatenate([hT, h0], axis=1)
    readout = {}
    heads = {}
    for head in HEADS:
        a1 = fin @ p[f"{head}_f_W1"] + p[f"{head}_f_b1"]
        r1 = np.maximum(a1, 0.0)
        gate = _sigmoid(r1 @ p[f"{head}_f_W2"] + p[f"{head}_f_b2"])
        b1 = hT @ p[f"{head}_g_W1"] + p[f"{head}_g_b1"]
        s1 = np.maximum(b1, 0.0)
        go = s1 @ p[f"{head}_g_W2"] + p[f"{head}_g_b2"]
        readout[head] = (gate * go).sum(axis=0)
        if keep:
            heads[head] = (a1, r1, gate, b1, s1, go)
    logits = readout["pol"]
    value_pre = float(readout["val"][0])
    pv = PolicyValue(_softmax(logits), float(np.tanh(value_pre)), logits, value_pre)
    cache = (adj, h0, hT, fin, steps, heads) if keep else None
    return pv, cache


def forward(params: GgnnParams, g: QbfGraph) -> PolicyValue:
    if g.num_nodes == 0:
        raise ValueError("empty graph")
    return _forward(params, g, keep=False)[0]


def loss(pred: PolicyValue, ex: TrainingExample, params: Optional[GgnnParams] = None,
         weight_decay: Optional[float] = None) -> float:
    """(z - v)^2 - sum_a pi_a log p_a + weight_decay * ||params||^2."""
    pi = np.asarray(ex.target_policy, dtype=float)
    logp = np.log(np.clip(pred.policy, 1e-300, None)) if pred.logits is None else (
        pred.logits - pred.logits.max() - np.log(np.exp(pred.logits - pred.logits.max()).sum())
    )
    ce = -float(np.sum(pi[pi > 0] * logp[pi > 0]))
    total = (ex.target_value - pred.value) ** 2 + ce
    if params is not None:
        wd = params.config.weight_decay if weight_decay is None else weight_decay
        total += wd * params.sq_norm()
    return float(total)


def _backward(params: GgnnParams, cache, d_logits: np.ndarray, d_value_pre: float):
    p = params.tensors
    adj, h0, hT, fin, steps, heads = cache
    H = params.config.hidden_size
    grads = {k: np.zeros_like(v) for k, v in p.items()}
    d_hT = np.zeros_like(hT)
    upstream = {"pol": d_logits, "val": np.array([d_value_pre])}
    for head in HEADS:
        a1, r1, gate, b1, s1, go = heads[head]
        dR = upstream[head][None, :]
        d_fo = dR * go * gate * (1.0 - gate)
        d_go = dR * gate
        grads[f"{head}_f_W2"] += r1.T @ d_fo
        grads[f"{head}_f_b2"] += d_fo.sum(axis=0)
        d_a1 = (d_fo @ p[f"{head}_f_W2"].T) * (a1 > 0)
        grads[f"{head}_f_W1"] += fin.T @ d_a1
        grads[f"{head}_f_b1"] += d_a1.sum(axis=0)
        d_hT += (d_a1 @ p[f"{head}_f_W1"].T)[:, :H]
        grads[f"{head}_g_W2"] += s1.T @ d_go
        grads[f"{head}_g_b2"] += d_go.sum(axis=0)
        d_b1 = (d_go @ p[f"{head}_g_W2"].T) * (b1 > 0)
        grads[f"{head}_g_W1"] += hT.T @ d_b1
        grads[f"{head}_g_b1"] += d_b1.sum(axis=0)
        d_hT += d_b1 @ p[f"{head}_g_W1"].T

    dh = d_hT
    for h, ah, msg, z, r, c in reversed(steps):
        d_z = dh * (c - h)
        d_c = dh * z
        d_h = dh * (1.0 - z)

        d_cpre = d_c * (1.0 - c * c)
        grads["Wc"] += msg.T @ d_cpre
        grads["Uc"] += (r * h).T @ d_cpre
        grads["bc"] += d_cpre.sum(axis=0)
        d_msg = d_cpre @ p["Wc"].T
        d_rh = d_cpre @ p["Uc"].T
        d_h += d_rh * r
        d_r = d_rh * h

        d_rpre = d_r * r * (1.0 - r)
        grads["Wr"] += msg.T @ d_rpre
        grads["Ur"] += h.T @ d_rpre
        grads["br"] += d_rpre.sum(axis=0)
        d_msg += d_rpre @ p["Wr"].T
        d_h += d_rpre @ p["Ur"].T

        d_zpre = d_z * z * (1.0 - z)
        grads["Wz"] += msg.T @ d_zpre
        grads["Uz"] += h.T @ d_zpre
        grads["bz"] += d_zpre.sum(axis=0)
        d_msg += d_zpre @ p["Wz"].T
        d_h += d_zpre @ p["Uz"].T

        grads["A"] += (_flat_types(ah).T @ d_msg).reshape(p["A"].shape)
        d_ah = d_msg @ p["A"].transpose(0, 2, 1)  # (E, N, H)
        d_h += (adj.transpose(0, 2, 1) @ d_ah).sum(axis=0)
        dh = d_h
    return grads


def example_loss_and_grads(params: GgnnParams, ex: TrainingExample):
    """Data loss (no weight decay) and its gradient for one example."""
    pred, cache = _forward(params, ex.graph, keep=True)
    pi = np.asarray(ex.target_policy, dtype=float)
    d_logits = pred.policy * pi.sum() - pi
    d_value_pre = -2.0 * (ex.target_value - pred.value) * (1.0 - pred.value ** 2)
    data_loss = loss(pred, ex)
    return data_loss, _backward(params, cache, d_logits, d_value_pre)


def gradients(params: GgnnParams, batch: Sequence[TrainingExample],
              weight_decay: Optional[float] = None) -> dict[str, np.ndarray]:
    """Mean gradient of ``loss`` over ``batch``, weight decay included."""
    return batch_loss_and_gradients(params, batch, weight_decay)[1]


def batch_loss_and_gradients(params, batch, weight_decay=None):
    if not batch:
        raise ValueError("empty batch")
    wd = params.config.weight_decay if weight_decay is None else weight_decay
    total = {k: np.zeros_like(v) for k, v in params.tensors.items()}
    losses = []
    for ex in batch:
        l, g = example_loss_and_grads(params, ex)
        losses.append(l)
        for k in total:
            total[k] += g[k]
    n = len(batch)
    for k, v in params.tensors.items():
        total[k] = total[k] / n + 2.0 * wd * v
    return float(np.mean(losses)) + wd * params.sq_norm(), total


@dataclass
class OptimizerState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


ADAM_BETA1, ADAM_BETA2, ADAM_EPS = 0.9, 0.999, 1e-8


def optimizer_step(params: GgnnParams, grads: dict[str, np.ndarray], cfg: GgnnConfig,
                   state: Optional[OptimizerState] = None):
    """One SGD or Adam update. Returns ``(new_params, new_state)``; inputs untouched."""
    state = OptimizerState() if state is None else state
    if grads.keys() != params.tensors.keys():
        raise ValueError("gradient names do not match parameters")
    for k, v in params.tensors.items():
        if grads[k].shape != v.shape:
            raise ValueError(f"shape mismatch for {k}: {grads[k].shape} vs {v.shape}")
    lr = cfg.learning_rate
    new = {}
    if cfg.optimizer == "sgd":
        for k, v in params.tensors.items():
            new[k] = v - lr * grads[k]
        return GgnnParams(params.config, new), OptimizerState(state.step + 1)

    t = state.step + 1
    m, s = {}, {}
    for k, v in params.tensors.items():
        g = grads[k]
        m[k] = ADAM_BETA1 * state.m.get(k, 0.0) + (1 - ADAM_BETA1) * g
        s[k] = ADAM_BETA2 * state.v.get(k, 0.0) + (1 - ADAM_BETA2) * g * g
        m_hat = m[k] / (1 - ADAM_BETA1 ** t)
        v_hat = s[k] / (1 - ADAM_BETA2 ** t)
        new[k] = v - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return GgnnParams(params.config, new), OptimizerState(t, m, s)
