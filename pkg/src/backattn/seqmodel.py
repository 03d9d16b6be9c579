"""Coupled-gate LSTM cell and bidirectional encoder, with hand-written
backward passes.

The cell computes sigmoid pre-gates for input and forget, then couples
them with a per-coordinate two-way softmax so i_t + f_t = 1 elementwise.
Because softmax of a pair reduces to a sigmoid of the difference, the
coupled gates are i = sigma(i_hat - f_hat), f = 1 - i.

``gate_mode`` selects what the pair softmax sees: "post_sigmoid" (the
default) feeds it the sigmoid outputs i_hat, f_hat; "pre_activation"
feeds it the raw affine pre-activations instead. The second variant is
for ablation only.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .numerics import as_f64, sigmoid

POST_SIGMOID = "post_sigmoid"
PRE_ACTIVATION = "pre_activation"
GATE_MODES = (POST_SIGMOID, PRE_ACTIVATION)

_GATES = ("i", "f", "o", "u")


@dataclass
class LstmParams:
    """Weights of one direction: W_x (H x D), U_x (H x H), b_x (H) for
    x in {input, forget, output, update}."""

    W_i: np.ndarray
    W_f: np.ndarray
    W_o: np.ndarray
    W_u: np.ndarray
    U_i: np.ndarray
    U_f: np.ndarray
    U_o: np.ndarray
    U_u: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_u: np.ndarray

    @classmethod
    def init(cls, rng, input_dim: int, hidden_dim: int) -> "LstmParams":
        # Fan-based uniform init for weights, zero biases.
        bound = np.sqrt(6.0 / (input_dim + hidden_dim))
        def w():
            return rng.uniform(-bound, bound, size=(hidden_dim, input_dim))
        def u():
            return rng.uniform(-bound, bound, size=(hidden_dim, hidden_dim))
        def b():
            return np.zeros(hidden_dim)
        return cls(w(), w(), w(), w(), u(), u(), u(), u(), b(), b(), b(), b())

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int) -> "LstmParams":
        return cls(
            *(np.zeros((hidden_dim, input_dim)) for _ in _GATES),
            *(np.zeros((hidden_dim, hidden_dim)) for _ in _GATES),
            *(np.zeros(hidden_dim) for _ in _GATES),
        )

    @classmethod
    def zeros_like(cls, other: "LstmParams") -> "LstmParams":
        return cls(*(np.zeros_like(a) for _, a in other.tensors()))

    @property
    def hidden_dim(self) -> int:
        return self.W_i.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W_i.shape[1]

    def tensors(self):
        """Ordered (name, array) pairs; the canonical parameter walk."""
        return [(name, getattr(self, name))
                for name in ("W_i", "W_f", "W_o", "W_u",
                             "U_i", "U_f", "U_o", "U_u",
                             "b_i", "b_f", "b_o", "b_u")]

    def add_scaled(self, grads: "LstmParams", scale: float):
        for name, arr in self.tensors():
            arr += scale * getattr(grads, name)

    def copy(self) -> "LstmParams":
        return LstmParams(*(a.copy() for _, a in self.tensors()))


@dataclass
class LstmState:
    c: np.ndarray  # cell
    r: np.ndarray  # hidden

    @classmethod
    def zeros(cls, hidden_dim: int) -> "LstmState":
        return cls(np.zeros(hidden_dim), np.zeros(hidden_dim))


def _step(w, prev: LstmState, p: LstmParams, gate_mode: str):
    """One recurrence step; returns (state, cache) for the backward pass."""
    if w.shape[0] != p.input_dim:
        raise ShapeError(f"input dim {w.shape[0]} does not match params {p.input_dim}")
    a_i = p.W_i @ w + p.U_i @ prev.r + p.b_i
    a_f = p.W_f @ w + p.U_f @ prev.r + p.b_f
    a_o = p.W_o @ w + p.U_o @ prev.r + p.b_o
    a_u = p.W_u @ w + p.U_u @ prev.r + p.b_u
    o = sigmoid(a_o)
    u = np.tanh(a_u)
    if gate_mode == POST_SIGMOID:
        i_hat, f_hat = sigmoid(a_i), sigmoid(a_f)
        i = sigmoid(i_hat - f_hat)  # pairwise softmax of the two gate values
    elif gate_mode == PRE_ACTIVATION:
        i_hat = f_hat = None
        i = sigmoid(a_i - a_f)
    else:
        raise ValueError(f"unknown gate_mode {gate_mode!r}")
    f = 1.0 - i
    c = prev.c * f + u * i
    tanh_c = np.tanh(c)
    r = o * tanh_c
    state = LstmState(c, r)
    cache = (w, prev, i_hat, f_hat, i, f, o, u, tanh_c, gate_mode)
    return state, cache


def lstm_step(w, prev: LstmState, p: LstmParams, gate_mode: str = POST_SIGMOID) -> LstmState:
    """Coupled-gate recurrence: gates i and f are softmax-normalized per
    coordinate, so they always sum to 1 elementwise."""
    state, _ = _step(as_f64(w), prev, p, gate_mode)
    return state


def _step_backward(cache, d_r, d_c, p: LstmParams, grads: LstmParams):
    """Accumulate parameter gradients for one step; returns
    (d_input, d_prev_r, d_prev_c)."""
    w, prev, i_hat, f_hat, i, f, o, u, tanh_c, gate_mode = cache
    d_o = d_r * tanh_c
    d_cell = d_c + d_r * o * (1.0 - tanh_c ** 2)
    d_f = d_cell * prev.c
    d_i = d_cell * u
    d_u = d_cell * i
    d_prev_c = d_cell * f
    # Coupled pair: i = sigma(s) with s the gate-value difference.
    d_s = (d_i - d_f) * i * f
    if gate_mode == POST_SIGMOID:
        d_a_i = d_s * i_hat * (1.0 - i_hat)
        d_a_f = -d_s * f_hat * (1.0 - f_hat)
    else:
        d_a_i = d_s
        d_a_f = -d_s
    d_a_o = d_o * o * (1.0 - o)
    d_a_u = d_u * (1.0 - u ** 2)

    d_input = np.zeros_like(w)
    d_prev_r = np.zeros_like(prev.r)
    for name, d_a in (("i", d_a_i), ("f", d_a_f), ("o", d_a_o), ("u", d_a_u)):
        W = getattr(p, "W_" + name)
        U = getattr(p, "U_" + name)
        getattr(grads, "W_" + name)[...] += np.outer(d_a, w)
        getattr(grads, "U_" + name)[...] += np.outer(d_a, prev.r)
        getattr(grads, "b_" + name)[...] += d_a
        d_input += W.T @ d_a
        d_prev_r += U.T @ d_a
    return d_input, d_prev_r, d_prev_c


def run_lstm(inputs, p: LstmParams, init: LstmState = None, gate_mode: str = POST_SIGMOID):
    """Scan a sequence (list/array of input vectors) left to right.

    Returns (states, caches): per-step hidden matrix (m x H) and the
    caches needed by :func:`run_lstm_backward`.
    """
    state = init if init is not None else LstmState.zeros(p.hidden_dim)
    states = []
    caches = []
    for w in inputs:
        state, cache = _step(as_f64(w), state, p, gate_mode)
        states.append(state.r)
        caches.append(cache)
    return np.asarray(states), caches


def run_lstm_backward(caches, d_states, p: LstmParams, grads: LstmParams):
    """Backpropagate through a scan; ``d_states`` is (m x H) gradient of
    the loss in the per-step hidden outputs. Returns d_inputs (m x D)."""
    m = len(caches)
    d_inputs = [None] * m
    d_r = np.zeros(p.hidden_dim)
    d_c = np.zeros(p.hidden_dim)
    for t in range(m - 1, -1, -1):
        d_inputs[t], d_r, d_c = _step_backward(caches[t], d_states[t] + d_r, d_c, p, grads)
    return np.asarray(d_inputs)


def bilstm_forward(embeddings, fwd: LstmParams, bwd: LstmParams,
                   gate_mode: str = POST_SIGMOID,
                   init_fwd: LstmState = None, init_bwd: LstmState = None):
    """Bidirectional encoding with caches: row t is [forward_t ; backward_t].
    The backward direction scans the reversed sequence."""
    embeddings = as_f64(embeddings)
    if len(embeddings) == 0:
        raise ShapeError("bilstm needs a non-empty input sequence")
    states_f, caches_f = run_lstm(embeddings, fwd, init_fwd, gate_mode)
    states_b, caches_b = run_lstm(embeddings[::-1], bwd, init_bwd, gate_mode)
    out = np.concatenate([states_f, states_b[::-1]], axis=1)
    return out, (caches_f, caches_b, fwd, bwd)


def bilstm_backward(cache, d_out, grads_fwd: LstmParams, grads_bwd: LstmParams):
    """Gradient of a bilstm_forward call; returns d_embeddings (m x D)."""
    caches_f, caches_b, fwd, bwd = cache
    H = fwd.hidden_dim
    d_emb_f = run_lstm_backward(caches_f, d_out[:, :H], fwd, grads_fwd)
    d_emb_b = run_lstm_backward(caches_b, d_out[::-1, H:], bwd, grads_bwd)
    return d_emb_f + d_emb_b[::-1]


def bilstm_encode(embeddings, fwd: LstmParams, bwd: LstmParams,
                  gate_mode: str = POST_SIGMOID,
                  init_fwd: LstmState = None, init_bwd: LstmState = None):
    """Encode a sequence into an m x 2H matrix of concatenated
    forward/backward hidden states."""
    out, _ = bilstm_forward(embeddings, fwd, bwd, gate_mode, init_fwd, init_bwd)
    return out


def dropout_mask(dim: int, rate: float, rng, train: bool = True):
    """Inverted-scaling dropout mask with entries in {0, 1/(1-rate)}.

    Expectation of every entry is 1; evaluation mode returns all ones.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate {rate} outside [0, 1)")
    if not train or rate == 0.0:
        return np.ones(dim)
    return (rng.random(dim) >= rate) / (1.0 - rate)
