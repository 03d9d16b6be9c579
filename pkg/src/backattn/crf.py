"""Linear-chain CRF with pairwise-conditioned potentials.

The potential at position i is exp(W[y', y] . r_i + b[y', y]): every
label pair owns a full weight vector over the input features, not the
usual factored emission-plus-transition form. A factored mode is kept
behind the ``factored`` flag purely for comparison.

Label layout: the real labels occupy indices 0..K-1 in the order given;
a synthetic START label sits at index K and is only ever used as the
predecessor of position 1. There is no STOP label - the chain ends at
the last token with no terminal factor.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import LabelError, ShapeError
from .numerics import as_f64, log_sum_exp

START = "<start>"


@dataclass
class CrfParams:
    labels: tuple                       # real labels, index order = tie-break order
    W: np.ndarray                       # (K+1, K+1, d), or (K+1, d) when factored
    b: np.ndarray                       # (K+1, K+1); transitions when factored
    factored: bool = False              # comparison mode, not the reference form
    label_index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.labels = tuple(self.labels)
        self.label_index = {lab: i for i, lab in enumerate(self.labels)}
        k1 = len(self.labels) + 1
        w_shape = (k1, self.W.shape[-1]) if self.factored else (k1, k1, self.W.shape[-1])
        if self.W.shape != w_shape or self.b.shape != (k1, k1):
            raise ShapeError(f"CRF tensor shapes {self.W.shape}/{self.b.shape} "
                             f"do not match {len(self.labels)} labels")

    @classmethod
    def zeros(cls, labels, feat_dim: int, factored: bool = False) -> "CrfParams":
        k1 = len(tuple(labels)) + 1
        w = np.zeros((k1, feat_dim)) if factored else np.zeros((k1, k1, feat_dim))
        return cls(tuple(labels), w, np.zeros((k1, k1)), factored)

    @property
    def start(self) -> int:
        return len(self.labels)

    @property
    def feat_dim(self) -> int:
        return self.W.shape[-1]

    def indices(self, tags):
        try:
            return [self.label_index[t] for t in tags]
        except KeyError as exc:
            raise LabelError(f"unknown label {exc.args[0]!r}") from None

    def tensors(self):
        return [("W", self.W), ("b", self.b)]

    def add_scaled(self, grads: "CrfParams", scale: float):
        self.W += scale * grads.W
        self.b += scale * grads.b

    def copy(self) -> "CrfParams":
        return CrfParams(self.labels, self.W.copy(), self.b.copy(), self.factored)

    def zeros_like(self) -> "CrfParams":
        return CrfParams(self.labels, np.zeros_like(self.W), np.zeros_like(self.b),
                         self.factored)


def log_potentials(features, p: CrfParams):
    """Per-position log potential tensor: W[y', y] . features[i] + b[y', y].

    All (y', y) pairs are filled; the algorithms below only read the START
    row at position 1 and real-label pairs elsewhere.
    """
    features = as_f64(features)
    if features.ndim != 2 or features.shape[1] != p.feat_dim:
        raise ShapeError(f"feature matrix {features.shape} does not match CRF dim {p.feat_dim}")
    if p.factored:
        emissions = features @ p.W.T               # (m, K+1)
        return emissions[:, None, :] + p.b[None, :, :]
    return np.einsum("yzd,md->myz", p.W, features) + p.b[None, :, :]


def _forward_alphas(logpot, start: int, k: int):
    m = logpot.shape[0]
    alphas = np.empty((m, k))
    alphas[0] = logpot[0, start, :k]
    for t in range(1, m):
        alphas[t] = log_sum_exp(alphas[t - 1][:, None] + logpot[t, :k, :k], axis=0)
    return alphas


def log_partition(logpot) -> float:
    """log of the sum over all real-label sequences of exp(path score),
    by the forward algorithm in log space."""
    logpot = as_f64(logpot)
    k = logpot.shape[1] - 1
    alphas = _forward_alphas(logpot, k, k)
    return float(log_sum_exp(alphas[-1]))


def sequence_score(logpot, indices) -> float:
    """Unnormalized path score with y_0 = START."""
    k = logpot.shape[1] - 1
    prev = k
    score = 0.0
    for t, y in enumerate(indices):
        score += logpot[t, prev, y]
        prev = y
    return float(score)


def sequence_nll(features, tags, p: CrfParams) -> float:
    """Negative log-likelihood: log_partition - score(tags)."""
    indices = p.indices(tags)
    logpot = log_potentials(features, p)
    if len(indices) != logpot.shape[0]:
        raise ShapeError("tag sequence length does not match feature rows")
    return log_partition(logpot) - sequence_score(logpot, indices)


def viterbi_decode(features, p: CrfParams):
    """Highest-scoring label sequence; ties resolve to the smallest label
    index at every backtrack step (argmax takes the first maximum)."""
    logpot = log_potentials(features, p)
    m = logpot.shape[0]
    k = len(p.labels)
    delta = logpot[0, p.start, :k].copy()
    backpointers = np.empty((m, k), dtype=np.intp)
    for t in range(1, m):
        scores = delta[:, None] + logpot[t, :k, :k]
        backpointers[t] = np.argmax(scores, axis=0)
        delta = scores[backpointers[t], np.arange(k)]
    path = [int(np.argmax(delta))]
    for t in range(m - 1, 0, -1):
        path.append(int(backpointers[t, path[-1]]))
    path.reverse()
    return [p.labels[y] for y in path]


def nll_and_marginal_grad(features, tags, p: CrfParams):
    """NLL plus its gradient in the log-potential tensor.

    The gradient is the pairwise marginal P(y_{i-1}=y', y_i=y) minus the
    gold-transition indicator, obtained by forward-backward in log space.
    """
    indices = p.indices(tags)
    logpot = log_potentials(features, p)
    m = logpot.shape[0]
    if len(indices) != m:
        raise ShapeError("tag sequence length does not match feature rows")
    k = len(p.labels)
    start = p.start

    alphas = _forward_alphas(logpot, start, k)
    log_z = float(log_sum_exp(alphas[-1]))
    betas = np.zeros((m, k))
    for t in range(m - 2, -1, -1):
        betas[t] = log_sum_exp(logpot[t + 1, :k, :k] + betas[t + 1][None, :], axis=1)

    grad = np.zeros_like(logpot)
    grad[0, start, :k] = np.exp(logpot[0, start, :k] + betas[0] - log_z)
    for t in range(1, m):
        grad[t, :k, :k] = np.exp(
            alphas[t - 1][:, None] + logpot[t, :k, :k] + betas[t][None, :] - log_z
        )
    prev = start
    for t, y in enumerate(indices):
        grad[t, prev, y] -= 1.0
        prev = y

    nll = log_z - sequence_score(logpot, indices)
    return nll, grad


def nll_grads(features, tags, p: CrfParams):
    """NLL and its gradients in the parameters and the feature matrix;
    returns (nll, grads, d_features)."""
    features = as_f64(features)
    nll, g = nll_and_marginal_grad(features, tags, p)
    grads = p.zeros_like()
    grads.b[...] = g.sum(axis=0)
    if p.factored:
        g_label = g.sum(axis=1)                     # (m, K+1)
        grads.W[...] = g_label.T @ features
        d_features = g_label @ p.W
    else:
        grads.W[...] = np.einsum("myz,md->yzd", g, features)
        d_features = np.einsum("myz,yzd->md", g, p.W)
    return nll, grads, d_features
