"""Finite-difference verification suites for every trainable module.

Each suite draws random tiny configurations, computes analytic gradients
through the backward passes, recomputes them with the central-difference
oracle, and reports the worst relative error. The CLI exposes them as a
verification entry point; the acceptance tests run them directly.
"""

from dataclasses import dataclass

import numpy as np

from .corpus import LabeledCorpus, LabeledSentence, Scheme, build_vocab
from .crf import CrfParams, nll_grads, sequence_nll
from .numerics import finite_difference_gradient, max_relative_error, new_rng
from .seqmodel import LstmParams, run_lstm, run_lstm_backward
from .training import (
    ExperimentConfig,
    forward_loss,
    init_target_model,
    labels_of,
    loss_and_grads,
)
from .transfer import TransferKnowledge

TOLERANCE = 1e-4
STEP = 1e-5


@dataclass
class GradCheckResult:
    suite: str
    configs: int
    max_rel_error: float
    tolerance: float = TOLERANCE

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def __str__(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} {self.suite}: max relative error "
                f"{self.max_rel_error:.3e} over {self.configs} configs "
                f"(tolerance {self.tolerance:g})")


def _compare(arrays, analytic, evaluate, inject_error):
    """Max relative error between ``analytic`` and finite differences of
    ``evaluate`` over the flattened ``arrays`` (mutated in place)."""
    if inject_error:
        analytic = analytic.copy()
        analytic[0] += 1.0
    shapes = [a.shape for a in arrays]
    flat = np.concatenate([a.ravel() for a in arrays])

    def f(v):
        offset = 0
        for arr, shape in zip(arrays, shapes):
            size = int(np.prod(shape))
            arr[...] = v[offset:offset + size].reshape(shape)
            offset += size
        return evaluate()

    numeric = finite_difference_gradient(f, flat, h=STEP)
    f(flat)  # restore original values
    return max_relative_error(analytic, numeric)


def check_lstm(n_configs: int = 20, seed: int = 0,
               inject_error: bool = False) -> GradCheckResult:
    """Backward pass of the coupled-gate scan against the oracle."""
    rng = new_rng(seed)
    worst = 0.0
    for _ in range(n_configs):
        input_dim = int(rng.integers(1, 4))
        hidden = int(rng.integers(1, 5))
        m = int(rng.integers(1, 5))
        params = LstmParams.init(rng, input_dim, hidden)
        inputs = rng.normal(size=(m, input_dim))
        readout = rng.normal(size=hidden)

        states, caches = run_lstm(inputs, params)
        grads = LstmParams.zeros_like(params)
        d_inputs = run_lstm_backward(caches, np.tile(readout, (m, 1)), params, grads)
        analytic = np.concatenate(
            [a.ravel() for _, a in grads.tensors()] + [d_inputs.ravel()])

        arrays = [a for _, a in params.tensors()] + [inputs]
        worst = max(worst, _compare(
            arrays, analytic,
            lambda: float(np.sum(run_lstm(inputs, params)[0] @ readout)),
            inject_error))
        inject_error = False  # one corruption is enough for the negative control
    return GradCheckResult("lstm", n_configs, worst)


def check_crf(n_configs: int = 20, seed: int = 0,
              inject_error: bool = False) -> GradCheckResult:
    """CRF NLL gradients in W, b and the feature matrix."""
    rng = new_rng(seed)
    worst = 0.0
    for _ in range(n_configs):
        m = int(rng.integers(1, 5))
        d = int(rng.integers(1, 4))
        k = int(rng.integers(1, 4))
        labels = tuple(f"L{i}" for i in range(k))
        params = CrfParams.zeros(labels, d)
        params.W[...] = rng.normal(size=params.W.shape) * 0.5
        params.b[...] = rng.normal(size=params.b.shape) * 0.5
        R = rng.normal(size=(m, d))
        tags = [labels[i] for i in rng.integers(0, k, size=m)]

        _, grads, d_R = nll_grads(R, tags, params)
        analytic = np.concatenate([grads.W.ravel(), grads.b.ravel(), d_R.ravel()])
        worst = max(worst, _compare(
            [params.W, params.b, R], analytic,
            lambda: sequence_nll(R, tags, params),
            inject_error))
        inject_error = False
    return GradCheckResult("crf", n_configs, worst)


def check_full(n_configs: int = 20, seed: int = 0,
               inject_error: bool = False) -> GradCheckResult:
    """End-to-end loss: embeddings, BiLSTM, transfer fusion, CRF."""
    rng = new_rng(seed)
    labels = ("A", "B", "C")
    worst = 0.0
    for trial in range(n_configs):
        m = int(rng.integers(1, 4))
        tokens = tuple(f"w{int(x)}" for x in rng.integers(0, 5, size=m))
        tags = tuple(labels[i] for i in rng.integers(0, 3, size=m))
        corpus = LabeledCorpus((LabeledSentence(tokens, tags),), Scheme.BIOES)
        config = ExperimentConfig(
            hidden_size=int(rng.integers(2, 5)), embed_dim=int(rng.integers(2, 4)),
            epochs=1, seeds=(1,), transfer_enabled=False)
        transfer_dim = int(rng.integers(1, 4))
        model = init_target_model(config, labels_of(corpus), build_vocab(corpus, 1),
                                  transfer_dim=transfer_dim, rng=new_rng(trial))
        model.crf.W[...] = rng.normal(size=model.crf.W.shape) * 0.3
        model.crf.b[...] = rng.normal(size=model.crf.b.shape) * 0.3
        transfer = TransferKnowledge(rng.normal(size=(m, transfer_dim)), "average", True)

        _, grads = loss_and_grads(model, tokens, tags, transfer=transfer)
        analytic = np.concatenate(
            [grads.embed.ravel()]
            + [a.ravel() for _, a in grads.fwd.tensors()]
            + [a.ravel() for _, a in grads.bwd.tensors()]
            + [grads.crf.W.ravel(), grads.crf.b.ravel()])
        arrays = ([model.embed] + [a for _, a in model.fwd.tensors()]
                  + [a for _, a in model.bwd.tensors()] + [model.crf.W, model.crf.b])
        worst = max(worst, _compare(
            arrays, analytic,
            lambda: forward_loss(model, tokens, tags, transfer=transfer),
            inject_error))
        inject_error = False
    return GradCheckResult("full", n_configs, worst)


SUITES = {"lstm": check_lstm, "crf": check_crf, "full": check_full}


def run_suite(name: str, n_configs: int = 20, seed: int = 0,
              inject_error: bool = False) -> GradCheckResult:
    return SUITES[name](n_configs, seed, inject_error)
