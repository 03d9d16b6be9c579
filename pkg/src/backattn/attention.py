"""Translation-attention matrices: computing them from encoder/decoder
states, selecting or averaging decoder layers, and reorienting them into
the source-major form the transfer step consumes.

Conventions: a raw attention matrix is target-major, shape n x m
(n target steps, m source tokens), each row a distribution over source
positions. The source-major form is its transpose, m x n.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .numerics import as_f64, row_softmax

# Attention selection modes; an int k selects decoder layer k (1-based).
FIRST = "first"
LAST = "last"
AVERAGE = "average"


@dataclass(frozen=True)
class AttentionStack:
    """Per-decoder-layer attention matrices for one sentence pair."""

    layers: tuple  # L matrices, each n x m

    def __post_init__(self):
        layers = tuple(as_f64(layer) for layer in self.layers)
        if not layers:
            raise ShapeError("attention stack needs at least one layer")
        shape = layers[0].shape
        if len(shape) != 2 or any(layer.shape != shape for layer in layers):
            raise ShapeError("attention layers must share one n x m shape")
        object.__setattr__(self, "layers", layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def shape(self):
        return self.layers[0].shape

    def validate_stochastic(self, tol: float = 1e-9):
        for layer_no, layer in enumerate(self.layers, start=1):
            if np.any(layer < -tol) or np.any(np.abs(layer.sum(axis=1) - 1.0) > tol):
                raise ValueError(f"layer {layer_no} is not row-stochastic within {tol}")


@dataclass(frozen=True)
class SourceMajorAttention:
    """m x n attention with source tokens as rows, ready for transfer."""

    matrix: np.ndarray
    renormalized: bool


def decoder_summary(h, g, W_d, b_d):
    """Combine a decoder state with the previous output embedding:
    W_d @ h + b_d + g."""
    h, g, W_d, b_d = as_f64(h), as_f64(g), as_f64(W_d), as_f64(b_d)
    if W_d.shape[1] != h.shape[0] or W_d.shape[0] != b_d.shape[0] or b_d.shape != g.shape:
        raise ShapeError(
            f"decoder_summary dims do not conform: W_d {W_d.shape}, h {h.shape}, "
            f"b_d {b_d.shape}, g {g.shape}"
        )
    return W_d @ h + b_d + g


def attention_weights(summaries, encoder_outputs):
    """Dot-product attention: row j is the softmax over source positions i
    of summaries[j] . encoder_outputs[i]. Output is n x m, row-stochastic.
    """
    D = as_f64(summaries)
    Z = as_f64(encoder_outputs)
    if D.ndim != 2 or Z.ndim != 2 or D.shape[1] != Z.shape[1]:
        raise ShapeError(f"state dims do not conform: {D.shape} vs {Z.shape}")
    return row_softmax(D @ Z.T)


def select_matrix(stack: AttentionStack, mode):
    """Pick one matrix out of a stack: "first", "last", "average", or an
    int k for decoder layer k (1-based)."""
    if mode == FIRST:
        return stack.layers[0]
    if mode == LAST:
        return stack.layers[-1]
    if mode == AVERAGE:
        return sum(stack.layers) / stack.depth
    if isinstance(mode, int) and not isinstance(mode, bool):
        if not 1 <= mode <= stack.depth:
            raise IndexError(f"layer {mode} out of range 1..{stack.depth}")
        return stack.layers[mode - 1]
    raise ValueError(f"unknown attention mode {mode!r}")


def to_source_major(target_major, renormalize: bool = True) -> SourceMajorAttention:
    """Transpose an n x m target-major matrix into m x n source-major form.

    With ``renormalize`` (the default) each row is rescaled to sum to 1 so
    every transferred vector stays a convex combination of model states;
    a source token attended by no target step gets a uniform row instead
    of a zero one. Without it the raw transpose is returned.
    """
    matrix = as_f64(target_major).T.copy()
    if renormalize:
        n = matrix.shape[1]
        sums = matrix.sum(axis=1)
        degenerate = sums < 1e-12
        matrix[degenerate] = 1.0 / n
        matrix[~degenerate] /= sums[~degenerate, None]
    return SourceMajorAttention(matrix, renormalize)
