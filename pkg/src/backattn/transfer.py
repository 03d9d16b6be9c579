"""Back-attention knowledge transfer: T = A @ R.

A is the source-major attention of a sentence pair (m source rows over n
target columns) and R holds the frozen source model's BiLSTM states for
the n target-language tokens. Row j of T is then the attention-weighted
combination of source-model states for source token j, so the transferred
matrix always has exactly one row per source token, whatever the target
length was.

Both inputs are frozen, so T for a sentence never changes during target
training; build it once and cache it.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .attention import SourceMajorAttention, select_matrix, to_source_major
from .errors import DataConsistencyError, ShapeError
from .numerics import as_f64
from .serialization import load_tensor_bundle, save_tensor_bundle
from .source_model import FrozenNerModel, english_hidden_states

log = logging.getLogger(__name__)

CACHE_KIND = "transfer-cache"


@dataclass(frozen=True)
class TransferKnowledge:
    """One transferred vector per source token (matrix m x d)."""

    matrix: np.ndarray
    mode: object            # attention-selection mode used
    renormalized: bool
    fallback: bool = False  # True when no alignment existed and T is zero


def back_transfer(attention, states) -> TransferKnowledge:
    """Attention-weighted combination of source-model states: the m x n
    source-major attention times the n x d state matrix."""
    if isinstance(attention, SourceMajorAttention):
        matrix, renormalized = attention.matrix, attention.renormalized
    else:
        matrix, renormalized = as_f64(attention), False
    states = as_f64(states)
    if matrix.ndim != 2 or states.ndim != 2 or matrix.shape[1] != states.shape[0]:
        raise ShapeError(f"attention {matrix.shape} does not conform with states {states.shape}")
    return TransferKnowledge(matrix @ states, mode=None, renormalized=renormalized)


def fuse(target_state, transferred):
    """Concatenate a target BiLSTM state with its transferred vector."""
    return np.concatenate([as_f64(target_state), as_f64(transferred)])


def transfer_for_sentence(pair, mode, source: FrozenNerModel,
                          renormalize: bool = True) -> TransferKnowledge:
    """Full per-sentence pipeline: select an attention matrix from the
    stack, reorient it source-major, run the frozen model over the target
    tokens, and multiply."""
    selected = select_matrix(pair.attention, mode)
    source_major = to_source_major(selected, renormalize)
    states = english_hidden_states(list(pair.target_tokens), source)
    transferred = back_transfer(source_major, states)
    return TransferKnowledge(transferred.matrix, mode, renormalize)


def build_transfer_table(corpus, pairs, mode, source: FrozenNerModel,
                         renormalize: bool = True):
    """Per-sentence transferred matrices for a corpus, matched to
    alignment records by exact source-token content.

    Sentences without a record fall back to a zero matrix (flagged), so
    partially aligned corpora still train in baseline mode for the
    uncovered part.
    """
    by_tokens = {}
    for pair in pairs:
        by_tokens.setdefault(pair.source_tokens, pair)
    d = source.state_dim
    table = []
    missing = 0
    for sentence in corpus.sentences:
        pair = by_tokens.get(tuple(sentence.tokens))
        if pair is None:
            missing += 1
            table.append(TransferKnowledge(np.zeros((len(sentence), d)), mode,
                                           renormalize, fallback=True))
        else:
            table.append(transfer_for_sentence(pair, mode, source, renormalize))
    if missing:
        log.warning("%d of %d sentences had no alignment record; using zero transfer",
                    missing, len(corpus.sentences))
    return table


def check_transfer_table(corpus, table):
    """Every transferred matrix must have one row per sentence token."""
    if len(table) != len(corpus.sentences):
        raise DataConsistencyError(
            f"transfer table has {len(table)} entries for {len(corpus.sentences)} sentences")
    for index, (sentence, knowledge) in enumerate(zip(corpus.sentences, table)):
        if knowledge.matrix.shape[0] != len(sentence):
            raise DataConsistencyError(
                f"sentence {index}: transfer has {knowledge.matrix.shape[0]} rows "
                f"for {len(sentence)} tokens", sentence_index=index)
    return table


def save_transfer_cache(table, path, mode, renormalize):
    meta = {
        "mode": str(mode),
        "renormalized": bool(renormalize),
        "count": len(table),
        "fallbacks": [i for i, t in enumerate(table) if t.fallback],
    }
    tensors = {str(i): t.matrix for i, t in enumerate(table)}
    save_tensor_bundle(path, CACHE_KIND, meta, tensors)


def load_transfer_cache(path):
    meta, tensors = load_tensor_bundle(path, CACHE_KIND)
    fallbacks = set(meta.get("fallbacks", []))
    mode = meta.get("mode")
    renormalized = bool(meta.get("renormalized", True))
    return [
        TransferKnowledge(tensors[str(i)], mode, renormalized, fallback=i in fallbacks)
        for i in range(int(meta["count"]))
    ]
