"""Labeled-corpus ingestion: CoNLL files, tag schemes, vocabularies,
static embedding tables and precomputed alignment records.

All types here are immutable after construction, so they can be read
concurrently without locks. File ingestion for every other module also
lives here.
"""

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .attention import AttentionStack
from .errors import FormatError, TagError, ValidationError
from .numerics import as_f64

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"


class Scheme(str, Enum):
    BIO = "BIO"
    BIOES = "BIOES"

    @property
    def prefixes(self):
        return ("B", "I") if self is Scheme.BIO else ("B", "I", "E", "S")


def _check_tag(tag: str, scheme: Scheme):
    if tag == "O":
        return
    prefix, sep, entity_type = tag.partition("-")
    if not sep or not entity_type or prefix not in scheme.prefixes:
        raise TagError(f"tag {tag!r} is not valid under scheme {scheme.value}")


@dataclass(frozen=True)
class LabeledSentence:
    """Tokens with one tag per token."""

    tokens: tuple
    tags: tuple

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.tokens) != len(self.tags) or not self.tokens:
            raise ValueError("need equal, non-zero numbers of tokens and tags")

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class LabeledCorpus:
    sentences: tuple
    scheme: Scheme

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


def parse_conll(text: str, scheme: Scheme) -> LabeledCorpus:
    """Parse column-format text: token first, tag last, blank line between
    sentences. Columns in between (POS, chunk, ...) are ignored.

    Raises FormatError for a line with fewer than two columns and TagError
    for a tag outside the scheme grammar, both naming the line number.
    """
    sentences = []
    tokens, tags = [], []

    def flush():
        if tokens:
            sentences.append(LabeledSentence(tuple(tokens), tuple(tags)))
            tokens.clear()
            tags.clear()

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            flush()
            continue
        columns = line.split()
        if len(columns) < 2:
            raise FormatError(f"line {lineno}: expected token and tag, got {line!r}")
        tag = columns[-1]
        try:
            _check_tag(tag, scheme)
        except TagError as exc:
            raise TagError(f"line {lineno}: {exc}") from None
        tokens.append(columns[0])
        tags.append(tag)
    flush()
    return LabeledCorpus(tuple(sentences), scheme)


def serialize_conll(corpus: LabeledCorpus) -> str:
    """Inverse of parse_conll for two-column space-separated files."""
    blocks = [
        "\n".join(f"{tok} {tag}" for tok, tag in zip(s.tokens, s.tags))
        for s in corpus.sentences
    ]
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def spans_from_tags(tags, scheme: Scheme = Scheme.BIOES):
    """Maximal entity spans as (start, end, type), 1-based inclusive.

    Applies the conlleval-style forgiving rule: an I-X or E-X that
    continues nothing (preceded by O, a sentence boundary, a different
    type, or a closed span) opens a new span.
    """
    spans = []
    start = None
    current_type = None
    for pos, tag in enumerate(tags, start=1):
        if tag == "O":
            if start is not None:
                spans.append((start, pos - 1, current_type))
                start = None
            continue
        prefix, _, entity_type = tag.partition("-")
        continues = prefix in ("I", "E") and start is not None and entity_type == current_type
        if not continues:
            if start is not None:
                spans.append((start, pos - 1, current_type))
            start, current_type = pos, entity_type
        if prefix in ("E", "S"):
            spans.append((start, pos, current_type))
            start = None
    if start is not None:
        spans.append((start, len(tags), current_type))
    return spans


def tags_from_spans(spans, length: int, scheme: Scheme):
    """Emit a tag sequence realizing the given non-overlapping spans."""
    tags = ["O"] * length
    for start, end, entity_type in spans:
        if start == end:
            tags[start - 1] = ("S-" if scheme is Scheme.BIOES else "B-") + entity_type
        else:
            tags[start - 1] = "B-" + entity_type
            for pos in range(start, end - 1):
                tags[pos] = "I-" + entity_type
            tags[end - 1] = ("E-" if scheme is Scheme.BIOES else "I-") + entity_type
    return tags


def convert_scheme(corpus: LabeledCorpus, target: Scheme) -> LabeledCorpus:
    """Rewrite tags into ``target``, preserving the span set exactly.

    Malformed input is repaired by the forgiving rule first, so the
    result is always strictly valid under ``target``.
    """
    converted = []
    for sentence in corpus.sentences:
        spans = spans_from_tags(sentence.tags, corpus.scheme)
        converted.append(
            LabeledSentence(sentence.tokens, tuple(tags_from_spans(spans, len(sentence), target)))
        )
    return LabeledCorpus(tuple(converted), target)


def normalize(corpus: LabeledCorpus) -> LabeledCorpus:
    """Repair tags in place (same scheme); identity on strictly valid input."""
    return convert_scheme(corpus, corpus.scheme)


def is_strictly_valid(corpus: LabeledCorpus) -> bool:
    """True when the repair pass changes nothing."""
    repaired = normalize(corpus)
    return all(a.tags == b.tags for a, b in zip(corpus.sentences, repaired.sentences))


@dataclass(frozen=True)
class Vocab:
    """Token/index bijection with reserved padding and unknown entries."""

    index_to_token: tuple
    token_to_index: dict = field(repr=False)
    pad_index: int = 0
    unk_index: int = 1

    def __len__(self):
        return len(self.index_to_token)

    def index(self, token: str) -> int:
        return self.token_to_index.get(token, self.unk_index)

    def __contains__(self, token):
        return token in self.token_to_index


def make_vocab(tokens) -> Vocab:
    index_to_token = (PAD_TOKEN, UNK_TOKEN) + tuple(tokens)
    return Vocab(index_to_token, {t: i for i, t in enumerate(index_to_token)})


def build_vocab(corpus: LabeledCorpus, min_count: int = 1) -> Vocab:
    """Frequency-thresholded vocabulary; ordering is frequency-descending
    then lexicographic, so equal corpora always yield equal vocabs.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter(tok for sent in corpus.sentences for tok in sent.tokens)
    kept = sorted(
        (tok for tok, c in counts.items() if c >= min_count),
        key=lambda tok: (-counts[tok], tok),
    )
    return make_vocab(kept)


@dataclass(frozen=True)
class EmbeddingTable:
    vocab: Vocab
    dim: int
    vectors: np.ndarray  # (len(vocab), dim)

    def __post_init__(self):
        if self.vectors.shape != (len(self.vocab), self.dim):
            raise ValueError("embedding matrix shape does not match vocab/dim")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("embedding matrix contains non-finite entries")

    def lookup(self, token: str) -> np.ndarray:
        return self.vectors[self.vocab.index(token)]


def _fallback_vectors(vocab: Vocab, dim: int, rng) -> np.ndarray:
    # Variance-matched uniform init; the padding row stays zero.
    bound = np.sqrt(3.0 / dim)
    vectors = rng.uniform(-bound, bound, size=(len(vocab), dim))
    vectors[vocab.pad_index] = 0.0
    return vectors


def random_embeddings(vocab: Vocab, dim: int, rng) -> EmbeddingTable:
    """Deterministic random table used when no pretrained file is given."""
    return EmbeddingTable(vocab, dim, _fallback_vectors(vocab, dim, rng))


def load_embeddings(path, vocab: Vocab, dim: int, rng) -> EmbeddingTable:
    """Load a textual word-vector file (``word v1 ... vD`` per line).

    Rows for in-vocab words come from the file; missing words keep the
    seeded fallback initialization; the unknown row becomes the mean of
    the loaded rows (or stays at fallback when the file covers nothing).
    """
    vectors = _fallback_vectors(vocab, dim, rng)
    loaded_rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if len(parts) - 1 != dim:
                raise FormatError(
                    f"line {lineno}: expected {dim} floats after the word, got {len(parts) - 1}"
                )
            word = parts[0]
            try:
                values = as_f64([float(x) for x in parts[1:]])
            except ValueError:
                raise FormatError(f"line {lineno}: non-numeric vector entry") from None
            if word in vocab:
                vectors[vocab.token_to_index[word]] = values
                loaded_rows.append(values)
    if loaded_rows:
        vectors[vocab.unk_index] = np.mean(loaded_rows, axis=0)
    return EmbeddingTable(vocab, dim, vectors)


def save_embeddings(table: EmbeddingTable, path):
    with open(path, "w", encoding="utf-8") as handle:
        for token, row in zip(table.vocab.index_to_token, table.vectors):
            handle.write(token + " " + " ".join(repr(float(v)) for v in row) + "\n")


@dataclass(frozen=True)
class AlignedPair:
    """One sentence pair plus the attention stack produced translating it."""

    source_tokens: tuple
    target_tokens: tuple
    attention: AttentionStack

    def __post_init__(self):
        object.__setattr__(self, "source_tokens", tuple(self.source_tokens))
        object.__setattr__(self, "target_tokens", tuple(self.target_tokens))
        n, m = self.attention.shape
        if (n, m) != (len(self.target_tokens), len(self.source_tokens)):
            raise FormatError(
                f"attention shape {n}x{m} does not match "
                f"{len(self.target_tokens)} target / {len(self.source_tokens)} source tokens"
            )


def load_alignments(path, row_sum_tol: float = 1e-6):
    """Read alignment records (one JSON object per line: src, tgt, layers).

    Every layer must be row-stochastic within ``row_sum_tol``; violations
    raise ValidationError naming the record and layer.
    """
    pairs = []
    with open(path, "r", encoding="utf-8") as handle:
        for record_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                src, tgt, layers = record["src"], record["tgt"], record["layers"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise FormatError(f"record {record_no}: {exc}") from None
            n, m = len(tgt), len(src)
            matrices = []
            for layer_no, layer in enumerate(layers, start=1):
                matrix = as_f64(layer)
                if matrix.shape != (n, m):
                    raise FormatError(
                        f"record {record_no} layer {layer_no}: shape {matrix.shape} "
                        f"does not match {n}x{m}"
                    )
                row_sums = matrix.sum(axis=1)
                if np.any(np.abs(row_sums - 1.0) > row_sum_tol) or np.any(matrix < -1e-9):
                    bad = int(np.argmax(np.abs(row_sums - 1.0)))
                    raise ValidationError(
                        f"record {record_no} layer {layer_no}: row {bad + 1} "
                        f"sums to {row_sums[bad]!r}, not row-stochastic"
                    )
                matrices.append(matrix)
            if not matrices:
                raise FormatError(f"record {record_no}: no attention layers")
            pairs.append(AlignedPair(tuple(src), tuple(tgt), AttentionStack(tuple(matrices))))
    return pairs


def save_alignments(pairs, path):
    """Write alignment records; floats keep exact round-trip precision."""
    with open(path, "w", encoding="utf-8") as handle:
        for pair in pairs:
            record = {
                "src": list(pair.source_tokens),
                "tgt": list(pair.target_tokens),
                "layers": [layer.tolist() for layer in pair.attention.layers],
            }
            handle.write(json.dumps(record) + "\n")


def save_positional_embeddings(records, path):
    """Write per-token vector records (see load_positional_embeddings)."""
    with open(path, "w", encoding="utf-8") as handle:
        first = True
        for tokens, matrix in records:
            if not first:
                handle.write("\n")
            first = False
            for token, row in zip(tokens, matrix):
                handle.write(token + " " + " ".join(repr(float(v)) for v in row) + "\n")


def load_positional_embeddings(path):
    """Read per-token vector records: ``token v1 ... vD`` lines with a
    blank line between sentences. Returns [(tokens, matrix), ...].
    """
    records = []
    tokens, rows = [], []

    def flush():
        if tokens:
            records.append((tuple(tokens), as_f64(rows)))
            tokens.clear()
            rows.clear()

    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                flush()
                continue
            parts = line.split()
            if len(parts) < 2:
                raise FormatError(f"line {lineno}: expected token and vector")
            tokens.append(parts[0])
            try:
                rows.append([float(x) for x in parts[1:]])
            except ValueError:
                raise FormatError(f"line {lineno}: non-numeric vector entry") from None
            if len(rows) > 1 and len(rows[-1]) != len(rows[0]):
                raise FormatError(f"line {lineno}: inconsistent vector dimension")
    flush()
    return records
