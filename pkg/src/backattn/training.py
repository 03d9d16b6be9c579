"""End-to-end target-model training and evaluation.

The target tagger embeds tokens, runs one BiLSTM layer, concatenates each
output state with its transferred vector (when transfer is on), and feeds
the result to the CRF. Optimization is vanilla SGD with loss-plateau
annealing: when the epoch mean train loss fails to improve on the best
seen for ``anneal_patience`` consecutive epochs, the learning rate is
multiplied by ``anneal_factor``.

Three input configurations share one model and one trainer:
  * standard: a trainable lookup table feeds the BiLSTM;
  * embedding-only: fixed per-position vectors (e.g. transferred
    knowledge used as word embeddings) feed it, nothing is looked up;
  * source training: fixed contextual vectors are concatenated with a
    trainable lookup (the static table).
"""

import copy
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import attention
from .corpus import (
    LabeledCorpus,
    Scheme,
    Vocab,
    build_vocab,
    spans_from_tags,
)
from .crf import CrfParams, nll_grads, sequence_nll, viterbi_decode
from .errors import ShapeError
from .numerics import new_rng
from .seqmodel import (
    POST_SIGMOID,
    LstmParams,
    bilstm_backward,
    bilstm_forward,
    dropout_mask,
)
from .source_model import (
    CharLmConfig,
    FrozenNerModel,
    charlm_embed,
    freeze,
    train_charlm,
)
from .transfer import TransferKnowledge, build_transfer_table, check_transfer_table

log = logging.getLogger(__name__)

FULL_HIDDEN_SIZE = 256
FULL_EPOCHS = 150


@dataclass
class ExperimentConfig:
    """Hyperparameters of one experiment.

    Desk-scale defaults keep gradient checks and CI fast; ``full_scale()``
    restores the reference sizes (hidden 256, 150 epochs).
    """

    learning_rate: float = 0.1
    epochs: int = 30
    hidden_size: int = 32
    embed_dim: int = 32
    batch_size: int = 8                  # one of 8, 16, 32
    dropout_embed: float = 0.1
    dropout_recurrent: float = 0.05
    anneal_patience: int = 3
    anneal_factor: float = 0.5
    attention_mode: object = attention.AVERAGE
    renormalize: bool = True
    seeds: tuple = (1, 2, 3, 4, 5)
    transfer_enabled: bool = True
    embedding_only: bool = False
    min_count: int = 1
    gate_mode: str = POST_SIGMOID
    crf_factored: bool = False

    def __post_init__(self):
        self.seeds = tuple(self.seeds)
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.anneal_patience < 1:
            raise ValueError("anneal patience must be >= 1")
        if not 0.0 < self.anneal_factor < 1.0:
            raise ValueError("anneal factor must lie in (0, 1)")
        if self.batch_size not in (8, 16, 32):
            raise ValueError("batch size must be one of 8, 16, 32")
        for rate in (self.dropout_embed, self.dropout_recurrent):
            if not 0.0 <= rate < 1.0:
                raise ValueError("dropout rates must lie in [0, 1)")
        if self.epochs < 1:
            raise ValueError("need at least one epoch")

    def full_scale(self) -> "ExperimentConfig":
        return replace(self, hidden_size=FULL_HIDDEN_SIZE, epochs=FULL_EPOCHS)


@dataclass
class TargetModel:
    """Trainable tagger: optional lookup table, BiLSTM, CRF."""

    labels: tuple
    vocab: Vocab | None
    embed: np.ndarray | None     # (|V|, embed_dim); None without a lookup
    fwd: LstmParams
    bwd: LstmParams
    crf: CrfParams
    fixed_dim: int = 0           # width of fixed per-position inputs
    transfer_dim: int = 0        # width of the fused transferred vector
    gate_mode: str = POST_SIGMOID

    @property
    def hidden_dim(self) -> int:
        return self.fwd.hidden_dim

    @property
    def input_dim(self) -> int:
        return self.fixed_dim + (self.embed.shape[1] if self.embed is not None else 0)

    def tensors(self):
        pairs = []
        if self.embed is not None:
            pairs.append(("embed", self.embed))
        pairs += [("fwd." + n, a) for n, a in self.fwd.tensors()]
        pairs += [("bwd." + n, a) for n, a in self.bwd.tensors()]
        pairs += [("crf." + n, a) for n, a in self.crf.tensors()]
        return pairs

    def copy(self) -> "TargetModel":
        return TargetModel(
            self.labels, self.vocab,
            None if self.embed is None else self.embed.copy(),
            self.fwd.copy(), self.bwd.copy(), self.crf.copy(),
            self.fixed_dim, self.transfer_dim, self.gate_mode,
        )


@dataclass
class TargetGrads:
    embed: np.ndarray | None
    fwd: LstmParams
    bwd: LstmParams
    crf: CrfParams

    @classmethod
    def zeros_like(cls, model: TargetModel) -> "TargetGrads":
        return cls(
            None if model.embed is None else np.zeros_like(model.embed),
            LstmParams.zeros_like(model.fwd),
            LstmParams.zeros_like(model.bwd),
            model.crf.zeros_like(),
        )

    def accumulate(self, other: "TargetGrads", scale: float = 1.0):
        if self.embed is not None:
            self.embed += scale * other.embed
        self.fwd.add_scaled(other.fwd, scale)
        self.bwd.add_scaled(other.bwd, scale)
        self.crf.add_scaled(other.crf, scale)


def labels_of(corpus: LabeledCorpus) -> tuple:
    return tuple(sorted({tag for s in corpus.sentences for tag in s.tags}))


def init_target_model(config: ExperimentConfig, labels, vocab: Vocab = None,
                      fixed_dim: int = 0, transfer_dim: int = 0,
                      rng=None) -> TargetModel:
    rng = rng if rng is not None else new_rng(0)
    embed = None
    if vocab is not None:
        bound = np.sqrt(3.0 / config.embed_dim)
        embed = rng.uniform(-bound, bound, size=(len(vocab), config.embed_dim))
        embed[vocab.pad_index] = 0.0
    input_dim = fixed_dim + (config.embed_dim if vocab is not None else 0)
    if input_dim == 0:
        raise ValueError("model needs a lookup table or fixed inputs")
    h = config.hidden_size
    fwd = LstmParams.init(rng, input_dim, h)
    bwd = LstmParams.init(rng, input_dim, h)
    crf = CrfParams.zeros(labels, 2 * h + transfer_dim, factored=config.crf_factored)
    return TargetModel(tuple(labels), vocab, embed, fwd, bwd, crf,
                       fixed_dim, transfer_dim, config.gate_mode)


def _sentence_inputs(model: TargetModel, tokens, fixed_input):
    parts = []
    token_ids = None
    if model.fixed_dim:
        if fixed_input is None or fixed_input.shape != (len(tokens), model.fixed_dim):
            raise ShapeError(
                f"fixed input of shape {(len(tokens), model.fixed_dim)} required, "
                f"got {None if fixed_input is None else fixed_input.shape}")
        parts.append(fixed_input)
    if model.embed is not None:
        token_ids = np.array([model.vocab.index(t) for t in tokens], dtype=np.intp)
        parts.append(model.embed[token_ids])
    return np.concatenate(parts, axis=1), token_ids


def _transfer_matrix(model: TargetModel, tokens, transfer):
    if model.transfer_dim == 0:
        return None
    if transfer is None:
        # no alignment for this sentence: baseline-mode zero vectors
        return np.zeros((len(tokens), model.transfer_dim))
    matrix = transfer.matrix if isinstance(transfer, TransferKnowledge) else np.asarray(transfer)
    if matrix.shape != (len(tokens), model.transfer_dim):
        raise ShapeError(
            f"transferred matrix {matrix.shape} does not match "
            f"{len(tokens)} tokens x {model.transfer_dim}")
    return matrix


def _forward(model: TargetModel, tokens, transfer, fixed_input,
             train, rng, rates):
    inputs, token_ids = _sentence_inputs(model, tokens, fixed_input)
    m = len(tokens)
    embed_rate, recurrent_rate = rates
    if train:
        in_mask = np.stack([dropout_mask(inputs.shape[1], embed_rate, rng) for _ in range(m)])
        out_mask = np.stack([dropout_mask(2 * model.hidden_dim, recurrent_rate, rng)
                             for _ in range(m)])
    else:
        in_mask = np.ones_like(inputs)
        out_mask = np.ones((m, 2 * model.hidden_dim))
    dropped = inputs * in_mask
    states, bi_cache = bilstm_forward(dropped, model.fwd, model.bwd, model.gate_mode)
    states_dropped = states * out_mask
    t_e = _transfer_matrix(model, tokens, transfer)
    fused = states_dropped if t_e is None else np.concatenate([states_dropped, t_e], axis=1)
    return fused, (token_ids, in_mask, out_mask, bi_cache)


def forward_loss(model: TargetModel, tokens, tags, transfer=None,
                 fixed_input=None, train: bool = False, rng=None,
                 rates=(0.1, 0.05)) -> float:
    """Sequence NLL of one sentence under the full pipeline: embed,
    dropout, BiLSTM, per-token fusion with the transferred vector, CRF."""
    fused, _ = _forward(model, tokens, transfer, fixed_input, train, rng, rates)
    return sequence_nll(fused, list(tags), model.crf)


def loss_and_grads(model: TargetModel, tokens, tags, transfer=None,
                   fixed_input=None, train: bool = False, rng=None,
                   rates=(0.1, 0.05)):
    """forward_loss plus analytic gradients of every trainable tensor."""
    fused, (token_ids, in_mask, out_mask, bi_cache) = _forward(
        model, tokens, transfer, fixed_input, train, rng, rates)
    grads = TargetGrads.zeros_like(model)
    nll, crf_grads, d_fused = nll_grads(fused, list(tags), model.crf)
    grads.crf = crf_grads
    d_states = d_fused[:, : 2 * model.hidden_dim] * out_mask  # transfer block is frozen
    d_inputs = bilstm_backward(bi_cache, d_states, grads.fwd, grads.bwd) * in_mask
    if model.embed is not None:
        lookup_part = d_inputs[:, model.fixed_dim:]
        np.add.at(grads.embed, token_ids, lookup_part)
    return nll, grads


def predict(model: TargetModel, tokens, transfer=None, fixed_input=None):
    """Viterbi tags in evaluation mode (dropout off)."""
    fused, _ = _forward(model, tokens, transfer, fixed_input, False, None, (0.0, 0.0))
    return viterbi_decode(fused, model.crf)


# ------------------------------------------------------------- evaluation

def extract_spans(tags):
    """Entity spans (start, end, type), 1-based inclusive, with the
    forgiving repair rule for malformed sequences."""
    return set(spans_from_tags(list(tags), Scheme.BIOES))


def _prf(tp: int, fp: int, fn: int):
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def entity_prf(gold_tags, predicted_tags):
    """Exact-span, exact-type precision/recall/F1, overall and per type.

    Arguments are parallel lists of per-sentence tag sequences; empty
    denominators score 0 by convention.
    """
    if len(gold_tags) != len(predicted_tags):
        raise ValueError(
            f"{len(gold_tags)} gold vs {len(predicted_tags)} predicted sentences")
    counts = {}   # type -> [tp, fp, fn]
    for index, (gold, pred) in enumerate(zip(gold_tags, predicted_tags)):
        if len(gold) != len(pred):
            raise ValueError(f"sentence {index}: {len(gold)} gold vs {len(pred)} predicted tags")
        gold_spans = extract_spans(gold)
        pred_spans = extract_spans(pred)
        for span in pred_spans:
            counts.setdefault(span[2], [0, 0, 0])
            if span in gold_spans:
                counts[span[2]][0] += 1
            else:
                counts[span[2]][1] += 1
        for span in gold_spans - pred_spans:
            counts.setdefault(span[2], [0, 0, 0])
            counts[span[2]][2] += 1
    totals = [sum(c[i] for c in counts.values()) for i in range(3)]
    result = _prf(*totals)
    result["per_type"] = {t: _prf(*counts[t]) for t in sorted(counts)}
    return result


def evaluate(model: TargetModel, corpus: LabeledCorpus, transfers=None,
             fixed_inputs=None):
    """Span metrics of the model on a corpus (evaluation mode)."""
    predictions = []
    for i, sentence in enumerate(corpus.sentences):
        transfer = transfers[i] if transfers is not None else None
        fixed = fixed_inputs[i] if fixed_inputs is not None else None
        predictions.append(predict(model, sentence.tokens, transfer, fixed))
    gold = [list(s.tags) for s in corpus.sentences]
    return entity_prf(gold, predictions)


# --------------------------------------------------------------- training

@dataclass
class PlateauAnnealer:
    """Multiplies the learning rate by ``factor`` whenever the observed
    loss fails to beat the best seen for ``patience`` consecutive
    observations; the counter resets after every anneal. The rate never
    increases."""

    lr: float
    patience: int
    factor: float
    best: float = np.inf
    stale: int = 0

    def observe(self, loss: float) -> float:
        if loss < self.best:
            self.best = loss
            self.stale = 0
        else:
            self.stale += 1
            if self.stale >= self.patience:
                self.lr *= self.factor
                self.stale = 0
        return self.lr


@dataclass
class TrainResult:
    model: TargetModel
    curve: list
    best_model: TargetModel
    best_epoch: int
    best_dev_f1: float


def sgd_train(corpus: LabeledCorpus, config: ExperimentConfig, transfers=None,
              fixed_inputs=None, dev=None, dev_transfers=None,
              dev_fixed=None, model: TargetModel = None, rng=None,
              seed: int = 0) -> TrainResult:
    """Plain SGD over shuffled mini-batches with loss-plateau annealing.

    Batch loss is the mean of per-sentence losses at true lengths. When a
    dev corpus is given, the parameters of the best-dev-F1 epoch are kept
    alongside the final ones. Deterministic for a fixed seed.
    """
    if not corpus.sentences:
        raise ValueError("training corpus is empty")
    rng = rng if rng is not None else new_rng(seed)
    if model is None:
        vocab = build_vocab(corpus, config.min_count)
        model = init_target_model(config, labels_of(corpus), vocab, rng=rng)
    if transfers is not None:
        check_transfer_table(corpus, transfers)

    rates = (config.dropout_embed, config.dropout_recurrent)
    annealer = PlateauAnnealer(config.learning_rate, config.anneal_patience,
                               config.anneal_factor)
    curve = []
    best_model = model.copy()
    best_epoch = 0
    best_dev_f1 = -1.0

    n = len(corpus.sentences)
    for epoch in range(1, config.epochs + 1):
        lr = annealer.lr
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, config.batch_size):
            batch = order[lo: lo + config.batch_size]
            grads = TargetGrads.zeros_like(model)
            batch_loss = 0.0
            for i in batch:
                sentence = corpus.sentences[i]
                loss, g = loss_and_grads(
                    model, sentence.tokens, sentence.tags,
                    transfers[i] if transfers is not None else None,
                    fixed_inputs[i] if fixed_inputs is not None else None,
                    train=True, rng=rng, rates=rates)
                if not np.isfinite(loss):
                    raise RuntimeError(
                        f"non-finite loss at epoch {epoch}, batch {lo // config.batch_size}, "
                        f"lr {lr}")
                batch_loss += loss
                grads.accumulate(g)
            scale = -lr / len(batch)
            if model.embed is not None:
                model.embed += scale * grads.embed
            model.fwd.add_scaled(grads.fwd, scale)
            model.bwd.add_scaled(grads.bwd, scale)
            model.crf.add_scaled(grads.crf, scale)
            total += batch_loss
        epoch_loss = total / n

        entry = {"epoch": epoch, "loss": epoch_loss, "lr": lr}
        if dev is not None:
            dev_f1 = evaluate(model, dev, dev_transfers, dev_fixed)["f1"]
            entry["dev_f1"] = dev_f1
            if dev_f1 > best_dev_f1:
                best_dev_f1 = dev_f1
                best_model = model.copy()
                best_epoch = epoch
        curve.append(entry)
        log.info("epoch %d: loss %.4f lr %.4g%s", epoch, epoch_loss, lr,
                 f" dev_f1 {entry['dev_f1']:.4f}" if dev is not None else "")
        if annealer.observe(epoch_loss) != lr:
            log.info("epoch %d: loss plateau, lr annealed to %.4g", epoch, annealer.lr)

    if dev is None:
        best_model, best_epoch, best_dev_f1 = model.copy(), config.epochs, float("nan")
    return TrainResult(model, curve, best_model, best_epoch, best_dev_f1)


# ------------------------------------------------------------ experiments

@dataclass
class SeedResult:
    seed: int
    precision: float
    recall: float
    f1: float
    per_type: dict
    curve: list = field(repr=False, default_factory=list)
    model: TargetModel = field(repr=False, default=None, compare=False)


@dataclass
class MetricsReport:
    """Per-seed and mean span metrics; mean fields are arithmetic means
    of the per-seed fields."""

    per_seed: list
    mean: dict

    def to_dict(self) -> dict:
        return {
            "per_seed": [
                {"seed": r.seed, "precision": r.precision, "recall": r.recall,
                 "f1": r.f1, "per_type": r.per_type, "curve": r.curve}
                for r in self.per_seed
            ],
            "mean": self.mean,
        }

    @property
    def mean_f1(self) -> float:
        return self.mean["f1"]


def summarize_seed_results(results) -> MetricsReport:
    types = sorted({t for r in results for t in r.per_type})
    zero = ("precision", "recall", "f1")

    def mean_over(getter):
        return {k: float(np.mean([getter(r).get(k, 0.0) for r in results])) for k in zero}

    mean = mean_over(lambda r: {"precision": r.precision, "recall": r.recall, "f1": r.f1})
    mean["per_type"] = {
        t: mean_over(lambda r, t=t: r.per_type.get(t, {})) for t in types
    }
    return MetricsReport(list(results), mean)


def _transfer_tables(config, corpora, alignments, source):
    if not config.transfer_enabled and not config.embedding_only:
        return {name: None for name in corpora}
    if source is None:
        raise ValueError("transfer requires a frozen source model")
    tables = {}
    for name, corpus in corpora.items():
        table = build_transfer_table(corpus, alignments, config.attention_mode,
                                     source, config.renormalize)
        tables[name] = check_transfer_table(corpus, table)
    return tables


def run_experiment(config: ExperimentConfig, train_corpus, dev_corpus,
                   test_corpus, alignments=None, source: FrozenNerModel = None,
                   fixed_inputs=None) -> MetricsReport:
    """Train once per seed, select the best-dev-F1 epoch, report test
    metrics per seed and their mean.

    ``fixed_inputs`` (a {"train"/"dev"/"test": [matrix, ...]} map)
    overrides the per-position inputs in embedding-only mode; otherwise
    they are derived from the transferred matrices.
    """
    corpora = {"train": train_corpus, "dev": dev_corpus, "test": test_corpus}
    source_params = None
    if source is not None:
        source_params = [(name, arr.copy()) for name, arr in source.tensors()]

    if config.embedding_only:
        if fixed_inputs is None:
            tables = _transfer_tables(config, corpora, alignments or [], source)
            fixed_inputs = {name: [t.matrix for t in tables[name]] for name in corpora}
        transfers = {name: None for name in corpora}
        fixed_dim = fixed_inputs["train"][0].shape[1]
        vocab = None
        transfer_dim = 0
    else:
        transfers = _transfer_tables(config, corpora, alignments or [], source)
        fixed_inputs = {name: None for name in corpora}
        fixed_dim = 0
        vocab = build_vocab(train_corpus, config.min_count)
        transfer_dim = source.state_dim if config.transfer_enabled else 0

    labels = labels_of(train_corpus)
    results = []
    for seed in config.seeds:
        rng = new_rng(seed)
        model = init_target_model(config, labels, vocab, fixed_dim, transfer_dim, rng)
        outcome = sgd_train(
            train_corpus, config,
            transfers["train"], fixed_inputs["train"],
            dev=dev_corpus, dev_transfers=transfers["dev"], dev_fixed=fixed_inputs["dev"],
            model=model, rng=rng)
        metrics = evaluate(outcome.best_model, test_corpus,
                           transfers["test"], fixed_inputs["test"])
        results.append(SeedResult(seed, metrics["precision"], metrics["recall"],
                                  metrics["f1"], metrics["per_type"], outcome.curve,
                                  outcome.best_model))
        log.info("seed %d: test f1 %.4f (best dev epoch %d)",
                 seed, metrics["f1"], outcome.best_epoch)

    if source_params is not None:
        after = dict(source.tensors())
        for name, before in source_params:
            if not np.array_equal(before, after[name]):
                raise RuntimeError(f"frozen source parameter {name} changed during training")
    return summarize_seed_results(results)


# ------------------------------------------------------ embedding export

def export_ban_embeddings(corpus, alignments, source: FrozenNerModel, mode,
                          renormalize: bool = True):
    """Transferred vectors for every token, as positional embedding
    records [(tokens, matrix), ...]; sentences without an alignment are
    skipped with a warning."""
    by_tokens = {}
    for pair in alignments:
        by_tokens.setdefault(pair.source_tokens, pair)
    records = []
    for index, sentence in enumerate(corpus.sentences):
        pair = by_tokens.get(tuple(sentence.tokens))
        if pair is None:
            log.warning("sentence %d has no alignment record; skipped", index)
            continue
        from .transfer import transfer_for_sentence

        knowledge = transfer_for_sentence(pair, mode, source, renormalize)
        records.append((tuple(sentence.tokens), knowledge.matrix))
    return records


TARGET_CHECKPOINT_KIND = "target-model"


def save_target_model(model: TargetModel, path):
    from .serialization import save_tensor_bundle

    meta = {
        "labels": list(model.labels),
        "vocab": None if model.vocab is None else list(model.vocab.index_to_token),
        "fixed_dim": model.fixed_dim,
        "transfer_dim": model.transfer_dim,
        "gate_mode": model.gate_mode,
        "crf_factored": model.crf.factored,
    }
    save_tensor_bundle(path, TARGET_CHECKPOINT_KIND, meta, dict(model.tensors()))


def load_target_model(path) -> TargetModel:
    from .serialization import load_tensor_bundle

    meta, tensors = load_tensor_bundle(path, TARGET_CHECKPOINT_KIND)
    vocab = None
    if meta["vocab"] is not None:
        tokens = tuple(meta["vocab"])
        vocab = Vocab(tokens, {t: i for i, t in enumerate(tokens)})

    def lstm(prefix):
        names = [n for n, _ in LstmParams.zeros(1, 1).tensors()]
        return LstmParams(*(tensors[prefix + n] for n in names))

    crf = CrfParams(tuple(meta["labels"]), tensors["crf.W"], tensors["crf.b"],
                    bool(meta.get("crf_factored", False)))
    return TargetModel(tuple(meta["labels"]), vocab, tensors.get("embed"),
                       lstm("fwd."), lstm("bwd."), crf,
                       int(meta["fixed_dim"]), int(meta["transfer_dim"]),
                       meta.get("gate_mode", POST_SIGMOID))


def random_type_inputs(corpora: dict, dim: int, rng):
    """Fixed random per-position inputs where equal tokens share one
    random vector across every split: the comparison point for the
    embedding-only mode. Takes and returns {split name: ...} maps."""
    bound = np.sqrt(3.0 / dim)
    by_type = {}

    def vector(token):
        if token not in by_type:
            by_type[token] = rng.uniform(-bound, bound, size=dim)
        return by_type[token]

    return {
        name: [np.asarray([vector(t) for t in sentence.tokens])
               for sentence in corpus.sentences]
        for name, corpus in corpora.items()
    }


# -------------------------------------------------------- source training

@dataclass
class SourceConfig:
    """Desk-scale training recipe for the to-be-frozen source tagger."""

    charlm: CharLmConfig = field(default_factory=CharLmConfig)
    hidden_size: int = 16
    static_dim: int = 16
    epochs: int = 15
    learning_rate: float = 0.1
    batch_size: int = 8
    min_count: int = 1
    seed: int = 0
    gate_mode: str = POST_SIGMOID


def train_source_model(corpus: LabeledCorpus, charlm_text: str,
                       config: SourceConfig):
    """Train the char LM, then the source BiLSTM-CRF over [contextual ;
    static] inputs, freeze everything, return (model, training curve)."""
    charlm_config = replace(config.charlm, seed=config.seed)
    charlm, _ = train_charlm(charlm_text, charlm_config)

    rng = new_rng(config.seed)
    vocab = build_vocab(corpus, config.min_count)
    contextual = [charlm_embed(s.tokens, charlm) for s in corpus.sentences]

    inner = ExperimentConfig(
        learning_rate=config.learning_rate, epochs=config.epochs,
        hidden_size=config.hidden_size, embed_dim=config.static_dim,
        batch_size=config.batch_size, seeds=(config.seed,),
        transfer_enabled=False, min_count=config.min_count,
        gate_mode=config.gate_mode)
    model = init_target_model(inner, labels_of(corpus), vocab,
                              fixed_dim=charlm.embed_dim, rng=rng)
    outcome = sgd_train(corpus, inner, fixed_inputs=contextual, model=model, rng=rng)

    from .corpus import EmbeddingTable

    table = EmbeddingTable(vocab, config.static_dim, outcome.model.embed)
    frozen = FrozenNerModel(charlm, table, outcome.model.fwd, outcome.model.bwd,
                            outcome.model.crf, config.gate_mode)
    return freeze(frozen), outcome.curve
