"""Command-line surface for batch operation.

Subcommands: train-source, train, sweep-layers, gradcheck,
export-embeddings, eval. Every run echoes its fully resolved
configuration (defaults < config file < explicit flags); the config file
is JSON, taken from --config or the BACKATTN_CONFIG environment variable.

Exit codes: 0 success, 1 verification failure, 2 I/O error,
3 data-consistency error.
"""

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import attention, gradcheck
from .corpus import (
    Scheme,
    convert_scheme,
    is_strictly_valid,
    load_alignments,
    load_positional_embeddings,
    parse_conll,
    save_positional_embeddings,
)
from .errors import (
    DataConsistencyError,
    FormatError,
    LabelError,
    ShapeError,
    TagError,
    ValidationError,
)
from .source_model import CharLmConfig, load_checkpoint, save_checkpoint
from .training import (
    ExperimentConfig,
    SourceConfig,
    entity_prf,
    export_ban_embeddings,
    run_experiment,
    save_target_model,
    train_source_model,
)
from .transfer import check_transfer_table, load_transfer_cache, save_transfer_cache

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_IO = 2
EXIT_DATA = 3

CONFIG_ENV = "BACKATTN_CONFIG"

log = logging.getLogger(__name__)


def attention_mode(text: str):
    """Parse --attention values: first | last | ave | layer number."""
    lowered = text.lower()
    if lowered in ("first", "last"):
        return lowered
    if lowered in ("ave", "average"):
        return attention.AVERAGE
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"{text!r} is not one of first/last/ave or a layer number") from None


def layer_range(text: str):
    """Parse --layers values of the form A..B (inclusive)."""
    first, sep, last = text.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError("expected a range like 1..3")
    try:
        lo, hi = int(first), int(last)
    except ValueError:
        raise argparse.ArgumentTypeError("expected integer endpoints") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad layer range {text!r}")
    return (lo, hi)


def _resolve(args, defaults: dict) -> dict:
    """defaults < config file < explicit flags; echo the result."""
    resolved = dict(defaults)
    path = args.config or os.environ.get(CONFIG_ENV)
    if path:
        with open(path, "r", encoding="utf-8") as handle:
            try:
                file_values = json.load(handle)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}: not a JSON config ({exc})") from None
        for key, value in file_values.items():
            if key in resolved:
                resolved[key] = value
    for key in resolved:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            resolved[key] = flag_value
    printable = {k: (str(v) if not isinstance(v, (int, float, bool, str, list, type(None))) else v)
                 for k, v in resolved.items()}
    print("resolved config:", json.dumps(printable, sort_keys=True))
    return resolved


def _read_corpus(path, scheme: Scheme):
    with open(path, "r", encoding="utf-8") as handle:
        corpus = parse_conll(handle.read(), scheme)
    if scheme is Scheme.BIO:
        corpus = convert_scheme(corpus, Scheme.BIOES)
        log.info("%s: converted %d sentences from BIO to BIOES", path, len(corpus))
    return corpus


# ------------------------------------------------------------ subcommands

def cmd_train_source(args) -> int:
    settings = _resolve(args, {
        "scheme": "BIOES", "seed": 0, "epochs": 15, "learning_rate": 0.1,
        "hidden_size": 16, "static_dim": 16, "batch_size": 8,
        "charlm_hidden": 32, "charlm_epochs": 5, "charlm_lr": 0.2,
    })
    corpus = _read_corpus(args.corpus, Scheme(settings["scheme"]))
    with open(args.charlm_text, "r", encoding="utf-8") as handle:
        text = handle.read()
    config = SourceConfig(
        charlm=CharLmConfig(hidden_size=settings["charlm_hidden"],
                            epochs=settings["charlm_epochs"],
                            learning_rate=settings["charlm_lr"],
                            seed=settings["seed"]),
        hidden_size=settings["hidden_size"], static_dim=settings["static_dim"],
        epochs=settings["epochs"], learning_rate=settings["learning_rate"],
        batch_size=settings["batch_size"], seed=settings["seed"])
    model, curve = train_source_model(corpus, text, config)
    save_checkpoint(model, args.out)
    print(f"wrote frozen checkpoint {args.out} "
          f"(final train loss {curve[-1]['loss']:.4f})")
    return EXIT_OK


def _experiment_config(settings) -> ExperimentConfig:
    config = ExperimentConfig(
        learning_rate=settings["learning_rate"], epochs=settings["epochs"],
        hidden_size=settings["hidden_size"], embed_dim=settings["embed_dim"],
        batch_size=settings["batch_size"],
        attention_mode=settings["attention"],
        renormalize=settings["renormalize"],
        seeds=tuple(range(1, settings["seed_count"] + 1)),
        transfer_enabled=not settings["no_transfer"],
        embedding_only=settings["embedding_only"],
        min_count=settings["min_count"])
    if settings["full_scale"]:
        config = config.full_scale()
    return config


_TRAIN_DEFAULTS = {
    "scheme": "BIOES", "attention": attention.AVERAGE, "renormalize": True,
    "no_transfer": False, "embedding_only": False, "seed_count": 5,
    "epochs": 30, "learning_rate": 0.1, "hidden_size": 32, "embed_dim": 32,
    "batch_size": 8, "min_count": 1, "full_scale": False,
}


def _load_experiment_inputs(args, settings):
    scheme = Scheme(settings["scheme"])
    corpora = {
        "train": _read_corpus(args.train, scheme),
        "dev": _read_corpus(args.dev, scheme),
        "test": _read_corpus(args.test, scheme),
    }
    alignments = load_alignments(args.alignments) if args.alignments else []
    source = load_checkpoint(args.source) if args.source else None
    return corpora, alignments, source


def _run_one(config, corpora, alignments, source, args):
    fixed_inputs = None
    if config.embedding_only and getattr(args, "positional_embeddings", None):
        records = load_positional_embeddings(args.positional_embeddings)
        by_tokens = {tokens: matrix for tokens, matrix in records}
        fixed_inputs = {}
        for name, corpus in corpora.items():
            inputs = []
            for index, sentence in enumerate(corpus.sentences):
                matrix = by_tokens.get(tuple(sentence.tokens))
                if matrix is None:
                    raise DataConsistencyError(
                        f"{name} sentence {index} has no embedding record",
                        sentence_index=index)
                if matrix.shape[0] != len(sentence):
                    raise DataConsistencyError(
                        f"{name} sentence {index}: {matrix.shape[0]} vectors for "
                        f"{len(sentence)} tokens", sentence_index=index)
                inputs.append(matrix)
            fixed_inputs[name] = inputs
    return run_experiment(config, corpora["train"], corpora["dev"], corpora["test"],
                          alignments=alignments, source=source,
                          fixed_inputs=fixed_inputs)


def cmd_train(args) -> int:
    settings = _resolve(args, _TRAIN_DEFAULTS)
    config = _experiment_config(settings)
    corpora, alignments, source = _load_experiment_inputs(args, settings)
    if (config.transfer_enabled or config.embedding_only) and source is None \
            and not getattr(args, "positional_embeddings", None):
        raise DataConsistencyError("transfer requires --source (or --no-transfer)")

    if args.load_transfer_cache:
        table = load_transfer_cache(args.load_transfer_cache)
        check_transfer_table(corpora["train"], table)

    report = _run_one(config, corpora, alignments, source, args)

    if args.save_transfer_cache and config.transfer_enabled and source is not None:
        from .transfer import build_transfer_table

        table = build_transfer_table(corpora["train"], alignments,
                                     config.attention_mode, source,
                                     config.renormalize)
        save_transfer_cache(table, args.save_transfer_cache,
                            config.attention_mode, config.renormalize)

    payload = json.dumps(report.to_dict(), sort_keys=True)
    if args.report_out:
        with open(args.report_out, "w", encoding="utf-8") as handle:
            handle.write(payload + "\n")
    else:
        print(payload)
    if args.checkpoint_dir:
        os.makedirs(args.checkpoint_dir, exist_ok=True)
        for result in report.per_seed:
            path = os.path.join(args.checkpoint_dir, f"model.seed{result.seed}.json")
            save_target_model(result.model, path)
    print(f"mean test f1: {report.mean['f1']:.4f}")
    return EXIT_OK


def cmd_sweep_layers(args) -> int:
    settings = _resolve(args, {**_TRAIN_DEFAULTS, "layers": (1, 3)})
    lo, hi = settings["layers"] if isinstance(settings["layers"], tuple) \
        else layer_range(settings["layers"])
    corpora, alignments, source = _load_experiment_inputs(args, settings)
    if not alignments:
        raise DataConsistencyError("layer sweep requires --alignments")
    depth = min(pair.attention.depth for pair in alignments)
    if hi > depth:
        raise DataConsistencyError(f"requested layer {hi} exceeds stack depth {depth}")

    rows = []
    for mode in [*range(lo, hi + 1), attention.AVERAGE]:
        config = _experiment_config({**settings, "attention": mode})
        report = _run_one(config, corpora, alignments, source, args)
        f1s = [r.f1 for r in report.per_seed]
        label = "ave" if mode == attention.AVERAGE else str(mode)
        rows.append((label, float(np.mean(f1s)), float(np.std(f1s))))
        log.info("layer %s: f1 %.4f +- %.4f", label, rows[-1][1], rows[-1][2])

    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["layer", "f1_mean", "f1_std"])
        for label, mean, std in rows:
            writer.writerow([label, repr(mean), repr(std)])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    settings = _resolve(args, {"module": "all", "configs": 20, "seed": 0})
    names = list(gradcheck.SUITES) if settings["module"] == "all" else [settings["module"]]
    failed = False
    for name in names:
        result = gradcheck.run_suite(name, n_configs=settings["configs"],
                                     seed=settings["seed"],
                                     inject_error=args.inject_error)
        print(result)
        failed = failed or not result.passed
    return EXIT_VERIFICATION if failed else EXIT_OK


def cmd_export_embeddings(args) -> int:
    settings = _resolve(args, {"scheme": "BIOES", "attention": attention.AVERAGE,
                               "renormalize": True})
    corpus = _read_corpus(args.corpus, Scheme(settings["scheme"]))
    alignments = load_alignments(args.alignments)
    source = load_checkpoint(args.source)
    records = export_ban_embeddings(corpus, alignments, source,
                                    settings["attention"], settings["renormalize"])
    save_positional_embeddings(records, args.out)
    print(f"wrote {len(records)} sentence records to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    settings = _resolve(args, {"scheme": "BIOES"})
    scheme = Scheme(settings["scheme"])
    with open(args.gold, "r", encoding="utf-8") as handle:
        gold = parse_conll(handle.read(), scheme)
    with open(args.pred, "r", encoding="utf-8") as handle:
        pred = parse_conll(handle.read(), scheme)
    for name, corpus in (("gold", gold), ("pred", pred)):
        if not is_strictly_valid(corpus):
            raise TagError(
                f"{name} file is not strictly valid {scheme.value}; "
                f"convert schemes explicitly instead of relying on repair")
    if len(gold) != len(pred) or any(len(a) != len(b) for a, b in
                                     zip(gold.sentences, pred.sentences)):
        raise DataConsistencyError("gold and prediction files differ in shape")
    metrics = entity_prf([list(s.tags) for s in gold.sentences],
                         [list(s.tags) for s in pred.sentences])
    print(json.dumps(metrics, sort_keys=True))
    return EXIT_OK


# ----------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="backattn",
        description="Cross-lingual tagging with back-attention knowledge transfer")
    parser.add_argument("--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help=f"JSON config file (or ${CONFIG_ENV})")

    p = sub.add_parser("train-source", help="train and freeze the source tagger")
    add_common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--charlm-text", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scheme", choices=["BIO", "BIOES"])
    for name in ("seed", "epochs", "hidden-size", "static-dim", "batch-size",
                 "charlm-hidden", "charlm-epochs"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--charlm-lr", type=float)
    p.set_defaults(run=cmd_train_source)

    def add_experiment_flags(p, with_attention=True):
        add_common(p)
        p.add_argument("--train", required=True)
        p.add_argument("--dev", required=True)
        p.add_argument("--test", required=True)
        p.add_argument("--alignments")
        p.add_argument("--source", help="frozen source checkpoint")
        p.add_argument("--scheme", choices=["BIO", "BIOES"])
        if with_attention:
            p.add_argument("--attention", type=attention_mode,
                           help="first, last, ave, or a layer number")
        p.add_argument("--renormalize", dest="renormalize", action="store_true",
                       default=None)
        p.add_argument("--no-renormalize", dest="renormalize", action="store_false")
        p.add_argument("--no-transfer", action="store_true", default=None)
        p.add_argument("--embedding-only", action="store_true", default=None)
        p.add_argument("--positional-embeddings",
                       help="embedding-only inputs from an exported file")
        p.add_argument("--full-scale", action="store_true", default=None,
                       help="reference hyperparameters: hidden 256, 150 epochs")
        for name in ("seed-count", "epochs", "hidden-size", "embed-dim",
                     "batch-size", "min-count"):
            p.add_argument(f"--{name}", type=int)
        p.add_argument("--learning-rate", type=float)

    p = sub.add_parser("train", help="train the target tagger over several seeds")
    add_experiment_flags(p)
    p.add_argument("--report-out")
    p.add_argument("--checkpoint-dir")
    p.add_argument("--save-transfer-cache")
    p.add_argument("--load-transfer-cache")
    p.set_defaults(run=cmd_train)

    p = sub.add_parser("sweep-layers", help="per-attention-layer F1 sweep (CSV)")
    add_experiment_flags(p, with_attention=False)
    p.add_argument("--layers", type=layer_range, help="range like 1..3")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(run=cmd_sweep_layers)

    p = sub.add_parser("gradcheck", help="finite-difference verification")
    add_common(p)
    p.add_argument("--module", choices=["lstm", "crf", "full", "all"])
    p.add_argument("--configs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--inject-error", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(run=cmd_gradcheck)

    p = sub.add_parser("export-embeddings", help="transferred vectors as embeddings")
    add_common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--alignments", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scheme", choices=["BIO", "BIOES"])
    p.add_argument("--attention", type=attention_mode)
    p.add_argument("--no-renormalize", dest="renormalize", action="store_false",
                   default=None)
    p.set_defaults(run=cmd_export_embeddings)

    p = sub.add_parser("eval", help="score predictions against gold")
    add_common(p)
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--scheme", choices=["BIO", "BIOES"])
    p.set_defaults(run=cmd_eval)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.run(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FormatError, TagError, ValidationError, ShapeError, LabelError,
            DataConsistencyError) as exc:
        index = getattr(exc, "sentence_index", None)
        suffix = f" (sentence {index})" if index is not None else ""
        print(f"error: {exc}{suffix}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
