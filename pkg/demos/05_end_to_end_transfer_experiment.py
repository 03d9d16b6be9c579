#!/usr/bin/env python3
"""End-to-end comparison on the synthetic bilingual corpus: a plain
BiLSTM-CRF baseline against the same tagger fed transferred knowledge
from a frozen source-language model.

Most entity surface forms in the test split never occur in the tiny
training split, so the baseline has little to go on; the transferred
source-model states carry the entity identity across the alignment.

Run: python3 demos/05_end_to_end_transfer_experiment.py   (about a minute)
"""

from backattn.attention import AVERAGE
from backattn.source_model import CharLmConfig
from backattn.synthetic import make_dataset
from backattn.training import (
    ExperimentConfig,
    SourceConfig,
    run_experiment,
    train_source_model,
)

print("generating synthetic bilingual corpus ...")
data = make_dataset(seed=0, n_source=120, n_train=50, n_dev=30, n_test=150)
print(f"  train {len(data.train)} / dev {len(data.dev)} / test {len(data.test)} "
      f"sentences, {len(data.alignments)} aligned pairs")

print("training the source tagger (then frozen) ...")
source_config = SourceConfig(charlm=CharLmConfig(hidden_size=16, epochs=2),
                             hidden_size=16, static_dim=16, epochs=25,
                             learning_rate=0.5, seed=0)
source, curve = train_source_model(data.source_corpus, data.charlm_text,
                                   source_config)
print(f"  final source train loss {curve[-1]['loss']:.3f}")

shared = dict(hidden_size=8, embed_dim=16, epochs=40, learning_rate=0.3,
              seeds=(1, 2, 3))

print("training the baseline tagger (3 seeds) ...")
baseline = run_experiment(ExperimentConfig(transfer_enabled=False, **shared),
                          data.train, data.dev, data.test)

print("training the transfer-augmented tagger (3 seeds) ...")
transfer = run_experiment(
    ExperimentConfig(transfer_enabled=True, attention_mode=AVERAGE, **shared),
    data.train, data.dev, data.test,
    alignments=data.alignments, source=source)

print(f"\n{'model':<22}{'P':>8}{'R':>8}{'F1':>8}")
for name, report in (("baseline", baseline), ("with transfer", transfer)):
    mean = report.mean
    print(f"{name:<22}{mean['precision']:>8.3f}{mean['recall']:>8.3f}{mean['f1']:>8.3f}")
print(f"\nper-seed F1, baseline: {[round(r.f1, 3) for r in baseline.per_seed]}")
print(f"per-seed F1, transfer: {[round(r.f1, 3) for r in transfer.per_seed]}")
print(f"mean improvement: {100 * (transfer.mean['f1'] - baseline.mean['f1']):.1f} points")
