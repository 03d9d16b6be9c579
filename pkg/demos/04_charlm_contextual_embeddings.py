#!/usr/bin/env python3
"""Character-level language model embeddings: the same word gets a
different vector in a different sentence context.

A word's forward half is the forward LM state just after the word's
trailing space; its backward half is the backward LM state just after
the leading space. Perturbing text strictly outside those windows leaves
the corresponding half untouched.

Run: python3 demos/04_charlm_contextual_embeddings.py
"""

import numpy as np

from backattn.source_model import CharLmConfig, charlm_embed, charlm_nll, train_charlm

TEXT = "\n".join([
    "the river bank was muddy",
    "the bank opened at nine",
    "she sat by the river bank",
    "the bank approved the loan",
    "fish swam near the bank",
] * 6)

config = CharLmConfig(hidden_size=16, epochs=8, learning_rate=0.3, seed=0)
params, losses = train_charlm(TEXT, config)
print("per-epoch training loss:", [round(x, 3) for x in losses])
print("held-in cross-entropy:", round(charlm_nll(params, TEXT), 3))

a = charlm_embed(["the", "river", "bank", "was", "muddy"], params)[2]
b = charlm_embed(["the", "bank", "opened", "at", "nine"], params)[1]
print(f"\n'bank' near 'river':  {np.round(a[:4], 3)} ...")
print(f"'bank' near 'opened': {np.round(b[:4], 3)} ...")
print("context changes the vector:", not np.allclose(a, b))

h = params.hidden_size
base = charlm_embed(["the", "bank", "opened"], params)
tail_changed = charlm_embed(["the", "bank", "closed"], params)
print("\nforward half of 'bank' ignores words after its boundary:",
      np.array_equal(base[1, :h], tail_changed[1, :h]))
head_changed = charlm_embed(["a", "bank", "opened"], params)
print("backward half of 'bank' ignores words before its boundary:",
      np.array_equal(base[1, h:], head_changed[1, h:]))
