#!/usr/bin/env python3
"""Attention weights and the back-transfer step T = A @ R.

A translation decoder attends over source positions; transposing that
attention and multiplying it into the frozen tagger's hidden states
yields one transferred vector per source token, whatever the target
length was.

Run: python3 demos/02_attention_and_back_transfer.py
"""

import numpy as np

from backattn.attention import (
    AVERAGE,
    FIRST,
    LAST,
    AttentionStack,
    attention_weights,
    decoder_summary,
    select_matrix,
    to_source_major,
)
from backattn.numerics import new_rng
from backattn.transfer import back_transfer, fuse

rng = new_rng(42)
np.set_printoptions(precision=3, suppress=True)

# decoder summaries combine the decoder state with the previous output
h = rng.normal(size=4)
g = rng.normal(size=3)
W_d = rng.normal(size=(3, 4))
d = decoder_summary(h, g, W_d, np.zeros(3))
print("decoder summary d = W_d h + b_d + g:", d)

# dot-product attention: n=2 target steps over m=3 source tokens
D = rng.normal(size=(2, 5))
Z = rng.normal(size=(3, 5))
A = attention_weights(D, Z)
print("\nattention (target-major, rows sum to 1):")
print(A, "\nrow sums:", A.sum(axis=1))

# layer selection within a stack
stack = AttentionStack((A, attention_weights(D + 1.0, Z), attention_weights(D - 1.0, Z)))
print("\nfirst layer == layer 1:", np.array_equal(select_matrix(stack, FIRST),
                                                  select_matrix(stack, 1)))
print("average layer:\n", select_matrix(stack, AVERAGE))

# source-major orientation: transpose, then renormalize rows
sm = to_source_major(select_matrix(stack, LAST), renormalize=True)
print("\nsource-major attention (m x n, rows sum to 1):")
print(sm.matrix, "\nrow sums:", sm.matrix.sum(axis=1))

# the transfer step: one transferred vector per source token
R = rng.normal(size=(2, 6))  # frozen-tagger states for the 2 target tokens
T = back_transfer(sm, R)
print("\ntransferred knowledge T = A R, shape", T.matrix.shape)

print("\nidentity alignment returns the states unchanged:",
      np.array_equal(back_transfer(np.eye(2), R).matrix, R))
one_hot = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
print("one-hot rows pick single states:",
      np.array_equal(back_transfer(one_hot, R).matrix, R[[1, 0, 1]]))
uniform = np.full((1, 2), 0.5)
print("uniform rows average the states:",
      np.allclose(back_transfer(uniform, R).matrix[0], R.mean(axis=0)))

# fused representation: target BiLSTM state next to its transferred vector
r_target = rng.normal(size=4)
print("\nfused feature [r ; t] has length", len(fuse(r_target, T.matrix[0])))
