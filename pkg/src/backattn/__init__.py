"""Back-attention knowledge transfer for cross-lingual sequence labeling.

A frozen high-resource tagger's BiLSTM states are carried into a
low-resource BiLSTM-CRF tagger through translation-attention matrices:
T = A @ R, one transferred vector per source token.
"""

__version__ = "0.1.0"
