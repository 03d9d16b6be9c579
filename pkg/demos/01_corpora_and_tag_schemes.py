#!/usr/bin/env python3
"""Corpus handling: CoNLL parsing, BIO/BIOES conversion, span extraction.

Run: python3 demos/01_corpora_and_tag_schemes.py
"""

from backattn.corpus import (
    Scheme,
    build_vocab,
    convert_scheme,
    parse_conll,
    serialize_conll,
    spans_from_tags,
)

CONLL = """\
john B-PER
smith I-PER
visited O
paris B-LOC
. O

mary B-PER
stayed O
home O
"""

corpus = parse_conll(CONLL, Scheme.BIO)
print(f"parsed {len(corpus)} sentences (scheme {corpus.scheme.value})")
for sentence in corpus:
    print(" ", list(zip(sentence.tokens, sentence.tags)))

print("\nBIO -> BIOES keeps the same entity spans with richer markers:")
bioes = convert_scheme(corpus, Scheme.BIOES)
for before, after in zip(corpus, bioes):
    print(" ", list(before.tags), "->", list(after.tags))

print("\nspans are identical in both encodings:")
for a, b in zip(corpus, bioes):
    print(" ", spans_from_tags(a.tags, Scheme.BIO),
          "==", spans_from_tags(b.tags, Scheme.BIOES))

print("\nthe repair rule turns orphan continuations into new spans:")
print("  [I-PER, O] ->", spans_from_tags(["I-PER", "O"], Scheme.BIO))
print("  [B-PER, I-LOC] ->", spans_from_tags(["B-PER", "I-LOC"], Scheme.BIO))

print("\nround trip BIOES -> BIO reproduces the normalized input:")
back = convert_scheme(bioes, Scheme.BIO)
print("  identical:", all(x.tags == y.tags for x, y in zip(corpus, back)))

vocab = build_vocab(corpus, min_count=1)
print(f"\nvocabulary of {len(vocab)} entries (padding + unknown + tokens):")
print(" ", vocab.index_to_token)

print("\nserialization round trip is byte-exact for well-formed files:")
print("  identical:", serialize_conll(corpus) == CONLL)
