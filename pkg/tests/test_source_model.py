import numpy as np
import pytest

from backattn.corpus import LabeledCorpus, LabeledSentence, Scheme
from backattn.numerics import new_rng
from backattn.seqmodel import bilstm_encode
from backattn.source_model import (
    CharLmConfig,
    charlm_embed,
    charlm_nll,
    english_hidden_states,
    init_charlm,
    load_checkpoint,
    save_checkpoint,
    source_embed,
    train_charlm,
)
from backattn.training import SourceConfig, train_source_model

TOY_TEXT = "\n".join(
    [
        "the cat sat on the mat",
        "the dog sat on the log",
        "a cat and a dog met",
        "the mat was flat",
        "dogs chase cats",
    ]
    * 4
)


def toy_corpus():
    rows = [
        (("john", "went", "home"), ("S-PER", "O", "O")),
        (("mary", "saw", "john"), ("S-PER", "O", "S-PER")),
        (("paris", "is", "big"), ("S-LOC", "O", "O")),
        (("john", "likes", "paris"), ("S-PER", "O", "S-LOC")),
    ]
    return LabeledCorpus(
        tuple(LabeledSentence(t, g) for t, g in rows), Scheme.BIOES
    )


@pytest.fixture(scope="module")
def tiny_source_model():
    config = SourceConfig(
        charlm=CharLmConfig(hidden_size=8, epochs=2),
        hidden_size=6, static_dim=4, epochs=3, seed=3,
    )
    model, curve = train_source_model(toy_corpus(), TOY_TEXT, config)
    return model


def test_charlm_embedding_shape_and_determinism():
    params = init_charlm(TOY_TEXT, CharLmConfig(hidden_size=8))
    tokens = ["the", "cat"]
    out1 = charlm_embed(tokens, params)
    out2 = charlm_embed(tokens, params)
    assert out1.shape == (2, 16)
    assert np.array_equal(out1, out2)


def test_charlm_unknown_characters_do_not_raise():
    params = init_charlm(TOY_TEXT, CharLmConfig(hidden_size=8))
    out = charlm_embed(["zebra", "été"], params)
    assert out.shape == (2, 16)
    assert np.all(np.isfinite(out))


def test_charlm_forward_half_causality():
    # perturbing characters after a word's trailing boundary leaves its
    # forward half unchanged; symmetrically for the backward half
    params = init_charlm(TOY_TEXT, CharLmConfig(hidden_size=8))
    h = params.hidden_size
    base = charlm_embed(["cat", "sat"], params)
    changed_tail = charlm_embed(["cat", "dog"], params)
    assert np.array_equal(base[0, :h], changed_tail[0, :h])
    changed_head = charlm_embed(["dog", "sat"], params)
    assert np.array_equal(base[1, h:], changed_head[1, h:])


def test_charlm_training_reduces_loss():
    config = CharLmConfig(hidden_size=8, epochs=6, seed=1)
    params, losses = train_charlm(TOY_TEXT, config)
    assert len(losses) == 6
    assert losses[5] < losses[0]


def test_charlm_degenerate_alphabet_entropy_goes_to_zero():
    # every next character is determined by the current one, so the
    # achievable cross-entropy is exactly zero
    text = "\n".join(["a"] * 40)
    params, losses = train_charlm(text, CharLmConfig(hidden_size=4, epochs=30,
                                                     learning_rate=0.5, seed=0))
    assert charlm_nll(params, text) < 0.05
    assert losses[-1] < losses[0]


def test_charlm_training_deterministic():
    config = CharLmConfig(hidden_size=6, epochs=2, seed=9)
    p1, l1 = train_charlm(TOY_TEXT, config)
    p2, l2 = train_charlm(TOY_TEXT, config)
    assert l1 == l2
    for (_, a), (_, b) in zip(p1.tensors(), p2.tensors()):
        assert np.array_equal(a, b)


def test_contextual_embedding_differs_by_context():
    params, _ = train_charlm(TOY_TEXT, CharLmConfig(hidden_size=8, epochs=5, seed=2))
    in_context_a = charlm_embed(["the", "cat", "sat"], params)[1]
    in_context_b = charlm_embed(["a", "cat", "meowed"], params)[1]
    assert not np.allclose(in_context_a, in_context_b)


def test_source_embed_concatenates_both_halves(tiny_source_model):
    model = tiny_source_model
    tokens = ["john", "went"]
    out = source_embed(tokens, model)
    assert out.shape == (2, model.charlm.embed_dim + model.static_table.dim)
    contextual = charlm_embed(tokens, model.charlm)
    assert np.array_equal(out[:, : model.charlm.embed_dim], contextual)
    assert np.array_equal(out[0, model.charlm.embed_dim:],
                          model.static_table.lookup("john"))


def test_hidden_states_shape_and_definition(tiny_source_model):
    model = tiny_source_model
    tokens = ["mary", "saw", "john"]
    R = english_hidden_states(tokens, model)
    assert R.shape == (3, model.state_dim)
    direct = bilstm_encode(source_embed(tokens, model), model.fwd, model.bwd,
                           model.gate_mode)
    assert np.array_equal(R, direct)
    assert np.array_equal(R, english_hidden_states(tokens, model))


def test_frozen_model_rejects_writes(tiny_source_model):
    with pytest.raises(ValueError):
        tiny_source_model.fwd.W_i[0, 0] = 1.0


def test_unfrozen_model_refuses_to_emit_states():
    params = init_charlm(TOY_TEXT, CharLmConfig(hidden_size=4))
    from backattn.corpus import build_vocab, random_embeddings
    from backattn.crf import CrfParams
    from backattn.seqmodel import LstmParams
    from backattn.source_model import FrozenNerModel

    rng = new_rng(0)
    vocab = build_vocab(toy_corpus(), 1)
    model = FrozenNerModel(
        params, random_embeddings(vocab, 4, rng),
        LstmParams.init(rng, 12, 3), LstmParams.init(rng, 12, 3),
        CrfParams.zeros(("O",), 6),
    )
    with pytest.raises(ValueError):
        english_hidden_states(["john"], model)


def test_checkpoint_roundtrip(tmp_path, tiny_source_model):
    path = tmp_path / "model.json"
    save_checkpoint(tiny_source_model, path)
    loaded = load_checkpoint(path)
    assert loaded.frozen
    tokens = ["paris", "is", "big"]
    assert np.array_equal(
        english_hidden_states(tokens, loaded),
        english_hidden_states(tokens, tiny_source_model),
    )
    # saving the loaded model reproduces the file byte for byte
    path2 = tmp_path / "model2.json"
    save_checkpoint(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_source_training_deterministic(tmp_path):
    config = SourceConfig(charlm=CharLmConfig(hidden_size=4, epochs=1),
                          hidden_size=4, static_dim=3, epochs=2, seed=5)
    m1, _ = train_source_model(toy_corpus(), TOY_TEXT, config)
    m2, _ = train_source_model(toy_corpus(), TOY_TEXT, config)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_checkpoint(m1, p1)
    save_checkpoint(m2, p2)
    assert p1.read_bytes() == p2.read_bytes()
