"""Smoke tests for the python surface."""

import json
import math

import numpy as np
import pytest

import fignet


def test_palette():
    pal = fignet.palette(10)
    assert len(pal) == 10
    assert pal[0]["name"] == "Royal Blue"
    rgbs = {p["rgb"] for p in pal}
    assert len(rgbs) == 10


def test_sample_render_and_targets():
    spec = fignet.sample_figure(palette=8, max_elements=4, seed=11)
    assert 1 <= len(spec.elements) <= 4
    img = fignet.render(spec, palette=8)
    assert img.shape == (128, 128, 3)
    assert img.dtype == np.float32
    assert 0.0 <= img.min() and img.max() <= 1.0

    labels = fignet.spectral_target(spec, 8)
    ranks = fignet.order_target(spec)
    k = len(spec.elements)
    assert labels[:k] == [e.color_id for e in spec.elements]
    assert labels[k:] == [8] * (11 - k)
    assert sorted(ranks[:k]) == list(range(1, k + 1))
    assert ranks[k:] == [0] * (11 - k)


def test_oracle_symmetry():
    spec = fignet.sample_figure(palette=8, min_elements=3, max_elements=5, seed=4)
    a, b = spec.elements[0].color_id, spec.elements[1].color_id
    q1 = fignet.QuestionRecord()
    q1.template_id = "greater_than"
    q1.color1_id, q1.color2_id = a, b
    q2 = fignet.QuestionRecord()
    q2.template_id = "less_than"
    q2.color1_id, q2.color2_id = b, a
    assert fignet.answer_oracle(spec, q1) == fignet.answer_oracle(spec, q2)


def test_questions_match_oracle():
    spec = fignet.sample_figure(palette=8, max_elements=4, seed=9)
    for q in fignet.gen_questions(spec, palette=8, max_elements=4, seed=10):
        assert q.answer == fignet.answer_oracle(spec, q)


def test_primitives_against_numpy():
    rng = np.random.default_rng(0)
    fmap = rng.standard_normal((6, 5, 4))
    scale = rng.standard_normal(4)
    out = fignet.scaling_layer(fmap, scale)
    np.testing.assert_allclose(out, fmap * scale, atol=1e-12)

    kernels = rng.standard_normal((3, 6, 5))
    reduced = fignet.depthwise_reduce(fmap, kernels)
    np.testing.assert_allclose(reduced, np.einsum("mij,ijc->mc", kernels, fmap), atol=1e-9)
    assert reduced.shape == (3, 4)

    with pytest.raises(fignet.ShapeError):
        fignet.depthwise_reduce(fmap, rng.standard_normal((3, 2, 2)))


def test_decoder_rows_are_distributions():
    rep = np.random.default_rng(1).standard_normal(16)
    probs = fignet.decoder_forward(11, 101, rep, param_seed=3)
    assert probs.shape == (11, 101)
    np.testing.assert_allclose(probs.sum(axis=1), np.ones(11), atol=1e-5)
    again = fignet.decoder_forward(11, 101, rep, param_seed=3)
    np.testing.assert_array_equal(probs, again)


def test_corpus_roundtrip_and_training(tmp_path):
    train_dir = tmp_path / "train"
    val_dir = tmp_path / "val"
    n_figs, n_q = fignet.generate_corpus(str(train_dir), 8, palette=5, max_elements=3,
                                         image_size=32, seed=21)
    assert n_figs == 8 and n_q > 0
    fignet.generate_corpus(str(val_dir), 4, palette=5, max_elements=3, image_size=32, seed=22)

    corpus = fignet.read_corpus(str(train_dir))
    assert corpus["palette_size"] == 5
    assert len(corpus["figures"]) == 8
    yes = sum(1 for q in corpus["questions"] if q.answer)
    assert 0 < yes < len(corpus["questions"])

    record = fignet.pretrain(str(train_dir), str(val_dir), "spectral", profile="desk",
                             epochs=2, seed=1, batch=4, micro=4,
                             out_dir=str(tmp_path / "run"))
    assert len(record["epochs"]) == 2
    assert (tmp_path / "run" / "record.json").exists()

    per_element, full_seq = fignet.evaluate_module(record["checkpoint"], "spectral",
                                                   str(val_dir))
    assert 0.0 <= full_seq <= per_element <= 1.0


def test_pretrain_uses_desk_profile_loss_scale(tmp_path):
    # cross-entropy at initialization sits near ln(palette+1)
    train_dir = tmp_path / "t"
    fignet.generate_corpus(str(train_dir), 6, palette=5, max_elements=3, image_size=32, seed=5)
    record = fignet.pretrain(str(train_dir), str(train_dir), "order", profile="desk",
                             epochs=1, seed=2, batch=8, micro=8, out_dir=str(tmp_path / "r"))
    assert record["epochs"][0]["train_loss"] == pytest.approx(math.log(11), rel=0.25)
