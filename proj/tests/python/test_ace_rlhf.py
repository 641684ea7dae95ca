"""Smoke tests for the ace_rlhf extension module.

ctest puts the built module on PYTHONPATH; a pip-installed wheel works too.
"""

import math
import os
import pathlib
import shutil
import subprocess

import pytest

import ace_rlhf

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "fixtures"


def test_metrics():
    assert ace_rlhf.bleu4("a b c d", "a b c d")["value"] == pytest.approx(1.0)
    r = ace_rlhf.rouge_l("the cat sat", "the cat ran")
    assert r["value"] == pytest.approx(2 / 3)
    cb = ace_rlhf.codebleu("x = 1\nprint(x)", "x = 1\nprint(x)")
    assert cb["value"] == pytest.approx(1.0)
    assert set(cb["components"]) == {"ngram", "weighted_ngram", "syntax", "dataflow"}
    assert ace_rlhf.similarity("rougeL", "a", "a")["value"] == pytest.approx(1.0)
    with pytest.raises(ace_rlhf.AceError):
        ace_rlhf.similarity("nope", "a", "a")


def test_matching():
    r = ace_rlhf.max_weight_match([[0.9, 0.1, 0.0], [0.8, 0.7, 0.0]])
    assert r["tp"] == pytest.approx(1.6)
    assert r["precision"] == pytest.approx(0.8)
    assert r["f1"] == pytest.approx(0.64)
    with pytest.raises(ValueError):
        ace_rlhf.max_weight_match([[1.5]])


def test_corpus_errors(tmp_path):
    c = ace_rlhf.Corpus(FIXTURES / "corpus")
    assert c.problem_ids == ["find-the-bone", "splitting-apples"]
    with pytest.raises(ace_rlhf.ValidationError):
        ace_rlhf.Corpus(tmp_path / "missing")
    assert issubclass(ace_rlhf.ValidationError, ace_rlhf.AceError)


def test_calibration():
    rep = ace_rlhf.ece([(0.4, False), (0.4, True), (0.9, True), (0.9, True)], 2)
    assert rep["ece"] == pytest.approx(0.1)
    assert ace_rlhf.ranking_loss(0.0) == pytest.approx(math.log(2))


def test_reward_train_rerank_calibrate(tmp_path):
    shutil.copytree(FIXTURES / "corpus", tmp_path / "corpus")
    ace = os.environ.get("ACE_CLI")
    if ace:
        subprocess.run([ace, "augment", str(tmp_path / "corpus"), "--per-turn-pairs", "10"], check=True,
                       capture_output=True)
    else:
        pytest.skip("ACE_CLI not set")
    corpus = ace_rlhf.Corpus(tmp_path / "corpus")
    model = ace_rlhf.train_reward(corpus, tmp_path / "corpus" / "preferences", {"epochs": 3})
    assert len(model.training_log) == 3
    model.save(tmp_path / "m.json")
    again = ace_rlhf.RewardModel.load(tmp_path / "m.json")
    text = "What should happen when the bone reaches a hole?"
    assert again.score(corpus, "find-the-bone-1", 1, text) == model.score(corpus, "find-the-bone-1", 1, text)
    r = ace_rlhf.rerank(model, corpus, "find-the-bone-1", 1, [text, text])
    assert r["chosen_index"] == 0
    cal = ace_rlhf.calibrate(model, corpus, tmp_path / "corpus" / "preferences")
    assert 0.0 <= cal["ece"] <= 1.0
    with pytest.raises(ace_rlhf.AceError):
        ace_rlhf.train_reward(corpus, tmp_path / "corpus" / "preferences", {"epoch": 3})


def test_policy_and_presets():
    out = ace_rlhf.train_policy([[1.0, 0.0]], "ppo", {"beta": 0.0})
    assert out["probabilities"][0][0] >= 0.95
    rjs = ace_rlhf.train_policy([[0.0, 1.0, 0.0]], "rjs", {"learning_rate": 1.0, "epochs": 50})
    assert max(rjs["probabilities"][0]) == rjs["probabilities"][0][1]
    assert ace_rlhf.argmax_first([0.2, 0.9, 0.9]) == 1
    p = ace_rlhf.preset("paper")
    assert p["best_of_n"]["n"] == 5 and p["reward_train"]["learning_rate"] == 5e-6
    with pytest.raises(ValueError):
        ace_rlhf.train_policy([[1.0]], "sgd")
