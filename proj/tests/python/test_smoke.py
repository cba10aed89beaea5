import math

import pytest

import david


def test_metric_functions():
    assert david.micro_f1([1, 2, 0], [1, 2, 0]) == 1.0
    assert david.micro_f1([0, 0, 0], [1, 2, 0]) == 0.0
    # 3 gold, 2 predicted, 1 correct -> P=1/2, R=1/3, F1=0.4
    assert david.micro_f1([1, 0, 0, 2], [1, 1, 1, 0]) == pytest.approx(0.4)
    assert david.anls("total", "total") == 1.0
    assert david.anls("12.5O", "12.50") == pytest.approx(0.8)
    assert david.anls("abc", "xyz") == 0.0
    assert david.edit_distance("kitten", "sitting") == 3
    assert david.jaccard("a b", "b a") == 1.0
    assert david.corruption_probability(2.0) == pytest.approx(0.0455, abs=5e-4)
    assert david.derive_seed(1, "x") != david.derive_seed(1, "y")


def test_pipeline(tmp_path):
    corpus = str(tmp_path / "corpus.jsonl")
    assert david.gen_corpus(corpus, n=12, kind="form", seed=3) == 12

    annotated = str(tmp_path / "annotated.jsonl")
    rep = david.annotate(corpus, annotated, n=6, g=3, i=3, seed=3)
    assert rep["annotated"] == 6
    assert 0.0 < rep["mean_iou"] < 1.0

    run = str(tmp_path / "run")
    adapted = david.adapt(
        annotated, run, epochs=1, hidden=32, layers=1, heads=2, seed=3
    )
    assert adapted["stage"] == "F_n"

    tuned = david.finetune(adapted["adapted"], annotated, run, ratio=1.0, epochs=1, seed=3)
    assert tuned["stage"] == "F_nt"

    preds = str(tmp_path / "predictions.jsonl")
    inf = david.infer(tuned["checkpoint"], annotated, preds)
    assert inf["tokens"] > 0 and inf["queries"] > 0

    metrics = david.evaluate(annotated, predictions=preds)
    for key in ("micro_f1", "retrieval_accuracy", "anls"):
        assert 0.0 <= metrics[key] <= 1.0
    assert metrics["n_samples"] > 0
    assert not math.isnan(metrics["micro_f1"])
