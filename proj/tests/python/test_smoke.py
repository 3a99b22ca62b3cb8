import json
import os
from pathlib import Path

import numpy as np
import pytest

import acc_toolkit as acc

DATA = Path(os.environ.get("ACC_TEST_DATA", Path(__file__).resolve().parents[1] / "data"))
FIXTURE = DATA / "fixture_trajectories.jsonl"


def fixture_lines():
    return [l for l in FIXTURE.read_text().splitlines() if l.strip()]


def test_prng():
    assert acc.splitmix64(0, 1) == [0xE220A8397B1DCDAF]
    assert sorted(acc.permute(10, 7)) == list(range(1, 11))


def test_compile_trajectory():
    line = fixture_lines()[0]
    rec = acc.compile_trajectory(json.loads(line), seed=42)
    assert rec["answer"] == "Les Tzars"
    assert rec["token_count"] <= acc.DEFAULT_TOKEN_BUDGET
    assert sorted(rec["provenance"]["permutation"]) == list(range(1, len(rec["provenance"]["pieces_included"]) + 1))
    assert acc.compile_trajectory(line, seed=42) == rec


def test_budget_error():
    with pytest.raises(acc.AccError) as info:
        acc.compile_record(fixture_lines()[0], budget=10)
    assert info.value.code == "BudgetExceeded"


def test_run_compile(tmp_path):
    records, failures, warnings = acc.run_compile(str(FIXTURE), str(tmp_path), seed=42)
    assert (records, failures, warnings) == (12, 0, 0)
    assert (tmp_path / "manifest.json").exists()


def test_masks_and_losses():
    parts = [("question", 0, 3), ("reasoning", 1, 2), ("action", 1, 1), ("observation", 1, 4),
             ("final_reasoning", 0, 2), ("answer", 0, 1)]
    mask = acc.agent_mask(parts)
    assert mask.tolist() == [0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1, 1, 1]
    local, final = acc.loss_terms(parts, [1.0] * 13)
    assert local == [3.0] and final == 3.0
    compiled = [("question", 0, 2), ("context", 0, 5), ("final_reasoning", 0, 2), ("answer", 0, 1)]
    assert acc.acc_mask(compiled).sum() == 3
    with pytest.raises(acc.AccError):
        acc.agent_mask(compiled)


def test_verification():
    assert acc.verify_answer("les tzars.", "Les Tzars", "Search")
    assert acc.verify_answer("350.5", "350.50", "SQL")
    assert not acc.verify_answer("Rhine", "the Danube", "Search")
    assert acc.extract_answer("thinking\nAnswer: x") == ("thinking", "x")


def test_attention_bins():
    T = 16
    m = np.tril(np.ones((T, T), dtype=np.float32))
    m /= m.sum(axis=1, keepdims=True)
    means = acc.head_bin_means(m, 4)
    assert len(means) == 4 and all(v is not None for v in means)
    with pytest.raises(acc.AccError):
        acc.head_bin_means(m.T.copy(), 4)


def test_expert_frequencies():
    rng = np.random.default_rng(0)
    sel = np.stack([np.stack([rng.permutation(8)[:2] for _ in range(40)]) for _ in range(3)]).astype(np.uint16)
    f = acc.expert_frequencies(sel, 8, 4)
    assert f.shape == (3, 8, 4)
    assert np.allclose(f.sum(axis=1), 2.0)


def test_decontam():
    q = acc.extract_question("Question: Which river?\n\nDocuments:\n[Doc A] text")
    assert q == "Which river?"
    a = np.eye(3)
    assert acc.avg_nn_cosine(a, a) == pytest.approx(1.0)
    assert acc.centroid_cosine_distance([[1.0, 0.0]], [[0.5, 3 ** 0.5 / 2]]) == pytest.approx(0.5)
    assert acc.auc([0.1, 0.9, 0.4, 0.8], [0, 1, 0, 1]) == 1.0
    v = np.array(acc.trigram_embedding("Which river flows through Vienna?"))
    assert v.shape == (256,) and np.linalg.norm(v) == pytest.approx(1.0)
