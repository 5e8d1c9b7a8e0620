import json
import math
import pathlib

import pytest

import trollguard as tg

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "fixtures"
GOLDEN = pathlib.Path(__file__).resolve().parents[1] / "golden"


def prego():
    return json.loads((FIXTURES / "prego_sample.json").read_text())


def test_taxonomy_order():
    assert tg.trolling_strategies()[0] == "Aggression"
    assert tg.response_strategies()[:3] == ["Engage", "Ignore", "Expose"]


def test_map_predictions():
    got = [tg.map_predict(ts) for ts in tg.trolling_strategies()]
    assert got == ["Challenge", "Challenge", "Expose", "Engage", "Engage", "Ignore"]
    assert tg.coarse_predict("Endangering") == "Nudging"
    assert tg.self_consistency_accuracy("fine") == pytest.approx(379 / 875)
    assert tg.self_consistency_accuracy("coarse") == pytest.approx(731 / 875)


def test_smoothed_distribution():
    d = tg.preference_distribution("Endangering", alpha=1.0)
    assert d["Expose"] == pytest.approx(25 / 57)
    assert sum(d.values()) == pytest.approx(1.0)


def test_filter():
    assert tg.ingest_filter("a" * 12) == (True, "Ok")
    assert tg.ingest_filter("a" * 11) == (False, "TooShort")
    assert tg.ingest_filter("[deleted]")[0] is False


def test_distances():
    assert tg.jsd([0.5, 0.5], [1, 0]) == pytest.approx(0.5579230452841438, abs=1e-12)
    assert tg.hellinger([1, 0], [0, 1]) == pytest.approx(1.0)
    with pytest.raises(tg.TrollguardError):
        tg.kl([1, 0], [0, 1])
    d = tg.joint_distribution([("Antipathy", "Engage")], "coarse")
    assert d["Covert/Nudging"] == 1.0


def test_statistics():
    r = tg.friedman([[1, 2, 3]] * 10)
    assert r["statistic"] == pytest.approx(20.0)
    assert r["p_value"] == pytest.approx(math.exp(-10))
    assert r["mean_ranks"] == [1.0, 2.0, 3.0]
    w = tg.wilcoxon_signed_rank([1, 2, 3], [0, 0, 0])
    assert w["p_value"] == 0.25
    assert w["method"] == "wilcoxon-exact"
    assert tg.chi2_sf(5.991, 2) == pytest.approx(0.05, abs=1e-4)
    assert tg.format_p(0.0141) == ".014*"


def test_significance_report():
    rows = [[5, 3, 4], [4, 2, 5], [5, 3, 5], [4, 1, 4], [5, 2, 4]]
    text, data = tg.significance_report(["Default", "SP", "Ours"], rows, "constructiveness")
    assert text.startswith("Friedman Test")
    assert len(data["pairwise"]) == 3


def test_prompt_rendering_matches_golden():
    rendered = tg.render_prompt("prs", prego(), prs="Expose")
    assert rendered == (GOLDEN / "prompts" / "prs.txt").read_text()
    assert len(tg.prompt_hash(rendered)) == 64


def test_moderate_with_replay():
    sample = prego()
    classifier = tg.render_prompt("troll_classifier", sample)
    generator = tg.render_prompt("prs", sample, prs="Expose")
    replay = "\n".join(
        json.dumps({"prompt_hash": tg.prompt_hash(p), "reply": r})
        for p, r in [
            (classifier, "Trolling"),
            (generator, "Analysis: misleading.\nResponse: It means you're welcome."),
        ]
    )
    (out,) = tg.moderate([sample], mode="prs", replay_jsonl=replay)
    assert out["prs"] == "Expose"
    assert out["counter_response"] == "It means you're welcome."
    assert out["error"] is None


def test_annotation_store(tmp_path):
    store = tg.AnnotationStore(str(tmp_path), quota=5)
    sample = prego()
    sample["candidates"] = [{"rs": rs, "text": "reply"} for rs in tg.response_strategies()]
    ids = store.create_tasks([sample], "preference")
    assert len(ids) == 1
    task = store.next_task("alice")
    assert task["status"] == "Assigned"
    status = store.submit(
        {"task_id": task["id"], "annotator_id": "alice", "ts_label": "Endangering", "preferred_rs": "Expose"}
    )
    assert status == "Done"
    assert json.loads(store.export("preference"))["preferred_rs"] == "Expose"
    with pytest.raises(tg.TrollguardError):
        store.next_task("alice")
    assert (tmp_path / "annotations.log.jsonl").exists()
