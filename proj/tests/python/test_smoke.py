import json
import math
import pathlib

import pytest

import ssa_augment as ssa

FIXTURE = pathlib.Path(__file__).resolve().parents[2] / "data" / "fixture"


def test_parse_and_normalize():
    g = ssa.parse_penman("(s / sit-01 :ARG1 (b / boat) :location-of (d / dock))")
    assert g["root"] == "s"
    assert g["nodes"] == {"s": "sit-01", "b": "boat", "d": "dock"}
    assert ("d", ":location", "s") in g["edges"]
    assert ssa.normalize_penman("(z0 / sit-01 :ARG1 (z1 / boat))") == "(z0 / sit-01 :ARG1 (z1 / boat))"


def test_errors_map_to_python():
    with pytest.raises(ssa.SsaError):
        ssa.parse_penman("(s / sit-01")
    with pytest.raises(ssa.ConfigError):
        ssa.run_pipeline(FIXTURE / "pipeline.toml", overrides={"nonsense": "1"})


def test_smatch_agrees_with_brute_force():
    a = "(s / sit-01 :ARG1 (b / boat))"
    b = "(s / sit-01 :ARG1 (b / boat) :location (d / dock))"
    r = ssa.smatch(a, b)
    assert r["matched"] == 4
    assert math.isclose(r["f1"], 0.8)
    assert ssa.smatch_brute_force(a, b)["f1"] == r["f1"]


def test_controls_and_metrics():
    assert ssa.coverage([[0, 0, 60, 60], [30, 30, 90, 90]], 100, 100) == 0.63
    assert [ssa.length_level(n) for n in (9, 10, 40)] == ["A", "B", "E"]
    assert ssa.stub_generate("(z0 / sit-01 :ARG1 (z1 / boat))") == "boat sit"
    assert ssa.distinct_ngram_diversity(["a dog runs", "a cat sits"], 1) == pytest.approx(5 / 6)
    assert ssa.self_cider(["a b c", "a b c"]) == pytest.approx(0, abs=1e-6)
    assert ssa.length_metrics([10, 20], ["w " * 12, "w " * 19]) == (1.5, 0.5)
    assert ssa.harmonic_mean([67.3, 64.4, 42.8]) == pytest.approx(55.8, abs=0.05)
    pairs, total = ssa.hungarian([[0.1, 0.9], [0.8, 0.2]])
    assert sorted(pairs) == [(0, 1), (1, 0)] and total == pytest.approx(1.7)
    iou, hal = ssa.content_iou({"dog", "cat"}, {"dog"}, {"dog": [1.0, 0.0], "cat": [0.0, 1.0]})
    assert (iou, hal) == (0.5, 0.5)


def test_pipeline_on_fixture(tmp_path):
    summary = ssa.run_pipeline(FIXTURE / "pipeline.toml", tmp_path / "a")
    again = ssa.run_pipeline(FIXTURE / "pipeline.toml", tmp_path / "b")
    assert summary == again
    assert summary["images"] == 3 and summary["kept"] > 0
    for name in ("original.jsonl", "meta.jsonl", "samples.jsonl", "pairs.jsonl", "mixed.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    report = (tmp_path / "a" / "report.json").read_text()
    table, csv = ssa.render_report(report)
    assert table.splitlines()[0].split()[:3] == ["image", "pairs", "IoU"]
    assert len(csv.strip().splitlines()) == 11
    assert json.loads(report)["_provenance"]["seed"] == 13
