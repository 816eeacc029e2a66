import json
import time
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from airts import cli
from airts.backtest import TrainingDivergence
from airts.refinery import BackendError

FIXTURE = Path(__file__).parent / "fixtures" / "news_30.jsonl"
REFINERY_GOLDEN = Path(__file__).parent / "golden" / "refinery"

TINY = {
    "dataset": {"synthetic": {"length": 180, "start_date": "2021-08-02", "embedding_dim": 8, "channels": 4,
                              "targets": 2, "seed": 3}},
    "model": {"latent": 4, "codebook_size": 4, "generator_hidden": 8, "description_proj": 4},
    "training": {"lr": 1e-3, "max_epochs": 2, "seeds": [0]},
    "backtest": {"start": "2022-W01", "years": 1, "points": 2, "workers": 1,
                 "models": ["vanilla-tsmixer", "air-tsmixer"]},
}
REFINE = {"refinery": {"embedding_dim": 16,
                       "domain": {"subject": "crude oil", "description": "crude oil market",
                                  "targets": {"WTI": "West Texas Intermediate Crude Oil Price",
                                              "Brent": "Europe Brent Crude Oil Price"}}}}


def write_config(tmp_path, cfg, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


# ----------------------------------------------------------------- generate

def test_generate_default_writes_four_files(tmp_path, capsys):
    assert cli.main(["generate", "--out", str(tmp_path / "a")]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == ["descriptions.jsonl", "keydriver_emb.jsonl", "outlook_emb.jsonl", "series.csv"]
    assert len(capsys.readouterr().out.strip().splitlines()) == 4


def test_generate_is_reproducible(tmp_path):
    cfg = write_config(tmp_path, {"dataset": {"synthetic": {"length": 300, "seed": 5}}})
    for d in ("a", "b"):
        assert cli.main(["generate", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_generate_regimes_above_dim_is_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {"dataset": {"synthetic": {"regimes": 9, "embedding_dim": 8}}})
    assert cli.main(["generate", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "embedding_dim" in capsys.readouterr().err


def test_generated_files_load_back_as_paths_dataset(tmp_path):
    assert cli.main(["generate", "--config", write_config(tmp_path, TINY), "--out", str(tmp_path / "d")]) == 0
    d = tmp_path / "d"
    cfg = dict(TINY, dataset={"paths": {"series": str(d / "series.csv"), "targets": ["ch0", "ch1"],
                                        "key_driver": str(d / "keydriver_emb.jsonl"),
                                        "outlook": str(d / "outlook_emb.jsonl"),
                                        "descriptions": str(d / "descriptions.jsonl")}})
    cfg["backtest"] = dict(TINY["backtest"], points=1)
    assert cli.main(["backtest", "--config", write_config(tmp_path, cfg, "p.json"),
                     "--out", str(tmp_path / "r")]) == 0


@pytest.mark.parametrize("bad", [
    {"datasets": {}},
    {"dataset": {"synthetic": {}, "paths": {"series": "x", "targets": []}}},
    {"dataset": {"synthetic": {"colour": 1}}},
    {"model": {"architecture": "tcn"}},
    {"training": {"lr": 1e-3, "warmup": 3}},
    {"backtest": {"start": "2022-W01", "model_overrides": {}}},
    {"refinery": {"chat": {"temperature": 1}}},
])
def test_config_unknown_keys_rejected(tmp_path, bad):
    assert cli.main(["generate", "--config", write_config(tmp_path, bad), "--out", str(tmp_path)]) == 2


def test_config_bad_json_and_missing_file(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert cli.main(["generate", "--config", str(p)]) == 2
    assert cli.main(["generate", "--config", str(tmp_path / "nope.json")]) == 3


# ------------------------------------------------------------------- refine

def test_refine_mock_matches_golden(tmp_path):
    cfg = write_config(tmp_path, REFINE)
    assert cli.main(["refine", "--config", cfg, "--corpus", str(FIXTURE), "--mock", "--out", str(tmp_path / "o")]) == 0
    for name in ("summaries.jsonl", "events.jsonl", "insights.jsonl", "keydriver_emb.jsonl", "outlook_emb.jsonl"):
        assert (tmp_path / "o" / name).read_bytes() == (REFINERY_GOLDEN / name).read_bytes(), name


def test_refine_missing_auth_env(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("AIRTS_TEST_MISSING_TOKEN", raising=False)
    cfg = write_config(tmp_path, {"refinery": {"chat": {"auth_env": "AIRTS_TEST_MISSING_TOKEN"}}})
    assert cli.main(["refine", "--config", cfg, "--corpus", str(FIXTURE), "--out", str(tmp_path)]) == 2
    assert "AIRTS_TEST_MISSING_TOKEN" in capsys.readouterr().err


def test_refine_empty_corpus(tmp_path):
    corpus = tmp_path / "c.jsonl"
    corpus.write_text("")
    assert cli.main(["refine", "--corpus", str(corpus), "--mock", "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "events.jsonl").read_text() == ""


def test_refine_majority_failure_exits_4(tmp_path, monkeypatch):
    class Down:
        max_in_flight = 1

        def complete(self, system, user):
            raise BackendError("offline")
    monkeypatch.setattr(cli, "MockChatBackend", Down)
    monkeypatch.setattr("airts.refinery.pipeline.time.sleep", lambda s: None)
    assert cli.main(["refine", "--corpus", str(FIXTURE), "--mock", "--out", str(tmp_path)]) == 4
    assert (tmp_path / "errors.jsonl").read_text().count("\n") == 30


def test_refine_missing_corpus_is_io_error(tmp_path):
    assert cli.main(["refine", "--corpus", str(tmp_path / "none.jsonl"), "--mock", "--out", str(tmp_path)]) == 3


# ----------------------------------------------------------------- backtest

def test_tiny_backtest_runs_quickly(tmp_path):
    cfg = write_config(tmp_path, TINY)
    t0 = time.monotonic()
    assert cli.main(["backtest", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert time.monotonic() - t0 < 60
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["metadata"]["n_points"] == 2


def test_models_flag_sets_summary_rows(tmp_path):
    cfg = write_config(tmp_path, TINY)
    assert cli.main(["backtest", "--config", cfg, "--models", "vanilla-tcn,air-tcn", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "summary.csv").read_text().strip().splitlines()
    assert [r.split(",")[0] for r in rows[1:]] == ["vanilla-tcn", "air-tcn"]


def test_unknown_model_lists_valid_ids(tmp_path, capsys):
    cfg = write_config(tmp_path, TINY)
    assert cli.main(["backtest", "--config", cfg, "--models", "air-lstm", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "air-lstm" in err and "vanilla-tsmixer" in err and "timemmd-itransformer" in err


def test_backtest_report_bytes_repeat(tmp_path):
    cfg = write_config(tmp_path, TINY)
    for d in ("a", "b"):
        assert cli.main(["backtest", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_divergence_exits_5_and_marks_cells(tmp_path, monkeypatch):
    import airts.backtest.runner as runner
    real = runner.run_training

    def flaky(model, samples, cfg, seed, val_samples=None):
        if model.model_id == "air-tsmixer":
            raise TrainingDivergence(3, "loss became nan")
        return real(model, samples, cfg, seed, val_samples)
    monkeypatch.setattr(runner, "run_training", flaky)
    cfg = write_config(tmp_path, TINY)
    assert cli.main(["backtest", "--config", cfg, "--out", str(tmp_path)]) == 5
    report = json.loads((tmp_path / "report.json").read_text())
    assert {f["model"] for f in report["failed"]} == {"air-tsmixer"}
    assert all(f["epoch"] == 3 for f in report["failed"])
    assert list(report["aggregate"]) == ["vanilla-tsmixer"]


# --------------------------------------------------------------------- plot

@pytest.fixture(scope="module")
def tiny_report(tmp_path_factory):
    d = tmp_path_factory.mktemp("rep")
    cfg = write_config(d, TINY)
    assert cli.main(["backtest", "--config", cfg, "--out", str(d)]) == 0
    return d / "report.json"


def test_plot_writes_svg_per_target(tiny_report, tmp_path):
    origin = json.loads(tiny_report.read_text())["forecasts"][0]["origin"]
    assert cli.main(["plot", "--report", str(tiny_report), "--origin", origin, "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["plot", "--report", str(tiny_report), "--origin", origin, "--out", str(tmp_path / "b")]) == 0
    svgs = sorted((tmp_path / "a").glob("*.svg"))
    assert len(svgs) == 2
    for f in svgs:
        root = ET.fromstring(f.read_text())
        texts = [t.text for t in root.iter("{http://www.w3.org/2000/svg}text")]
        assert "vanilla-tsmixer" in texts and "air-tsmixer" in texts
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_plot_model_subset_and_annotation(tiny_report, tmp_path):
    origin = json.loads(tiny_report.read_text())["forecasts"][0]["origin"]
    ins = tmp_path / "insights.jsonl"
    ins.write_text(json.dumps({"date": origin, "target": "ch0", "outlook": "Supply squeeze ahead"}) + "\n")
    assert cli.main(["plot", "--report", str(tiny_report), "--origin", origin, "--target", "ch0",
                     "--models", "air-tsmixer", "--insights", str(ins), "--out", str(tmp_path)]) == 0
    text = next(tmp_path.glob("*.svg")).read_text()
    assert "air-tsmixer" in text and "vanilla-tsmixer" not in text and "Supply squeeze ahead" in text


def test_plot_unknown_origin(tiny_report, tmp_path, capsys):
    assert cli.main(["plot", "--report", str(tiny_report), "--origin", "1999-01-01", "--out", str(tmp_path)]) == 2
    assert "available origins" in capsys.readouterr().err


# ---------------------------------------------------------------- gradcheck

def test_gradcheck_prints_one_line_per_check(capsys):
    assert cli.main(["gradcheck", "--seed", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    names = [line.split()[0] for line in lines[:-1]]
    for layer in ("RoutedDense", "RoutedConv1d", "RoutedLatentAttention", "RoutingModule", "TimeMMDFusion"):
        assert layer in names
    assert all(line.endswith("ok") for line in lines[:-1])


# -------------------------------------------------------------------- usage

@pytest.mark.parametrize("command,flags", [
    ("generate", ["--config", "--out"]),
    ("refine", ["--config", "--corpus", "--mock", "--out"]),
    ("backtest", ["--config", "--models", "--out"]),
    ("plot", ["--report", "--origin", "--out"]),
    ("gradcheck", ["--seed"]),
])
def test_help_documents_flags(command, flags, capsys):
    with pytest.raises(SystemExit) as info:
        cli.main([command, "--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    assert all(f in out for f in flags)


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as info:
        cli.main(["backtest", "--modles", "x"])
    assert info.value.code == 2
