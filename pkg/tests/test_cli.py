import json
import shutil

import pytest

from emostock import cli, synthetic


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def staged(synthetic_dir, tmp_path):
    """Run ingest -> preprocess -> featurize -> label on the synthetic fixture."""
    F = synthetic_dir
    assert run("ingest", "--tweets", F / "tweets.csv", "--prices", F / "prices_SYNT.csv", "--ticker", "SYNT",
               "--out", tmp_path / "ing") == 0
    assert run("preprocess", "--tweets", tmp_path / "ing/tweets.csv", "--llm-backend", "stub",
               "--stub-rules", F / "stub_rules.json", "--max-in-flight", "4", "--out", tmp_path / "pre") == 0
    assert run("featurize", "--annotated", tmp_path / "pre/annotated.jsonl", "--prices", tmp_path / "ing/prices.csv",
               "--method", "m2", "--enhanced", "--lexicon", F / "lexicon_intensity.txt", "--out",
               tmp_path / "feat") == 0
    assert run("label", "--prices", tmp_path / "ing/prices.csv", "--daily", tmp_path / "feat/daily_emotions.csv",
               "--ticker", "SYNT", "--out", tmp_path / "lab") == 0
    return tmp_path


def test_staged_outputs(staged):
    align = json.loads((staged / "ing/alignment.json").read_text())
    assert align["price_rows"] == 200 and align["rejects"] == 0 and align["non_trading_tweet_days"] > 0
    stats = (staged / "pre/filter_stats.csv").read_text().splitlines()
    assert stats[0] == "ticker,before,after,no_emotion_count,unparseable_count"
    lines = (staged / "pre/annotated.jsonl").read_text().splitlines()
    kept = [json.loads(x) for x in lines if json.loads(x)["kept"]]
    assert len(lines) == int(stats[1].split(",")[1]) and len(kept) == int(stats[1].split(",")[2])
    assert (staged / "feat/daily_emotions.csv").read_text().startswith("date,anger,anticipation")
    header = (staged / "lab/dataset.csv").read_text().splitlines()[0]
    assert header.endswith("surprise,trust,tweet_volume") and header.startswith("date,change_level,open")
    assert len((staged / "lab/labels.csv").read_text().splitlines()) == 200


def test_train_evaluate_report(staged, capsys):
    ds_path = staged / "lab/dataset.csv"
    for seed in (0, 1):
        assert run("train", "--dataset", ds_path, "--out", staged / f"m{seed}.json", "--epochs", 3,
                   "--hidden-units", 8, "--seed", seed) == 0
    blob = (staged / "m0.json").read_bytes()
    assert run("train", "--dataset", ds_path, "--out", staged / "again.json", "--epochs", 3, "--hidden-units", 8,
               "--seed", 0) == 0
    assert (staged / "again.json").read_bytes() == blob
    assert run("evaluate", "--dataset", ds_path, "--model", staged / "m0.json", staged / "m1.json",
               "--out", staged / "metrics.json") == 0
    metrics = json.loads((staged / "metrics.json").read_text())
    assert len(metrics["runs"]) == 2 and set(metrics["mean"]) >= {"si_accuracy", "avg_si_sd"}


def test_run_and_report(synthetic_dir, tmp_path, capsys):
    out = tmp_path / "out"
    assert run("run", "--config", synthetic_dir / "config.json", "--out", out, "--repetitions", 2, "--epochs", 2,
               "--only", "baseline", "m3") == 0
    assert "NRC-Label" in capsys.readouterr().out
    assert run("report", "--input", out / "report.json", "--format", "csv", "--out", tmp_path / "r.csv") == 0
    assert (tmp_path / "r.csv").read_bytes() == (out / "results.csv").read_bytes()
    assert run("report", "--input", out / "report.json", "--out", tmp_path / "r.md") == 0
    assert (tmp_path / "r.md").read_bytes() == (out / "report.md").read_bytes()


def test_exit_codes(synthetic_dir, tmp_path, capsys):
    F = synthetic_dir
    assert run("train", "--dataset", tmp_path / "missing.csv", "--out", tmp_path / "m.json") == 2
    bad_cfg = tmp_path / "bad.json"
    bad_cfg.write_text('{"ticker": "SYNT", "tweets": "t.csv", "prices": "p.csv", "mode": "m7"}')
    assert run("run", "--config", bad_cfg, "--out", tmp_path / "o") == 2
    (tmp_path / "prices.csv").write_text("Date,Open,High,Low,Close,Volume\n2021-10-01,1,2,0.5,1,10\n"
                                         "2021-10-01,1,2,0.5,1,10\n")
    assert run("ingest", "--tweets", F / "tweets.csv", "--prices", tmp_path / "prices.csv", "--out",
               tmp_path / "i") == 3
    assert run("preprocess", "--tweets", F / "tweets.csv", "--llm-backend", "replay", "--cache",
               tmp_path / "empty.jsonl", "--out", tmp_path / "p") == 4
    shutil.copy(F / "config.json", tmp_path / "cfg.json")
    assert run("run", "--config", tmp_path / "cfg.json", "--out", tmp_path / "o2", "--repetitions", 1) == 2
    err = capsys.readouterr().err
    assert "stage 'ingest' failed" in err


def test_no_llm_preprocess_then_plain_featurize(synthetic_dir, tmp_path):
    F = synthetic_dir
    assert run("preprocess", "--tweets", F / "tweets.csv", "--llm-backend", "none", "--out", tmp_path / "p") == 0
    assert not (tmp_path / "p/filter_stats.csv").exists()
    assert run("featurize", "--annotated", tmp_path / "p/annotated.jsonl", "--prices", F / "prices_SYNT.csv",
               "--method", "m1", "--out", tmp_path / "f") == 0
    assert run("featurize", "--annotated", tmp_path / "p/annotated.jsonl", "--prices", F / "prices_SYNT.csv",
               "--method", "m1", "--enhanced", "--out", tmp_path / "f2") == 2
    assert run("label", "--prices", F / "prices_SYNT.csv", "--out", tmp_path / "l") == 0
    assert (tmp_path / "l/dataset.csv").read_text().splitlines()[0] == "date,change_level,open,close,high,low,volume"


def test_bundled_fixture_matches_generator():
    files, classes = synthetic.build()
    for name, data in files.items():
        with open(f"{synthetic.bundled_dir()}/{name}", "rb") as fh:
            assert fh.read() == data, name
    assert classes[0] == -1 and set(classes[1:]) == {0, 1, 2}
