import json
import os

import pytest

from s2t.cli import PRESETS, main
from s2t.dataset import load_jsonl
from s2t.vocab import BpeVocab


class TestPresets:
    @pytest.mark.parametrize("name,fields", [
        ("v64", dict(l_e=5, l_d=2, d_a=2, n=48, m=24, k=1, vocab_size=57)),
        ("v68", dict(l_e=5, l_d=2, d_a=4, n=48, m=24, k=1, vocab_size=57)),
        ("v74", dict(l_e=5, l_d=4, d_a=4, n=200, m=100, k=3, vocab_size=2000)),
        ("v80", dict(l_e=5, l_d=4, d_a=4, n=200, m=100, k=3, vocab_size=2000)),
    ])
    def test_preset_hyperparameter_rows(self, name, fields):
        model = PRESETS[name]["model"]
        for key, value in fields.items():
            assert model[key] == value, (name, key)
        # width invariant shared by every v-series configuration
        assert model["d_a"] * model["d_h"] == model["d_f"] == model["d_p"] == 128


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("desk_data")
    cfg = {
        "seed": 4,
        "data": {"language": "desk_a", "subjects": 8, "sentence_count": 30,
                 "sentences_per_subject": 6, "max_strokes": 54},
    }
    cfg_path = out / "gen.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["gen-data", "--config", str(cfg_path), "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def trained_dir(data_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = {
        "preset": "desk",
        "seed": 4,
        "model": {"l_e": 1, "l_d": 1, "d_a": 2, "d_h": 16, "d_p": 32,
                  "d_f": 32, "n": 56, "m": 28},
        "train": {"batch_size": 16, "max_epochs": 2, "eval_max": 10},
    }
    cfg_path = out / "run.json"
    cfg_path.write_text(json.dumps(cfg))
    code = main(["train", "--config", str(cfg_path), "--data", str(data_dir),
                 "--out", str(out), "--quiet"])
    assert code == 0
    return out


class TestGenData:
    def test_outputs_exist_and_load(self, data_dir):
        for split in ("train", "val", "test"):
            examples = load_jsonl(data_dir / f"{split}.jsonl")
            assert examples, split
        meta = json.loads((data_dir / "meta.json").read_text())
        subject_sets = [set(meta["subjects"][k]) for k in ("train", "val", "test")]
        assert not (subject_sets[0] & subject_sets[1])
        assert not (subject_sets[0] & subject_sets[2])
        assert not (subject_sets[1] & subject_sets[2])

    def test_reproducible(self, data_dir, tmp_path):
        cfg = {"seed": 4,
               "data": {"language": "desk_a", "subjects": 8, "sentence_count": 30,
                        "sentences_per_subject": 6, "max_strokes": 54}}
        cfg_path = tmp_path / "gen.json"
        cfg_path.write_text(json.dumps(cfg))
        assert main(["gen-data", "--config", str(cfg_path),
                     "--out", str(tmp_path)]) == 0
        assert (tmp_path / "train.jsonl").read_bytes() == \
               (data_dir / "train.jsonl").read_bytes()


class TestTrainBpe:
    def test_trains_and_loads(self, tmp_path):
        corpus_path = tmp_path / "corpus.txt"
        corpus_path.write_text("\n".join(["the cat sat on the mat."] * 6
                                         + ["the dog sat down."] * 6))
        out = tmp_path / "bpe.vocab"
        assert main(["train-bpe", "--corpus", str(corpus_path), "--size", "35",
                     "--out", str(out)]) == 0
        assert BpeVocab.load(str(out)).size == 35

    def test_missing_corpus_exit_code(self, tmp_path, capsys):
        code = main(["train-bpe", "--corpus", str(tmp_path / "nope.txt"),
                     "--size", "40", "--out", str(tmp_path / "v")])
        assert code == 3
        assert "error:" in capsys.readouterr().err


class TestTrain:
    def test_writes_artifacts_and_reports_params(self, trained_dir, capsys):
        assert (trained_dir / "best.ckpt").exists()
        assert (trained_dir / "metrics.csv").exists()

    def test_unknown_config_key_rejected(self, data_dir, tmp_path, capsys):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps({"model": {"layers": 3}}))
        code = main(["train", "--config", str(cfg_path), "--data", str(data_dir),
                     "--out", str(tmp_path)])
        assert code == 2
        assert "unknown model keys" in capsys.readouterr().err

    def test_preset_v80_parameter_counts(self, capsys, tmp_path):
        # the count line prints from the resolved preset before any data or
        # vocabulary is touched (it then fails on the missing vocab file)
        code = main(["train", "--preset", "v80", "--data", str(tmp_path),
                     "--out", str(tmp_path)])
        captured = capsys.readouterr()
        assert "params encoder=523520 decoder=1453520" in captured.out
        assert code == 2


class TestInferEvalAblateAttn:
    def test_infer_writes_hypotheses(self, trained_dir, data_dir, tmp_path):
        out = tmp_path / "hyps.txt"
        assert main(["infer", "--checkpoint", str(trained_dir / "best.ckpt"),
                     "--data", str(data_dir / "test.jsonl"),
                     "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == len(load_jsonl(data_dir / "test.jsonl"))

    def test_eval_twice_identical(self, trained_dir, data_dir, tmp_path):
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            assert main(["eval", "--checkpoint", str(trained_dir / "best.ckpt"),
                         "--data", str(data_dir), "--split", "test",
                         "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_ablate_writes_dataset_and_report(self, trained_dir, data_dir, tmp_path):
        out = tmp_path / "abl"
        assert main(["ablate", "--checkpoint", str(trained_dir / "best.ckpt"),
                     "--data", str(data_dir), "--split", "test",
                     "--mode", "drop_last_k_strokes", "--k", "1",
                     "--out", str(out)]) == 0
        ablated = load_jsonl(out / "ablated.jsonl")
        original = load_jsonl(data_dir / "test.jsonl")
        assert all(len(a.strokes) == len(o.strokes) - 1
                   for a, o in zip(ablated, original))
        assert json.loads((out / "report.json").read_text())["la"] >= 0.0

    def test_attn_exports(self, trained_dir, data_dir, tmp_path):
        out = tmp_path / "attn"
        assert main(["attn", "--checkpoint", str(trained_dir / "best.ckpt"),
                     "--data", str(data_dir / "test.jsonl"), "--index", "0",
                     "--out", str(out)]) == 0
        doc = json.loads((out / "attention.json").read_text())
        pgms = [f for f in os.listdir(out) if f.endswith(".pgm")]
        assert len(pgms) == len(doc["layers"]) * len(doc["layers"][0]["heads"])

    def test_missing_checkpoint_exit(self, data_dir, tmp_path):
        assert main(["infer", "--checkpoint", str(tmp_path / "no.ckpt"),
                     "--data", str(data_dir / "test.jsonl")]) == 3
