import json
from types import SimpleNamespace

import pytest

from aidetect.cli import main
from aidetect.container import load_detector
from aidetect.corpus import load_corpus, save_corpus, split_corpus
from aidetect.embedding_io import write_embx
from oracles import gaussian_embeddings, lstm_toy_corpus, marker_corpus


@pytest.fixture(scope="module")
def ws(tmp_path_factory):
    """A working directory with a corpus, embeddings, and config files."""
    root = tmp_path_factory.mktemp("cli")
    corpus = marker_corpus(40, seed=6)
    corpus_csv = root / "corpus.csv"
    save_corpus(corpus, corpus_csv)

    toy = lstm_toy_corpus(12, seed=3)
    toy_csv = root / "toy.csv"
    save_corpus(toy, toy_csv)

    es = gaussian_embeddings(corpus, dim=8, seed=13, model_id="cli-backbone")
    embx = root / "emb.embx"
    write_embx(es, embx)

    (root / "logreg.conf").write_text("epochs=4\n")
    (root / "head.conf").write_text("epochs=3\nlr=0.01\n")
    (root / "lstm.conf").write_text(
        "embedding_dim=6\nhidden_size=4\nmax_len=6\nepochs=2\ncalibrate=false\n")
    return SimpleNamespace(root=root, corpus=corpus, corpus_csv=str(corpus_csv),
                           toy=toy, toy_csv=str(toy_csv), embx=str(embx))


@pytest.fixture(scope="module")
def trained(ws):
    """Containers for logreg and both two-layer heads, trained via the CLI."""
    r = ws.root
    paths = {"logreg": str(r / "logreg.json"),
             "bert-custom": str(r / "bc.json"),
             "distilbert-head": str(r / "dh.json")}
    rc = main(["train", "--model", "logreg", "--train", ws.corpus_csv,
               "--config", str(r / "logreg.conf"), "--out", paths["logreg"],
               "--history", str(r / "logreg-history.csv")])
    assert rc == 0
    for kind in ("bert-custom", "distilbert-head"):
        rc = main(["train", "--model", kind, "--train", ws.corpus_csv,
                   "--embeddings", ws.embx, "--config", str(r / "head.conf"),
                   "--out", paths[kind]])
        assert rc == 0
    return paths


class TestSplit:
    def test_stratified_outputs(self, ws, tmp_path):
        rc = main(["split", "--input", ws.corpus_csv, "--train-frac", "0.8",
                   "--seed", "0", "--out-dir", str(tmp_path)])
        assert rc == 0
        train = load_corpus(tmp_path / "train.csv")
        test = load_corpus(tmp_path / "test.csv")
        assert len(train) == 32 and len(test) == 8
        assert sum(train.labels()) == 16  # 20 AI docs * 0.8
        assert sum(test.labels()) == 4

    def test_byte_deterministic(self, ws, tmp_path):
        for d in ("a", "b"):
            assert main(["split", "--input", ws.corpus_csv, "--seed", "7",
                         "--out-dir", str(tmp_path / d)]) == 0
        for name in ("train.csv", "test.csv"):
            assert (tmp_path / "a" / name).read_bytes() == \
                   (tmp_path / "b" / name).read_bytes()

    def test_bad_label_exits_2(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("id,text,label\nd1,hello,maybe\n")
        rc = main(["split", "--input", str(bad), "--out-dir",
                   str(tmp_path / "out")])
        assert rc == 2

    def test_missing_file_exits_1(self, tmp_path):
        rc = main(["split", "--input", str(tmp_path / "nope.csv"),
                   "--out-dir", str(tmp_path / "out")])
        assert rc == 1


class TestTrain:
    def test_logreg_container_and_history(self, ws, trained):
        det = load_detector(trained["logreg"])
        assert det.kind == "logreg"
        assert det.config_record["epochs"] == 4
        lines = (ws.root / "logreg-history.csv").read_text().splitlines()
        assert lines[0] == "epoch,train_loss,valid_loss"
        assert len(lines) == 5

    def test_head_container_carries_model_id(self, trained):
        det = load_detector(trained["bert-custom"])
        assert det.embedding_model_id == "cli-backbone"

    def test_lstm_trains(self, ws, tmp_path):
        out = tmp_path / "lstm.json"
        rc = main(["train", "--model", "lstm", "--train", ws.toy_csv,
                   "--config", str(ws.root / "lstm.conf"), "--out", str(out)])
        assert rc == 0
        assert load_detector(out).kind == "lstm"

    def test_lstm_calibrates_on_valid(self, ws, tmp_path):
        train, valid = split_corpus(ws.toy, 0.75, seed=0)
        tr, va = tmp_path / "tr.csv", tmp_path / "va.csv"
        save_corpus(train, tr)
        save_corpus(valid, va)
        cfg = tmp_path / "c.conf"
        cfg.write_text("embedding_dim=6\nhidden_size=4\nmax_len=6\nepochs=2\n")
        out = tmp_path / "cal.json"
        rc = main(["train", "--model", "lstm", "--train", str(tr),
                   "--valid", str(va), "--config", str(cfg),
                   "--out", str(out)])
        assert rc == 0
        assert load_detector(out).threshold != 0.5

    def test_head_without_embeddings_exits_2(self, ws, tmp_path):
        rc = main(["train", "--model", "distilbert-head", "--train",
                   ws.corpus_csv, "--out", str(tmp_path / "x.json")])
        assert rc == 2

    def test_unknown_config_key_exits_2(self, ws, tmp_path):
        cfg = tmp_path / "bad.conf"
        cfg.write_text("momentum=0.9\n")
        rc = main(["train", "--model", "logreg", "--train", ws.corpus_csv,
                   "--config", str(cfg), "--out", str(tmp_path / "x.json")])
        assert rc == 2

    def test_byte_deterministic_artifacts(self, ws, tmp_path, monkeypatch):
        monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)
        outs = []
        for tag in ("p", "q"):
            model = tmp_path / f"{tag}.json"
            hist = tmp_path / f"{tag}.csv"
            rc = main(["train", "--model", "logreg", "--train", ws.corpus_csv,
                       "--config", str(ws.root / "logreg.conf"),
                       "--out", str(model), "--history", str(hist)])
            assert rc == 0
            outs.append((model.read_bytes(), hist.read_bytes()))
        assert outs[0] == outs[1]


class TestEvaluate:
    def test_report_and_roc(self, ws, trained, tmp_path):
        report_path = tmp_path / "report.json"
        roc_path = tmp_path / "roc.csv"
        rc = main(["evaluate", "--model", trained["logreg"], "--test",
                   ws.corpus_csv, "--report", str(report_path),
                   "--roc", str(roc_path)])
        assert rc == 0
        report = json.loads(report_path.read_text())
        assert set(report) == {"accuracy", "classes", "macro_avg",
                               "weighted_avg", "confusion", "auc", "threshold"}
        assert set(report["classes"]) == {"Human", "AI"}
        assert 0.0 <= report["auc"] <= 1.0
        lines = roc_path.read_text().splitlines()
        assert lines[0] == "fpr,tpr,threshold"
        assert len(lines) > 2

    def test_head_evaluate_needs_embeddings(self, ws, trained, tmp_path):
        rc = main(["evaluate", "--model", trained["bert-custom"], "--test",
                   ws.corpus_csv, "--report", str(tmp_path / "r.json")])
        assert rc == 2

    def test_head_evaluate_with_embeddings(self, ws, trained, tmp_path):
        report_path = tmp_path / "r.json"
        rc = main(["evaluate", "--model", trained["bert-custom"], "--test",
                   ws.corpus_csv, "--embeddings", ws.embx,
                   "--report", str(report_path)])
        assert rc == 0
        assert json.loads(report_path.read_text())["threshold"] == 0.5


class TestPredict:
    def test_csv_layout(self, ws, trained, tmp_path):
        out = tmp_path / "pred.csv"
        rc = main(["predict", "--model", trained["logreg"], "--input",
                   ws.corpus_csv, "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "doc_id,score,label"
        assert len(lines) == 41
        for line in lines[1:]:
            doc_id, score, label = line.split(",")
            assert 0.0 < float(score) < 1.0
            assert label in ("0", "1")
        assert [l.split(",")[0] for l in lines[1:]] == list(ws.corpus.ids())

    def test_deterministic(self, ws, trained, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert main(["predict", "--model", trained["logreg"], "--input",
                         ws.corpus_csv, "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_missing_model_exits_1(self, ws, tmp_path):
        rc = main(["predict", "--model", str(tmp_path / "ghost.json"),
                   "--input", ws.corpus_csv, "--out", str(tmp_path / "o.csv")])
        assert rc == 1


class TestEnsemble:
    def all_three(self, trained):
        return ",".join([trained["logreg"], trained["bert-custom"],
                         trained["distilbert-head"]])

    def test_three_member_vote(self, ws, trained, tmp_path):
        out = tmp_path / "ens.csv"
        votes = tmp_path / "votes.csv"
        rc = main(["ensemble", "--models", self.all_three(trained),
                   "--input", ws.corpus_csv, "--embeddings", ws.embx,
                   "--out", str(out), "--votes", str(votes)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "doc_id,label"
        assert len(lines) == 41
        vlines = votes.read_text().splitlines()
        assert vlines[0] == ("doc_id,m0_logreg,m1_bert-custom,"
                             "m2_distilbert-head,final")
        finals = [l.split(",")[-1] for l in vlines[1:]]
        labels = [l.split(",")[1] for l in lines[1:]]
        assert finals == labels

    def test_even_count_needs_flag(self, ws, trained, tmp_path):
        two = ",".join([trained["logreg"], trained["bert-custom"]])
        args = ["ensemble", "--models", two, "--input", ws.corpus_csv,
                "--embeddings", ws.embx, "--out", str(tmp_path / "e.csv")]
        assert main(args) == 2
        assert main(args + ["--allow-even"]) == 0

    def test_missing_backbone_exits_2(self, ws, trained, tmp_path):
        rc = main(["ensemble", "--models", self.all_three(trained),
                   "--input", ws.corpus_csv,
                   "--out", str(tmp_path / "e.csv")])
        assert rc == 2

    def test_duplicate_backbone_exits_2(self, ws, trained, tmp_path):
        rc = main(["ensemble", "--models", self.all_three(trained),
                   "--input", ws.corpus_csv, "--embeddings", ws.embx,
                   "--embeddings", ws.embx, "--out", str(tmp_path / "e.csv")])
        assert rc == 2

    def test_majority_beats_one_dissenter(self, ws, trained, tmp_path):
        votes = tmp_path / "votes.csv"
        rc = main(["ensemble", "--models", self.all_three(trained),
                   "--input", ws.corpus_csv, "--embeddings", ws.embx,
                   "--out", str(tmp_path / "e.csv"), "--votes", str(votes)])
        assert rc == 0
        for line in votes.read_text().splitlines()[1:]:
            cells = line.split(",")
            member_votes = [int(v) for v in cells[1:-1]]
            final = int(cells[-1])
            assert len(member_votes) == 3
            assert final == (1 if sum(member_votes) >= 2 else 0)


class TestHelp:
    def test_train_help_lists_config_keys(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "config file keys" in out
        assert "bigram_vocab_size" in out
        assert "relu_on_logits" in out

    def test_unknown_command_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2
