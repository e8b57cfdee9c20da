import pytest

from tieqviet.cli import CONFIG_ENV, main, read_config_file
from tieqviet.dataset import read_manifest, read_pairs
from tieqviet.evaluation import read_history_csv

from conftest import DATA
from golden import GOLDEN


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    src = out / "corpus.txt"
    src.write_text("\n".join((DATA / "corpus_vi.txt").read_text("utf-8").splitlines()[:30]) + "\n",
                   encoding="utf-8")
    assert main(["make-dataset", "--in", str(src), "--train", "20", "--val", "10",
                 "--seed", "3", "--out", str(out / "ds")]) == 0
    return out / "ds"


@pytest.fixture(scope="module")
def checkpoint(dataset_dir):
    ckpt = dataset_dir.parent / "m.ckpt"
    code = main(["train", "--data", str(dataset_dir), "--out", str(ckpt), "--epochs", "2",
                 "--hidden-dim", "4", "--set", "batch_size=8", "--set", "seq_len=30"])
    assert code == 0
    return ckpt


def test_convert(tmp_path):
    src = tmp_path / "in.txt"
    src.write_text("\n".join(r for _, rs in GOLDEN for r in rs[:1]) + "\n", encoding="utf-8")
    assert main(["convert", "--in", str(src), "--out", str(tmp_path / "out.tsv")]) == 0
    pairs = read_pairs(tmp_path / "out.tsv")
    assert [p.tieq for p in pairs] == [t for t, _ in GOLDEN]
    assert "command=convert" in (tmp_path / "out.tsv.config.txt").read_text()


def test_convert_empty_and_missing(tmp_path, capsys):
    (tmp_path / "empty.txt").write_text("")
    assert main(["convert", "--in", str(tmp_path / "empty.txt"), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o").read_text() == ""
    missing = tmp_path / "nope.txt"
    assert main(["convert", "--in", str(missing), "--out", str(tmp_path / "o")]) == 3
    assert str(missing) in capsys.readouterr().err


def test_usage_error():
    assert main(["convert"]) == 2
    assert main(["no-such-command"]) == 2


def test_oracle(tmp_path, capsys):
    src = tmp_path / "in.txt"
    src.write_text("Nó sẽ zàn' một số tiền lớn\nmột\n" + " ".join(["za"] * 8) + "\n",
                   encoding="utf-8")
    lex = tmp_path / "lex.tsv"
    lex.write_text("giành\t3\ndành\t2\nza\t1\n", encoding="utf-8")
    assert main(["oracle", "--in", str(src), "--lexicon", str(lex), "--limit", "10"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[:3] == ["# Nó sẽ zàn' một số tiền lớn\tcandidates=2\ttotal=2",
                       "Nó sẽ dành một số tiền lớn", "Nó sẽ giành một số tiền lớn"]
    assert out[3:5] == ["# một\tcandidates=1\ttotal=1", "một"]
    assert out[5].endswith("candidates=10\ttotal=6561")
    assert len(out) == 5 + 1 + 10 + 1 and out[-1] == "# truncated: 10 of 6561 shown"
    assert main(["oracle", "--in", str(src), "--lexicon", str(tmp_path / "x.tsv")]) == 3


def test_make_dataset_is_reproducible(dataset_dir, tmp_path):
    src = dataset_dir.parent / "corpus.txt"
    assert main(["make-dataset", "--in", str(src), "--train", "20", "--val", "10",
                 "--seed", "3", "--out", str(tmp_path / "again")]) == 0
    for name in ("pairs.tsv", "manifest.txt", "vocab.txt", "labels.txt"):
        assert (tmp_path / "again" / name).read_bytes() == (dataset_dir / name).read_bytes()
    seed, tr, va = read_manifest(dataset_dir / "manifest.txt")
    assert seed == 3 and len(tr) == 20 and len(va) == 10
    assert main(["make-dataset", "--in", str(src), "--train", "40", "--val", "10",
                 "--out", str(tmp_path / "x")]) == 3


def test_train_outputs(checkpoint):
    rows = read_history_csv(str(checkpoint) + ".history.csv")
    assert [r["epoch"] for r in rows] == [1, 2]
    echo = (checkpoint.parent / (checkpoint.name + ".config.txt")).read_text()
    assert "model.hidden_dim=4" in echo and "model.batch_size=8" in echo
    assert "model.lr=0.001" in echo


def test_config_precedence(tmp_path, dataset_dir, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nhidden_dim=5\nepochs=1\nbatch_size=16\n")
    assert read_config_file(cfg) == {"hidden_dim": "5", "epochs": "1", "batch_size": "16"}
    out = tmp_path / "a.ckpt"
    assert main(["train", "--data", str(dataset_dir), "--config", str(cfg), "--out", str(out),
                 "--hidden-dim", "3", "--set", "seq_len=20"]) == 0
    echo = (tmp_path / "a.ckpt.config.txt").read_text()
    assert "model.hidden_dim=3" in echo and "model.epochs=1" in echo
    assert "model.batch_size=16" in echo and "model.seq_len=20" in echo
    monkeypatch.setenv(CONFIG_ENV, str(cfg))
    out = tmp_path / "b.ckpt"
    assert main(["train", "--data", str(dataset_dir), "--out", str(out), "--set", "seq_len=20"]) == 0
    assert "model.hidden_dim=5" in (tmp_path / "b.ckpt.config.txt").read_text()
    bad = tmp_path / "bad.cfg"
    bad.write_text("hidden=3\n")
    assert main(["train", "--data", str(dataset_dir), "--config", str(bad), "--out", str(out)]) == 2
    assert main(["train", "--data", str(tmp_path / "none"), "--out", str(out)]) == 3


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_exit_code(tmp_path, dataset_dir):
    code = main(["train", "--data", str(dataset_dir), "--out", str(tmp_path / "d.ckpt"),
                 "--epochs", "1", "--hidden-dim", "3", "--set", "lr=inf"])
    assert code == 4


def test_eval_report(tmp_path, checkpoint, dataset_dir):
    rep = tmp_path / "rep"
    assert main(["eval", "--ckpt", str(checkpoint), "--data", str(dataset_dir),
                 "--report", str(rep)]) == 0
    kv = dict(line.split("=", 1) for line in (rep / "metrics.kv").read_text().splitlines())
    for key in ("char_accuracy", "word_accuracy", "sentence_accuracy", "baseline.char_accuracy"):
        assert 0.0 <= float(kv[key]) <= 1.0
    assert float(kv["sentence_accuracy"]) <= float(kv["word_accuracy"]) <= float(kv["char_accuracy"])
    assert (rep / "errors.tsv").read_text().startswith("type\tW_tieqviet\tW_pred\tW_standard\n")
    assert "characters" in (rep / "metrics.txt").read_text()
    assert (rep / "config.txt").exists() and (rep / "history.csv").exists()
    first = (rep / "metrics.kv").read_bytes()
    assert main(["eval", "--ckpt", str(checkpoint), "--data", str(dataset_dir),
                 "--report", str(rep)]) == 0
    assert (rep / "metrics.kv").read_bytes() == first


def test_eval_vocab_mismatch(tmp_path, checkpoint, dataset_dir):
    other = tmp_path / "ds"
    src = tmp_path / "c.txt"
    src.write_text("\n".join(["Tôi ra chợ"] * 4) + "\n", encoding="utf-8")
    assert main(["make-dataset", "--in", str(src), "--train", "2", "--val", "2",
                 "--out", str(other)]) == 0
    assert main(["eval", "--ckpt", str(checkpoint), "--data", str(other),
                 "--report", str(tmp_path / "r")]) == 3
    junk = tmp_path / "junk.ckpt"
    junk.write_bytes(b"nope")
    assert main(["eval", "--ckpt", str(junk), "--data", str(dataset_dir),
                 "--report", str(tmp_path / "r")]) == 3


def test_restore(tmp_path, checkpoint):
    src = tmp_path / "in.txt"
    src.write_text("Kô tìm wấy một kái xák cên bàn làm việk\n\nmột\n", encoding="utf-8")
    out = tmp_path / "out.txt"
    assert main(["restore", "--ckpt", str(checkpoint), "--in", str(src), "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3 and lines[1] == ""
    assert src.read_text(encoding="utf-8").startswith("Kô tìm")


def test_ambiguity_report(tmp_path):
    lex = tmp_path / "lex.tsv"
    lex.write_text("ra\t100\nda\t50\ngia\t10\nmột\t4\nchanh\t2\ntranh\t3\n", encoding="utf-8")
    out = tmp_path / "amb.tsv"
    assert main(["ambiguity-report", "--lexicon", str(lex), "--out", str(out)]) == 0
    assert out.read_text(encoding="utf-8").splitlines() == [
        "tieqviet\tsize\tmembers", "za\t3\tra da gia", "can'\t2\ttranh chanh"]


def test_log_file_has_timestamps(tmp_path, dataset_dir):
    log = tmp_path / "run.log"
    assert main(["--log", str(log), "train", "--data", str(dataset_dir),
                 "--out", str(tmp_path / "c.ckpt"), "--epochs", "1", "--hidden-dim", "3"]) == 0
    text = log.read_text()
    assert "epoch 1 train_loss=" in text and text[:4].isdigit()
