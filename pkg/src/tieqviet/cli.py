"""Command-line entry point: ``tieqviet <subcommand> ...``.

Model hyperparameters resolve as flags > config file > defaults. The config
file is flat ``key=value`` text; ``TIEQVIET_CONFIG`` names a default file.
Every run writes its resolved configuration next to its outputs.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric divergence.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from collections import defaultdict
from pathlib import Path

from . import dataset as D
from . import restorer as R
from .evaluation import evaluate_labels, export_history_csv, write_errors_tsv
from .oracle import DEFAULT_LIMIT, Lexicon, build_lattice, enumerate_restorations
from .rules import convert, to_tieq
from .estimators import UnigramRestorer
from .text import TextDecodeError, read_lines

log = logging.getLogger("tieqviet")

CONFIG_ENV = "TIEQVIET_CONFIG"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message, code=EXIT_DATA):
        super().__init__(message)
        self.code = code


def _lines(path) -> list[str]:
    try:
        return read_lines(path)
    except FileNotFoundError:
        raise CliError(f"input file not found: {path}") from None
    except TextDecodeError as exc:
        raise CliError(f"{path}: {exc}") from None
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _lexicon(path) -> Lexicon:
    try:
        return Lexicon.from_file(path)
    except FileNotFoundError:
        raise CliError(f"lexicon file not found: {path}") from None
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read lexicon {path}: {exc}") from None


def _write_text(path, text: str):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}") from None


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create directory {path}: {exc.strerror}") from None
    return out


# -- configuration ---------------------------------------------------------

def read_config_file(path) -> dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are ignored."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}") from None
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CliError(f"{path}:{lineno}: expected key=value, got {line!r}", EXIT_USAGE)
        values[key.strip()] = value.strip()
    return values


def resolve_model_config(args) -> R.ModelConfig:
    values: dict = {}
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if path:
        values.update(read_config_file(path))
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise CliError(f"--set expects key=value, got {item!r}", EXIT_USAGE)
        values[key.strip()] = value.strip()
    for key in ("epochs", "hidden_dim", "seed"):
        if getattr(args, key, None) is not None:
            values[key] = getattr(args, key)
    try:
        return R.ModelConfig.from_dict(values)
    except (KeyError, ValueError) as exc:
        raise CliError(f"invalid model configuration: {exc}", EXIT_USAGE) from None


def run_config_lines(args, model_cfg: R.ModelConfig | None = None) -> list[str]:
    skip = {"func", "set", "log"}
    lines = [f"command={args.command}"]
    lines += [f"{k}={v}" for k, v in sorted(vars(args).items())
              if k not in skip and k != "command" and v is not None]
    if model_cfg is not None:
        lines += [f"model.{line}" for line in model_cfg.to_lines()]
    return lines


def _echo_config(path, args, model_cfg=None):
    _write_text(path, "\n".join(run_config_lines(args, model_cfg)) + "\n")


def _sidecar(path, suffix) -> Path:
    p = Path(path)
    return p.with_name(p.name + suffix)


# -- subcommands -----------------------------------------------------------

def cmd_convert(args):
    pairs = [convert(line) for line in _lines(args.input)]
    _write_text(args.out, "".join(D.pair_to_tsv(p) + "\n" for p in pairs))
    _echo_config(_sidecar(args.out, ".config.txt"), args)


def cmd_oracle(args):
    if args.limit < 1:
        raise CliError("--limit must be >= 1", EXIT_USAGE)
    lexicon = _lexicon(args.lexicon) if args.lexicon else None
    out = []
    for line in _lines(args.input):
        res = enumerate_restorations(build_lattice(line, lexicon=lexicon), args.limit)
        out.append(f"# {line}\tcandidates={len(res)}\ttotal={res.total}")
        out.extend(res)
        if res.truncated:
            out.append(f"# truncated: {len(res)} of {res.total} shown")
    text = "".join(line + "\n" for line in out)
    if args.out:
        _write_text(args.out, text)
        _echo_config(_sidecar(args.out, ".config.txt"), args)
    else:
        sys.stdout.write(text)


def cmd_make_dataset(args):
    pairs = D.build_pairs(_lines(args.input))
    try:
        sp = D.split(pairs, args.train, args.val, args.seed)
    except D.InsufficientData as exc:
        raise CliError(str(exc)) from None
    vocab, labels = D.build_vocabs(sp.train + sp.validation)
    out = _out_dir(args.out)
    D.write_pairs(pairs, out / "pairs.tsv")
    D.write_manifest(sp, out / "manifest.txt")
    D.write_symbols(vocab.symbols, out / "vocab.txt")
    D.write_symbols(labels.labels, out / "labels.txt")
    _echo_config(out / "config.txt", args)
    log.info("%d pairs, split %d/%d, m=%d, %d labels", len(pairs), len(sp.train),
             len(sp.validation), vocab.m, len(labels))


def load_data_dir(path):
    """``(pairs, split, vocab, labels)`` from a ``make-dataset`` directory."""
    d = Path(path)
    for name in ("pairs.tsv", "manifest.txt", "vocab.txt", "labels.txt"):
        if not (d / name).is_file():
            raise CliError(f"dataset file not found: {d / name}")
    try:
        pairs = D.read_pairs(d / "pairs.tsv")
        sp = D.split_from_manifest(pairs, d / "manifest.txt")
        vocab = D.Vocab.from_symbols(D.read_symbols(d / "vocab.txt"))
        labels = D.LabelVocab(D.read_symbols(d / "labels.txt"))
    except (ValueError, KeyError, IndexError) as exc:
        raise CliError(f"corrupt dataset directory {d}: {exc}") from None
    return pairs, sp, vocab, labels


def cmd_train(args):
    cfg = resolve_model_config(args)
    _, sp, vocab, labels = load_data_dir(args.data)
    model = R.init_model(cfg, vocab, labels)

    def report(rec):
        log.info("epoch %d train_loss=%.6f train_acc=%.6f val_loss=%.6f val_acc=%.6f",
                 rec.epoch, rec.train_loss, rec.train_acc, rec.val_loss, rec.val_acc)

    try:
        model, history = R.train(model, sp, cfg, on_epoch=report)
    except R.TrainingDiverged as exc:
        raise CliError(f"training diverged: {exc}", EXIT_DIVERGED) from None
    except KeyError as exc:
        raise CliError(f"dataset does not match its label file: {exc}") from None
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    R.save_checkpoint(model, args.out)
    export_history_csv(history, args.history or _sidecar(args.out, ".history.csv"))
    _echo_config(_sidecar(args.out, ".config.txt"), args, cfg)
    best = history.records[history.best_epoch - 1]
    log.info("best epoch %d val_acc=%.6f", history.best_epoch, best.val_acc)


def _checkpoint(path) -> R.Model:
    try:
        return R.load_checkpoint(path)
    except FileNotFoundError:
        raise CliError(f"checkpoint not found: {path}") from None
    except R.CheckpointError as exc:
        raise CliError(str(exc)) from None


def cmd_eval(args):
    model = _checkpoint(args.ckpt)
    pairs, sp, vocab, labels = load_data_dir(args.data)
    if vocab != model.vocab or labels != model.labels:
        raise CliError(f"vocabulary mismatch between checkpoint {args.ckpt} and dataset {args.data}")
    part = {"validation": sp.validation, "train": sp.train, "all": pairs}[args.part]
    L = model.config.seq_len
    tieqs = [p.tieq for p in part]
    golds = [p.lower_labels[:L] for p in part]
    examples = [D.encode_text(t, model.vocab, L) for t in tieqs]
    preds = [[model.labels[i] for i in row] for row in R.predict_label_batch(model, examples)]
    lexicon = _lexicon(args.lexicon) if args.lexicon else Lexicon.from_corpus(
        p.standard for p in sp.train)
    report, records = evaluate_labels(tieqs, preds, golds, lexicon, label=f"model ({args.part})")

    baseline = UnigramRestorer(Lexicon.from_corpus(p.standard for p in sp.train)).fit(tieqs)
    base_preds = [labs[:L] for labs in baseline.predict_labels(tieqs)]
    base_report, base_records = evaluate_labels(tieqs, base_preds, golds, lexicon,
                                                label=f"unigram baseline ({args.part})")
    out = _out_dir(args.report)
    _write_text(out / "metrics.txt", report.to_text() + "\n" + base_report.to_text())
    kv = report.to_kv() + "".join(f"baseline.{line}\n" for line in base_report.to_kv().splitlines())
    _write_text(out / "metrics.kv", kv)
    write_errors_tsv(records, out / "errors.tsv")
    write_errors_tsv(base_records, out / "baseline_errors.tsv")
    if model.history.records:
        export_history_csv(model.history, out / "history.csv")
    _echo_config(out / "config.txt", args, model.config)
    sys.stdout.write(report.to_text())


def cmd_restore(args):
    model = _checkpoint(args.ckpt)
    restored = R.restore(model, _lines(args.input))
    _write_text(args.out, "".join(s + "\n" for s in restored))
    _echo_config(_sidecar(args.out, ".config.txt"), args, model.config)


def collision_classes(lexicon: Lexicon) -> list[tuple[str, list[str]]]:
    """Tieq Viet forms shared by two or more lexicon words, most frequent members first."""
    groups = defaultdict(list)
    for word in lexicon:
        groups[to_tieq(word)].append(word)
    classes = [(t, sorted(ws, key=lambda w: (-lexicon.freq(w), w)))
               for t, ws in groups.items() if len(ws) > 1]
    return sorted(classes, key=lambda c: (-len(c[1]), c[0]))


def cmd_ambiguity_report(args):
    lexicon = _lexicon(args.lexicon)
    rows = ["tieqviet\tsize\tmembers"]
    rows += [f"{t}\t{len(ws)}\t{' '.join(ws)}" for t, ws in collision_classes(lexicon)]
    _write_text(args.out, "\n".join(rows) + "\n")
    _echo_config(_sidecar(args.out, ".config.txt"), args)


# -- parser ----------------------------------------------------------------

def _model_flags(p):
    p.add_argument("--config", help=f"key=value model config (default: ${CONFIG_ENV})")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden-dim", dest="hidden_dim", type=int)
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tieqviet", description=__doc__.split("\n")[0])
    parser.add_argument("--log", help="append timestamped log lines to this file")
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="standard text to Tieq Viet pairs TSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("oracle", help="enumerate restorations of Tieq Viet lines")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--limit", type=int, default=DEFAULT_LIMIT)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("make-dataset", help="pairs, split manifest and vocabularies")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--train", type=int, default=500)
    p.add_argument("--val", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_dataset)

    p = sub.add_parser("train", help="train the BiLSTM restorer")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--history", help="history CSV (default: CKPT.history.csv)")
    _model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="metrics and error records for a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--part", choices=("validation", "train", "all"), default="validation")
    p.add_argument("--lexicon", help="frequency lexicon for error categories")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("restore", help="restore standard spelling line by line")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("ambiguity-report", help="collision classes of a lexicon")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ambiguity_report)
    return parser


def _setup_logging(args):
    root = logging.getLogger("tieqviet")
    root.handlers.clear()
    root.setLevel(logging.INFO)
    root.propagate = False
    console = logging.StreamHandler(sys.stderr)
    console.setLevel(logging.WARNING if args.quiet else logging.INFO)
    console.setFormatter(logging.Formatter("%(message)s"))
    root.addHandler(console)
    if args.log:
        fh = logging.FileHandler(args.log, encoding="utf-8")
        fh.setFormatter(logging.Formatter("%(asctime)s %(name)s %(levelname)s %(message)s"))
        root.addHandler(fh)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    _setup_logging(args)
    try:
        args.func(args)
    except CliError as exc:
        print(f"tieqviet {args.command}: {exc}", file=sys.stderr)
        return exc.code
    finally:
        root = logging.getLogger("tieqviet")
        for h in list(root.handlers):
            h.close()
            root.removeHandler(h)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
