"""Command-line entry point: ``emtod <subcommand> [flags]``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, describe_sections
from .corpus.generator import generate_corpus
from .corpus.types import CorpusError, Dialogue, dialogue_from_dict, load, validate
from .corpus.vocab import Vocab, build_vocab, corpus_texts
from .nn import CheckpointError
from .schema import ACTIONS

log = logging.getLogger("emtod")

EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 1, 2, 3
SPLITS = ("train", "val", "test")
VOCAB_FILE = "vocab.txt"


class DataError(Exception):
    """Missing or malformed input data; the message names the file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are configuration errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# config assembly
# ---------------------------------------------------------------------------


def load_run_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    cmd = args.command
    if getattr(args, "seed", None) is not None:
        if cmd == "gen-corpus":
            cfg.corpus.seed = args.seed
        elif cmd == "train-scopeit":
            cfg.scopeit.seed = args.seed
        else:
            cfg.train.seed = args.seed
    if getattr(args, "out", None):
        if cmd == "gen-corpus":
            cfg.paths.data_dir = args.out
        else:
            cfg.paths.out_dir = args.out
    if getattr(args, "data", None):
        cfg.paths.data_dir = args.data
    m = cfg.train.model
    if getattr(args, "aggregator", None):
        m.aggregator = args.aggregator
    if getattr(args, "freeze", None):
        cfg.train.freeze = tuple(args.freeze)
    if getattr(args, "tau", None) is not None:
        m.tau = args.tau
        cfg.scopeit.tau = args.tau
    if getattr(args, "trunc_len", None) is not None:
        m.trunc_len = args.trunc_len
    if getattr(args, "no_summarizer", False):
        m.user_summary = False
    if getattr(args, "no_context", False):
        m.context_mode = "turn_only"
    cfg.validate()
    return cfg


def out_path(cfg: RunConfig, name: str) -> Path:
    p = Path(name)
    return p if p.is_absolute() else Path(cfg.paths.out_dir) / p


def read_split(cfg: RunConfig, split: str) -> list[Dialogue]:
    path = Path(cfg.paths.data_dir) / f"{split}.jsonl"
    if not path.exists():
        raise DataError(f"missing corpus split {path} (run gen-corpus first)")
    problems = validate(path)
    if problems:
        raise DataError(f"{path}: {problems[0]}" + (f" (+{len(problems) - 1} more)" if len(problems) > 1 else ""))
    return load(path)


def read_vocab(cfg: RunConfig) -> Vocab:
    path = Path(cfg.paths.data_dir) / VOCAB_FILE
    if not path.exists():
        raise DataError(f"missing vocabulary file {path} (run gen-corpus first)")
    try:
        return Vocab.load(path)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def read_checkpoint_file(path: Path) -> Path:
    if not path.exists():
        raise DataError(f"missing checkpoint {path}")
    return path


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_scopeit(cfg: RunConfig, vocab: Vocab):
    from .scopeit import ScopeIt

    if not cfg.model.user_summary:
        return None
    model = ScopeIt.load(read_checkpoint_file(out_path(cfg, cfg.paths.scopeit_checkpoint)))
    if model.vocab != vocab:
        raise DataError("ScopeIt checkpoint vocabulary differs from the corpus vocabulary")
    return model


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_gen_corpus(cfg: RunConfig, args) -> int:
    out = Path(cfg.paths.data_dir)
    splits = generate_corpus(cfg.corpus, out)
    vocab = build_vocab(corpus_texts(splits["train"]), extra_tokens=ACTIONS)
    vocab.save(out / VOCAB_FILE)
    write_json(out / "corpus_config.json", cfg.corpus.to_dict())
    counts = {k: len(v) for k, v in splits.items()}
    print(f"wrote {counts['train']}/{counts['val']}/{counts['test']} train/val/test dialogues "
          f"and a {len(vocab)}-token vocabulary to {out}")
    return 0


def cmd_train_scopeit(cfg: RunConfig, args) -> int:
    from .scopeit import evaluate_scopeit, train_scopeit, write_history

    train, val = read_split(cfg, "train"), read_split(cfg, "val")
    vocab = read_vocab(cfg)
    model, history = train_scopeit(train, val, vocab, cfg.scopeit)
    ckpt = out_path(cfg, cfg.paths.scopeit_checkpoint)
    ckpt.parent.mkdir(parents=True, exist_ok=True)
    model.save(ckpt)
    write_history(history, out_path(cfg, "scopeit_log.jsonl"))
    report = {"val": evaluate_scopeit(model, val, cfg.scopeit.tau)}
    test_path = Path(cfg.paths.data_dir) / "test.jsonl"
    if test_path.exists():
        report["test"] = evaluate_scopeit(model, read_split(cfg, "test"), cfg.scopeit.tau)
    write_json(out_path(cfg, "scopeit_metrics.json"), report)
    print(f"ScopeIt: {len(history)} epochs, val sentence F1 {report['val']['sentence_f1']:.4f}, "
          f"distractor removal {report['val']['distractor_removal']:.4f}; checkpoint {ckpt}")
    return 0


def cmd_train(cfg: RunConfig, args) -> int:
    from .trainer import train, write_log

    train_d, val_d = read_split(cfg, "train"), read_split(cfg, "val")
    vocab = read_vocab(cfg)
    scopeit = read_scopeit(cfg, vocab)
    result = train(train_d, val_d, vocab, cfg.train, scopeit)
    ckpt = out_path(cfg, cfg.paths.checkpoint)
    ckpt.parent.mkdir(parents=True, exist_ok=True)
    result.model.save(ckpt, {"best_epoch": result.best_epoch, "train_config": cfg.train.to_dict()})
    write_log(result.history, out_path(cfg, "train_log.jsonl"))
    best = result.history[result.best_epoch - 1]
    val_f1 = best.get("val", {}).get("micro_f1", float("nan"))
    print(f"trained {len(result.history)} epochs; best epoch {result.best_epoch} "
          f"(val micro-F1 {val_f1:.4f}); checkpoint {ckpt}")
    return 0


def cmd_evaluate(cfg: RunConfig, args) -> int:
    from .metrics import format_table
    from .trainer import IntentModel, evaluate_examples

    model = IntentModel.load(read_checkpoint_file(out_path(cfg, cfg.paths.checkpoint)))
    split = args.split
    ev = evaluate_examples(model, model.featurizer.examples(read_split(cfg, split)))
    report = {"split": split, "overall": ev["overall"].to_dict(), "n_ambiguous": ev["n_ambiguous"],
              "ambiguous": ev["ambiguous"].to_dict() if ev["ambiguous"] else None}
    write_json(out_path(cfg, f"metrics_{split}.json"), report)
    rows = [("overall", ev["overall"])] + ([("ambiguous", ev["ambiguous"])] if ev["ambiguous"] else [])
    print(format_table(rows))
    return 0


def read_conversation(path: Path) -> list:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read conversation {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if isinstance(doc, list):
        doc = {"id": path.stem, "turns": doc}
    try:
        dialogue = dialogue_from_dict(doc)
    except (CorpusError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed conversation: {exc}") from exc
    if not dialogue.turns or dialogue.turns[-1].role != "user":
        raise DataError(f"{path}: conversation must end with a user turn")
    return dialogue.turns


def cmd_predict(cfg: RunConfig, args) -> int:
    from .trainer import IntentModel

    if not args.conversation:
        raise ConfigError("predict needs --conversation FILE")
    turns = read_conversation(Path(args.conversation))
    model = IntentModel.load(read_checkpoint_file(out_path(cfg, cfg.paths.checkpoint)))
    result = model.predict(turns).to_dict()
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        write_json(out_path(cfg, "prediction.json"), result)
    print(text)
    return 0


def parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"--seeds must be comma-separated integers, got {text!r}") from exc
    if not seeds:
        raise ConfigError("--seeds is empty")
    return seeds


def cmd_ablate(cfg: RunConfig, args) -> int:
    from .eval import grid_from_json, run_ablation, ladder_grid

    seeds = parse_seeds(args.seeds)
    if args.grid:
        try:
            text = Path(args.grid).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read grid file {args.grid}: {exc}") from exc
        try:
            grid = grid_from_json(text, cfg.train)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{args.grid}: {exc}") from exc
    else:
        grid = ladder_grid(cfg.train)
    train, val, test = (read_split(cfg, s) for s in SPLITS)
    vocab = read_vocab(cfg)
    needs_scopeit = any(r.config.model.user_summary for r in grid)
    scopeit = None
    if needs_scopeit:
        from .scopeit import ScopeIt

        scopeit = ScopeIt.load(read_checkpoint_file(out_path(cfg, cfg.paths.scopeit_checkpoint)))
    result = run_ablation(grid, train, val, test, vocab, scopeit, seeds,
                          log_fn=lambda r: log.info("%s seed %d micro-F1 %.4f", r["row"], r["seed"], r["micro_f1"]))
    out = out_path(cfg, "ablation.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(result.to_json() + "\n", encoding="utf-8")
    table = result.table()
    out_path(cfg, "ablation.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    return 0


def cmd_bench_latency(cfg: RunConfig, args) -> int:
    from .eval import benchmark_latency, latency_sample
    from .model import ModelConfig
    from .trainer import IntentModel

    vocab = read_vocab(cfg)
    test = read_split(cfg, "test")
    scopeit = read_scopeit(cfg, vocab)
    if not test:
        raise DataError("test split is empty")
    prefix = latency_sample(test)
    base = cfg.model.to_dict()
    configs = [
        ("dual+cross_attention", {**base, "context_mode": "dual", "aggregator": "cross_attention"}),
        ("turn_only", {**base, "context_mode": "turn_only"}),
        ("dialog_only", {**base, "context_mode": "dialog_only"}),
    ]
    models = [(name, IntentModel(vocab, ModelConfig.from_dict(c), scopeit, seed=cfg.train.seed))
              for name, c in configs]
    report = benchmark_latency(models, prefix, runs=args.runs)
    out = out_path(cfg, "latency.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_json() + "\n", encoding="utf-8")
    print(report.table())
    return 0


COMMANDS = {
    "gen-corpus": (cmd_gen_corpus, ("corpus", "paths"), "generate the synthetic corpus and vocabulary"),
    "train-scopeit": (cmd_train_scopeit, ("scopeit", "paths"), "train the user-turn relevance summarizer"),
    "train": (cmd_train, ("train", "model", "encoder", "paths"), "train the intent model"),
    "evaluate": (cmd_evaluate, ("paths",), "score a checkpoint on a corpus split"),
    "predict": (cmd_predict, ("paths",), "predict intents for the last user turn of a conversation"),
    "ablate": (cmd_ablate, ("train", "model", "encoder", "paths"), "train and test an ablation grid over seeds"),
    "bench-latency": (cmd_bench_latency, ("model", "encoder", "paths"), "time batch-1 inference per configuration"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="emtod", description="Context-aware intent detection for email dialogues.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, sections, text) in COMMANDS.items():
        p = sub.add_parser(name, help=text, description=text, epilog=describe_sections(sections),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", metavar="PATH", help="JSON run configuration")
        p.add_argument("--out", metavar="DIR",
                       help="output directory (gen-corpus: corpus directory; others: paths.out_dir)")
        if name != "gen-corpus":
            p.add_argument("--data", metavar="DIR", help="corpus directory (paths.data_dir)")
        if name in ("gen-corpus", "train-scopeit", "train", "ablate", "bench-latency"):
            p.add_argument("--seed", type=int, metavar="N", help="seed for this stage")
        if name in ("train", "ablate", "bench-latency"):
            p.add_argument("--aggregator", choices=("concat", "attention", "cross_attention"),
                           help="model.aggregator")
            p.add_argument("--trunc-len", type=int, metavar="N", help="model.trunc_len")
            p.add_argument("--no-summarizer", action="store_true",
                           help="skip ScopeIt user summarization (model.user_summary=false)")
            p.add_argument("--no-context", action="store_true",
                           help="turn encoder only, head on the turn CLS (model.context_mode=turn_only)")
        if name in ("train", "ablate"):
            p.add_argument("--freeze", nargs="+", metavar="PREFIX", help="train.freeze namespace prefixes")
        if name in ("train-scopeit", "train", "ablate", "bench-latency"):
            p.add_argument("--tau", type=float, metavar="R", help="ScopeIt keep threshold (model.tau, scopeit.tau)")
        if name == "evaluate":
            p.add_argument("--split", choices=SPLITS, default="test", help="corpus split to score")
        if name == "predict":
            p.add_argument("--conversation", metavar="FILE", help="dialogue JSON (object with turns, or a turn list)")
        if name == "ablate":
            p.add_argument("--grid", metavar="FILE", help="grid JSON; default is the built-in ablation ladder")
            p.add_argument("--seeds", default="1,2,3", help="comma-separated seeds (default 1,2,3)")
        if name == "bench-latency":
            p.add_argument("--runs", type=int, default=10, help="timed runs per configuration (default 10)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    fn = COMMANDS[args.command][0]
    try:
        cfg = load_run_config(args)
        return fn(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, CorpusError, CheckpointError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - report and map to the runtime exit code
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
