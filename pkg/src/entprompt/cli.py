"""Command-line entry point: ``entprompt <command> [options]``.

Relative ``--out`` paths resolve under ``$ENTPROMPT_OUTPUT_ROOT`` when it is
set. Configuration precedence, lowest to highest: built-in defaults, the
named preset, the ``--config`` file, then ``--set key=value`` / ``--arm`` /
``--seed`` flags.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import platform
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from . import pipeline as P
from .config import ConfigError, RunConfig, load_config
from .data import DatasetError, load_dataset, write_corpus
from .metrics import MetricError, f1_boxplot_svg, write_entity_f1_csv, write_metrics_csv

OUTPUT_ROOT_ENV = "ENTPROMPT_OUTPUT_ROOT"


class CommandError(RuntimeError):
    pass


def out_path(raw: str) -> Path:
    p = Path(raw)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    return p if p.is_absolute() or not root else Path(root) / p


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, cfg: RunConfig | None, threads: int | None,
                   files: list[str], inputs: dict[str, Path] | None = None) -> None:
    lines = [f"command = {command}", f"code_version = {__version__}", f"numpy = {np.__version__}",
             f"python = {platform.python_version()}", f"threads = {threads if threads else 'unlimited'}"]
    if cfg is not None:
        lines += [f"seed = {cfg.seed}", f"config_hash = {cfg.hash()}"]
    lines.append("")
    if inputs:
        lines.append("[inputs]")
        lines += [f"{k} = {v} {sha256(v)}" for k, v in inputs.items()]
        lines.append("")
    if cfg is not None:
        lines += [cfg.to_ini().rstrip(), ""]
    lines.append("[files]")
    lines += [f"{name} = {sha256(out / name)}" for name in files]
    (out / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_sets(items) -> dict[str, str]:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = val.strip()
    return out


def run_config(args) -> RunConfig:
    overrides: dict = {}
    if getattr(args, "arm", None):
        overrides.update(P.ARMS[args.arm])
    overrides.update(parse_sets(getattr(args, "set", None)))
    if args.seed is not None:
        overrides["seed"] = args.seed
    return load_config(args.config, overrides)


def split_file(data: str, split: str) -> Path:
    p = Path(data)
    path = p / f"{split}.mdata" if p.is_dir() else p
    if not path.is_file():
        raise DatasetError(f"data file not found: {path}")
    return path


# --- commands -------------------------------------------------------------
def cmd_gen_data(args) -> None:
    cfg = run_config(args)
    out = out_path(args.out)
    write_corpus(cfg.corpus(), out)
    print(f"wrote corpus to {out}")


def cmd_train(args) -> None:
    cfg = run_config(args)
    out = out_path(args.out)
    train_file, val_file = split_file(args.data, "train"), Path(args.data) / "val.mdata"
    train_samples = load_dataset(train_file)
    val_samples = load_dataset(val_file) if val_file.is_file() else []
    if not train_samples:
        raise DatasetError(f"{train_file}: no training samples")

    def progress(epoch, last, val):
        if not args.quiet:
            print(f"epoch {epoch + 1}/{cfg.epochs}  L={last.L:.4f}  L_g={last.L_g:.4f}  val_L_g={val:.4f}")

    result = P.train(cfg, train_samples, val_samples, out, progress)
    (out / "config.ini").write_text(cfg.to_ini(), encoding="utf-8")
    inputs = {"train": train_file}
    if val_samples:
        inputs["val"] = val_file
    write_manifest(out, "train", cfg, args.threads,
                   [P.CHECKPOINT, "train_log.csv", "status_log.csv", "config.ini"], inputs)
    print(f"best val L_g {result.state.best_val:.6f} at epoch {result.state.best_epoch + 1}; wrote {out}")


def cmd_eval(args) -> None:
    model, state, _ = P.load_checkpoint(args.checkpoint)
    data = split_file(args.data, args.split)
    samples = load_dataset(data)
    P.check_data_compatible(model, samples)
    res = P.evaluate_model(model, state, samples, self_reference=args.self_reference)
    out = out_path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    notes = {"BLEU-4": "corpus-level, no smoothing"}
    if args.self_reference:
        notes = {k: "self-reference debug run" for k in res.scores}
    write_metrics_csv(out / "metrics.csv", res.scores, notes)
    write_entity_f1_csv(out / "entity_f1.csv", res.keyword.per_entity)
    P.write_generations(out / "generations.txt", model, res.generations)
    files = ["metrics.csv", "entity_f1.csv", "generations.txt"]
    if args.plot:
        (out / "entity_f1.svg").write_text(f1_boxplot_svg({args.split: res.keyword.per_entity.f1}), encoding="utf-8")
        files.append("entity_f1.svg")
    write_manifest(out, "eval", model.cfg, args.threads, files, {"checkpoint": Path(args.checkpoint), "data": data})
    for name, val in res.scores.items():
        print(f"{name:20s} {val:.6f}")


def cmd_infer(args) -> None:
    model, state, _ = P.load_checkpoint(args.checkpoint)
    data = split_file(args.data, args.split)
    samples = load_dataset(data)
    P.check_data_compatible(model, samples)
    if args.sample:
        samples = [s for s in samples if s.id in set(args.sample)]
        missing = set(args.sample) - {s.id for s in samples}
        if missing:
            raise CommandError(f"unknown sample id(s): {', '.join(sorted(missing))}")
    gens = P.generate_reports(model, state, samples, mode=args.mode, temperature=args.temperature,
                              seed=model.cfg.seed if args.seed is None else args.seed)
    out = out_path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    P.write_generations(out / "generations.txt", model, gens)
    write_manifest(out, "infer", model.cfg, args.threads, ["generations.txt"],
                   {"checkpoint": Path(args.checkpoint), "data": data})
    for sid, ids in gens.items():
        print(sid, " ".join(P.strip_report(model.vocab.decode(ids))))


def cmd_inspect(args) -> None:
    model, state, _ = P.load_checkpoint(args.checkpoint)
    data = split_file(args.data, args.split)
    samples = {s.id: s for s in load_dataset(data)}
    if args.sample not in samples:
        raise CommandError(f"unknown sample id {args.sample!r} in {data}")
    P.check_data_compatible(model, [samples[args.sample]])
    view = P.inspect_sample(model, state, samples[args.sample])
    out = out_path(args.out)
    files = P.write_inspection(out, model, state, view)
    write_manifest(out, "inspect-adjacency", model.cfg, args.threads, files,
                   {"checkpoint": Path(args.checkpoint), "data": data})
    print(f"wrote {', '.join(files)} to {out}")


# --- parser ---------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entprompt", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=None, help="override the run seed")
    parser.add_argument("--threads", type=int, default=None, help="cap BLAS/OpenMP threads")
    sub = parser.add_subparsers(dest="command", required=True)

    def config_flags(p):
        p.add_argument("--config", default=None, help="INI configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")

    p = sub.add_parser("gen-data", help="write a synthetic corpus")
    config_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train and keep the best-validation checkpoint")
    config_flags(p)
    p.add_argument("--arm", choices=sorted(P.ARMS), help="ablation arm (applied before --set)")
    p.add_argument("--data", required=True, help="corpus directory")
    p.add_argument("--out", required=True)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="greedy generation plus metrics on one split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="corpus directory or .mdata file")
    p.add_argument("--split", default="test")
    p.add_argument("--out", required=True)
    p.add_argument("--self-reference", action="store_true", help="debug: score references against themselves")
    p.add_argument("--plot", action="store_true", help="also write an entity-F1 box plot (SVG)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("infer", help="generate reports for unseen scans")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--sample", action="append", help="restrict to these sample ids")
    p.add_argument("--mode", choices=("greedy", "sampled"), default="greedy")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("inspect-adjacency", help="dump masks, status table and prompt layout for one sample")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--sample", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with threadpool_limits(limits=args.threads):
            args.func(args)
    except (ConfigError, DatasetError, P.CheckpointError, P.DivergenceError, MetricError, CommandError) as exc:
        print(f"entprompt {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
