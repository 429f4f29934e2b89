"""Command-line front end: synth, build, inspect, train, eval, bench.

Options compose from defaults, then a flat key=value config file, then
command-line flags (flags win). The effective configuration is echoed on
stderr at the start of every run; stdout carries only data.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import bench as bench_mod
from .nn import default_config, load_weights, save_weights
from .pcap import dissect, read_pcap
from .synth import (
    binary_synth_classes,
    multi_synth_classes,
    read_labels_file,
    synth_corpus,
    write_labels_file,
)
from .train import evaluate, train
from .views import (
    HeaderCategory,
    ViewKind,
    build_dataset,
    class_catalog,
    filter_packets,
    read_dataset,
    split_view,
    train_val_split,
    write_dataset,
)

VIEW_FLAGS = {"packet": ViewKind.PACKET, "flow": ViewKind.FLOW,
              "session": ViewKind.SESSION}
CATEGORY_FLAGS = {"all": HeaderCategory.ALL_HEADERS,
                  "only-eth": HeaderCategory.ONLY_ETHERNET,
                  "no-eth": HeaderCategory.WITHOUT_ETHERNET,
                  "none": HeaderCategory.NO_HEADERS}
# long-form names are accepted as aliases
CATEGORY_FLAGS.update({cat.value: cat for cat in HeaderCategory})
TASKS = ("binary", "multi")


@dataclass
class RunConfig:
    """Flat run configuration; field names double as config-file keys."""

    view: str = "session"
    category: str = "all"
    n: int = 115
    task: str = "binary"
    epochs: int = 50
    batch: int = 20
    seed: int = 0
    profile: str = "prose"
    pairing: str = "paper"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    sessions: int = 60
    labels: str = ""
    out: str = ""
    include_non_ip: bool = False
    drop_empty_samples: bool = False
    early_stop: bool = False


_BOOL_WORDS = {"true": True, "false": False, "1": True, "0": False,
               "yes": True, "no": False}


def parse_config(text: str) -> dict:
    """Flat `key = value` lines with # comments; unknown keys are rejected."""
    known = {f.name: f.type for f in fields(RunConfig)}
    types = {f.name: type(getattr(RunConfig(), f.name)) for f in fields(RunConfig)}
    out = {}
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {line_no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ValueError(f"config line {line_no}: unknown key {key!r}")
        ty = types[key]
        if ty is bool:
            if value.lower() not in _BOOL_WORDS:
                raise ValueError(f"config line {line_no}: bad boolean {value!r}")
            out[key] = _BOOL_WORDS[value.lower()]
        elif ty is int:
            out[key] = int(value)
        elif ty is float:
            out[key] = float(value)
        else:
            out[key] = value
    return out


def render_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines)


def effective_config(args) -> tuple[RunConfig, set[str]]:
    """defaults <- config file <- flags; returns the config and which keys
    were explicitly provided."""
    cfg = RunConfig()
    provided: set[str] = set()
    if getattr(args, "config", None):
        file_values = parse_config(Path(args.config).read_text(encoding="utf-8"))
        cfg = replace(cfg, **file_values)
        provided |= set(file_values)
    flag_values = {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            flag_values[f.name] = v
    cfg = replace(cfg, **flag_values)
    provided |= set(flag_values)
    return cfg, provided


def _echo_config(cfg: RunConfig, command: str):
    print(f"# bytecap {command}: effective configuration", file=sys.stderr)
    for line in render_config(cfg).splitlines():
        print(f"# {line}", file=sys.stderr)


def _model_config(cfg: RunConfig, input_len: int, class_names: list[str]):
    catalog = class_catalog(cfg.task)
    if class_names != catalog:
        raise ValueError(
            f"dataset classes {class_names} do not match task {cfg.task!r} "
            f"classes {catalog}")
    return default_config(cfg.task, cfg.profile, cfg.pairing,
                          input_len=input_len,
                          learning_rate=cfg.learning_rate, beta1=cfg.beta1,
                          beta2=cfg.beta2, epsilon=cfg.epsilon,
                          batch_size=cfg.batch, epochs=cfg.epochs,
                          seed=cfg.seed)


def cmd_synth(args) -> int:
    cfg, _ = effective_config(args)
    _echo_config(cfg, "synth")
    if not cfg.out:
        raise ValueError("synth needs --out <directory>")
    classes = (binary_synth_classes(cfg.sessions) if cfg.task == "binary"
               else multi_synth_classes(cfg.sessions))
    entries = synth_corpus(cfg.out, classes, cfg.seed)
    labels_path = Path(cfg.out) / "labels.txt"
    write_labels_file(labels_path, entries)
    for path, name in entries:
        print(f"{path},{name}")
    print(f"# labels file: {labels_path}", file=sys.stderr)
    return 0


def _guard_existing_dataset(path: Path, n: int):
    if path.exists():
        try:
            existing = read_dataset(path)
        except Exception:
            return  # not a dataset, plain overwrite
        if existing.sample_len != n:
            raise ValueError(f"{path}: existing dataset has sample length "
                             f"{existing.sample_len}, refusing to mix with {n}")


def cmd_build(args) -> int:
    cfg, _ = effective_config(args)
    _echo_config(cfg, "build")
    if not cfg.labels:
        raise ValueError("build needs --labels <file> (lines of 'pcap-path,class-name')")
    if not cfg.out:
        raise ValueError("build needs --out <path>")
    inputs = read_labels_file(cfg.labels)
    views = list(VIEW_FLAGS.values()) if args.all_views else [VIEW_FLAGS[cfg.view]]
    cats = (list(CATEGORY_FLAGS.values()) if args.all_categories
            else [CATEGORY_FLAGS[cfg.category]])
    grid = len(views) * len(cats) > 1
    out = Path(cfg.out)
    if grid:
        out.mkdir(parents=True, exist_ok=True)
    for view in views:
        for cat in cats:
            ds = build_dataset(inputs, view, cat, cfg.n, cfg.task,
                               include_non_ip=cfg.include_non_ip,
                               drop_empty=cfg.drop_empty_samples)
            path = out / f"{view.value}_{cat.value}.ftld" if grid else out
            _guard_existing_dataset(path, cfg.n)
            write_dataset(path, ds)
            counts = ", ".join(f"{k}={v}" for k, v in ds.class_counts().items())
            print(f"{path}: {len(ds.samples)} samples ({counts})")
    return 0


def cmd_inspect(args) -> int:
    cfg, _ = effective_config(args)
    _echo_config(cfg, "inspect")
    if not cfg.labels:
        raise ValueError("inspect needs --labels <file>")
    inputs = read_labels_file(cfg.labels)
    if not inputs:
        print("no input files")
        return 0
    per_class_packets: dict[str, int] = {}
    per_class_bytes: dict[str, int] = {}
    unit_counts = {v: 0 for v in VIEW_FLAGS.values()}
    total_packets = 0
    non_ip = 0
    for path, name in inputs:
        try:
            with read_pcap(path) as reader:
                pairs = [(rec, dissect(rec, reader.meta.link_type)) for rec in reader]
        except OSError as e:
            raise ValueError(f"cannot read {path}: {e}") from e
        total_packets += len(pairs)
        per_class_packets[name] = per_class_packets.get(name, 0) + len(pairs)
        per_class_bytes[name] = per_class_bytes.get(name, 0) + sum(
            rec.cap_len for rec, _ in pairs)
        non_ip += sum(1 for _, d in pairs if d.five_tuple is None)
        for view in unit_counts:
            kept = filter_packets(pairs, view, cfg.include_non_ip)
            unit_counts[view] += len(split_view(kept, view))
    print(f"files          {len(inputs)}")
    print(f"packets        {total_packets}")
    print(f"non-ip packets {non_ip}")
    for view, count in unit_counts.items():
        print(f"{view.value + ' units':<14} {count}")
    print()
    print(f"{'class':<16} {'packets':>8} {'bytes':>12}")
    for name in sorted(per_class_packets):
        print(f"{name:<16} {per_class_packets[name]:>8} {per_class_bytes[name]:>12}")
    return 0


def cmd_train(args) -> int:
    cfg, _ = effective_config(args)
    _echo_config(cfg, "train")
    if not cfg.out:
        raise ValueError("train needs --out <weights path>")
    ds = read_dataset(args.dataset)
    model_cfg = _model_config(cfg, ds.sample_len, ds.class_names)
    train_ds, val_ds = train_val_split(ds, 0.2, cfg.seed)
    ckpt, history = train(model_cfg, train_ds, val_ds, early_stop=cfg.early_stop)
    save_weights(cfg.out, ckpt)
    history_path = Path(str(cfg.out) + ".history.jsonl")
    history_path.write_text("\n".join(history.to_records()) + "\n", encoding="utf-8")
    print(history.to_text_table())
    print(f"best epoch {ckpt.best_epoch} val_acc {ckpt.best_val_accuracy:.4f}")
    print(f"# weights: {cfg.out}", file=sys.stderr)
    print(f"# history: {history_path}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    cfg, _ = effective_config(args)
    _echo_config(cfg, "eval")
    ds = read_dataset(args.dataset)
    ckpt = load_weights(args.weights)
    if len(ds.class_names) != ckpt.config.class_count:
        raise ValueError(f"dataset has {len(ds.class_names)} classes but the "
                         f"model outputs {ckpt.config.class_count}")
    report = evaluate(ckpt, ds)
    print(report.to_text_table())
    if args.confusion:
        print()
        print(report.confusion_table())
    if cfg.out:
        Path(cfg.out).write_text("\n".join(report.to_records()) + "\n",
                                 encoding="utf-8")
        print(f"# records: {cfg.out}", file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    cfg, provided = effective_config(args)
    _echo_config(cfg, "bench")
    if not cfg.labels:
        raise ValueError("bench needs --labels <file>")
    corpus = read_labels_file(cfg.labels)
    views = [VIEW_FLAGS[v.strip()] for v in args.views.split(",") if v.strip()]
    epochs = cfg.epochs if "epochs" in provided else 10  # bench default is short
    report = bench_mod.time_pipelines(
        corpus, views, cfg.n, cfg.task,
        category=CATEGORY_FLAGS[cfg.category], epochs=epochs, batch=cfg.batch,
        seed=cfg.seed, pairing=cfg.pairing, profile=cfg.profile)
    print(report.to_text_table())
    if cfg.out:
        Path(cfg.out).write_text(report.to_csv() + "\n", encoding="utf-8")
        print(f"# csv: {cfg.out}", file=sys.stderr)
    return 0


def _add_shared_options(p: argparse.ArgumentParser):
    p.add_argument("--view", choices=sorted(VIEW_FLAGS))
    p.add_argument("--category", choices=sorted(CATEGORY_FLAGS))
    p.add_argument("--n", type=int)
    p.add_argument("--task", choices=TASKS)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--profile", choices=("prose", "table"))
    p.add_argument("--pairing", choices=("paper", "standard"))
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--labels")
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--beta1", type=float)
    p.add_argument("--beta2", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--sessions", type=int)
    p.add_argument("--include-non-ip", dest="include_non_ip",
                   action="store_const", const=True)
    p.add_argument("--drop-empty-samples", dest="drop_empty_samples",
                   action="store_const", const=True)
    p.add_argument("--early-stop", dest="early_stop",
                   action="store_const", const=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bytecap",
        description="Byte-stream traffic classification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a labeled synthetic pcap corpus")
    _add_shared_options(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("build", help="build byte-vector datasets from pcaps")
    _add_shared_options(p)
    p.add_argument("--all-views", action="store_true")
    p.add_argument("--all-categories", action="store_true")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("inspect", help="corpus statistics and unit counts")
    _add_shared_options(p)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("train", help="train a model on a dataset file")
    p.add_argument("dataset")
    _add_shared_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a weights file on a dataset")
    p.add_argument("dataset")
    p.add_argument("weights")
    p.add_argument("--confusion", action="store_true")
    _add_shared_options(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="time byte-stream pipelines vs the stat baseline")
    _add_shared_options(p)
    p.add_argument("--views", default="session,flow,packet")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
