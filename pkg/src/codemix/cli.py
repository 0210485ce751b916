"""Command-line entry point.

Exit codes are stable across subcommands: 0 success, 1 usage error,
2 data error (bad input files, missing artifacts, bad config contents),
3 runtime failure.
"""
import argparse
import csv
import hashlib
import json
import socket
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Optional

from . import corpus, metrics, models, preprocess
from .corpus import ConfigError, Dataset, SplitSpec

LR_PRESETS = {"hot": 1e-4, "combined": 1e-3}
MANIFEST_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; the exit-code contract
    # reserves 2 for data errors, so route through UsageError instead
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(path: Path, command: str, config: dict, inputs: dict,
                    outputs: dict, hash_paths: dict, started: str) -> None:
    manifest = {
        "format_version": MANIFEST_VERSION,
        "command": command,
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
        "artifact_hashes": {name: _sha256(Path(p)) for name, p in hash_paths.items()},
        "timestamps": {"started": started, "finished": _now()},
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _package_file(*parts) -> Path:
    return Path(str(resources.files("codemix").joinpath("/".join(parts))))


def _preset_names():
    configs = resources.files("codemix").joinpath("configs")
    return sorted(p.name[:-5] for p in configs.iterdir() if p.name.endswith(".json"))


def resolve_config(ref: str) -> dict:
    """A config reference is a JSON file path or a shipped preset name."""
    path = Path(ref)
    if path.is_file():
        raw = path.read_text(encoding="utf-8")
    else:
        packaged = _package_file("configs", f"{ref}.json")
        if not packaged.is_file():
            raise UsageError(
                f"unknown config {ref!r}: not a file and not a preset "
                f"(presets: {', '.join(_preset_names())})")
        raw = packaged.read_text(encoding="utf-8")
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {ref} is not valid JSON: {e}")
    for key in ("name", "dataset", "language", "embedder", "classifier"):
        if key not in cfg:
            raise ConfigError(f"config {ref} is missing required key {key!r}")
    return cfg


def resolve_dataset_path(ref: str) -> Path:
    if ref.startswith("builtin:"):
        name = ref[len("builtin:"):]
        path = _package_file("data", f"{name}.csv")
        if not path.is_file():
            raise ConfigError(f"unknown builtin dataset {name!r}")
        return path
    return Path(ref)


def resolve_learning_rate(value):
    if isinstance(value, str):
        if value not in LR_PRESETS:
            raise ConfigError(
                f"unknown learning-rate preset {value!r} "
                f"(presets: {', '.join(sorted(LR_PRESETS))})")
        return LR_PRESETS[value]
    return float(value)


def _apply_pipeline(dataset: Dataset, language: str) -> int:
    pipe = preprocess.pipeline_for(language)
    emptied = 0
    for c in dataset.comments:
        c.processed_text = pipe.run(c.raw_text)
        if not c.processed_text:
            emptied += 1
    return emptied


def _report_row(report: metrics.EvalReport) -> str:
    # the 2-decimal row; full precision goes to report.json
    lines = [
        f"{'Accuracy':>10}{'Recall':>10}{'F1':>10}",
        f"{report.accuracy:>10.2f}{report.weighted_recall:>10.2f}"
        f"{report.weighted_f1:>10.2f}",
        "",
        metrics.render_confusion(report.confusion),
    ]
    return "\n".join(lines)


def _effective_config(cfg: dict, seed_override: Optional[int]) -> dict:
    """Resolve presets and the --seed override into a concrete snapshot."""
    cfg = json.loads(json.dumps(cfg))
    if seed_override is not None:
        cfg["seed"] = seed_override
        cfg.setdefault("embedder", {})["seed"] = seed_override
        cfg.setdefault("classifier", {})["seed"] = seed_override
    cfg.setdefault("seed", 0)
    clf = cfg["classifier"]
    clf["learning_rate"] = resolve_learning_rate(clf.get("learning_rate", 1e-3))
    clf.setdefault("language", cfg["language"])
    split = cfg.get("split", {})
    cfg["split"] = {
        "train_frac": split.get("train_frac", 0.8),
        "dev_frac": split.get("dev_frac", 0.1),
        "seed": cfg["seed"],
    }
    cfg["split"]["test_frac"] = round(
        1.0 - cfg["split"]["train_frac"] - cfg["split"]["dev_frac"], 12)
    return cfg


def _run_training(cfg: dict, out_dir: Path):
    """Shared by train and compare: returns (model, splits, run directory)."""
    name = cfg["name"]
    data_path = resolve_dataset_path(cfg["dataset"])
    if not data_path.is_file():
        raise FileNotFoundError(f"dataset file not found: {data_path}")
    dataset = corpus.load_csv(data_path)
    dataset.name = cfg.get("dataset_name", dataset.name)

    s = cfg["split"]
    spec = SplitSpec(train_frac=s["train_frac"], dev_frac=s["dev_frac"],
                     test_frac=s["test_frac"], seed=s["seed"])
    train_ds, dev_ds, test_ds = corpus.split(dataset, spec)
    for part in (train_ds, dev_ds, test_ds):
        _apply_pipeline(part, cfg["language"])

    embedder_spec = models.spec_from_dict(cfg["embedder"])
    clf_config = models.config_from_dict(cfg["classifier"])
    model = models.train(train_ds, dev_ds, embedder_spec, clf_config)

    run_dir = out_dir / name
    models.save_model(model, run_dir / "model")
    return model, (train_ds, dev_ds, test_ds), run_dir, data_path


def _evaluate_split(model, split_ds: Dataset) -> metrics.EvalReport:
    preds = models.predict_dataset(model, split_ds)
    golds = [c.gold_label for c in split_ds.comments]
    return metrics.evaluate(golds, preds)


def cmd_preprocess(args) -> int:
    started = _now()
    in_path = Path(args.input)
    if not in_path.is_file():
        raise FileNotFoundError(f"input file not found: {in_path}")
    out_path = Path(args.output)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    fields = ["id", "platform", "text", "language", "label", "processed_text"]
    if in_path.read_text(encoding="utf-8").strip() == "":
        # header-only output; nothing to process
        with open(out_path, "w", newline="", encoding="utf-8") as f:
            csv.DictWriter(f, fieldnames=fields).writeheader()
        rows, emptied = 0, 0
    else:
        dataset = corpus.load_csv(in_path)
        emptied = _apply_pipeline(dataset, args.language)
        with open(out_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=fields)
            writer.writeheader()
            for c in dataset.comments:
                writer.writerow({
                    "id": c.id, "platform": c.platform, "text": c.raw_text,
                    "language": c.language, "label": c.gold_label or "",
                    "processed_text": c.processed_text,
                })
        rows = len(dataset.comments)

    _write_manifest(Path(f"{out_path}.manifest.json"), "preprocess",
                    {"language": args.language},
                    {"input": str(in_path)}, {"output": str(out_path)},
                    {"output": out_path}, started)
    print(f"rows {rows}")
    print(f"emptied {emptied}")
    return 0


def cmd_train(args) -> int:
    started = _now()
    cfg = _effective_config(resolve_config(args.config), args.seed)
    out_dir = Path(args.out_dir)
    model, (train_ds, dev_ds, _), run_dir, data_path = _run_training(cfg, out_dir)

    dev_report = _evaluate_split(model, dev_ds)
    report_path = run_dir / "report.json"
    report_path.write_text(
        json.dumps({"dev": dev_report.as_dict()}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")

    _write_manifest(
        run_dir / "run_manifest.json", "train", cfg,
        {"dataset": str(data_path)},
        {"model": str(run_dir / "model"), "report": str(report_path)},
        {"model/manifest.json": run_dir / "model" / "manifest.json",
         "model/params.pt": run_dir / "model" / "params.pt",
         "report.json": report_path},
        started)

    print(f"model written to {run_dir / 'model'}")
    print(f"best epoch {model.best_epoch + 1} of {len(model.history)}")
    print("dev results:")
    print(_report_row(dev_report))
    return 0


def _load_predictions_csv(path: Path):
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or \
                not {"gold", "pred"} <= set(reader.fieldnames):
            raise ConfigError(
                f"predictions file {path} needs 'gold' and 'pred' columns")
        pairs = [(row["gold"].strip(), row["pred"].strip()) for row in reader]
    if not pairs:
        raise ValueError(f"predictions file {path} has no rows")
    return [g for g, _ in pairs], [p for _, p in pairs]


def cmd_evaluate(args) -> int:
    started = _now()
    if bool(args.predictions) == bool(args.model):
        raise UsageError("evaluate needs exactly one of --predictions or --model")

    out_dir = Path(args.out_dir) / "evaluate"
    if args.predictions:
        pred_path = Path(args.predictions)
        if not pred_path.is_file():
            raise FileNotFoundError(f"predictions file not found: {pred_path}")
        golds, preds = _load_predictions_csv(pred_path)
        report = metrics.evaluate(golds, preds)
        inputs = {"predictions": str(pred_path)}
    else:
        if not args.data:
            raise UsageError("evaluate --model also needs --data")
        model = models.load_model(args.model)
        data_path = Path(args.data)
        if not data_path.is_file():
            raise FileNotFoundError(f"test file not found: {data_path}")
        test_ds = corpus.load_csv(data_path)
        if not test_ds.comments:
            raise ValueError(f"test set {data_path} is empty")
        unlabeled = [c.id for c in test_ds.comments if c.gold_label is None]
        if unlabeled:
            raise ValueError(f"test rows without labels: {', '.join(unlabeled)}")
        _apply_pipeline(test_ds, model.config.language)
        report = _evaluate_split(model, test_ds)
        inputs = {"model": str(args.model), "data": str(data_path)}

    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n",
                           encoding="utf-8")
    _write_manifest(out_dir / "run_manifest.json", "evaluate", {}, inputs,
                    {"report": str(report_path)}, {"report.json": report_path},
                    started)
    print(_report_row(report))
    print(f"report written to {report_path}")
    return 0


def cmd_compare(args) -> int:
    started = _now()
    out_dir = Path(args.out_dir)
    rows = []
    failures = []
    for ref in args.config:
        dataset_name, name = ref, ref
        try:
            cfg = _effective_config(resolve_config(ref), args.seed)
            name = cfg["name"]
            dataset_name = cfg.get("dataset_name", cfg["dataset"])
            model, (_, _, test_ds), run_dir, _ = _run_training(cfg, out_dir)
            test_report = _evaluate_split(model, test_ds)
            (run_dir / "report.json").write_text(
                json.dumps({"test": test_report.as_dict()}, indent=2,
                           sort_keys=True) + "\n", encoding="utf-8")
            rows.append((dataset_name, name, test_report))
        except Exception as e:
            failures.append(f"{ref}: {e}")
            rows.append((dataset_name, name, None))

    table = metrics.render_comparison(rows)
    print(table)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "comparison.txt").write_text(table + "\n", encoding="utf-8")
    _write_manifest(out_dir / "compare_manifest.json", "compare",
                    {"configs": list(args.config)}, {},
                    {"table": str(out_dir / "comparison.txt")},
                    {"comparison.txt": out_dir / "comparison.txt"}, started)
    if failures:
        for line in failures:
            print(f"FAILED {line}", file=sys.stderr)
        return 3
    return 0


def cmd_export_flair(args) -> int:
    started = _now()
    in_path = Path(args.input)
    if not in_path.is_file():
        raise FileNotFoundError(f"input file not found: {in_path}")
    dataset = corpus.load_csv(in_path)
    if args.language:
        _apply_pipeline(dataset, args.language)
    out_path = Path(args.output)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    count = corpus.export_flair(dataset, out_path)
    _write_manifest(Path(f"{out_path}.manifest.json"), "export-flair",
                    {"language": args.language},
                    {"input": str(in_path)}, {"output": str(out_path)},
                    {"output": out_path}, started)
    print(f"wrote {count} lines to {out_path}")
    return 0


def cmd_serve(args) -> int:
    from .annotation import AnnotationProject
    from .annotation.service import serve

    if not 0 < args.port < 65536:
        raise UsageError(f"port {args.port} out of range 1-65535")
    try:
        socket.getaddrinfo(args.host, args.port, type=socket.SOCK_STREAM)
    except socket.gaierror as e:
        raise UsageError(f"cannot resolve host {args.host!r}: {e}")

    roster = None
    if args.annotators:
        roster = {a.strip() for a in args.annotators.split(",") if a.strip()}

    project_path = Path(args.project)
    if args.init:
        dataset = corpus.load_csv(args.init)
        project = AnnotationProject.create(project_path, dataset, roster=roster)
        stats = project.stats()
        project.close()
        print(f"project {project_path} created: {stats['pending']} pending tasks")
    elif not project_path.is_file():
        raise FileNotFoundError(
            f"project file not found: {project_path} (use --init to create one)")
    if args.init_only:
        return 0

    # fail fast on an occupied port instead of letting the server half-start
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((args.host, args.port))
    except OSError as e:
        raise RuntimeError(f"cannot bind {args.host}:{args.port}: {e}")
    finally:
        probe.close()

    print(f"serving {project_path} on http://{args.host}:{args.port}")
    serve(project_path, host=args.host, port=args.port, roster=roster)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="codemix",
                     description="hate-speech detection toolkit for English "
                                 "and Hinglish text")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="override every seed in the run")
    common.add_argument("--out-dir", default="runs",
                        help="directory for artifacts (default: runs)")

    p = sub.add_parser("preprocess", parents=[common],
                       help="clean a comment CSV with a language pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--language", required=True, choices=["english", "hinglish"])
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", parents=[common],
                       help="train a classifier from a config file or preset")
    p.add_argument("--config", required=True,
                   help="config JSON path or preset name")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common],
                       help="score a model on a test CSV, or score a "
                            "gold/pred predictions file offline")
    p.add_argument("--model", help="model artifact directory")
    p.add_argument("--data", help="labeled test CSV (with --model)")
    p.add_argument("--predictions", help="CSV with gold,pred columns")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", parents=[common],
                       help="train and evaluate several configs into one table")
    p.add_argument("--config", action="append", required=True,
                   help="repeatable config reference")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export-flair", parents=[common],
                       help="write __label__<class> <text> lines")
    p.add_argument("--input", required=True)
    p.add_argument("--language", choices=["english", "hinglish"],
                   help="preprocess before export")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_export_flair)

    p = sub.add_parser("serve", parents=[common],
                       help="run the annotation service")
    p.add_argument("--project", required=True, help="annotation project file")
    p.add_argument("--init", help="create the project from this comment CSV")
    p.add_argument("--init-only", action="store_true",
                   help="create the project and exit")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--annotators", help="comma-separated allowed annotator ids")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ConfigError, FileNotFoundError, FileExistsError, ValueError,
            LookupError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 0
    except Exception as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
