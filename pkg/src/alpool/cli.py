"""``alpool`` command line: ``synth``, ``run`` and ``report``.

Exit codes: 0 success, 1 runtime or data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from .acquisition import STRATEGY_NAMES
from .corpus import CorpusFormatError, load_corpus
from .engine import (
    ExperimentConfig,
    PreparedCorpus,
    prepare_corpus,
    read_results_csv,
    run_experiment,
    write_results_csv,
)
from .models import MODEL_KINDS, canonical_kind
from .synthgen import SynthSpec, write_synthetic

log = logging.getLogger("alpool")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

RUN_DEFAULTS = {
    "strategies": "random",
    "models": "feedforward_nn",
    "seeds": "0",
    "iterations": 300,
    "batch": 10,
    "topk": 10,
    "jobs": 1,
    "outdir": "results",
    "threshold": 0.5,
    "train_fraction": 0.7,
    "validation_fraction": 0.1,
    "split_seed": 0,
    "max_features": 20_000,
    "ts_candidates": 50,
    "hybrid_k": 10,
    "timing": False,
}
_INT_KEYS = {"iterations", "batch", "topk", "jobs", "split_seed", "max_features", "ts_candidates", "hybrid_k"}
_FLOAT_KEYS = {"threshold", "train_fraction", "validation_fraction"}


class UsageError(Exception):
    pass


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {value}")
    return value


def _configure_logging():
    name = os.environ.get("ALPOOL_LOG", "info").lower()
    level = LOG_LEVELS.get(name, logging.INFO)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alpool", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic multi-label corpus")
    defaults = SynthSpec()
    p.add_argument("--docs", type=_positive_int, default=defaults.n_docs)
    p.add_argument("--labels", type=_positive_int, default=defaults.n_labels)
    p.add_argument("--vocab", type=_positive_int, default=defaults.vocab_size)
    p.add_argument("--tokens", type=_positive_int, default=defaults.tokens_per_doc)
    p.add_argument("--exponent", type=_positive_float, default=defaults.power_exponent)
    p.add_argument("--signal", type=_positive_float, default=defaults.label_signal_strength)
    p.add_argument("--seed", type=int, default=defaults.rng_seed)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("run", help="run an experiment grid over a corpus")
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument("--config", type=Path, help="key = value file; flags override it")
    p.add_argument("--strategies", "--strategy", help="comma-separated strategy names")
    p.add_argument("--models", "--model", help="comma-separated model kinds")
    p.add_argument("--seeds", "--seed", help="comma-separated integer seeds")
    p.add_argument("--iterations", type=_positive_int)
    p.add_argument("--batch", type=_positive_int)
    p.add_argument("--topk", type=_positive_int)
    p.add_argument("--jobs", type=_positive_int)
    p.add_argument("--outdir", type=Path)
    p.add_argument("--timing", action="store_true", default=None,
                   help="record wall-clock times (makes outputs non-reproducible)")

    p = sub.add_parser("report", help="summarize result CSVs")
    p.add_argument("--indir", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="markdown table path")
    p.add_argument("--curves", type=Path, help="learning-curve CSV (default: <out>.curves.csv)")
    return parser


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file (``#`` comments, blank lines ignored)."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in RUN_DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _coerce(key, value):
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key == "timing":
        return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
    return value


@dataclass(frozen=True)
class RunManifest:
    config_path: Path | None
    experiments: tuple
    outdir: Path
    settings: dict


def resolve_run(args) -> RunManifest:
    settings = dict(RUN_DEFAULTS)
    if args.config is not None:
        settings.update(read_config(args.config))
    for key in RUN_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    try:
        settings = {k: _coerce(k, v) for k, v in settings.items()}
    except ValueError as exc:
        raise UsageError(f"bad configuration value: {exc}") from None

    strategies = [s.strip() for s in str(settings["strategies"]).split(",") if s.strip()]
    bad = [s for s in strategies if s not in STRATEGY_NAMES]
    if bad or not strategies:
        raise UsageError(
            f"unknown strategy {', '.join(bad) or '(none)'}; accepted strategies: "
            + ", ".join(STRATEGY_NAMES)
        )
    models = []
    for m in str(settings["models"]).split(","):
        if not m.strip():
            continue
        try:
            models.append(canonical_kind(m.strip()))
        except ValueError:
            raise UsageError(
                f"unknown model {m.strip()!r}; accepted models: {', '.join(MODEL_KINDS)}"
            ) from None
    try:
        seeds = [int(s) for s in str(settings["seeds"]).split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"seeds must be integers, got {settings['seeds']!r}") from None
    if not models or not seeds:
        raise UsageError("at least one model and one seed are required")
    for key in ("iterations", "batch", "topk", "jobs"):
        if settings[key] < 1:
            raise UsageError(f"{key} must be positive")

    experiments = []
    for model in models:
        for strategy in strategies:
            for seed in seeds:
                try:
                    experiments.append(ExperimentConfig(
                        strategy=strategy, model=model, batch_size=settings["batch"],
                        max_iterations=settings["iterations"], threshold=settings["threshold"],
                        rng_seed=seed, ts_candidates_per_cluster=settings["ts_candidates"],
                        hybrid_cluster_k=settings["hybrid_k"], record_timing=settings["timing"],
                    ))
                except ValueError as exc:
                    raise UsageError(str(exc)) from None
    ids = [e.experiment_id for e in experiments]
    if len(set(ids)) != len(ids):
        raise UsageError("grid contains duplicate cells")
    return RunManifest(args.config, tuple(experiments), Path(settings["outdir"]), settings)


def _run_cell(config: ExperimentConfig, corpus: PreparedCorpus, outdir: Path) -> Path:
    records = run_experiment(config, corpus)
    return write_results_csv(outdir / f"{config.experiment_id}.csv", config, records)


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_docs=args.docs, n_labels=args.labels, vocab_size=args.vocab,
        tokens_per_doc=args.tokens, power_exponent=args.exponent,
        label_signal_strength=args.signal, rng_seed=args.seed,
    )
    try:
        spec.validate()
    except ValueError as exc:
        print(f"alpool synth: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    try:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        corpus, manifest = write_synthetic(spec, args.out)
    except OSError as exc:
        print(f"alpool synth: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    log.info("wrote %s and %s", corpus, manifest)
    return EXIT_OK


def cmd_run(args) -> int:
    manifest = resolve_run(args)
    s = manifest.settings
    try:
        docs = load_corpus(args.corpus)
        corpus = prepare_corpus(
            docs, top_k=s["topk"], train_fraction=s["train_fraction"],
            validation_fraction=s["validation_fraction"], split_seed=s["split_seed"],
            max_features=s["max_features"],
        )
    except (OSError, CorpusFormatError, ValueError) as exc:
        print(f"alpool run: cannot use corpus {args.corpus}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    log.info(
        "corpus: %d train / %d test documents, %d features, %d labels; %d grid cells",
        len(corpus.train_ids), len(corpus.test_ids), corpus.vocabulary.size,
        corpus.label_space.k, len(manifest.experiments),
    )
    outdir = manifest.outdir
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        if s["jobs"] > 1 and len(manifest.experiments) > 1:
            with ProcessPoolExecutor(max_workers=s["jobs"]) as pool:
                futures = [pool.submit(_run_cell, c, corpus, outdir) for c in manifest.experiments]
                for fut in futures:
                    log.info("wrote %s", fut.result())
        else:
            for c in manifest.experiments:
                log.info("wrote %s", _run_cell(c, corpus, outdir))
    except ValueError as exc:
        print(f"alpool run: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def round_half_up(x: float, places: int = 2) -> str:
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))


def _strategy_rank(name):
    return STRATEGY_NAMES.index(name) if name in STRATEGY_NAMES else len(STRATEGY_NAMES)


def summarize(rows):
    """Final-iteration seed means per (model, strategy) and learning curves."""
    finals = defaultdict(lambda: defaultdict(list))
    by_file = defaultdict(list)
    for r in rows:
        by_file[r["experiment_id"], r["_file"]].append(r)
    for recs in by_file.values():
        last = max(r["iteration"] for r in recs)
        for r in recs:
            if r["iteration"] == last:
                key = (r["model"], r["strategy"])
                for metric in ("precision_micro", "recall_micro", "f1_micro"):
                    finals[key][(r["split"], metric)].append(r[metric])
                finals[key]["seeds"].append(r["seed"])
    curves = defaultdict(list)
    for r in rows:
        curves[r["strategy"], r["model"], r["n_labeled"], r["split"]].append(r["f1_micro"])
    return finals, curves


def render_table(finals) -> str:
    header = (
        "| Model | Strategy | Train Prec. | Train Recall | Train F1 "
        "| Test Prec. | Test Recall | Test F1 | Seeds |"
    )
    lines = [header, "|" + "---|" * 9]
    for model, strategy in sorted(finals, key=lambda k: (k[0], _strategy_rank(k[1]), k[1])):
        cell = finals[model, strategy]
        values = []
        for split in ("train", "test"):
            for metric in ("precision_micro", "recall_micro", "f1_micro"):
                vals = cell.get((split, metric), [])
                values.append(round_half_up(np.mean(vals)) if vals else "-")
        n_seeds = len(set(cell["seeds"]))
        lines.append(f"| {model} | {strategy} | " + " | ".join(values) + f" | {n_seeds} |")
    return "\n".join(lines) + "\n"


def render_curves(curves) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["strategy", "model", "n_labeled", "split", "f1_micro_mean", "f1_micro_std"])
    for key in sorted(curves, key=lambda k: (_strategy_rank(k[0]), k[0], k[1], k[2], k[3])):
        vals = np.array(curves[key])
        w.writerow([*key, f"{vals.mean():.6f}", f"{vals.std():.6f}"])
    return buf.getvalue()


def cmd_report(args) -> int:
    files = sorted(Path(args.indir).glob("*.csv")) if Path(args.indir).is_dir() else []
    if not files:
        print(f"alpool report: no result CSVs in {args.indir}", file=sys.stderr)
        return EXIT_FAILURE
    rows = []
    try:
        for f in files:
            for r in read_results_csv(f):
                r["_file"] = f.name
                rows.append(r)
    except (OSError, ValueError, KeyError) as exc:
        print(f"alpool report: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    finals, curves = summarize(rows)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_table(finals), encoding="utf-8")
    curves_path = args.curves or out.with_name(out.stem + ".curves.csv")
    Path(curves_path).write_text(render_curves(curves), encoding="utf-8")
    log.info("wrote %s and %s", out, curves_path)
    return EXIT_OK


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"synth": cmd_synth, "run": cmd_run, "report": cmd_report}
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"alpool {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
