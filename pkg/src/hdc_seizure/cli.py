"""The hdc-seizure command line.

Pipeline stages, in the order a fresh experiment runs them:

  synth      generate a synthetic corpus (or: ingest, for an EDF tree)
  featurize  window every recording and build per-seizure feature files
  train      LOSO cross-validation for each strategy
  evaluate   re-score saved predictions under the current post-processing
  compare    paired Wilcoxon comparisons between strategies
  bench      training-time and model-size measurements
  report     aggregate everything into one CSV + JSON

Data live under a root directory given by ``[data] root`` in the config
or the HDC_SEIZURE_DATA environment variable. Results go to ``--out`` or
``<root>/results/<experiment-name>``. Usage problems exit 2; data and IO
problems exit 1.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, _kernels
from .config import ConfigError, ExperimentConfig, load_config
from .dataio import (
    BIPOLAR_CHANNELS,
    Annotation,
    SynthSpec,
    annotations_for,
    build_dataset,
    load_subject,
    parse_chb_summary,
    read_annotations,
    read_csv_recording,
    read_edf,
    synth_generate,
    write_annotations,
    write_csv_recording,
    write_subject,
)
from .dataio.synth import corpus_states
from .evaluation import MetricsReport
from .features import build_registry, extract_features
from .harness import (
    PER_FOLD_COLUMNS,
    bench_strategies,
    compare_strategies,
    loso_cv,
    prepare_folds,
    read_predictions_csv,
    score_predictions,
    write_bench_csv,
    write_comparison_csv,
    write_per_fold_csv,
    write_per_subject_csv,
    write_predictions_csv,
)
from .learning import STRATEGIES

DATA_ENV = "HDC_SEIZURE_DATA"

_EXIT_OK = 0
_EXIT_DATA = 1
_EXIT_USAGE = 2


class DataError(Exception):
    """Problem with inputs on disk; exits 1."""


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------


def _resolve_root(cfg: ExperimentConfig) -> str:
    root = cfg.data_root or os.environ.get(DATA_ENV, "")
    if not root:
        raise ConfigError(
            f"no data root: set [data] root in the config or the {DATA_ENV} environment variable"
        )
    return root


def _results_dir(args, cfg: ExperimentConfig) -> str:
    base = args.out or cfg.out or os.path.join(_resolve_root(cfg), "results")
    return os.path.join(base, cfg.name)


def _write_stage_manifest(out_dir: str, stage: str, args, cfg: ExperimentConfig, extra: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "stage": stage,
        "config": cfg.as_dict(),
        "cli": {
            "config": args.config,
            "seed": args.seed,
            "strategies": list(getattr(args, "strategy", None) or []),
            "jobs": getattr(args, "jobs", 1),
            "force": getattr(args, "force", False),
            "out": args.out,
        },
        "package_version": __version__,
        "machine": {
            "platform": platform.platform(),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "kernel_backend": _kernels.BACKEND,
            "cpus": os.cpu_count(),
        },
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    manifest.update(extra)
    with open(os.path.join(out_dir, f"{stage}-manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _pmap(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _read_ingest_manifest(root: str) -> dict:
    path = os.path.join(root, "ingest-manifest.json")
    if not os.path.exists(path):
        raise DataError(f"{path} not found; run 'synth' or 'ingest' first")
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _strategies(args, cfg: ExperimentConfig) -> list:
    tags = list(args.strategy) if getattr(args, "strategy", None) else list(cfg.strategies)
    for tag in tags:
        if tag not in STRATEGIES:
            raise ConfigError(f"unknown strategy {tag!r}; valid tags: {', '.join(STRATEGIES)}")
    return tags


def _subject_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(args, cfg: ExperimentConfig) -> int:
    root = _resolve_root(cfg)
    rec_dir = os.path.join(root, "recordings")
    if os.path.exists(os.path.join(root, "ingest-manifest.json")) and not args.force:
        raise DataError(f"{root} already holds a corpus; pass --force to regenerate")
    backgrounds, weights, seizure = corpus_states(
        cfg.synth_background_modes, cfg.synth_minority_weight
    )
    spec = SynthSpec(
        duration_sec=cfg.synth_duration_sec,
        fs=cfg.synth_fs,
        channels=tuple(f"ch{c}" for c in range(cfg.synth_channels)),
        background_states=backgrounds,
        seizure_state=seizure,
        n_seizures=cfg.synth_seizures,
        seizure_duration_sec=cfg.synth_seizure_duration_sec,
        background_weights=weights,
        mean_dwell_sec=cfg.synth_mean_dwell_sec,
        gain_jitter=cfg.synth_gain_jitter,
        freq_jitter=cfg.synth_freq_jitter,
    )
    rows = []
    index = {}
    for s in range(cfg.synth_subjects):
        subject = f"s{s + 1:02d}"
        rec, anns = synth_generate(spec, _subject_seed(cfg.seed, s))
        subject_dir = os.path.join(rec_dir, subject)
        os.makedirs(subject_dir, exist_ok=True)
        fname = "rec000.csv"
        write_csv_recording(os.path.join(subject_dir, fname), rec)
        rows.extend(Annotation(subject, fname, a, b) for a, b in anns)
        index[subject] = [os.path.join("recordings", subject, fname)]
        print(f"synth: {subject}: {rec.duration:.0f} s, {len(anns)} seizures")
    write_annotations(os.path.join(root, "annotations.csv"), rows)
    with open(os.path.join(root, "ingest-manifest.json"), "w", encoding="utf-8") as fh:
        json.dump({"source": "synth", "subjects": index}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_stage_manifest(root, "synth", args, cfg, {"subjects": sorted(index)})
    return _EXIT_OK


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------


def cmd_ingest(args, cfg: ExperimentConfig) -> int:
    """Index an EDF tree (one directory per subject) and convert seizure
    summaries into the annotation CSV."""
    root = _resolve_root(cfg)
    if not os.path.isdir(root):
        raise DataError(f"data root {root} is not a directory")
    rows = []
    index = {}
    for entry in sorted(os.listdir(root)):
        subject_dir = os.path.join(root, entry)
        if not os.path.isdir(subject_dir):
            continue
        edfs = sorted(f for f in os.listdir(subject_dir) if f.lower().endswith(".edf"))
        if not edfs:
            continue
        summaries = sorted(f for f in os.listdir(subject_dir) if f.endswith("summary.txt"))
        for summary in summaries:
            with open(os.path.join(subject_dir, summary), "r", encoding="utf-8", errors="replace") as fh:
                rows.extend(parse_chb_summary(fh.read(), entry))
        index[entry] = [os.path.join(entry, f) for f in edfs]
        print(f"ingest: {entry}: {len(edfs)} recordings")
    if not index:
        raise DataError(f"no subject directories with .edf files under {root}")
    annotated = {a.file for a in rows}
    # featurize reads only recordings that contain a seizure; everything else
    # would only dilute the non-seizure pool it never samples from
    index = {
        s: [f for f in files if os.path.basename(f) in annotated]
        for s, files in index.items()
    }
    index = {s: files for s, files in index.items() if files}
    if not index:
        raise DataError(f"no seizure annotations found in any summary file under {root}")
    write_annotations(os.path.join(root, "annotations.csv"), rows)
    with open(os.path.join(root, "ingest-manifest.json"), "w", encoding="utf-8") as fh:
        json.dump({"source": "edf", "subjects": index}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_stage_manifest(root, "ingest", args, cfg, {"subjects": sorted(index)})
    return _EXIT_OK


# ---------------------------------------------------------------------------
# featurize
# ---------------------------------------------------------------------------


def _featurize_subject(work) -> tuple:
    root, subject, rel_files, ann_rows, cfg = work
    registry = build_registry()
    items = []
    names = []
    for rel in rel_files:
        path = os.path.join(root, rel)
        name = os.path.basename(rel)
        anns = annotations_for(ann_rows, subject, name)
        if rel.lower().endswith(".edf"):
            rec = read_edf(path, channels=BIPOLAR_CHANNELS)
        else:
            rec = read_csv_recording(path)
        rec = rec.with_annotations(anns)
        items.append((extract_features(rec, cfg.window_sec, cfg.step_sec, registry), anns))
        names.append(name)
    dataset = build_dataset(
        subject, items,
        ratio=cfg.ratio,
        pre_excl_sec=cfg.pre_excl_sec,
        post_excl_sec=cfg.post_excl_sec,
        seed=cfg.seed,
        names=names,
    )
    out_dir = os.path.join(root, "features", subject)
    write_subject(out_dir, dataset)
    return subject, [len(f.table) for f in dataset.files]


def cmd_featurize(args, cfg: ExperimentConfig) -> int:
    root = _resolve_root(cfg)
    manifest = _read_ingest_manifest(root)
    ann_rows = read_annotations(os.path.join(root, "annotations.csv"))
    subjects_with = {a.subject_id for a in ann_rows}
    skipped_no_seizure = sorted(set(manifest["subjects"]) - subjects_with)
    work = []
    done = []
    for subject in sorted(manifest["subjects"]):
        if subject not in subjects_with:
            continue
        if (
            os.path.exists(os.path.join(root, "features", subject, "manifest.json"))
            and not args.force
        ):
            done.append(subject)
            continue
        work.append((root, subject, manifest["subjects"][subject], ann_rows, cfg))
    for subject in done:
        print(f"featurize: {subject}: already done, skipping (use --force to redo)")
    results = _pmap(_featurize_subject, work, args.jobs)
    for subject, counts in results:
        print(f"featurize: {subject}: {len(counts)} seizure files, {sum(counts)} windows")
    _write_stage_manifest(
        os.path.join(root, "features"), "featurize", args, cfg,
        {
            "featurized": sorted(s for s, _ in results),
            "skipped_existing": done,
            "skipped_no_seizures": skipped_no_seizure,
        },
    )
    return _EXIT_OK


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def _feature_subjects(root: str) -> list:
    feat_dir = os.path.join(root, "features")
    if not os.path.isdir(feat_dir):
        raise DataError(f"{feat_dir} not found; run 'featurize' first")
    subjects = sorted(
        s for s in os.listdir(feat_dir)
        if os.path.exists(os.path.join(feat_dir, s, "manifest.json"))
    )
    if not subjects:
        raise DataError(f"no featurized subjects under {feat_dir}")
    return subjects


def _train_subject(work) -> tuple:
    root, subject, tags, cfg = work
    try:
        dataset = load_subject(os.path.join(root, "features", subject))
        folds = prepare_folds(dataset, cfg)
    except (ValueError, OSError) as exc:
        return subject, {tag: ("error", str(exc)) for tag in tags}
    out = {}
    for tag in tags:
        try:
            out[tag] = loso_cv(dataset, tag, cfg, folds)
        except ValueError as exc:
            out[tag] = ("error", str(exc))
    return subject, out


def cmd_train(args, cfg: ExperimentConfig) -> int:
    root = _resolve_root(cfg)
    tags = _strategies(args, cfg)
    exp_dir = _results_dir(args, cfg)
    pending = []
    for tag in tags:
        if os.path.exists(os.path.join(exp_dir, tag, "per_fold.csv")) and not args.force:
            print(f"train: {tag}: results exist, skipping (use --force to retrain)")
        else:
            pending.append(tag)
    if not pending:
        return _EXIT_OK
    subjects = _feature_subjects(root)
    work = [(root, s, pending, cfg) for s in subjects]
    by_subject = dict(_pmap(_train_subject, work, args.jobs))
    for tag in pending:
        results = []
        failures = {}
        for subject in subjects:
            res = by_subject[subject][tag]
            if isinstance(res, tuple):
                failures[subject] = res[1]
                print(f"train: {tag}: {subject} FAILED: {res[1]}", file=sys.stderr)
            else:
                results.append(res)
                print(f"train: {tag}: {subject}: F1DEmean {res.mean_f1de:.3f} over {len(res.folds)} folds")
        tag_dir = os.path.join(exp_dir, tag)
        os.makedirs(tag_dir, exist_ok=True)
        write_per_fold_csv(os.path.join(tag_dir, "per_fold.csv"), results)
        write_per_subject_csv(os.path.join(tag_dir, "per_subject.csv"), results, failures)
        write_predictions_csv(os.path.join(tag_dir, "predictions.csv"), results)
    _write_stage_manifest(exp_dir, "train", args, cfg, {"strategies": pending, "subjects": subjects})
    return _EXIT_OK


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def _metric_strs(report: MetricsReport) -> dict:
    out = {}
    for name in MetricsReport.SCORE_FIELDS:
        out[name] = f"{getattr(report, name):.17g}"
    for name in MetricsReport.COUNT_FIELDS:
        out[name] = str(getattr(report, name))
    return out


def cmd_evaluate(args, cfg: ExperimentConfig) -> int:
    """Recompute metrics from saved raw predictions under the current
    post-processing parameters, preserving the training-only columns."""
    exp_dir = _results_dir(args, cfg)
    tags = _strategies(args, cfg)
    for tag in tags:
        tag_dir = os.path.join(exp_dir, tag)
        pred_path = os.path.join(tag_dir, "predictions.csv")
        if not os.path.exists(pred_path):
            raise DataError(f"{pred_path} not found; run 'train' first")
        groups = read_predictions_csv(pred_path)
        old_rows = {}
        fold_path = os.path.join(tag_dir, "per_fold.csv")
        if os.path.exists(fold_path):
            with open(fold_path, "r", encoding="utf-8", newline="") as fh:
                for row in csv.DictReader(fh):
                    old_rows[(row["subject_id"], int(row["fold"]))] = row
        new_rows = []
        subject_scores: dict = {}
        for (subject, fold) in sorted(groups):
            preds, truth = groups[(subject, fold)]
            report = score_predictions(preds, truth, cfg)
            row = dict.fromkeys(PER_FOLD_COLUMNS, "")
            row.update(old_rows.get((subject, fold), {}))
            row.update({"subject_id": subject, "fold": fold, "strategy": tag})
            row.update(_metric_strs(report))
            new_rows.append(row)
            subject_scores.setdefault(subject, []).append(report)
        with open(fold_path, "w", encoding="utf-8", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=PER_FOLD_COLUMNS)
            w.writeheader()
            w.writerows(new_rows)
        failures = {}
        subj_path = os.path.join(tag_dir, "per_subject.csv")
        if os.path.exists(subj_path):
            with open(subj_path, "r", encoding="utf-8", newline="") as fh:
                for row in csv.DictReader(fh):
                    if row["failed"] == "1":
                        failures[row["subject_id"]] = row["error"]
        with open(subj_path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("subject_id", "strategy", "n_folds", "failed", "error")
                       + MetricsReport.SCORE_FIELDS + MetricsReport.COUNT_FIELDS)
            all_subjects = sorted(set(subject_scores) | set(failures))
            for subject in all_subjects:
                if subject in failures:
                    w.writerow([subject, "", 0, 1, failures[subject]] + [""] * 13)
                    continue
                reports = subject_scores[subject]
                means = [
                    f"{np.mean([getattr(r, f) for r in reports]):.17g}"
                    for f in MetricsReport.SCORE_FIELDS + MetricsReport.COUNT_FIELDS
                ]
                w.writerow([subject, tag, len(reports), 0, ""] + means)
        n = len(subject_scores)
        print(f"evaluate: {tag}: rescored {n} subjects at smooth={cfg.smooth_sec}s merge={cfg.merge_gap_sec}s")
    _write_stage_manifest(exp_dir, "evaluate", args, cfg, {"strategies": tags})
    return _EXIT_OK


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def _read_subject_scores(path) -> dict:
    scores: dict = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            if row["failed"] == "1":
                scores[row["subject_id"]] = None
            else:
                scores[row["subject_id"]] = float(row["f1_de_mean"])
    return scores


def _read_baseline_scores(path) -> dict:
    scores: dict = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"subject_id", "f1_de_mean"}
        if reader.fieldnames is None or not need.issubset(reader.fieldnames):
            raise DataError(f"{path}: baseline CSV needs columns subject_id,f1_de_mean")
        for row in reader:
            scores[row["subject_id"]] = float(row["f1_de_mean"])
    return scores


def cmd_compare(args, cfg: ExperimentConfig) -> int:
    exp_dir = _results_dir(args, cfg)
    tags = _strategies(args, cfg)
    available = {}
    for tag in tags:
        path = os.path.join(exp_dir, tag, "per_subject.csv")
        if not os.path.exists(path):
            raise DataError(f"{path} not found; run 'train' for {tag} first")
        available[tag] = _read_subject_scores(path)
    if args.baseline:
        baseline_name = os.path.splitext(os.path.basename(args.baseline))[0]
        base = _read_baseline_scores(args.baseline)
        pairs = [(tag, baseline_name, available[tag], base) for tag in tags]
    elif args.strategy and len(args.strategy) == 2:
        a, b = tags
        pairs = [(a, b, available[a], available[b])]
    else:
        anchor = tags[0] if args.strategy else "2C"
        if anchor not in available:
            raise DataError(f"anchor strategy {anchor} has no results under {exp_dir}")
        pairs = [
            (tag, anchor, available[tag], available[anchor]) for tag in tags if tag != anchor
        ]
    rows = [compare_strategies(a_name, b_name, a, b) for a_name, b_name, a, b in pairs]
    write_comparison_csv(os.path.join(exp_dir, "comparison.csv"), rows)
    for r in rows:
        flag = f" [{';'.join(r.flags)}]" if r.flags else ""
        print(
            f"compare: {r.strategy_a} vs {r.strategy_b}: "
            f"diff {r.mean_diff:+.4f}, p = {r.p_value:.4g} ({r.method}){flag}"
        )
    _write_stage_manifest(exp_dir, "compare", args, cfg, {"pairs": [[r.strategy_a, r.strategy_b] for r in rows]})
    return _EXIT_OK


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def cmd_bench(args, cfg: ExperimentConfig) -> int:
    root = _resolve_root(cfg)
    tags = _strategies(args, cfg)
    subjects = _feature_subjects(root)
    exp_dir = _results_dir(args, cfg)
    all_rows = []
    for subject in subjects:  # single lane by design, whatever --jobs says
        dataset = load_subject(os.path.join(root, "features", subject))
        rows = bench_strategies(dataset, tags, cfg)
        all_rows.extend(rows)
        print(f"bench: {subject}: " + ", ".join(f"{r.strategy} {r.time_mean_sec * 1e3:.1f} ms" for r in rows))
    # aggregate over subjects: mean per training call, relative to 2C
    order = ["2C"] + [t for t in tags if t != "2C"]
    agg = {}
    for tag in order:
        times = [t for r in all_rows if r.strategy == tag for t in r.time_per_fold]
        sizes = [b for r in all_rows if r.strategy == tag for b in r.bytes_per_fold]
        agg[tag] = (times, sizes)
    base_t = float(np.mean(agg["2C"][0]))
    base_b = float(np.mean(agg["2C"][1]))
    from .harness import BenchRow

    for tag in order:
        times, sizes = agg[tag]
        all_rows.append(
            BenchRow(
                subject_id="ALL",
                strategy=tag,
                n_folds=len(times),
                time_mean_sec=float(np.mean(times)),
                time_total_sec=float(np.sum(times)),
                time_rel=float(np.mean(times)) / base_t,
                bytes_mean=float(np.mean(sizes)),
                bytes_rel=float(np.mean(sizes)) / base_b,
            )
        )
    os.makedirs(exp_dir, exist_ok=True)
    write_bench_csv(os.path.join(exp_dir, "bench.csv"), all_rows)
    _write_stage_manifest(exp_dir, "bench", args, cfg, {"strategies": tags, "subjects": subjects})
    return _EXIT_OK


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def cmd_report(args, cfg: ExperimentConfig) -> int:
    exp_dir = _results_dir(args, cfg)
    if not os.path.isdir(exp_dir):
        raise DataError(f"{exp_dir} not found; run 'train' first")
    strategies = sorted(
        t for t in os.listdir(exp_dir)
        if os.path.exists(os.path.join(exp_dir, t, "per_subject.csv"))
    )
    if not strategies:
        raise DataError(f"no per_subject.csv files under {exp_dir}")
    metric_names = MetricsReport.SCORE_FIELDS + MetricsReport.COUNT_FIELDS
    agg_rows = []
    agg_json: dict = {"experiment": cfg.name, "strategies": {}, "comparison": [], "bench": []}
    for tag in strategies:
        with open(os.path.join(exp_dir, tag, "per_subject.csv"), "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
        ok = [r for r in rows if r["failed"] != "1"]
        failed = [r for r in rows if r["failed"] == "1"]
        means = {m: float(np.mean([float(r[m]) for r in ok])) if ok else float("nan") for m in metric_names}
        agg_rows.append([tag, len(ok), len(failed)] + [f"{means[m]:.17g}" for m in metric_names])
        agg_json["strategies"][tag] = {
            "n_subjects": len(ok),
            "n_failed": len(failed),
            "mean": means,
            "per_subject": {r["subject_id"]: float(r["f1_de_mean"]) for r in ok},
        }
        print(f"report: {tag}: F1DEmean {means['f1_de_mean']:.4f} over {len(ok)} subjects")
    with open(os.path.join(exp_dir, "aggregate.csv"), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["strategy", "n_subjects", "n_failed"] + list(metric_names))
        w.writerows(agg_rows)
    for name in ("comparison", "bench"):
        path = os.path.join(exp_dir, f"{name}.csv")
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8", newline="") as fh:
                agg_json[name] = list(csv.DictReader(fh))
    with open(os.path.join(exp_dir, "aggregate.json"), "w", encoding="utf-8") as fh:
        json.dump(agg_json, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_stage_manifest(exp_dir, "report", args, cfg, {"strategies": strategies})
    return _EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdc-seizure",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    stages = {
        "synth": (cmd_synth, "generate a synthetic corpus under the data root"),
        "ingest": (cmd_ingest, "index an EDF tree and convert seizure summaries"),
        "featurize": (cmd_featurize, "extract windows and build per-seizure feature files"),
        "train": (cmd_train, "run LOSO cross-validation for each strategy"),
        "evaluate": (cmd_evaluate, "re-score saved predictions with current post-processing"),
        "compare": (cmd_compare, "paired Wilcoxon comparison between strategies"),
        "bench": (cmd_bench, "measure training time and model size"),
        "report": (cmd_report, "aggregate results into one CSV and JSON"),
    }
    for name, (fn, help_text) in stages.items():
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=fn)
        p.add_argument("--config", help="experiment config file (sectioned key=value)")
        p.add_argument("--seed", type=int, help="override the experiment seed")
        p.add_argument(
            "--strategy", action="append",
            help=f"strategy tag (repeatable); one of {', '.join(STRATEGIES)}",
        )
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="parallel worker processes (default: CPU count)")
        p.add_argument("--force", action="store_true", help="redo work even if outputs exist")
        p.add_argument("--out", help="results base directory (default: <root>/results)")
        if name == "compare":
            p.add_argument("--baseline", help="external per-subject scores CSV (subject_id,f1_de_mean)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out:
            cfg.out = args.out
        cfg.validate()
        if getattr(args, "strategy", None):
            _strategies(args, cfg)  # reject bad tags before any work
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"hdc-seizure {args.command}: usage error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except (DataError, OSError, ValueError) as exc:
        print(f"hdc-seizure {args.command}: error: {exc}", file=sys.stderr)
        return _EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
