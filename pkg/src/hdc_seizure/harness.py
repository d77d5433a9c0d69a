"""Leave-one-seizure-out cross-validation, comparison, and benchmarking.

Fold preparation encodes each fold once so every strategy trains on the
same encoded windows. The item memory (including normalization bounds) is
refit per fold from the training files only; nothing about the held-out
file influences any fitted artifact.
"""

from __future__ import annotations

import csv
import math
import time
import zlib
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .dataio.dataset import SubjectDataset
from .encoder import ItemMemory, encode_table, fit_item_memory
from .evaluation import (
    InsufficientDataError,
    LabelSequence,
    MetricsReport,
    evaluate_sequences,
    post_process,
    wilcoxon_signed_rank,
)
from .learning import (
    EncodedDataset,
    EncodedFile,
    Model,
    StopRule,
    predict_file,
    serialize_model,
    train_strategy,
)

__all__ = [
    "Fold",
    "FoldScore",
    "SubjectResult",
    "ComparisonRow",
    "BenchRow",
    "prepare_folds",
    "train_fold",
    "loso_cv",
    "compare_strategies",
    "bench_strategies",
    "write_per_fold_csv",
    "write_per_subject_csv",
    "write_predictions_csv",
    "read_predictions_csv",
    "write_comparison_csv",
    "write_bench_csv",
    "PER_FOLD_COLUMNS",
    "PER_SUBJECT_COLUMNS",
]


def _fold_seed(seed: int, subject_id: str, fold_index: int) -> int:
    key = zlib.crc32(subject_id.encode("utf-8"))
    return int(np.random.SeedSequence([seed, key, fold_index]).generate_state(1)[0])


@dataclass
class Fold:
    """One LOSO split, encoded and ready for any strategy."""

    index: int  # 1-based index of the held-out seizure file
    item_memory: ItemMemory
    train: EncodedDataset
    test: EncodedFile
    note: str = ""


def prepare_folds(dataset: SubjectDataset, cfg: ExperimentConfig) -> list:
    """Fit an item memory and encode train/test windows for every fold.

    A single-file subject yields one degenerate fold that trains and tests
    on the same file, marked in ``note``.
    """
    if not dataset.files:
        raise ValueError(f"subject {dataset.subject_id}: no seizure files")
    folds = []
    single = len(dataset.files) == 1
    for held in dataset.files:
        train_files = [f for f in dataset.files if f is not held] or [held]
        seed = _fold_seed(cfg.seed, dataset.subject_id, held.index)
        im = fit_item_memory(
            [f.table for f in train_files], cfg.dim, cfg.num_levels, seed, cfg.encode_mode
        )
        train = EncodedDataset(
            [EncodedFile(encode_table(f.table, im), f.table.labels, cfg.dim) for f in train_files],
            cfg.dim,
            cfg.step_sec,
            im.tie_break,
        )
        test = EncodedFile(encode_table(held.table, im), held.table.labels, cfg.dim)
        note = "single-file subject: held-out file equals the training file" if single else ""
        folds.append(Fold(held.index, im, train, test, note))
    return folds


@dataclass
class FoldScore:
    fold: int
    report: MetricsReport
    model_bytes: int
    train_seconds: float
    passes: int
    centroids: dict
    centroids_before: dict | None
    train_f1de_per_pass: list
    readded_fraction_per_pass: list
    predictions: np.ndarray  # raw per-window labels, before post-processing
    truth: np.ndarray
    note: str = ""


@dataclass
class SubjectResult:
    subject_id: str
    strategy: str
    folds: list
    mean: dict  # arithmetic mean over folds of every MetricsReport field

    @property
    def mean_f1de(self) -> float:
        return self.mean["f1_de_mean"]


def _mean_report(reports: list) -> dict:
    out = {}
    for name in MetricsReport.SCORE_FIELDS + MetricsReport.COUNT_FIELDS:
        out[name] = float(np.mean([getattr(r, name) for r in reports]))
    return out


def train_fold(strategy: str, fold: Fold, cfg: ExperimentConfig) -> tuple:
    """Train one strategy on one fold; returns (model, seconds)."""
    stop = StopRule(cfg.epsilon, cfg.patience, cfg.max_passes)
    t0 = time.perf_counter()
    model = train_strategy(
        strategy,
        fold.train,
        learning_rate=cfg.learning_rate,
        stop=stop,
        keep_fraction=cfg.keep_fraction,
        min_members=cfg.min_members,
        min_members_fraction=cfg.min_members_fraction,
        smooth_sec=cfg.smooth_sec,
        merge_gap_sec=cfg.merge_gap_sec,
    )
    return model, time.perf_counter() - t0


def score_predictions(preds: np.ndarray, truth: np.ndarray, cfg: ExperimentConfig) -> MetricsReport:
    pred_seq = post_process(LabelSequence(preds, cfg.step_sec), cfg.smooth_sec, cfg.merge_gap_sec)
    return evaluate_sequences(pred_seq, LabelSequence(truth, cfg.step_sec))


def loso_cv(
    dataset: SubjectDataset,
    strategy: str,
    cfg: ExperimentConfig,
    folds: list | None = None,
) -> SubjectResult:
    """Cross-validate one strategy; pass precomputed folds to share encodings."""
    if folds is None:
        folds = prepare_folds(dataset, cfg)
    scores = []
    for fold in folds:
        model, seconds = train_fold(strategy, fold, cfg)
        preds = predict_file(model, fold.test.packed)
        report = score_predictions(preds, fold.test.labels, cfg)
        stats = model.stats
        scores.append(
            FoldScore(
                fold=fold.index,
                report=report,
                model_bytes=len(serialize_model(model)),
                train_seconds=seconds,
                passes=stats.passes if stats else 1,
                centroids=model.centroid_counts(),
                centroids_before=stats.centroids_before_reduction if stats else None,
                train_f1de_per_pass=list(stats.train_f1de_per_pass) if stats else [],
                readded_fraction_per_pass=list(stats.readded_fraction_per_pass) if stats else [],
                predictions=preds,
                truth=fold.test.labels,
                note=fold.note,
            )
        )
    return SubjectResult(
        dataset.subject_id, strategy, scores, _mean_report([s.report for s in scores])
    )


@dataclass
class ComparisonRow:
    strategy_a: str
    strategy_b: str
    n_subjects: int
    n_used: int
    mean_a: float
    mean_b: float
    mean_diff: float  # mean over used subjects of (a - b)
    statistic: float
    p_value: float
    method: str
    flags: tuple = ()
    excluded_subjects: tuple = ()


def compare_strategies(
    strategy_a: str,
    strategy_b: str,
    scores_a: dict,
    scores_b: dict,
) -> ComparisonRow:
    """Paired per-subject comparison of mean F1DEmean scores.

    ``scores_*`` map subject id to the subject's score, or to None for a
    subject where that strategy failed; failed subjects are excluded
    pairwise and flagged. Identical scores give the sentinel p = 1.0.
    """
    if set(scores_a) != set(scores_b):
        only_a = sorted(set(scores_a) - set(scores_b))
        only_b = sorted(set(scores_b) - set(scores_a))
        raise ValueError(
            f"subject sets differ: only in {strategy_a}: {only_a}; only in {strategy_b}: {only_b}"
        )
    subjects = sorted(scores_a)
    excluded = tuple(s for s in subjects if scores_a[s] is None or scores_b[s] is None)
    used = [s for s in subjects if s not in excluded]
    flags = []
    if excluded:
        flags.append("excluded_failed_subjects")
    if not used:
        raise ValueError("no subjects left after excluding failures")
    a = np.array([scores_a[s] for s in used], dtype=np.float64)
    b = np.array([scores_b[s] for s in used], dtype=np.float64)
    diffs = a - b
    if np.all(diffs == 0):
        flags.append("identical_scores")
        statistic, p_value, method = 0.0, 1.0, "sentinel"
    else:
        try:
            res = wilcoxon_signed_rank(a, b)
            statistic, p_value, method = res.statistic, res.p_value, res.method
        except InsufficientDataError:
            flags.append("insufficient_data")
            statistic, p_value, method = float("nan"), 1.0, "sentinel"
    return ComparisonRow(
        strategy_a=strategy_a,
        strategy_b=strategy_b,
        n_subjects=len(subjects),
        n_used=len(used),
        mean_a=float(a.mean()),
        mean_b=float(b.mean()),
        mean_diff=float(diffs.mean()),
        statistic=float(statistic),
        p_value=float(p_value),
        method=method,
        flags=tuple(flags),
        excluded_subjects=excluded,
    )


@dataclass
class BenchRow:
    subject_id: str
    strategy: str
    n_folds: int
    time_mean_sec: float
    time_total_sec: float
    time_rel: float  # vs the 2C measurement of the same run
    bytes_mean: float
    bytes_rel: float
    time_per_fold: tuple = ()
    bytes_per_fold: tuple = ()


def bench_strategies(
    dataset: SubjectDataset,
    strategies: list,
    cfg: ExperimentConfig,
    folds: list | None = None,
) -> list:
    """Measure training wall time and serialized model size per strategy.

    Runs single-lane. The 2C strategy is always measured (it anchors the
    relative columns). Each strategy gets one untimed warm-up training on
    the first fold before its timed fold sweep; prediction and scoring are
    not part of the timing. Every fold is trained three times and the
    fastest run is kept, since scheduling interference only ever adds time.
    """
    if folds is None:
        folds = prepare_folds(dataset, cfg)
    order = ["2C"] + [s for s in strategies if s != "2C"]
    rows = {}
    for tag in order:
        train_fold(tag, folds[0], cfg)  # warm-up, untimed
        times, sizes = [], []
        for fold in folds:
            best = math.inf
            for _ in range(3):
                model, seconds = train_fold(tag, fold, cfg)
                best = min(best, seconds)
            times.append(best)
            sizes.append(len(serialize_model(model)))
        rows[tag] = (times, sizes)
    base_mean = float(np.mean(rows["2C"][0]))
    base_bytes = float(np.mean(rows["2C"][1]))
    out = []
    for tag in order:
        times, sizes = rows[tag]
        out.append(
            BenchRow(
                subject_id=dataset.subject_id,
                strategy=tag,
                n_folds=len(folds),
                time_mean_sec=float(np.mean(times)),
                time_total_sec=float(np.sum(times)),
                time_rel=float(np.mean(times)) / base_mean,
                bytes_mean=float(np.mean(sizes)),
                bytes_rel=float(np.mean(sizes)) / base_bytes,
                time_per_fold=tuple(times),
                bytes_per_fold=tuple(sizes),
            )
        )
    return out


# ---------------------------------------------------------------------------
# CSV writers: deterministic content so identical runs produce identical
# bytes; wall times appear only in bench.csv
# ---------------------------------------------------------------------------

PER_FOLD_COLUMNS = (
    ("subject_id", "fold", "strategy")
    + MetricsReport.SCORE_FIELDS
    + MetricsReport.COUNT_FIELDS
    + (
        "model_bytes",
        "passes",
        "centroids",
        "centroids_before",
        "f1de_per_pass",
        "readded_per_pass",
        "note",
    )
)

PER_SUBJECT_COLUMNS = (
    ("subject_id", "strategy", "n_folds", "failed", "error")
    + MetricsReport.SCORE_FIELDS
    + MetricsReport.COUNT_FIELDS
)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _fmt_counts(counts: dict | None) -> str:
    if not counts:
        return ""
    return ";".join(f"{k}:{v}" for k, v in sorted(counts.items()))


def _fmt_series(values: list) -> str:
    return ";".join(f"{v:.17g}" for v in values)


def write_per_fold_csv(path, results: list) -> None:
    """One row per (subject, fold) for one strategy."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PER_FOLD_COLUMNS)
        for res in results:
            for s in res.folds:
                row = [res.subject_id, s.fold, res.strategy]
                row += [_fmt(getattr(s.report, f)) for f in MetricsReport.SCORE_FIELDS]
                row += [getattr(s.report, f) for f in MetricsReport.COUNT_FIELDS]
                row += [
                    s.model_bytes,
                    s.passes,
                    _fmt_counts(s.centroids),
                    _fmt_counts(s.centroids_before),
                    _fmt_series(s.train_f1de_per_pass),
                    _fmt_series(s.readded_fraction_per_pass),
                    s.note,
                ]
                w.writerow(row)


def write_per_subject_csv(path, results: list, failures: dict | None = None) -> None:
    """One row per subject; failed subjects carry the error text."""
    failures = failures or {}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PER_SUBJECT_COLUMNS)
        rows = [(res.subject_id, res) for res in results]
        rows += [(subj, None) for subj in failures]
        for subj, res in sorted(rows, key=lambda r: r[0]):
            if res is None:
                w.writerow([subj, "", 0, 1, failures[subj]] + [""] * 13)
                continue
            row = [res.subject_id, res.strategy, len(res.folds), 0, ""]
            row += [_fmt(res.mean[f]) for f in MetricsReport.SCORE_FIELDS]
            row += [_fmt(res.mean[f]) for f in MetricsReport.COUNT_FIELDS]
            w.writerow(row)


def write_predictions_csv(path, results: list) -> None:
    """Raw (pre-post-processing) per-window predictions for one strategy."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subject_id", "fold", "window", "pred", "truth"])
        for res in results:
            for s in res.folds:
                for i, (p, t) in enumerate(zip(s.predictions, s.truth)):
                    w.writerow([res.subject_id, s.fold, i, int(p), int(t)])


def read_predictions_csv(path) -> dict:
    """{(subject_id, fold): (preds, truth)} back from a predictions CSV."""
    groups: dict = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expect = ["subject_id", "fold", "window", "pred", "truth"]
        if reader.fieldnames != expect:
            raise ValueError(f"{path}: expected columns {expect}, got {reader.fieldnames}")
        for row in reader:
            key = (row["subject_id"], int(row["fold"]))
            groups.setdefault(key, []).append((int(row["window"]), int(row["pred"]), int(row["truth"])))
    out = {}
    for key, triples in groups.items():
        triples.sort()
        if [w for w, _, _ in triples] != list(range(len(triples))):
            raise ValueError(f"{path}: window indices of {key} are not 0..n-1")
        out[key] = (
            np.array([p for _, p, _ in triples], dtype=np.int64),
            np.array([t for _, _, t in triples], dtype=np.int64),
        )
    return out


def write_comparison_csv(path, rows: list) -> None:
    cols = [
        "strategy_a", "strategy_b", "n_subjects", "n_used", "mean_a", "mean_b",
        "mean_diff", "statistic", "p_value", "method", "flags", "excluded_subjects",
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([
                r.strategy_a, r.strategy_b, r.n_subjects, r.n_used,
                _fmt(r.mean_a), _fmt(r.mean_b), _fmt(r.mean_diff),
                _fmt(r.statistic), _fmt(r.p_value), r.method,
                ";".join(r.flags), ";".join(r.excluded_subjects),
            ])


def write_bench_csv(path, rows: list) -> None:
    cols = [
        "subject_id", "strategy", "n_folds", "time_mean_sec", "time_total_sec",
        "time_rel", "bytes_mean", "bytes_rel", "time_per_fold", "bytes_per_fold",
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([
                r.subject_id, r.strategy, r.n_folds,
                _fmt(r.time_mean_sec), _fmt(r.time_total_sec), _fmt(r.time_rel),
                _fmt(r.bytes_mean), _fmt(r.bytes_rel),
                ";".join(f"{t:.6f}" for t in r.time_per_fold),
                ";".join(str(b) for b in r.bytes_per_fold),
            ])
