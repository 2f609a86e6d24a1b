"""Cross-validation, scoring, and top-two model selection.

Leave-one-session-out is the default plan: fold i tests session i and trains
on the rest. Normalization statistics are fitted on each fold's training rows
only. Per-(spec, fold) jobs are independent and may run on a thread pool;
results merge in (spec, fold) order so the output is identical for any worker
count.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import derive_seed
from .errors import (
    BadKError,
    LengthMismatchError,
    PipelineError,
    TooFewModelsError,
    TooFewSessionsError,
)
from .features import FeatureMatrix, normalize
from .learn import REGISTRY_ORDER, ModelSpec, train

SCORES_CSV_HEADER = "spec,fold,accuracy"


@dataclass(frozen=True)
class CvFold:
    train_rows: tuple[int, ...]
    test_rows: tuple[int, ...]


@dataclass(frozen=True)
class CvPlan:
    mode: str  # "loso" or "kfold"
    folds: tuple[CvFold, ...]


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[designed][predicted] over scored predictions."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("confusion matrix must be square")
        if (counts < 0).any():
            raise ValueError("confusion counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        total = self.total
        return float(np.trace(self.counts)) / total if total else 0.0

    def add(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        n = max(self.n_classes, other.n_classes)
        out = np.zeros((n, n), dtype=np.int64)
        out[: self.n_classes, : self.n_classes] += self.counts
        out[: other.n_classes, : other.n_classes] += other.counts
        return ConfusionMatrix(out)


def confusion(designed, predicted, n_classes: int | None = None) -> ConfusionMatrix:
    designed = np.asarray(designed, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if designed.shape != predicted.shape:
        raise LengthMismatchError(
            f"designed has {designed.shape} labels, predicted has {predicted.shape}"
        )
    if n_classes is None:
        n_classes = int(max(designed.max(initial=-1), predicted.max(initial=-1))) + 1
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (designed, predicted), 1)
    return ConfusionMatrix(counts)


def confusion_to_csv(matrix: ConfusionMatrix, task_names: tuple[str, ...] | None = None) -> str:
    names = task_names or tuple(str(i) for i in range(matrix.n_classes))
    lines = ["designed,predicted,count"]
    for d in range(matrix.n_classes):
        for p in range(matrix.n_classes):
            lines.append(f"{names[d]},{names[p]},{int(matrix.counts[d, p])}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ModelScore:
    spec: ModelSpec
    fold_accuracies: tuple[float | None, ...]  # None where the fold errored
    pooled_confusion: ConfusionMatrix
    fold_errors: tuple[tuple[int, str], ...] = ()

    @property
    def mean_accuracy(self) -> float:
        scored = [a for a in self.fold_accuracies if a is not None]
        return float(np.mean(scored)) if scored else 0.0


def make_cv_plan(matrix: FeatureMatrix, mode: str, k: int = 5, seed: int = 0) -> CvPlan:
    """LOSO: one fold per session. k-fold: seeded shuffle, then near-equal
    contiguous chunks (sizes differ by at most 1)."""
    n = len(matrix)
    if mode == "loso":
        sessions = matrix.sessions()
        if len(sessions) < 2:
            raise TooFewSessionsError(
                f"leave-one-session-out needs >= 2 sessions, found {len(sessions)}"
            )
        folds = []
        all_rows = np.arange(n)
        for s in sessions:
            mask = matrix.session_index == s
            folds.append(
                CvFold(
                    train_rows=tuple(int(i) for i in all_rows[~mask]),
                    test_rows=tuple(int(i) for i in all_rows[mask]),
                )
            )
        return CvPlan(mode="loso", folds=tuple(folds))
    if mode == "kfold":
        if k < 2 or k > n:
            raise BadKError(f"k must satisfy 2 <= k <= {n}, got {k}")
        rng = np.random.Generator(np.random.PCG64(seed))
        perm = rng.permutation(n)
        base, extra = divmod(n, k)
        folds = []
        at = 0
        for i in range(k):
            size = base + (1 if i < extra else 0)
            test = np.sort(perm[at : at + size])
            at += size
            train_mask = np.ones(n, dtype=bool)
            train_mask[test] = False
            folds.append(
                CvFold(
                    train_rows=tuple(int(i) for i in np.nonzero(train_mask)[0]),
                    test_rows=tuple(int(i) for i in test),
                )
            )
        return CvPlan(mode="kfold", folds=tuple(folds))
    raise BadKError(f"unknown cv mode {mode!r}")


def _run_fold(
    spec: ModelSpec, matrix: FeatureMatrix, fold: CvFold, fold_index: int, master_seed: int
):
    train_fm = matrix.subset(fold.train_rows)
    test_fm = matrix.subset(fold.test_rows)
    train_n, [test_n] = normalize(train_fm, [test_fm])
    seed = derive_seed(master_seed, f"cv:{spec.seed_purpose}", fold_index)
    model = train(spec, train_n, seed)
    predicted = model.predict(test_n.features)
    accuracy = float(np.mean(predicted == test_fm.labels)) if len(test_fm) else 0.0
    cm = confusion(test_fm.labels, predicted, n_classes=matrix.n_classes)
    return accuracy, cm


def cross_validate(
    specs: list[ModelSpec],
    matrix: FeatureMatrix,
    plan: CvPlan,
    master_seed: int,
    threads: int = 1,
) -> list[ModelScore]:
    """Score every spec over every fold. Per-fold training errors are recorded
    in the spec's score instead of aborting the other specs."""
    jobs = [(si, fi) for si in range(len(specs)) for fi in range(len(plan.folds))]

    def run(job):
        si, fi = job
        try:
            return _run_fold(specs[si], matrix, plan.folds[fi], fi, master_seed)
        except PipelineError as e:
            return None, f"{type(e).__name__}: {e}"

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(job) for job in jobs]

    scores = []
    empty = ConfusionMatrix(np.zeros((matrix.n_classes, matrix.n_classes), dtype=np.int64))
    for si, spec in enumerate(specs):
        accuracies: list[float | None] = []
        errors: list[tuple[int, str]] = []
        pooled = empty
        for fi in range(len(plan.folds)):
            accuracy, detail = outcomes[si * len(plan.folds) + fi]
            if accuracy is None:
                accuracies.append(None)
                errors.append((fi, detail))
            else:
                accuracies.append(accuracy)
                pooled = pooled.add(detail)
        scores.append(
            ModelScore(
                spec=spec,
                fold_accuracies=tuple(accuracies),
                pooled_confusion=pooled,
                fold_errors=tuple(errors),
            )
        )
    return scores


def _registry_rank(family: str) -> int:
    try:
        return REGISTRY_ORDER.index(family)
    except ValueError:
        return len(REGISTRY_ORDER)


def select_top_two(scores: list[ModelScore]) -> tuple[ModelScore, ModelScore]:
    """The two best mean accuracies; ties break by registry order, then name."""
    if len(scores) < 2:
        raise TooFewModelsError(f"need >= 2 scored models, got {len(scores)}")
    ranked = sorted(
        scores,
        key=lambda s: (-s.mean_accuracy, _registry_rank(s.spec.family), s.spec.name),
    )
    return ranked[0], ranked[1]


def scores_to_csv(scores: list[ModelScore]) -> str:
    lines = [SCORES_CSV_HEADER]
    for score in scores:
        for fi, acc in enumerate(score.fold_accuracies):
            lines.append(f"{score.spec.name},{fi},{'' if acc is None else repr(acc)}")
    return "\n".join(lines) + "\n"


def summary_to_json(scores: list[ModelScore], top_two: tuple[ModelScore, ModelScore]) -> str:
    doc = {
        "mean_accuracies": {s.spec.name: s.mean_accuracy for s in scores},
        "fold_accuracies": {
            s.spec.name: [a for a in s.fold_accuracies] for s in scores
        },
        "fold_errors": {
            s.spec.name: [{"fold": f, "error": m} for f, m in s.fold_errors]
            for s in scores
            if s.fold_errors
        },
        "top_two": [top_two[0].spec.name, top_two[1].spec.name],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
