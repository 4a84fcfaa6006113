"""Classification metrics, cross-validation driver, noise sweeps, and rank tests."""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .boosting import BoostConfig, RunTrace, train
from .data import Dataset, FoldPlan, random_undersample
from .noise import NoiseMask, NoiseSpec, inject

METRIC_NAMES = ("acc", "f1", "auc", "log_loss")

PROB_CLIP = 1e-15


def _check_pair(labels, probabilities):
    y = np.asarray(labels, dtype=np.int64)
    q = np.asarray(probabilities, dtype=np.float64)
    if y.shape != q.shape:
        raise ValueError(f"metric: labels and probabilities lengths disagree ({y.shape} vs {q.shape})")
    if y.size == 0:
        raise ValueError("metric: empty input")
    return y, q


def accuracy(labels, probabilities) -> float:
    """Fraction correct at threshold 0.5; a probability of exactly 0.5 predicts +1."""
    y, q = _check_pair(labels, probabilities)
    pred = np.where(q >= 0.5, 1, -1)
    return float(np.mean(pred == y))


def f1(labels, probabilities) -> float:
    """F1 of the positive class; defined as 0 when precision + recall is 0."""
    y, q = _check_pair(labels, probabilities)
    if not (np.any(y == 1) and np.any(y == -1)):
        raise ValueError("f1: both classes must be present")
    pred = np.where(q >= 0.5, 1, -1)
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == -1)))
    fn = int(np.sum((pred == -1) & (y == 1)))
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2.0 * tp / denom


def auc(labels, probabilities) -> float:
    """Rank-based ROC AUC with half credit for tied probabilities."""
    y, q = _check_pair(labels, probabilities)
    n_pos = int(np.sum(y == 1))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc: both classes must be present")
    ranks = rankdata(q)  # average ranks on ties
    u = float(np.sum(ranks[y == 1])) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def log_loss(labels, probabilities) -> float:
    """Mean negative log-likelihood with probabilities clipped away from 0 and 1."""
    y, q = _check_pair(labels, probabilities)
    q = np.clip(q, PROB_CLIP, 1.0 - PROB_CLIP)
    y01 = (y + 1) / 2.0
    return float(-np.mean(y01 * np.log(q) + (1.0 - y01) * np.log(1.0 - q)))


def compute_metrics(labels, probabilities) -> dict:
    return {
        "acc": accuracy(labels, probabilities),
        "f1": f1(labels, probabilities),
        "auc": auc(labels, probabilities),
        "log_loss": log_loss(labels, probabilities),
    }


@dataclass
class MetricReport:
    """Per-fold metric vectors plus aggregate timing."""

    per_fold: dict
    wall_time_seconds: float
    fold_train_seconds: np.ndarray
    trust_seconds: float
    peak_memory_estimate: float | None = None

    @property
    def n_folds(self) -> int:
        return len(self.per_fold["acc"])

    def mean(self, name: str) -> float:
        return float(np.mean(self.per_fold[name]))

    def std(self, name: str) -> float:
        return float(np.std(self.per_fold[name]))

    def total_train_seconds(self) -> float:
        return float(np.sum(self.fold_train_seconds))

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("fold," + ",".join(METRIC_NAMES) + ",train_seconds\n")
            for i in range(self.n_folds):
                cells = [str(i)] + [repr(float(self.per_fold[m][i])) for m in METRIC_NAMES]
                cells.append(repr(float(self.fold_train_seconds[i])))
                fh.write(",".join(cells) + "\n")
            fh.write("mean," + ",".join(repr(self.mean(m)) for m in METRIC_NAMES) + ",")
            fh.write(repr(self.total_train_seconds()) + "\n")
            fh.write("std," + ",".join(repr(self.std(m)) for m in METRIC_NAMES) + ",\n")


def split_fold(dataset: Dataset, folds: FoldPlan, fold: int) -> tuple[Dataset, Dataset]:
    """(train, test) subsets for one fold; row ids are preserved."""
    return dataset.subset(folds.train_indices(fold)), dataset.subset(folds.test_indices(fold))


def run_fold(
    dataset: Dataset,
    config: BoostConfig,
    folds: FoldPlan,
    fold: int,
    noise: NoiseSpec | None = None,
    undersample_train: bool = False,
) -> tuple[dict, float, RunTrace, NoiseMask | None]:
    """Train on one (optionally corrupted) training split, evaluate on the clean test split."""
    train_ds, test_ds = split_fold(dataset, folds, fold)
    if undersample_train:
        train_ds = random_undersample(train_ds, seed=config.seed + fold)
    mask = None
    if noise is not None:
        fold_spec = NoiseSpec(kind=noise.kind, rate=noise.rate, seed=noise.seed + fold)
        train_ds, mask = inject(train_ds, fold_spec)
    t0 = time.perf_counter()
    model, trace = train(train_ds, config)
    train_dt = time.perf_counter() - t0
    probs = model.predict_proba(test_ds.features)
    return compute_metrics(test_ds.labels, probs), train_dt, trace, mask


def cross_validate(
    dataset: Dataset,
    config: BoostConfig,
    folds: FoldPlan,
    noise: NoiseSpec | None = None,
    threads: int = 1,
    undersample_train: bool = False,
) -> MetricReport:
    """k-fold evaluation; noise (if any) corrupts training splits only.

    Test labels always come from the clean dataset.  Folds may run in
    parallel; results are aggregated by fold index so the report does not
    depend on scheduling.
    """
    t0 = time.perf_counter()
    fold_ids = list(range(folds.k))

    def job(f):
        metrics, train_dt, trace, _ = run_fold(dataset, config, folds, f, noise, undersample_train)
        return metrics, train_dt, trace.total_trust_seconds()

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, fold_ids))
    else:
        results = [job(f) for f in fold_ids]

    per_fold = {m: np.array([r[0][m] for r in results]) for m in METRIC_NAMES}
    fold_train_seconds = np.array([r[1] for r in results])
    wall = time.perf_counter() - t0
    return MetricReport(
        per_fold=per_fold,
        wall_time_seconds=wall,
        fold_train_seconds=fold_train_seconds,
        trust_seconds=float(sum(r[2] for r in results)),
    )


def noise_sweep(
    dataset: Dataset,
    config: BoostConfig,
    kind: str,
    rates: list,
    seed: int,
    folds: FoldPlan,
    threads: int = 1,
) -> list[tuple[float, MetricReport]]:
    """One cross-validation per noise rate; rates must be sorted and in range."""
    if list(rates) != sorted(rates):
        raise ValueError("noise_sweep: rates must be sorted ascending")
    out = []
    for rate in rates:
        spec = NoiseSpec(kind=kind, rate=float(rate), seed=seed) if rate > 0 else None
        out.append((float(rate), cross_validate(dataset, config, folds, noise=spec, threads=threads)))
    return out


def write_sweep_csv(rows: list, path, first_column: str = "mode") -> None:
    """rows: (label, kind, rate, MetricReport) tuples -> rate-indexed CSV."""
    with open(path, "w", encoding="utf-8") as fh:
        header = [first_column, "kind", "rate"]
        for m in METRIC_NAMES:
            header += [f"{m}_mean", f"{m}_std"]
        header.append("train_seconds")
        fh.write(",".join(header) + "\n")
        for label, kind, rate, report in rows:
            cells = [label, kind, repr(float(rate))]
            for m in METRIC_NAMES:
                cells += [repr(report.mean(m)), repr(report.std(m))]
            cells.append(repr(report.total_train_seconds()))
            fh.write(",".join(cells) + "\n")


def initial_margins(trace: RunTrace, labels, loss: str, iteration: int) -> np.ndarray:
    """Margins y*F at a 1-based iteration, recovered from the traced residuals."""
    y = np.asarray(labels, dtype=np.float64)
    g = trace.gradients[iteration - 1]
    if loss == "squared":
        # g = y - F and y^2 = 1, so y*F = 1 - y*g
        return 1.0 - y * g
    if loss == "logistic":
        # |g| = sigmoid(-y*F), so y*F = log((1 - |g|) / |g|)
        a = np.clip(np.abs(g), 1e-300, 1.0 - 1e-16)
        return np.log((1.0 - a) / a)
    raise ValueError(f"initial_margins: unknown loss {loss!r}")


def trajectory_summary(trace: RunTrace, mask: NoiseMask | None, margins) -> dict:
    """Mean trust weight per iteration for noisy / hard / easy sample categories.

    Noisy rows come from the mask; among the remaining (clean) rows, hard and
    easy are the lowest and highest quartiles of the supplied early-training
    margins.  Categories with no members are omitted with a warning.
    """
    margins = np.asarray(margins, dtype=np.float64)
    n = trace.row_ids.size
    if margins.shape != (n,):
        raise ValueError("trajectory_summary: margins length does not match trace rows")
    noisy = (
        np.isin(trace.row_ids, sorted(mask.flipped_rows))
        if mask is not None and mask.flipped_rows
        else np.zeros(n, dtype=bool)
    )
    clean = ~noisy
    curves: dict = {}
    members: dict = {}
    if np.any(noisy):
        members["noisy"] = noisy
    if np.any(clean):
        clean_margins = margins[clean]
        q25, q75 = np.percentile(clean_margins, [25.0, 75.0])
        members["hard"] = clean & (margins <= q25)
        members["easy"] = clean & (margins >= q75)
    for name in ("noisy", "hard", "easy"):
        sel = members.get(name)
        if sel is None or not np.any(sel):
            warnings.warn(f"trajectory_summary: category {name!r} is empty, omitted")
            continue
        curves[name] = np.array([state.weights[sel].mean() for state in trace.trust])
    return curves


def write_trajectory_csv(curves: dict, path) -> None:
    names = list(curves)
    n_iter = len(next(iter(curves.values())))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration," + ",".join(f"mean_weight_{n}" for n in names) + "\n")
        for m in range(n_iter):
            fh.write(",".join([str(m + 1)] + [repr(float(curves[n][m])) for n in names]) + "\n")


# ---------------------------------------------------------------------------
# Friedman rank test


@dataclass(frozen=True)
class RankMatrix:
    """Datasets x algorithms score matrix for the rank test."""

    scores: np.ndarray
    higher_is_better: bool = True

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 2 or s.shape[0] < 2 or s.shape[1] < 2:
            raise ValueError("RankMatrix: need at least 2 datasets and 2 algorithms")
        if not np.all(np.isfinite(s)):
            raise ValueError("RankMatrix: scores contain NaN or infinite values")
        object.__setattr__(self, "scores", s)


@dataclass(frozen=True)
class FriedmanResult:
    mean_ranks: np.ndarray
    statistic: float
    p_value: float


def _lower_gamma_series(s: float, x: float) -> float:
    """Regularized lower incomplete gamma P(s, x) via its power series (x < s + 1)."""
    term = 1.0 / s
    total = term
    a = s
    for _ in range(1000):
        a += 1.0
        term *= x / a
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + s * math.log(x) - math.lgamma(s))


def _upper_gamma_cf(s: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(s, x) via Lentz's continued fraction (x >= s + 1)."""
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / max(b, tiny)
    h = d
    for i in range(1, 1000):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return math.exp(-x + s * math.log(x) - math.lgamma(s)) * h


def chi_square_sf(x: float, dof: int) -> float:
    """Upper-tail chi-square probability via the regularized incomplete gamma."""
    if dof < 1:
        raise ValueError("chi_square_sf: dof must be >= 1")
    if x < 0:
        return 1.0
    if x == 0:
        return 1.0
    s = dof / 2.0
    x2 = x / 2.0
    if x2 < s + 1.0:
        return 1.0 - _lower_gamma_series(s, x2)
    return _upper_gamma_cf(s, x2)


def friedman_from_mean_ranks(mean_ranks, n_datasets: int) -> FriedmanResult:
    """Chi-square rank statistic from per-algorithm mean ranks over D datasets."""
    r = np.asarray(mean_ranks, dtype=np.float64)
    a = r.size
    if a < 2 or n_datasets < 2:
        raise ValueError("friedman_from_mean_ranks: need >= 2 algorithms and >= 2 datasets")
    stat = 12.0 * n_datasets / (a * (a + 1.0)) * float(np.sum(r * r)) - 3.0 * n_datasets * (a + 1.0)
    stat = max(stat, 0.0)
    return FriedmanResult(mean_ranks=r, statistic=stat, p_value=chi_square_sf(stat, a - 1))


def friedman_test(matrix: RankMatrix) -> FriedmanResult:
    """Rank algorithms within each dataset (rank 1 = best, ties averaged) and test.

    The statistic is referred to the chi-square distribution with A-1 degrees
    of freedom (upper tail).
    """
    scores = matrix.scores
    oriented = -scores if matrix.higher_is_better else scores
    ranks = np.vstack([rankdata(row) for row in oriented])
    mean_ranks = ranks.mean(axis=0)
    return friedman_from_mean_ranks(mean_ranks, scores.shape[0])
