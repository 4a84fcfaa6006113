"""Gradient boosting with complexity-based trust weighting, plus the classic baseline.

Each round: compute pseudo-residuals, extend every sample's encoded residual
history, convert history complexities into trust weights, and fit a weighted
regression tree to the residuals.  With trust disabled the loop is a classic
uniform-weight GBDT; magnitude-only mode keeps the |g| factor but forces the
trust term to 1 (ablation arm).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .complexity import (
    SymbolSequence,
    TrustState,
    encode_gradients,
    lz76_complexity,
    normalize_complexities,
    trust_weights,
)
from .data import Dataset
from .trees import RegressionTree, fit_tree_weighted

LOSSES = ("logistic", "squared")
ENCODINGS = ("binary-sign", "binary-delta", "quantized")
TRUST_MODES = ("enabled", "disabled", "magnitude-only")

SCORE_CLAMP = 50.0  # overflow guard ahead of the logistic link


@dataclass(frozen=True)
class BoostConfig:
    iterations: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    min_samples_leaf: int = 1
    loss: str = "logistic"
    encoding: str = "binary-sign"
    trust: str = "enabled"
    seed: int = 42

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("BoostConfig: iterations must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("BoostConfig: learning_rate must be in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("BoostConfig: max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("BoostConfig: min_samples_leaf must be >= 1")
        if self.loss not in LOSSES:
            raise ValueError(f"BoostConfig: loss must be one of {LOSSES}, got {self.loss!r}")
        if self.encoding not in ENCODINGS:
            raise ValueError(f"BoostConfig: encoding must be one of {ENCODINGS}, got {self.encoding!r}")
        if self.trust not in TRUST_MODES:
            raise ValueError(f"BoostConfig: trust must be one of {TRUST_MODES}, got {self.trust!r}")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "BoostConfig":
        """Build a config from string-valued keys (config files, CLI overrides)."""
        kwargs = {}
        casts = {
            "iterations": int,
            "learning_rate": float,
            "max_depth": int,
            "min_samples_leaf": int,
            "loss": str,
            "encoding": str,
            "trust": str,
            "seed": int,
        }
        for key, value in mapping.items():
            if key not in casts:
                raise ValueError(f"BoostConfig: unknown field {key!r}")
            kwargs[key] = casts[key](value)
        return cls(**kwargs)

    def to_mapping(self) -> dict:
        return {
            "iterations": self.iterations,
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "loss": self.loss,
            "encoding": self.encoding,
            "trust": self.trust,
            "seed": self.seed,
        }


def parse_config_file(path) -> dict:
    """Flat ``key = value`` file, '#' comments and blank lines ignored."""
    mapping = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"config file {path}, line {line_no}: expected 'key = value'")
            key, value = stripped.split("=", 1)
            mapping[key.strip()] = value.strip()
    return mapping


def logistic_gradient(y, score):
    """Negative gradient of log(1 + exp(-y*F)) w.r.t. F: y / (1 + exp(y*F)).

    Computed through the stable logistic sigmoid, so large |F| decays to the
    exp(-y*F) asymptote instead of overflowing.
    """
    y = np.asarray(y, dtype=np.float64)
    score = np.asarray(score, dtype=np.float64)
    out = y * expit(-y * score)
    return float(out) if out.ndim == 0 else out


def squared_gradient(y, score):
    """Negative gradient of 0.5*(y - F)^2 w.r.t. F: the plain residual y - F."""
    y = np.asarray(y, dtype=np.float64)
    score = np.asarray(score, dtype=np.float64)
    out = y - score
    return float(out) if out.ndim == 0 else out


def loss_value(y, score, loss: str):
    """Elementwise loss; logistic uses the overflow-safe log-sum-exp form."""
    y = np.asarray(y, dtype=np.float64)
    score = np.asarray(score, dtype=np.float64)
    if loss == "logistic":
        return np.logaddexp(0.0, -y * score)
    if loss == "squared":
        return 0.5 * (y - score) ** 2
    raise ValueError(f"loss_value: unknown loss {loss!r}")


def gradient(y, score, loss: str):
    if loss == "logistic":
        return logistic_gradient(y, score)
    if loss == "squared":
        return squared_gradient(y, score)
    raise ValueError(f"gradient: unknown loss {loss!r}")


def init_score(labels, loss: str) -> float:
    """Constant score minimising the total loss over the training labels."""
    labels = np.asarray(labels)
    if loss == "squared":
        return float(np.mean(labels))
    if loss == "logistic":
        p = float(np.mean(labels == 1))
        if p <= 0.0 or p >= 1.0:
            raise ValueError("init_score: logistic loss needs both classes present")
        return float(np.log(p / (1.0 - p)))
    raise ValueError(f"init_score: unknown loss {loss!r}")


@dataclass
class Model:
    """Additive tree ensemble: score(x) = base_score + learning_rate * sum(tree(x))."""

    base_score: float
    n_features: int
    trees: list[RegressionTree]
    config: BoostConfig

    @property
    def loss(self) -> str:
        return self.config.loss

    @property
    def learning_rate(self) -> float:
        return self.config.learning_rate

    def predict_score(self, X):
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"Model.predict_score: expected {self.n_features} features, got {X.shape[1]}")
        scores = np.full(X.shape[0], self.base_score, dtype=np.float64)
        for tree in self.trees:
            scores += self.learning_rate * tree.predict(X)
        return float(scores[0]) if single else scores

    def predict_proba(self, X):
        score = np.clip(self.predict_score(X), -SCORE_CLAMP, SCORE_CLAMP)
        out = expit(score)
        return float(out) if np.ndim(out) == 0 else out

    def predict_label(self, X):
        proba = self.predict_proba(X)
        if np.ndim(proba) == 0:
            return 1 if proba >= 0.5 else -1
        return np.where(proba >= 0.5, 1, -1).astype(np.int64)


MODEL_FORMAT_VERSION = "itboost-model v1"


def save_model(model: Model, path) -> None:
    """Versioned plain-text format: config header, then one preorder line per tree."""
    lines = [MODEL_FORMAT_VERSION]
    header = dict(model.config.to_mapping())
    header["base_score"] = repr(model.base_score)
    header["n_features"] = model.n_features
    header["n_trees"] = len(model.trees)
    lines.append(" ".join(f"{k}={v}" for k, v in header.items()))
    for i, tree in enumerate(model.trees):
        lines.append(f"tree {i}: " + " ".join(tree.to_tokens()))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != MODEL_FORMAT_VERSION:
        raise ValueError(f"load_model: {path} is not a {MODEL_FORMAT_VERSION} file")
    header = dict(item.split("=", 1) for item in lines[1].split())
    base_score = float(header.pop("base_score"))
    n_features = int(header.pop("n_features"))
    n_trees = int(header.pop("n_trees"))
    config = BoostConfig.from_mapping(header)
    trees = []
    for line in lines[2 : 2 + n_trees]:
        _, _, payload = line.partition(": ")
        trees.append(RegressionTree.from_tokens(payload.split(), n_features))
    if len(trees) != n_trees:
        raise ValueError(f"load_model: expected {n_trees} trees, found {len(trees)}")
    return Model(base_score=base_score, n_features=n_features, trees=trees, config=config)


@dataclass
class RunTrace:
    """Per-iteration training record: residuals, trust state, loss, trust-step time."""

    row_ids: np.ndarray
    gradients: list[np.ndarray] = field(default_factory=list)
    trust: list[TrustState] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    trust_seconds: list[float] = field(default_factory=list)

    @property
    def n_iterations(self) -> int:
        return len(self.trust)

    def total_trust_seconds(self) -> float:
        return float(sum(self.trust_seconds))

    def weights_at(self, iteration: int) -> np.ndarray:
        """Trust weights at a 1-based iteration."""
        return self.trust[iteration - 1].weights

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("iteration,row_id,raw_C,normalized_C,tau,weight\n")
            for state in self.trust:
                for i, row_id in enumerate(self.row_ids):
                    fh.write(
                        f"{state.iteration},{row_id},{int(state.raw_complexity[i])},"
                        f"{float(state.normalized[i])!r},{float(state.tau[i])!r},{float(state.weights[i])!r}\n"
                    )


def load_trace_csv(path) -> tuple[np.ndarray, dict[int, TrustState]]:
    """Read a trace CSV back into per-iteration trust states keyed by iteration."""
    by_iter: dict[int, dict[str, list]] = {}
    row_ids_first: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "iteration,row_id,raw_C,normalized_C,tau,weight":
            raise ValueError(f"load_trace_csv: unexpected header in {path}")
        for line in fh:
            it_s, rid_s, raw_s, norm_s, tau_s, w_s = line.rstrip("\n").split(",")
            m = int(it_s)
            bucket = by_iter.setdefault(m, {"row_id": [], "raw": [], "norm": [], "tau": [], "w": []})
            bucket["row_id"].append(int(rid_s))
            bucket["raw"].append(int(raw_s))
            bucket["norm"].append(float(norm_s))
            bucket["tau"].append(float(tau_s))
            bucket["w"].append(float(w_s))
    if not by_iter:
        raise ValueError(f"load_trace_csv: {path} has no data rows")
    states: dict[int, TrustState] = {}
    for m, bucket in sorted(by_iter.items()):
        if not row_ids_first:
            row_ids_first = bucket["row_id"]
        states[m] = TrustState(
            iteration=m,
            raw_complexity=np.asarray(bucket["raw"], dtype=np.int64),
            normalized=np.asarray(bucket["norm"], dtype=np.float64),
            tau=np.asarray(bucket["tau"], dtype=np.float64),
            weights=np.asarray(bucket["w"], dtype=np.float64),
        )
    return np.asarray(row_ids_first, dtype=np.int64), states


def train(dataset: Dataset, config: BoostConfig, incremental_lz: bool = False) -> tuple[Model, RunTrace]:
    """Run the full boosting loop and return the model plus its training trace.

    Per iteration m: (1) pseudo-residuals against the current scores; (2) one
    encoded symbol appended to every sample's history; (3) raw complexities,
    min-max normalisation across samples, trust term exp(-normalized), weight
    |g| * trust; (4) weighted tree fit on the residuals, then scores advance
    by learning_rate * tree(x).

    ``trust='disabled'`` skips steps 2-3 and fits with uniform weights (the
    classic GBDT baseline).  ``trust='magnitude-only'`` forces the trust term
    to 1, so weights are |g|; history bookkeeping is skipped since it cannot
    affect the fit.  With ``incremental_lz`` complexities come from the online
    parser instead of a from-scratch parse of each history every round; the
    two are exactly equivalent.
    """
    X = dataset.features
    y = dataset.labels.astype(np.float64)
    n = dataset.n_rows
    f0 = init_score(dataset.labels, config.loss)
    scores = np.full(n, f0, dtype=np.float64)

    track_history = config.trust == "enabled"
    histories: list[str] = [""] * n
    sequences: list[SymbolSequence] | None = None
    if track_history and incremental_lz:
        alphabet = "0123" if config.encoding == "quantized" else "01"
        sequences = [SymbolSequence(alphabet) for _ in range(n)]

    trees: list[RegressionTree] = []
    trace = RunTrace(row_ids=dataset.row_ids.copy())
    prev_g: np.ndarray | None = None

    for m in range(1, config.iterations + 1):
        g = gradient(y, scores, config.loss)

        t0 = time.perf_counter()
        if track_history:
            symbols = encode_gradients(g, config.encoding, g_prev=prev_g, first_round=(m == 1))
            if sequences is not None:
                raw = np.fromiter(
                    (seq.append(sym) for seq, sym in zip(sequences, symbols)),
                    dtype=np.int64,
                    count=n,
                )
            else:
                histories = [h + s for h, s in zip(histories, symbols)]
                raw = np.fromiter((lz76_complexity(h) for h in histories), dtype=np.int64, count=n)
            normalized = normalize_complexities(raw)
            tau, weights = trust_weights(g, normalized)
        elif config.trust == "magnitude-only":
            raw = np.zeros(n, dtype=np.int64)
            normalized = np.zeros(n, dtype=np.float64)
            tau = np.ones(n, dtype=np.float64)
            weights = np.abs(g)
        else:  # disabled: classic GBDT
            raw = np.zeros(n, dtype=np.int64)
            normalized = np.zeros(n, dtype=np.float64)
            tau = np.ones(n, dtype=np.float64)
            weights = np.ones(n, dtype=np.float64)
        trust_dt = time.perf_counter() - t0

        tree = fit_tree_weighted(X, g, weights, config.max_depth, config.min_samples_leaf)
        scores = scores + config.learning_rate * tree.predict(X)
        trees.append(tree)

        trace.gradients.append(np.array(g, dtype=np.float64))
        trace.trust.append(
            TrustState(iteration=m, raw_complexity=raw, normalized=normalized, tau=tau, weights=weights)
        )
        trace.train_loss.append(float(np.mean(loss_value(y, scores, config.loss))))
        trace.trust_seconds.append(trust_dt)
        prev_g = g

    model = Model(base_score=f0, n_features=dataset.n_features, trees=trees, config=config)
    return model, trace


def with_trust_mode(config: BoostConfig, trust: str) -> BoostConfig:
    """Copy of the config with a different trust mode (baseline/ablation arms)."""
    return replace(config, trust=trust)
