"""Logistic regression trained by full-batch gradient descent.

The optimizer is written out by hand (numpy is used as the array
substrate only): mean binary cross-entropy plus an L2 penalty of
``l2_lambda/2 * ||w||^2`` on the weights, bias unregularized, zero
initialization. Keeping the loss and gradient as standalone functions
lets tests check the gradient against central finite differences.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DivergenceError, VocabularyMismatchError
from .textfeat import SparseVector, Vocabulary

MODEL_SCHEMA = "crashqc-logreg-1"

# probabilities stay inside the open interval (0, 1): smallest subnormal
# below, predecessor of 1.0 above
_P_MIN = 5e-324
_P_MAX = 1.0 - 2.0**-53

_LOG_EPS = 1e-12


@dataclass(frozen=True)
class HyperParams:
    learning_rate: float = 0.5
    l2_lambda: float = 1e-4
    epochs: int = 500
    positive_weight: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be nonnegative")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.positive_weight <= 0:
            raise ValueError("positive_weight must be positive")


@dataclass
class TrainingLog:
    losses: list[float] = field(default_factory=list)
    train_seconds: float = 0.0

    @property
    def final_loss(self) -> float | None:
        return self.losses[-1] if self.losses else None


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    vocab: Vocabulary
    hyperparams: HyperParams
    decision_threshold: float = 0.5
    train_seconds: float | None = None

    @property
    def vocab_version(self) -> str:
        return self.vocab.version

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.vocab):
            raise VocabularyMismatchError(
                f"model has {len(self.weights)} weights for a "
                f"{len(self.vocab)}-term vocabulary"
            )
        if not 0.0 < self.decision_threshold < 1.0:
            raise ValueError("decision_threshold must lie in (0, 1)")


# ── design-matrix plumbing ──────────────────────────────────────────────


@dataclass(frozen=True)
class _Coo:
    """Row-major COO view of a list of sparse vectors."""

    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    n_rows: int
    n_cols: int

    def matvec(self, w: np.ndarray) -> np.ndarray:
        """X @ w"""
        contrib = self.vals * w[self.cols]
        return np.bincount(self.rows, weights=contrib, minlength=self.n_rows)

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        """X.T @ v"""
        contrib = self.vals * v[self.rows]
        return np.bincount(self.cols, weights=contrib, minlength=self.n_cols)


def _to_coo(X: Sequence[SparseVector], n_cols: int) -> _Coo:
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for r, vec in enumerate(X):
        for c, v in vec.items():
            if c >= n_cols:
                raise VocabularyMismatchError(
                    f"feature index {c} exceeds vocabulary size {n_cols}"
                )
            rows.append(r)
            cols.append(c)
            vals.append(v)
    return _Coo(
        rows=np.asarray(rows, dtype=np.int64),
        cols=np.asarray(cols, dtype=np.int64),
        vals=np.asarray(vals, dtype=np.float64),
        n_rows=len(X),
        n_cols=n_cols,
    )


def _sigmoid_array(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(z: float) -> float:
    """Overflow-safe scalar sigmoid, clamped inside (0, 1).

    The exponent is always of a nonpositive value, so it can only
    underflow (to 0.0), never overflow; the clamp keeps extreme inputs
    like z = -1000 strictly positive.
    """
    if z >= 0:
        p = 1.0 / (1.0 + math.exp(-z))
    else:
        ez = math.exp(z)
        p = ez / (1.0 + ez)
    return min(max(p, _P_MIN), _P_MAX)


def regularized_loss(
    w: np.ndarray,
    b: float,
    coo: _Coo,
    y: np.ndarray,
    l2_lambda: float,
    positive_weight: float = 1.0,
) -> float:
    """Mean weighted BCE + (l2/2)·||w||²; the bias is not penalized."""
    z = coo.matvec(w) + b
    p = np.clip(_sigmoid_array(z), _LOG_EPS, 1.0 - _LOG_EPS)
    sample_w = np.where(y == 1.0, positive_weight, 1.0)
    bce = -(sample_w * (y * np.log(p) + (1.0 - y) * np.log(1.0 - p))).mean()
    return float(bce + 0.5 * l2_lambda * float(w @ w))


def loss_gradient(
    w: np.ndarray,
    b: float,
    coo: _Coo,
    y: np.ndarray,
    l2_lambda: float,
    positive_weight: float = 1.0,
) -> tuple[np.ndarray, float]:
    z = coo.matvec(w) + b
    p = np.clip(_sigmoid_array(z), _LOG_EPS, 1.0 - _LOG_EPS)
    sample_w = np.where(y == 1.0, positive_weight, 1.0)
    resid = sample_w * (p - y)
    n = coo.n_rows
    grad_w = coo.rmatvec(resid) / n + l2_lambda * w
    grad_b = float(resid.mean())
    return grad_w, grad_b


def train(
    X: Sequence[SparseVector],
    y: Sequence[bool | int],
    vocab: Vocabulary,
    hyperparams: HyperParams | None = None,
    decision_threshold: float = 0.5,
) -> tuple[LogRegModel, TrainingLog]:
    """Fit from zero initialization; the log holds one loss per epoch,
    each evaluated just before its update step."""
    hp = hyperparams or HyperParams()
    if len(X) != len(y):
        raise ValueError("X and y must align")
    if not X:
        raise ValueError("training set is empty")
    yv = np.asarray([1.0 if v else 0.0 for v in y], dtype=np.float64)
    if yv.min() == yv.max():
        raise ValueError("training requires both classes to be present")

    coo = _to_coo(X, len(vocab))
    w = np.zeros(len(vocab), dtype=np.float64)
    b = 0.0
    log = TrainingLog()
    started = time.perf_counter()
    for _ in range(hp.epochs):
        # overflow to inf is how divergence shows up; the isfinite check
        # right below is the handler, so the warning is suppressed
        with np.errstate(over="ignore", invalid="ignore"):
            loss = regularized_loss(w, b, coo, yv, hp.l2_lambda, hp.positive_weight)
        if not math.isfinite(loss):
            raise DivergenceError(
                f"training diverged (non-finite loss) at learning_rate="
                f"{hp.learning_rate}; lower it and retry",
                learning_rate=hp.learning_rate,
            )
        log.losses.append(loss)
        grad_w, grad_b = loss_gradient(w, b, coo, yv, hp.l2_lambda, hp.positive_weight)
        w -= hp.learning_rate * grad_w
        b -= hp.learning_rate * grad_b
    log.train_seconds = time.perf_counter() - started
    model = LogRegModel(
        weights=w,
        bias=b,
        vocab=vocab,
        hyperparams=hp,
        decision_threshold=decision_threshold,
        train_seconds=log.train_seconds,
    )
    return model, log


def predict_proba(model: LogRegModel, x: SparseVector) -> float:
    z = model.bias
    for i, v in x.items():
        if i >= len(model.weights):
            raise VocabularyMismatchError(
                f"feature index {i} exceeds model dimension {len(model.weights)}"
            )
        z += model.weights[i] * v
    return sigmoid(z)


def predict(model: LogRegModel, x: SparseVector) -> bool:
    return predict_proba(model, x) >= model.decision_threshold


def top_features(
    model: LogRegModel, k: int = 10
) -> tuple[list[tuple[str, float]], list[tuple[str, float]]]:
    """Top-k positive-leaning and negative-leaning (term, coefficient).

    Sorted by signed coefficient (descending for positive, ascending for
    negative); ties break lexicographically by term.
    """
    terms = model.vocab.terms
    coef = [(terms[i], float(model.weights[i])) for i in range(len(terms))]
    positive = sorted(coef, key=lambda tc: (-tc[1], tc[0]))[:k]
    negative = sorted(coef, key=lambda tc: (tc[1], tc[0]))[:k]
    return positive, negative


# ── persistence ─────────────────────────────────────────────────────────


def save_model(model: LogRegModel, path: str | Path) -> None:
    payload = {
        "schema": MODEL_SCHEMA,
        "vocab_version": model.vocab_version,
        "dimension": len(model.weights),
        "weights": {str(i): float(v) for i, v in enumerate(model.weights) if v != 0.0},
        "bias": float(model.bias),
        "decision_threshold": model.decision_threshold,
        "hyperparams": {
            "learning_rate": model.hyperparams.learning_rate,
            "l2_lambda": model.hyperparams.l2_lambda,
            "epochs": model.hyperparams.epochs,
            "positive_weight": model.hyperparams.positive_weight,
            "seed": model.hyperparams.seed,
        },
        "train_seconds": model.train_seconds,
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_model(path: str | Path, vocab: Vocabulary) -> LogRegModel:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("schema") != MODEL_SCHEMA:
        raise ValueError(f"not a model file: {path}")
    if data["vocab_version"] != vocab.version:
        raise VocabularyMismatchError(
            f"model was trained against vocabulary {data['vocab_version']}, "
            f"got {vocab.version}"
        )
    dim = int(data["dimension"])
    w = np.zeros(dim, dtype=np.float64)
    for i_str, v in data["weights"].items():
        w[int(i_str)] = float(v)
    return LogRegModel(
        weights=w,
        bias=float(data["bias"]),
        vocab=vocab,
        hyperparams=HyperParams(**data["hyperparams"]),
        decision_threshold=float(data["decision_threshold"]),
        train_seconds=data.get("train_seconds"),
    )


# ── hyperparameter search ───────────────────────────────────────────────


def _stratified_folds(y: np.ndarray, n_folds: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for cls in (0.0, 1.0):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            folds[j % n_folds].append(int(i))
    return [np.asarray(sorted(f), dtype=np.int64) for f in folds]


def _fold_f1(truth: np.ndarray, pred: np.ndarray) -> float:
    tp = int(np.sum((pred == 1) & (truth == 1)))
    fp = int(np.sum((pred == 1) & (truth == 0)))
    fn = int(np.sum((pred == 0) & (truth == 1)))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def tune(
    X: Sequence[SparseVector],
    y: Sequence[bool | int],
    vocab: Vocabulary,
    learning_rates: Sequence[float] = (0.1, 0.5, 1.0),
    l2_lambdas: Sequence[float] = (0.0, 1e-4, 1e-3),
    epochs: int = 200,
    n_folds: int = 5,
    seed: int = 0,
) -> tuple[HyperParams, list[dict]]:
    """Grid search by mean stratified-CV F1; deterministic for a seed.

    Ties prefer the earlier grid entry. Returns the winning hyperparams
    (with the full ``epochs`` budget restored) and the scored grid.
    """
    yv = np.asarray([1.0 if v else 0.0 for v in y], dtype=np.float64)
    folds = _stratified_folds(yv, n_folds, seed)
    all_idx = np.arange(len(X))
    table: list[dict] = []
    best: tuple[float, int] | None = None
    grid = [(lr, l2) for lr in learning_rates for l2 in l2_lambdas]
    for gi, (lr, l2) in enumerate(grid):
        scores: list[float] = []
        for fold in folds:
            if len(fold) == 0:
                continue
            mask = np.ones(len(X), dtype=bool)
            mask[fold] = False
            train_idx = all_idx[mask]
            if len(set(yv[train_idx])) < 2:
                scores.append(0.0)
                continue
            hp = HyperParams(learning_rate=lr, l2_lambda=l2, epochs=epochs, seed=seed)
            model, _ = train([X[i] for i in train_idx], yv[train_idx], vocab, hp)
            pred = np.asarray(
                [1.0 if predict(model, X[i]) else 0.0 for i in fold], dtype=np.float64
            )
            scores.append(_fold_f1(yv[fold], pred))
        mean_f1 = float(np.mean(scores)) if scores else 0.0
        table.append({"learning_rate": lr, "l2_lambda": l2, "mean_f1": mean_f1})
        if best is None or mean_f1 > best[0]:
            best = (mean_f1, gi)
    assert best is not None
    lr, l2 = grid[best[1]]
    return HyperParams(learning_rate=lr, l2_lambda=l2, seed=seed), table
