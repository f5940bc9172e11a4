"""Algorithm selectors: preference rules, naive Bayes, linear max-margin, perceptron."""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from ..imgfeat import FeatureVector
from ..labelmap import N_ATTRIBUTES
from .discretize import DiscretizationTable, discretize_matrix, fit_discretization
from .perceptron import MLP, train_mlp

KINDS = ("rules", "naive-bayes", "linear-margin", "perceptron")
_ALIASES = {"bn": "naive-bayes", "nb": "naive-bayes", "svm": "linear-margin", "ann": "perceptron"}

DEFAULTS = {
    "rules": {},
    "naive-bayes": {"bins": 10},
    "linear-margin": {"epochs": 300, "lr": 0.5, "decay": 0.01, "lam": 1e-3},
    "perceptron": {"hidden": 64, "lr": 0.05, "epochs": 200, "batch_size": 16},
}


class SelectionError(ValueError):
    pass


class InsufficientClassesError(SelectionError):
    pass


class RulesInapplicableError(SelectionError):
    pass


class NoMoreAlgorithms(Exception):
    """Every algorithm in the portfolio has already been tried."""


def normalize_kind(kind: str) -> str:
    kind = _ALIASES.get(kind.lower(), kind.lower())
    if kind not in KINDS:
        raise SelectionError(f"unknown selector kind {kind!r}")
    return kind


@dataclass(frozen=True, eq=False)
class SelectionSample:
    """One training or evaluation case for a selector.

    ``qualities`` holds the score of every algorithm on this case when known;
    ``label`` is the object class the case describes (needed by rules).
    """

    features: np.ndarray | FeatureVector
    attributes: tuple | None
    best: int
    label: int | None = None
    qualities: np.ndarray | None = None

    def feature_values(self) -> np.ndarray:
        if isinstance(self.features, FeatureVector):
            return self.features.values
        return np.asarray(self.features, dtype=np.float64)


def _as_values(features) -> np.ndarray:
    if isinstance(features, FeatureVector):
        return features.values
    return np.asarray(features, dtype=np.float64).ravel()


@dataclass(frozen=True, eq=False)
class Selector:
    kind: ClassVar[str] = ""
    n_algorithms: int
    layout: tuple
    attr_means: np.ndarray

    def scores(self, features: np.ndarray, attributes, label) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class RulesSelector(Selector):
    """class -> per-algorithm training accuracy; rows follow ``classes``."""

    kind: ClassVar[str] = "rules"
    classes: np.ndarray
    accuracy: np.ndarray
    overall: np.ndarray

    def scores(self, features, attributes, label):
        if label is None:
            raise RulesInapplicableError("preference rules need a hypothesis")
        hit = np.flatnonzero(self.classes == int(label))
        return self.accuracy[hit[0]] if hit.size else self.overall

    def rule(self, label: int) -> int:
        return int(np.argmax(self.scores(None, None, label)))


@dataclass(frozen=True, eq=False)
class NaiveBayesSelector(Selector):
    """Discretized naive Bayes; the last N_ATTRIBUTES dimensions are attributes."""

    kind: ClassVar[str] = "naive-bayes"
    mins: np.ndarray
    maxs: np.ndarray
    bins: int
    log_prior: np.ndarray
    log_lik: np.ndarray  # (algorithms, dims, bins)

    @property
    def table(self) -> DiscretizationTable:
        return DiscretizationTable(self.mins, self.maxs, self.bins)

    def scores(self, features, attributes, label):
        # Absent attribute dimensions are marginalized out by not summing them.
        values = features if attributes is None else np.concatenate([features, attributes])
        dims = np.arange(values.size)
        table = DiscretizationTable(self.mins[dims], self.maxs[dims], self.bins)
        b = discretize_matrix(values[None, :], table)[0] - 1
        return self.log_prior + self.log_lik[:, dims, b].sum(axis=1)


@dataclass(frozen=True, eq=False)
class LinearMarginSelector(Selector):
    kind: ClassVar[str] = "linear-margin"
    mu: np.ndarray
    sigma: np.ndarray
    W: np.ndarray
    b: np.ndarray

    def scores(self, features, attributes, label):
        attrs = self.attr_means if attributes is None else np.asarray(attributes, dtype=np.float64)
        x = (np.concatenate([features, attrs]) - self.mu) / self.sigma
        return self.W @ x + self.b


@dataclass(frozen=True, eq=False)
class PerceptronSelector(Selector):
    """Two networks: features only, and features plus hypothesis attributes."""

    kind: ClassVar[str] = "perceptron"
    features_net: MLP
    full_net: MLP | None

    def scores(self, features, attributes, label):
        if attributes is None or self.full_net is None:
            return self.features_net.probabilities(features[None, :])[0]
        x = np.concatenate([features, np.asarray(attributes, dtype=np.float64)])
        return self.full_net.probabilities(x[None, :])[0]


SELECTOR_CLASSES = {
    cls.kind: cls for cls in (RulesSelector, NaiveBayesSelector, LinearMarginSelector, PerceptronSelector)
}


def _collect(samples, n_algorithms):
    if not samples:
        raise SelectionError("no training samples")
    X = np.stack([s.feature_values() for s in samples])
    y = np.array([int(s.best) for s in samples], dtype=np.int64)
    if n_algorithms is None:
        n_algorithms = int(y.max()) + 1
        for s in samples:
            if s.qualities is not None:
                n_algorithms = max(n_algorithms, len(s.qualities))
    if np.any(y < 0) or np.any(y >= n_algorithms):
        raise SelectionError("best-algorithm label outside the portfolio")
    has_attr = np.array([s.attributes is not None for s in samples])
    A = np.zeros((len(samples), N_ATTRIBUTES))
    for i, s in enumerate(samples):
        if s.attributes is not None:
            A[i] = np.asarray(s.attributes, dtype=np.float64)
    attr_means = A[has_attr].mean(axis=0) if has_attr.any() else np.zeros(N_ATTRIBUTES)
    first = samples[0].features
    layout = first.layout if isinstance(first, FeatureVector) else (("features", X.shape[1]),)
    return X, y, A, has_attr, attr_means, layout, n_algorithms


def _require_classes(y):
    if np.unique(y).size < 2:
        raise InsufficientClassesError("need at least two distinct best algorithms to train")


def _train_rules(samples, n_alg, layout, attr_means, hp, seed):
    labels = sorted({int(s.label) for s in samples if s.label is not None})
    if not labels:
        raise SelectionError("preference rules need samples with an object class")
    acc = np.zeros((len(labels), n_alg))
    cnt = np.zeros(len(labels))
    total = np.zeros(n_alg)
    for s in samples:
        if s.label is None:
            continue
        row = labels.index(int(s.label))
        if s.qualities is not None:
            q = np.asarray(s.qualities, dtype=np.float64)
        else:
            q = np.zeros(n_alg)
            q[int(s.best)] = 1.0
        acc[row] += q
        cnt[row] += 1
        total += q
    acc /= cnt[:, None]
    return RulesSelector(n_alg, layout, attr_means, np.array(labels), acc, total / cnt.sum())


def _train_naive_bayes(X, y, A, has_attr, n_alg, layout, attr_means, hp):
    bins = int(hp["bins"])
    feat_table = fit_discretization(X, bins)
    attr_rows = A[has_attr] if has_attr.any() else np.zeros((1, N_ATTRIBUTES))
    attr_table = fit_discretization(attr_rows, bins)
    mins = np.concatenate([feat_table.mins, attr_table.mins])
    maxs = np.concatenate([feat_table.maxs, attr_table.maxs])
    FB = discretize_matrix(X, feat_table) - 1
    AB = discretize_matrix(A, attr_table) - 1
    n_feat = X.shape[1]
    dims = n_feat + N_ATTRIBUTES
    counts = np.zeros((n_alg, dims, bins))
    for a in range(n_alg):
        rows = y == a
        for d in range(n_feat):
            counts[a, d] += np.bincount(FB[rows, d], minlength=bins)
        rows_a = rows & has_attr
        for d in range(N_ATTRIBUTES):
            counts[a, n_feat + d] += np.bincount(AB[rows_a, d], minlength=bins)
    # add-one smoothing per dimension
    log_lik = np.log((counts + 1.0) / (counts.sum(axis=2, keepdims=True) + bins))
    prior = np.bincount(y, minlength=n_alg) + 1.0
    log_prior = np.log(prior / prior.sum())
    return NaiveBayesSelector(n_alg, layout, attr_means, mins, maxs, bins, log_prior, log_lik)


def _train_linear_margin(X, y, A, has_attr, n_alg, layout, attr_means, hp):
    A = np.where(has_attr[:, None], A, attr_means[None, :])
    full = np.hstack([X, A])
    mu = full.mean(axis=0)
    sigma = full.std(axis=0)
    sigma[sigma < 1e-12] = 1.0
    Z = (full - mu) / sigma
    n, dim = Z.shape
    Y = -np.ones((n, n_alg))
    Y[np.arange(n), y] = 1.0
    W = np.zeros((n_alg, dim))
    b = np.zeros(n_alg)
    lam = float(hp["lam"])
    for t in range(int(hp["epochs"])):
        eta = float(hp["lr"]) / (1.0 + float(hp["decay"]) * t)
        margin = Y * (Z @ W.T + b)
        active = (margin < 1.0) * Y
        W -= eta * (lam * W - active.T @ Z / n)
        b -= eta * (-active.sum(axis=0) / n)
    return LinearMarginSelector(n_alg, layout, attr_means, mu, sigma, W, b)


def _train_perceptron(X, y, A, has_attr, n_alg, layout, attr_means, hp, seed):
    kw = dict(hidden=int(hp["hidden"]), lr=float(hp["lr"]), epochs=int(hp["epochs"]),
              batch_size=int(hp["batch_size"]))
    features_net = train_mlp(X, y, n_alg, seed=seed, **kw)
    full_net = None
    if has_attr.any() and np.unique(y[has_attr]).size >= 2:
        full = np.hstack([X[has_attr], A[has_attr]])
        full_net = train_mlp(full, y[has_attr], n_alg, seed=seed + 1, **kw)
    return PerceptronSelector(n_alg, layout, attr_means, features_net, full_net)


def train_selector(kind: str, samples, n_algorithms: int | None = None, hyperparams=None,
                   seed: int = 0) -> Selector:
    kind = normalize_kind(kind)
    hp = {**DEFAULTS[kind], **(hyperparams or {})}
    samples = list(samples)
    X, y, A, has_attr, attr_means, layout, n_alg = _collect(samples, n_algorithms)
    if kind == "rules":
        return _train_rules(samples, n_alg, layout, attr_means, hp, seed)
    if kind == "naive-bayes":
        # The smoothed prior alone already yields a usable model for one class.
        return _train_naive_bayes(X, y, A, has_attr, n_alg, layout, attr_means, hp)
    _require_classes(y)
    if kind == "linear-margin":
        return _train_linear_margin(X, y, A, has_attr, n_alg, layout, attr_means, hp)
    return _train_perceptron(X, y, A, has_attr, n_alg, layout, attr_means, hp, seed)


def algorithm_scores(model: Selector, features, hypothesis=None) -> np.ndarray:
    if isinstance(features, FeatureVector) and tuple(features.layout) != tuple(model.layout):
        if not (len(model.layout) == 1 and model.layout[0][1] == len(features)):
            raise SelectionError("feature layout does not match the selector's training layout")
    values = _as_values(features)
    expected = sum(b for _, b in model.layout)
    if values.size != expected:
        raise SelectionError(f"expected {expected} feature values, got {values.size}")
    attributes = label = None
    if hypothesis is not None:
        label = getattr(hypothesis, "label", None)
        attrs = getattr(hypothesis, "attributes", None)
        attributes = None if attrs is None else np.asarray(attrs, dtype=np.float64)
    return np.asarray(model.scores(values, attributes, label), dtype=np.float64)


def select_algorithm(model: Selector, features, hypothesis=None, already_tried=()) -> int:
    """Best-scoring algorithm not yet tried; ties go to the lower index."""
    tried = {int(a) for a in already_tried}
    if len(tried & set(range(model.n_algorithms))) >= model.n_algorithms:
        raise NoMoreAlgorithms("no more algorithms")
    scores = algorithm_scores(model, features, hypothesis)
    for a in np.argsort(-scores, kind="stable"):
        if int(a) not in tried:
            return int(a)
    raise NoMoreAlgorithms("no more algorithms")


@dataclass(frozen=True)
class _SampleHypothesis:
    label: int | None
    attributes: tuple | None


def sample_hypothesis(sample: SelectionSample):
    if sample.label is None and sample.attributes is None:
        return None
    return _SampleHypothesis(sample.label, sample.attributes)


def is_correct(selected: int, sample: SelectionSample) -> bool:
    if sample.qualities is not None:
        q = np.asarray(sample.qualities, dtype=np.float64)
        return bool(q[selected] == q.max())
    return selected == sample.best


def selector_accuracy(model: Selector, samples, use_hypothesis: bool = True) -> float:
    """Fraction of samples whose selection attains the best quality (ties count)."""
    samples = list(samples)
    if not samples:
        raise SelectionError("empty evaluation set")
    hits = 0
    for s in samples:
        hyp = sample_hypothesis(s) if use_hypothesis else None
        hits += is_correct(select_algorithm(model, s.features, hyp), s)
    return hits / len(samples)
