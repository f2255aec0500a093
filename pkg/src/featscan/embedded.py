"""Tree-ensemble importance rankings and the committee vote.

A self-contained gradient boosting engine (logistic loss, second-order
leaf weights, depth-limited level-wise trees) is trained under two
presets that differ in nominal-feature encoding and row subsampling, so
the pipeline gets two genuinely distinct rankings to merge. Importance is
total split gain, aggregated from encoded columns back to source
features.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    KTooLargeError,
    MismatchedFeatureSetsError,
    SingleClassOutcomeError,
)
from .tabular import Dataset, FeatureKind

_TARGET_STAT_PRIOR_WEIGHT = 10.0


class Preset(enum.Enum):
    A = "A"     # one-hot nominals, no row subsampling
    B = "B"     # smoothed target-statistic nominals, 0.8 row subsampling


@dataclass(frozen=True)
class GbmConfig:
    preset: Preset
    n_trees: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    min_child_weight: float = 1.0
    l2_reg: float = 1.0
    subsample: float = 1.0
    seed: int = 0
    holdout_fraction: float = 0.2

    def __post_init__(self):
        if self.n_trees < 0:
            raise ValueError(f"n_trees must be >= 0, got {self.n_trees}")
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning_rate must be in (0,1], got {self.learning_rate}")
        if self.min_child_weight < 0.0:
            raise ValueError(f"min_child_weight must be >= 0")
        if self.l2_reg < 0.0:
            raise ValueError(f"l2_reg must be >= 0")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError(f"subsample must be in (0,1], got {self.subsample}")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ValueError(f"holdout_fraction must be in (0,1)")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")

    @classmethod
    def preset_a(cls, seed: int = 0, **overrides) -> "GbmConfig":
        return cls(preset=Preset.A, subsample=1.0, seed=seed, **overrides)

    @classmethod
    def preset_b(cls, seed: int = 0, **overrides) -> "GbmConfig":
        return cls(preset=Preset.B, subsample=0.8, seed=seed, **overrides)


class RankingSource(enum.Enum):
    PRESET_A = "preset_a"
    PRESET_B = "preset_b"
    COMMITTEE = "committee"
    FILTER_WRAPPER = "filter_wrapper"


@dataclass(frozen=True)
class FeatureRanking:
    """Per-feature importance scores with provenance."""

    feature_names: tuple[str, ...]
    scores: tuple[float, ...]
    source: RankingSource
    normalized: bool = False
    degenerate: bool = False

    def __post_init__(self):
        if len(self.feature_names) != len(self.scores):
            raise ValueError("scores length must match feature count")
        for s in self.scores:
            if not math.isfinite(s) or s < 0.0:
                raise ValueError(f"scores must be finite and >= 0, got {s}")
            if self.normalized and s > 1.0 + 1e-12:
                raise ValueError(f"normalized score {s} outside [0,1]")

    def score_of(self, name: str) -> float:
        return self.scores[self.feature_names.index(name)]

    def to_json_dict(self) -> dict:
        return {
            "source": self.source.value,
            "normalized": self.normalized,
            "degenerate": self.degenerate,
            "scores": {f: s for f, s in zip(self.feature_names, self.scores)},
        }


@dataclass(frozen=True)
class FitMetrics:
    """Held-out quality of a fitted ensemble."""

    f1: float
    accuracy: float
    log_loss: float
    holdout_fraction: float
    n_holdout: int
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "f1": self.f1,
            "accuracy": self.accuracy,
            "log_loss": self.log_loss,
            "holdout_fraction": self.holdout_fraction,
            "n_holdout": self.n_holdout,
            "seed": self.seed,
        }


class _Tree:
    """Flat-array binary tree; children always appear after their parent."""

    __slots__ = ("feature", "threshold", "left", "right", "value", "is_leaf")

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.is_leaf: list[bool] = []

    def add_leaf(self, value: float) -> int:
        self.feature.append(-1)
        self.threshold.append(math.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        self.is_leaf.append(True)
        return len(self.value) - 1

    def add_split(self, feature: int, threshold: float) -> int:
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        self.is_leaf.append(False)
        return len(self.value) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros(X.shape[0])
        assign = np.zeros(X.shape[0], dtype=np.int64)
        for nid in range(len(self.value)):
            idx = np.nonzero(assign == nid)[0]
            if len(idx) == 0:
                continue
            if self.is_leaf[nid]:
                out[idx] = self.value[nid]
            else:
                go_left = X[idx, self.feature[nid]] <= self.threshold[nid]
                assign[idx[go_left]] = self.left[nid]
                assign[idx[~go_left]] = self.right[nid]
        return out

    def to_json_dict(self) -> dict:
        return {
            "feature": list(self.feature),
            "threshold": [None if math.isnan(t) else t for t in self.threshold],
            "left": list(self.left),
            "right": list(self.right),
            "value": list(self.value),
            "is_leaf": list(self.is_leaf),
        }


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0)))


class GbmModel:
    """Fitted ensemble plus everything needed to attribute importances."""

    def __init__(self, cfg: GbmConfig, feature_names: tuple[str, ...],
                 column_sources: list[str], base_score: float,
                 trees: list[_Tree], column_gain: np.ndarray, total_gain: float,
                 encoders: dict):
        self.cfg = cfg
        self.feature_names = feature_names
        self.column_sources = column_sources
        self.base_score = base_score
        self.trees = trees
        self.column_gain = column_gain
        self.total_gain = total_gain
        self._encoders = encoders

    def decision_function(self, X_encoded: np.ndarray) -> np.ndarray:
        raw = np.full(X_encoded.shape[0], self.base_score)
        for tree in self.trees:
            raw += self.cfg.learning_rate * tree.predict(X_encoded)
        return raw

    def predict_proba(self, dataset: Dataset) -> np.ndarray:
        X = encode_design(dataset, self.cfg.preset, encoders=self._encoders)[0]
        return _sigmoid(self.decision_function(X))

    def to_json_dict(self) -> dict:
        return {
            "preset": self.cfg.preset.value,
            "base_score": self.base_score,
            "learning_rate": self.cfg.learning_rate,
            "column_sources": list(self.column_sources),
            "trees": [t.to_json_dict() for t in self.trees],
        }


def encode_design(dataset: Dataset, preset: Preset, train_idx=None,
                  encoders: dict | None = None):
    """Build the numeric matrix the trees split on.

    Continuous columns pass through; binary columns become one indicator.
    Nominal columns become per-level indicators under preset A, or a
    single smoothed outcome-mean column under preset B (statistics from
    the training rows only).
    """
    fit = encoders is None
    if fit:
        encoders = {}
    cols = []
    sources = []
    for name in dataset.feature_names:
        kind = dataset.kind(name)
        col = dataset.column(name)
        if kind is FeatureKind.CONTINUOUS:
            cols.append(col.astype(np.float64))
            sources.append(name)
        elif kind is FeatureKind.BINARY or preset is Preset.A:
            if fit:
                encoders[name] = ("onehot", sorted(np.unique(col).tolist()))
            levels = encoders[name][1]
            if kind is FeatureKind.BINARY:
                levels = levels[-1:]    # indicator of the larger label
            for v in levels:
                cols.append((col == v).astype(np.float64))
                sources.append(name)
        else:
            if fit:
                idx = train_idx if train_idx is not None else np.arange(dataset.n_rows)
                y = dataset.outcome[idx].astype(np.float64)
                prior = float(y.mean())
                stats = {}
                for v in sorted(np.unique(col[idx]).tolist()):
                    sel = col[idx] == v
                    stats[v] = (
                        (float(y[sel].sum()) + _TARGET_STAT_PRIOR_WEIGHT * prior)
                        / (float(sel.sum()) + _TARGET_STAT_PRIOR_WEIGHT)
                    )
                encoders[name] = ("target", stats, prior)
            _, stats, prior = encoders[name]
            cols.append(np.array([stats.get(v, prior) for v in col]))
            sources.append(name)
    X = np.column_stack(cols) if cols else np.empty((dataset.n_rows, 0))
    return X, sources, encoders


def _grow_tree(X: np.ndarray, g: np.ndarray, h: np.ndarray, rows: np.ndarray,
               order: np.ndarray, cfg: GbmConfig,
               column_gain: np.ndarray) -> tuple[_Tree, float]:
    """One depth-limited regression tree on gradient/hessian targets.

    Splits maximize the second-order gain
    0.5 * (GL^2/(HL+reg) + GR^2/(HR+reg) - G^2/(H+reg)); candidates are
    midpoints between distinct sorted values. Column order then ascending
    threshold order break gain ties, so growth is deterministic.

    ``rows`` are the row indices this tree trains on; ``order`` is the
    per-column argsort of the full X, computed once by the caller.
    """
    n, n_cols = X.shape
    lam = cfg.l2_reg
    tree = _Tree()
    tree_gain = 0.0
    in_node = np.zeros(n, dtype=bool)

    def best_split(rows: np.ndarray):
        G = float(g[rows].sum())
        H = float(h[rows].sum())
        parent = G * G / (H + lam)
        best = (0.0, -1, 0.0)   # gain, column, threshold
        in_node[:] = False
        in_node[rows] = True
        for c in range(n_cols):
            idx = order[:, c]
            idx = idx[in_node[idx]]
            xv = X[idx, c]
            if xv[0] == xv[-1]:
                continue
            gs = np.cumsum(g[idx])
            hs = np.cumsum(h[idx])
            cut = np.nonzero(xv[:-1] != xv[1:])[0]
            GL = gs[cut]
            HL = hs[cut]
            GR = G - GL
            HR = H - HL
            valid = (HL >= cfg.min_child_weight) & (HR >= cfg.min_child_weight)
            if not valid.any():
                continue
            gains = 0.5 * (GL ** 2 / (HL + lam) + GR ** 2 / (HR + lam) - parent)
            gains[~valid] = -np.inf
            b = int(np.argmax(gains))
            if gains[b] > best[0]:
                thr = 0.5 * (xv[cut[b]] + xv[cut[b] + 1])
                best = (float(gains[b]), c, float(thr))
        return best

    def leaf_value(rows: np.ndarray) -> float:
        return -float(g[rows].sum()) / (float(h[rows].sum()) + lam)

    frontier = [(rows, 0, None, None)]   # rows, depth, parent, side
    while frontier:
        next_frontier = []
        for rows, depth, parent, side in frontier:
            if depth >= cfg.max_depth:
                nid = tree.add_leaf(leaf_value(rows))
            else:
                gain, col, thr = best_split(rows)
                if col < 0 or gain <= 0.0:
                    nid = tree.add_leaf(leaf_value(rows))
                else:
                    nid = tree.add_split(col, thr)
                    column_gain[col] += gain
                    tree_gain += gain
                    go_left = X[rows, col] <= thr
                    next_frontier.append((rows[go_left], depth + 1, nid, "L"))
                    next_frontier.append((rows[~go_left], depth + 1, nid, "R"))
            if parent is not None:
                if side == "L":
                    tree.left[parent] = nid
                else:
                    tree.right[parent] = nid
        frontier = next_frontier
    return tree, tree_gain


def gbm_train(dataset: Dataset, cfg: GbmConfig) -> tuple[GbmModel, FitMetrics]:
    """Train a boosted ensemble and score it on a held-out split.

    Deterministic for a fixed (dataset, cfg): the RNG drives only the
    holdout split and per-tree row subsampling, both derived from
    ``cfg.seed``.
    """
    y_all = dataset.outcome.astype(np.float64)
    if len(np.unique(dataset.outcome)) < 2:
        raise SingleClassOutcomeError("outcome has a single class")

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    perm = rng.permutation(dataset.n_rows)
    n_hold = max(1, int(round(cfg.holdout_fraction * dataset.n_rows)))
    hold_idx = np.sort(perm[:n_hold])
    train_idx = np.sort(perm[n_hold:])
    if len(np.unique(dataset.outcome[train_idx])) < 2:
        raise SingleClassOutcomeError("training split has a single class")

    X, sources, encoders = encode_design(dataset, cfg.preset, train_idx=train_idx)
    n_cols = X.shape[1]
    Xt = X[train_idx]
    yt = y_all[train_idx]
    n_train = len(train_idx)

    p_base = min(1.0 - 1e-6, max(1e-6, float(yt.mean())))
    base = math.log(p_base / (1.0 - p_base))
    raw_train = np.full(n_train, base)

    column_gain = np.zeros(n_cols)
    total_gain = 0.0
    trees: list[_Tree] = []
    order = np.argsort(Xt, axis=0, kind="stable")
    for _ in range(cfg.n_trees):
        if cfg.subsample < 1.0:
            m = max(1, int(round(cfg.subsample * n_train)))
            rows = np.sort(rng.choice(n_train, size=m, replace=False))
        else:
            rows = np.arange(n_train)
        p = _sigmoid(raw_train)
        grad = p - yt
        hess = p * (1.0 - p)
        tree, tgain = _grow_tree(Xt, grad, hess, rows, order, cfg, column_gain)
        total_gain += tgain
        trees.append(tree)
        raw_train += cfg.learning_rate * tree.predict(Xt)

    model = GbmModel(cfg, dataset.feature_names, sources, base, trees,
                     column_gain, total_gain, encoders)

    p_hold = _sigmoid(model.decision_function(X[hold_idx]))
    y_hold = y_all[hold_idx]
    pred = (p_hold >= 0.5).astype(np.float64)
    tp = float(((pred == 1) & (y_hold == 1)).sum())
    fp = float(((pred == 1) & (y_hold == 0)).sum())
    fn = float(((pred == 0) & (y_hold == 1)).sum())
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) > 0 else 0.0
    acc = float((pred == y_hold).mean())
    pc = np.clip(p_hold, 1e-15, 1.0 - 1e-15)
    ll = -float((y_hold * np.log(pc) + (1 - y_hold) * np.log(1 - pc)).mean())
    metrics = FitMetrics(f1=f1, accuracy=acc, log_loss=ll,
                         holdout_fraction=cfg.holdout_fraction,
                         n_holdout=n_hold, seed=cfg.seed)
    return model, metrics


def extract_importance(model: GbmModel) -> FeatureRanking:
    """Total split gain per source feature, unnormalized."""
    gain = {f: 0.0 for f in model.feature_names}
    for c, src in enumerate(model.column_sources):
        gain[src] += float(model.column_gain[c])
    source = (RankingSource.PRESET_A if model.cfg.preset is Preset.A
              else RankingSource.PRESET_B)
    return FeatureRanking(
        feature_names=model.feature_names,
        scores=tuple(gain[f] for f in model.feature_names),
        source=source,
        normalized=False,
    )


def minmax_normalize(ranking: FeatureRanking) -> FeatureRanking:
    """Rescale scores to [0, 1]; a constant ranking maps to all zeros."""
    lo = min(ranking.scores)
    hi = max(ranking.scores)
    if hi == lo:
        return replace(ranking,
                       scores=tuple(0.0 for _ in ranking.scores),
                       normalized=True, degenerate=True)
    return replace(ranking,
                   scores=tuple((s - lo) / (hi - lo) for s in ranking.scores),
                   normalized=True)


def committee_vote(rankings: list[FeatureRanking]) -> FeatureRanking:
    """Merge normalized rankings over one feature set by averaging."""
    if len(rankings) < 2:
        raise ValueError("committee vote needs at least two rankings")
    names = rankings[0].feature_names
    for r in rankings:
        if r.feature_names != names:
            raise MismatchedFeatureSetsError("rankings cover different features")
        if not r.normalized:
            raise ValueError("committee vote requires normalized rankings")
    # fsum keeps the mean exactly permutation-invariant
    merged = tuple(
        math.fsum(r.scores[i] for r in rankings) / len(rankings)
        for i in range(len(names))
    )
    return FeatureRanking(feature_names=names, scores=merged,
                          source=RankingSource.COMMITTEE, normalized=True)


def top_k(ranking: FeatureRanking, k: int) -> list[str]:
    """The k highest-scoring features, ties broken by name order."""
    m = len(ranking.feature_names)
    if not 1 <= k <= m:
        raise KTooLargeError(f"k={k} outside [1, {m}]")
    order = sorted(range(m),
                   key=lambda i: (-ranking.scores[i], ranking.feature_names[i]))
    return [ranking.feature_names[i] for i in order[:k]]
