"""Multi-dimensional subset scanning over discretized features.

The scanner searches conjunctions of per-feature value sets for the
subset with the strongest evidence of elevated outcome odds, measured by
a Bernoulli likelihood-ratio score against the global outcome mean. Each
feature's optimal value set given the others is found in linear time by
evaluating priority-ordered prefixes; coordinate ascent with random
restarts drives the joint search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AlphaOutOfRangeError,
    DegenerateOutcomeError,
    EmptyRecordsError,
    NoFeaturesError,
    UnknownFeatureError,
)
from .tabular import Dataset, DiscreteDataset, FeatureKind

_SCORE_TOL = 1e-12


@dataclass(frozen=True)
class SubsetDescriptor:
    """Conjunction of per-feature retained value sets.

    Features absent from ``restrictions`` are unrestricted. The canonical
    form never carries a restriction equal to a feature's full domain.
    """

    restrictions: dict[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for f, values in self.restrictions.items():
            vals = frozenset(str(v) for v in values)
            if not vals:
                raise ValueError(f"empty value set for feature {f!r}")
            clean[f] = vals
        object.__setattr__(self, "restrictions", clean)

    @property
    def n_restricted(self) -> int:
        return len(self.restrictions)

    def matches(self, data) -> np.ndarray:
        """Boolean row mask of members; works on discrete or raw datasets."""
        if isinstance(data, DiscreteDataset):
            mask = np.ones(data.n_rows, dtype=bool)
            for f, values in self.restrictions.items():
                levels = data.levels(f)
                unknown = values - set(levels)
                if unknown:
                    raise UnknownFeatureError(
                        f"values {sorted(unknown)} not in domain of {f!r}"
                    )
                allowed = np.isin(np.asarray(levels), sorted(values))
                mask &= allowed[data.codes(f)]
            return mask
        if isinstance(data, Dataset):
            mask = np.ones(data.n_rows, dtype=bool)
            for f, values in self.restrictions.items():
                if data.kind(f) is FeatureKind.CONTINUOUS:
                    raise ValueError(
                        f"{f!r} is continuous; match against the discretized view"
                    )
                mask &= np.isin(data.column(f), sorted(values))
            return mask
        raise TypeError(f"cannot match against {type(data).__name__}")

    def canonicalized(self, data: DiscreteDataset) -> "SubsetDescriptor":
        """Drop any restriction that covers a feature's full domain."""
        kept = {}
        for f, values in self.restrictions.items():
            if values != frozenset(data.levels(f)):
                kept[f] = values
        return SubsetDescriptor(kept)

    def encode(self) -> str:
        """Canonical string form, usable as a deterministic sort key."""
        parts = [
            f"{f}={'|'.join(sorted(vals))}"
            for f, vals in sorted(self.restrictions.items())
        ]
        return ";".join(parts)

    def to_json_dict(self) -> dict:
        return {f: sorted(vals) for f, vals in sorted(self.restrictions.items())}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SubsetDescriptor":
        return cls({f: frozenset(vals) for f, vals in doc.items()})


@dataclass(frozen=True)
class ScanConfig:
    """Search budget and reproducibility knobs for one scan."""

    n_restarts: int = 20
    max_iterations: int = 50
    seed: int = 0
    q_domain: str = "q>1"   # one-sided: only elevated-odds subsets

    def __post_init__(self):
        if self.n_restarts < 1:
            raise ValueError(f"n_restarts must be >= 1, got {self.n_restarts}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.q_domain != "q>1":
            raise ValueError("only the one-sided q>1 alternative is supported")


@dataclass(frozen=True)
class ScoredSubset:
    """A subset descriptor with its score and sufficient statistics."""

    subset: SubsetDescriptor
    score: float
    q_mle: float
    n_members: int
    sum_outcomes: int
    alpha_g: float

    def to_json_dict(self) -> dict:
        return {
            "restrictions": self.subset.to_json_dict(),
            "score": self.score,
            "q_mle": self.q_mle,
            "n_members": self.n_members,
            "sum_outcomes": self.sum_outcomes,
            "alpha_g": self.alpha_g,
        }


def score_bernoulli(sum_y: float, n_s: float, alpha_g: float) -> tuple[float, float]:
    """Maximized Bernoulli likelihood-ratio score of a subset.

    The score is max over q of  log(q) * sum_y - n_s * log(1 - a + q a)
    with global expectation a. The maximizer is the observed-vs-expected
    odds ratio q_hat = sum_y (1-a) / (a (n_s - sum_y)); under the
    one-sided alternative any q_hat <= 1 scores 0 with q reported as 1,
    and an all-positive subset hits the limit n_s * log(1/a) with q
    reported as infinity.
    """
    if not 0.0 < alpha_g < 1.0:
        raise AlphaOutOfRangeError(f"alpha_g must be in (0,1), got {alpha_g}")
    if n_s < 0 or sum_y < 0 or sum_y > n_s:
        raise ValueError(f"need 0 <= sum_y <= n_s, got sum_y={sum_y}, n_s={n_s}")
    if n_s == 0:
        return 0.0, 1.0
    if sum_y == n_s:
        return n_s * math.log(1.0 / alpha_g), math.inf
    q_hat = (sum_y * (1.0 - alpha_g)) / (alpha_g * (n_s - sum_y))
    if q_hat <= 1.0:
        return 0.0, 1.0
    score = sum_y * math.log(q_hat) - n_s * math.log(1.0 - alpha_g + q_hat * alpha_g)
    return max(score, 0.0), q_hat


@dataclass(frozen=True)
class ValueRecord:
    value: str
    n: int
    sum_y: int


def aggregate_by_value(data: DiscreteDataset, feature: str,
                       conditioning: SubsetDescriptor) -> list[ValueRecord]:
    """Member counts and outcome sums per value of one feature.

    Rows are first filtered to those matching ``conditioning``, which must
    not restrict ``feature`` itself. Every value of the feature's domain
    gets a record, including zero-count ones.
    """
    if feature in conditioning.restrictions:
        raise ValueError(f"{feature!r} is restricted in the conditioning")
    codes = data.codes(feature)
    levels = data.levels(feature)
    mask = conditioning.matches(data)
    n_v = np.bincount(codes[mask], minlength=len(levels))
    s_v = np.bincount(codes[mask], weights=data.outcome[mask].astype(np.float64),
                      minlength=len(levels))
    return [
        ValueRecord(levels[i], int(n_v[i]), int(round(s_v[i])))
        for i in range(len(levels))
    ]


def _best_prefix(n_v: np.ndarray, s_v: np.ndarray, alpha_g: float):
    """Best priority-ordered prefix of positive-count values.

    Returns (code array of the chosen values, score). Values are ranked by
    sum_y / (n * alpha) descending; the linear-time scan property puts the
    optimum over all value subsets on one of these prefixes. On score ties
    the larger prefix wins, so a null feature relaxes to its full domain.
    """
    pos = np.nonzero(n_v > 0)[0]
    if len(pos) == 0:
        raise EmptyRecordsError("no value has any members")
    priority = s_v[pos] / (n_v[pos] * alpha_g)
    order = pos[np.lexsort((pos, -priority))]
    cum_n = np.cumsum(n_v[order])
    cum_s = np.cumsum(s_v[order])
    best_score = -1.0
    best_j = 0
    for j in range(len(order)):
        sc, _ = score_bernoulli(float(cum_s[j]), float(cum_n[j]), alpha_g)
        # >= so exact ties go to the larger prefix; a feature carrying no
        # signal then relaxes to its full domain
        if sc >= best_score:
            best_score = sc
            best_j = j
    return order[: best_j + 1], best_score


def best_value_subset(records: list[ValueRecord], alpha_g: float) -> tuple[frozenset[str], float]:
    """Highest-scoring value subset of one feature via prefix evaluation."""
    n_v = np.array([r.n for r in records], dtype=np.float64)
    s_v = np.array([r.sum_y for r in records], dtype=np.float64)
    chosen, score = _best_prefix(n_v, s_v, alpha_g)
    return frozenset(records[i].value for i in chosen), score


class _ScanWorkspace:
    """Reusable per-scan state: codes, per-feature block masks, counters."""

    def __init__(self, data: DiscreteDataset, features: list[str]):
        self.features = features
        self.codes = [data.codes(f) for f in features]
        self.levels = [data.levels(f) for f in features]
        self.arities = [len(lv) for lv in self.levels]
        self.y = data.outcome.astype(np.float64)
        self.n = data.n_rows
        self.blocked = [np.zeros(self.n, dtype=np.int8) for _ in features]
        self.num_blocked = np.zeros(self.n, dtype=np.int16)
        self.selected: list[np.ndarray] = [
            np.ones(a, dtype=bool) for a in self.arities
        ]

    def set_selection(self, j: int, allowed: np.ndarray) -> None:
        new_blocked = (~allowed[self.codes[j]]).astype(np.int8)
        self.num_blocked += new_blocked - self.blocked[j]
        self.blocked[j] = new_blocked
        self.selected[j] = allowed

    def reset(self) -> None:
        for j, a in enumerate(self.arities):
            self.set_selection(j, np.ones(a, dtype=bool))

    def joint_stats(self) -> tuple[int, int]:
        mask = self.num_blocked == 0
        return int(round(float(self.y[mask].sum()))), int(mask.sum())


def _random_selection(rng: np.random.Generator, arity: int) -> np.ndarray:
    # rejection sampling: uniform over non-empty value subsets
    while True:
        sel = rng.integers(0, 2, size=arity).astype(bool)
        if sel.any():
            return sel


def scan(data: DiscreteDataset, features: list[str], cfg: ScanConfig) -> ScoredSubset:
    """Find the highest-scoring conjunctive subset over the given features.

    Each restart initializes every feature's value set (the first restart
    starts fully unrestricted, later ones uniformly at random), then
    cycles through the features in seeded random order, replacing each
    feature's set with its best conditional prefix until a full cycle
    improves the score by no more than 1e-12 or the iteration cap is hit.
    The best restart wins; ties prefer fewer restrictions, then the
    lexicographically smallest restriction encoding. Deterministic for a
    fixed seed.
    """
    if not features:
        raise NoFeaturesError("scan needs at least one feature")
    if len(set(features)) != len(features):
        raise ValueError("duplicate features in scan list")
    for f in features:
        data.codes(f)   # raises UnknownFeatureError
    alpha_g = data.outcome_mean()
    if not 0.0 < alpha_g < 1.0:
        raise DegenerateOutcomeError(
            f"outcome mean {alpha_g} leaves nothing to contrast"
        )

    ws = _ScanWorkspace(data, list(features))
    n_feat = len(features)
    best: tuple | None = None   # (-score, n_restricted, encoding, ScoredSubset)

    for restart in range(cfg.n_restarts):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=cfg.seed, spawn_key=(0, restart))
        )
        ws.reset()
        if restart > 0:
            for j in range(n_feat):
                ws.set_selection(j, _random_selection(rng, ws.arities[j]))
        sum_y, n_s = ws.joint_stats()
        score = score_bernoulli(sum_y, n_s, alpha_g)[0]

        for _ in range(cfg.max_iterations):
            cycle_start = score
            for j in rng.permutation(n_feat):
                cond = ws.num_blocked == ws.blocked[j]
                codes_j = ws.codes[j][cond]
                if len(codes_j) == 0:
                    # conjunction of the other features is empty; relax
                    ws.set_selection(j, np.ones(ws.arities[j], dtype=bool))
                    score = 0.0
                    continue
                n_v = np.bincount(codes_j, minlength=ws.arities[j])
                s_v = np.bincount(codes_j, weights=ws.y[cond],
                                  minlength=ws.arities[j])
                chosen, sc = _best_prefix(n_v, s_v, alpha_g)
                allowed = np.zeros(ws.arities[j], dtype=bool)
                allowed[chosen] = True
                ws.set_selection(j, allowed)
                score = sc
            if score <= cycle_start + _SCORE_TOL:
                break

        sum_y, n_s = ws.joint_stats()
        final_score, q = score_bernoulli(sum_y, n_s, alpha_g)
        restrictions = {}
        for j, f in enumerate(ws.features):
            if not ws.selected[j].all():
                restrictions[f] = frozenset(
                    ws.levels[j][i] for i in np.nonzero(ws.selected[j])[0]
                )
        subset = SubsetDescriptor(restrictions).canonicalized(data)
        result = ScoredSubset(subset=subset, score=final_score, q_mle=q,
                              n_members=n_s, sum_outcomes=sum_y, alpha_g=alpha_g)
        key = (-final_score, subset.n_restricted, subset.encode())
        if best is None or key < best[0]:
            best = (key, result)

    return best[1]
