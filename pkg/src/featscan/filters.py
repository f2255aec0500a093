"""Filter-stage feature statistics and the redundancy-removal cascade.

Continuous features are screened with pairwise Pearson correlation and a
variance-inflation-factor loop; categorical features (binary and nominal)
with chi-square association, Cramer's V, and mutual information against
the outcome. Survivors of both paths feed the wrapper stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import special
from .errors import (
    ConstantInputError,
    DegenerateTableError,
    InsufficientRowsError,
)
from .tabular import Dataset, FeatureKind


def pearson(x, y) -> float:
    """Sample Pearson correlation coefficient of two equal-length vectors.

    Raises :class:`ConstantInputError` when either vector has zero
    variance, in which case the coefficient is undefined.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two equal-length vectors")
    if len(x) < 2:
        raise ValueError("pearson needs at least 2 observations")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = math.sqrt(float(xd @ xd))
    sy = math.sqrt(float(yd @ yd))
    if sx == 0.0 or sy == 0.0:
        raise ConstantInputError("zero variance input")
    r = float(xd @ yd) / (sx * sy)
    return min(1.0, max(-1.0, r))


def feature_outcome_corr(x, outcome) -> float:
    """Point-biserial correlation: Pearson of a feature against the 0/1 outcome."""
    return pearson(x, np.asarray(outcome, dtype=np.float64))


def _r_squared(target: np.ndarray, others: np.ndarray) -> float:
    """Centered R-squared of OLS regression of target on others plus intercept."""
    n = len(target)
    design = np.column_stack([np.ones(n), others])
    beta, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ beta
    tss = float(((target - target.mean()) ** 2).sum())
    if tss == 0.0:
        raise ConstantInputError("zero variance target")
    return 1.0 - float(resid @ resid) / tss


def vif(dataset: Dataset, feature: str) -> float:
    """Variance inflation factor of one continuous feature against the rest.

    Computed as 1 / (1 - R^2) from regressing the feature on all other
    continuous features. Exact collinearity returns ``inf``.
    """
    continuous = dataset.schema.features_of_kind(FeatureKind.CONTINUOUS)
    if feature not in continuous:
        raise ValueError(f"{feature!r} is not a continuous feature")
    others = [f for f in continuous if f != feature]
    return _vif_of(dataset, feature, others)


def _vif_of(dataset: Dataset, feature: str, others: list[str]) -> float:
    if not others:
        raise ValueError("VIF needs at least two continuous features")
    if dataset.n_rows <= len(others) + 1:
        raise InsufficientRowsError(
            f"{dataset.n_rows} rows is too few for VIF over "
            f"{len(others) + 1} continuous features"
        )
    target = dataset.column(feature)
    design = np.column_stack([dataset.column(f) for f in others])
    r2 = _r_squared(target, design)
    if r2 >= 1.0 - 1e-12:
        return math.inf
    return 1.0 / (1.0 - r2)


def _contingency(a, b) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("need two equal-length vectors")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    r = ai.max() + 1
    c = bi.max() + 1
    table = np.zeros((r, c), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def chi_square_table(table: np.ndarray) -> tuple[float, int, float]:
    """Pearson chi-square statistic, degrees of freedom, and p-value.

    All-zero rows or columns are removed before testing; if fewer than two
    levels remain on either margin the table is degenerate.
    """
    table = np.asarray(table, dtype=np.float64)
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    r, c = table.shape
    if r < 2 or c < 2:
        raise DegenerateTableError(
            f"contingency table collapsed to {r}x{c}"
        )
    n = table.sum()
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / n
    chi2 = float(((table - expected) ** 2 / expected).sum())
    dof = (r - 1) * (c - 1)
    p = special.chi2_sf(chi2, dof)
    return chi2, dof, p


def chi_square(a, b) -> tuple[float, int, float]:
    """Chi-square test of association between two categorical vectors."""
    return chi_square_table(_contingency(a, b))


def cramers_v(a, b) -> float:
    """Cramer's V in [0, 1]: chi-square normalized by table size."""
    table = _contingency(a, b)
    chi2, _, _ = chi_square_table(table)
    pruned_r = int((table.sum(axis=1) > 0).sum())
    pruned_c = int((table.sum(axis=0) > 0).sum())
    n = int(table.sum())
    phi = math.sqrt(chi2 / (n * min(pruned_r - 1, pruned_c - 1)))
    return min(1.0, phi)


def mutual_information(f, y, normalized: bool = True) -> float:
    """Plug-in mutual information (nats) between a feature and the outcome.

    With ``normalized`` the value is 2 I / (H(f) + H(y)), defined as 0 when
    either marginal entropy is 0. Degenerate inputs return 0 rather than
    raising.
    """
    table = _contingency(f, y).astype(np.float64)
    n = table.sum()
    if n == 0:
        return 0.0
    joint = table / n
    pf = joint.sum(axis=1)
    py = joint.sum(axis=0)
    nz = joint > 0
    outer = np.outer(pf, py)
    info = float((joint[nz] * np.log(joint[nz] / outer[nz])).sum())
    info = max(0.0, info)
    if not normalized:
        return info
    hf = -float((pf[pf > 0] * np.log(pf[pf > 0])).sum())
    hy = -float((py[py > 0] * np.log(py[py > 0])).sum())
    if hf == 0.0 or hy == 0.0:
        return 0.0
    return 2.0 * info / (hf + hy)


@dataclass(frozen=True)
class FilterThresholds:
    """Cutoffs for the redundancy cascade; all dataset-dependent knobs."""

    rho_max: float = 0.9
    vif_max: float = 10.0
    chi2_alpha: float = 0.05
    cramers_v_max: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.rho_max < 1.0:
            raise ValueError(f"rho_max must be in (0,1), got {self.rho_max}")
        if self.vif_max <= 0.0:
            raise ValueError(f"vif_max must be positive, got {self.vif_max}")
        if not 0.0 < self.chi2_alpha < 1.0:
            raise ValueError(f"chi2_alpha must be in (0,1), got {self.chi2_alpha}")
        if not 0.0 < self.cramers_v_max < 1.0:
            raise ValueError(
                f"cramers_v_max must be in (0,1), got {self.cramers_v_max}"
            )


@dataclass
class FilterDiagnostics:
    """Full audit trail of the filter stage."""

    pearson_pairs: list = field(default_factory=list)    # (fi, fj, rho or None)
    vif_values: list = field(default_factory=list)       # (f, vif), last computed
    chi2_pairs: list = field(default_factory=list)       # (fi, fj, chi2, p)
    cramers_pairs: list = field(default_factory=list)    # (fi, fj, phi)
    mi_values: list = field(default_factory=list)        # (f, nmi with outcome)
    dropped: list = field(default_factory=list)          # (f, reason)
    kept_continuous: list = field(default_factory=list)
    kept_categorical: list = field(default_factory=list)
    notes: list = field(default_factory=list)            # undefined statistics

    @property
    def kept(self) -> list[str]:
        return self.kept_continuous + self.kept_categorical

    def to_json_dict(self) -> dict:
        return {
            "pearson_pairs": [
                {"a": a, "b": b, "rho": r} for a, b, r in self.pearson_pairs
            ],
            "vif_values": [{"feature": f, "vif": v} for f, v in self.vif_values],
            "chi2_pairs": [
                {"a": a, "b": b, "chi2": x, "p": p}
                for a, b, x, p in self.chi2_pairs
            ],
            "cramers_pairs": [
                {"a": a, "b": b, "v": v} for a, b, v in self.cramers_pairs
            ],
            "mi_values": [{"feature": f, "mi": m} for f, m in self.mi_values],
            "dropped": [{"feature": f, "reason": r} for f, r in self.dropped],
            "kept_continuous": list(self.kept_continuous),
            "kept_categorical": list(self.kept_categorical),
            "notes": list(self.notes),
        }


def _outcome_corr_or_zero(dataset, feature, diag) -> float:
    try:
        return abs(feature_outcome_corr(dataset.column(feature), dataset.outcome))
    except ConstantInputError:
        diag.notes.append(f"outcome correlation undefined for {feature}, using 0")
        return 0.0


def filter_select(dataset: Dataset, thresholds: FilterThresholds) -> FilterDiagnostics:
    """Run the redundancy cascade and return survivors plus diagnostics.

    Continuous path: for every pair whose |rho| exceeds ``rho_max``
    (strongest pairs first), drop the member less correlated with the
    outcome; then iteratively drop the highest-VIF feature while any VIF
    exceeds ``vif_max``, recomputing after each drop. Categorical path:
    for every pair significant at ``chi2_alpha`` with Cramer's V above
    ``cramers_v_max`` (strongest first), drop the member with less mutual
    information with the outcome. All ties break toward keeping the
    alphabetically first feature name.
    """
    diag = FilterDiagnostics()
    schema = dataset.schema
    continuous = schema.features_of_kind(FeatureKind.CONTINUOUS)
    categorical = [
        f for f in schema.feature_names
        if schema.kind(f) is not FeatureKind.CONTINUOUS
    ]

    # --- continuous path: pairwise correlation sweep -----------------
    alive = {f: True for f in continuous}
    pairs = []
    for i, fi in enumerate(continuous):
        for fj in continuous[i + 1:]:
            try:
                rho = pearson(dataset.column(fi), dataset.column(fj))
            except ConstantInputError:
                rho = None
                diag.notes.append(f"pearson undefined for ({fi}, {fj}), using 0")
            diag.pearson_pairs.append((fi, fj, rho))
            pairs.append((fi, fj, rho))
    pairs.sort(key=lambda t: (-(abs(t[2]) if t[2] is not None else 0.0), t[0], t[1]))
    for fi, fj, rho in pairs:
        if rho is None or abs(rho) <= thresholds.rho_max:
            continue
        if not (alive[fi] and alive[fj]):
            continue
        ci = _outcome_corr_or_zero(dataset, fi, diag)
        cj = _outcome_corr_or_zero(dataset, fj, diag)
        # keep the member more correlated with the outcome; on a tie keep
        # the alphabetically first
        if ci > cj or (ci == cj and fi < fj):
            loser, keeper = fj, fi
        else:
            loser, keeper = fi, fj
        alive[loser] = False
        diag.dropped.append(
            (loser,
             f"|rho|={abs(rho):.4f} with {keeper} above {thresholds.rho_max}, "
             f"weaker outcome correlation")
        )

    # --- continuous path: VIF elimination loop -----------------------
    survivors = [f for f in continuous if alive[f]]
    last_vif: dict[str, float] = {}
    while len(survivors) >= 2:
        vifs = {}
        for f in survivors:
            try:
                vifs[f] = _vif_of(dataset, f, [g for g in survivors if g != f])
            except ConstantInputError:
                diag.notes.append(f"VIF undefined for constant feature {f}")
        last_vif.update(vifs)
        over = {f: v for f, v in vifs.items() if v > thresholds.vif_max}
        if not over:
            break
        # drop the worst offender; on ties drop the alphabetically last
        worst = max(over, key=lambda f: (over[f], f))
        survivors.remove(worst)
        alive[worst] = False
        diag.dropped.append(
            (worst, f"VIF={over[worst]:.4g} above {thresholds.vif_max}")
        )
    diag.vif_values = sorted(last_vif.items())
    diag.kept_continuous = [f for f in continuous if alive[f]]

    # --- categorical path ---------------------------------------------
    alive_cat = {f: True for f in categorical}
    for f in categorical:
        diag.mi_values.append(
            (f, mutual_information(dataset.column(f), dataset.outcome))
        )
    mi_of = dict(diag.mi_values)
    cat_pairs = []
    for i, fi in enumerate(categorical):
        for fj in categorical[i + 1:]:
            try:
                chi2, _, p = chi_square(dataset.column(fi), dataset.column(fj))
                phi = cramers_v(dataset.column(fi), dataset.column(fj))
            except DegenerateTableError:
                diag.notes.append(
                    f"chi-square degenerate for ({fi}, {fj}), skipping pair"
                )
                continue
            diag.chi2_pairs.append((fi, fj, chi2, p))
            diag.cramers_pairs.append((fi, fj, phi))
            cat_pairs.append((fi, fj, p, phi))
    cat_pairs.sort(key=lambda t: (-t[3], t[0], t[1]))
    for fi, fj, p, phi in cat_pairs:
        if p >= thresholds.chi2_alpha or phi <= thresholds.cramers_v_max:
            continue
        if not (alive_cat[fi] and alive_cat[fj]):
            continue
        mi, mj = mi_of[fi], mi_of[fj]
        if mi > mj or (mi == mj and fi < fj):
            loser, keeper = fj, fi
        else:
            loser, keeper = fi, fj
        alive_cat[loser] = False
        diag.dropped.append(
            (loser,
             f"association with {keeper} (V={phi:.4f}, p={p:.3g}), "
             f"lower mutual information with outcome")
        )
    diag.kept_categorical = [f for f in categorical if alive_cat[f]]
    return diag
