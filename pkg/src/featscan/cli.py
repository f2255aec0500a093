"""Command-line pipeline: select, scan, sweep, synth, pvalue.

Every command reads CSV data plus a JSON schema, writes JSON reports and
CSV tables into an output directory, and exits 0 on success, 1 on
configuration errors, 2 on data errors, 3 on numeric errors. Reports are
byte-identical for identical inputs, config, and seed; wall-clock
metadata goes to a separate run_meta.json.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import sys
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import embedded, inference, mdss, reportio, synth
from .errors import EXIT_CONFIG, EXIT_DATA, FeatscanError, KTooLargeError
from .filters import FilterThresholds, filter_select
from .tabular import (
    BinMethod,
    Dataset,
    DiscretizationSpec,
    Schema,
    discretize,
    load_csv,
    one_hot,
)
from .wrapper import backward_eliminate, ols_fit

log = logging.getLogger("featscan")

METHODS = ("filter_wrapper", "embedded_a", "embedded_b", "committee")
ALL_FEATURES_LABEL = "all_features"
DEFAULT_K_SWEEP = (5, 10, 15, 20, 25, 30)
SWEEP_CSV_HEADER = [
    "method", "k", "score", "p_value", "odds_ratio", "ci_low", "ci_high",
    "n_members",
]


@dataclass
class PipelineConfig:
    data: Path
    schema: Path
    out_dir: Path
    method: str = "committee"
    k: int | None = None
    k_sweep: tuple[int, ...] = DEFAULT_K_SWEEP
    rho_max: float = 0.9
    vif_max: float = 10.0
    chi2_alpha: float = 0.05
    cramers_v_max: float = 0.9
    bins: int = 5
    bin_method: str = "equal_frequency"
    gbm_trees: int = 200
    gbm_depth: int = 4
    gbm_lr: float = 0.1
    n_restarts: int = 20
    max_iterations: int = 50
    bootstrap_r: int = 100
    score_tolerance: float = 0.01
    workers: int = 1
    seed: int = 0

    def thresholds(self) -> FilterThresholds:
        return FilterThresholds(self.rho_max, self.vif_max, self.chi2_alpha,
                                self.cramers_v_max)

    def discretization(self) -> DiscretizationSpec:
        return DiscretizationSpec(BinMethod(self.bin_method), self.bins)

    def gbm(self, preset_name: str) -> embedded.GbmConfig:
        ctor = (embedded.GbmConfig.preset_a if preset_name == "a"
                else embedded.GbmConfig.preset_b)
        return ctor(
            seed=_derive_seed(self.seed, 4, 0 if preset_name == "a" else 1),
            n_trees=self.gbm_trees,
            max_depth=self.gbm_depth,
            learning_rate=self.gbm_lr,
        )

    def scan_config(self, features: list[str]) -> mdss.ScanConfig:
        # seed keyed on the feature set, so identical sets scan identically
        key = zlib.crc32("\x1f".join(sorted(features)).encode("utf-8"))
        return mdss.ScanConfig(
            n_restarts=self.n_restarts,
            max_iterations=self.max_iterations,
            seed=_derive_seed(self.seed, 3, key),
        )


def _derive_seed(seed: int, *key: int) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return int(ss.generate_state(1)[0])


# ---------------------------------------------------------------------------
# selection
# ---------------------------------------------------------------------------

class SelectionRunner:
    """Caches per-method artifacts so a K sweep reuses trained models."""

    def __init__(self, dataset: Dataset, cfg: PipelineConfig, min_k: int):
        self.dataset = dataset
        self.cfg = cfg
        self.min_k = min_k
        self._filter_diag = None
        self._trace = None
        self._embedded = {}

    def filter_artifacts(self):
        if self._filter_diag is None:
            self._filter_diag = filter_select(self.dataset, self.cfg.thresholds())
            candidates = self._filter_diag.kept
            if self.min_k > len(candidates):
                raise KTooLargeError(
                    f"k={self.min_k} but filters kept {len(candidates)} features"
                )
            self._trace = backward_eliminate(self.dataset, candidates, self.min_k)
        return self._filter_diag, self._trace

    def embedded_artifacts(self, preset_name: str):
        if preset_name not in self._embedded:
            model, metrics = embedded.gbm_train(
                self.dataset, self.cfg.gbm(preset_name)
            )
            ranking = embedded.extract_importance(model)
            self._embedded[preset_name] = (
                model, metrics, ranking, embedded.minmax_normalize(ranking)
            )
        return self._embedded[preset_name]

    def _order_survivors(self, survivors: list[str]) -> list[str]:
        X, names, sources = one_hot(self.dataset, survivors)
        if X.shape[1] == 0:
            return sorted(survivors)
        fit = ols_fit(X, self.dataset.outcome.astype(float), names, sources)
        sig = fit.min_p_by_feature()
        return sorted(survivors, key=lambda f: (sig.get(f, 1.0), f))

    def select(self, method: str, k: int) -> dict:
        """Ordered top-k list plus method diagnostics, as a report payload."""
        if method == "filter_wrapper":
            diag, trace = self.filter_artifacts()
            survivors = trace.surviving_at(k)
            selected = self._order_survivors(survivors)
            return {
                "method": method,
                "k": k,
                "selected": selected,
                "filter_diagnostics": diag.to_json_dict(),
                "elimination_trace": trace.to_json_dict(),
            }
        if method in ("embedded_a", "embedded_b"):
            preset = method[-1]
            _, metrics, ranking, norm = self.embedded_artifacts(preset)
            return {
                "method": method,
                "k": k,
                "selected": embedded.top_k(ranking, k),
                "fit_metrics": metrics.to_json_dict(),
                "ranking": ranking.to_json_dict(),
                "ranking_normalized": norm.to_json_dict(),
            }
        if method == "committee":
            _, metrics_a, _, norm_a = self.embedded_artifacts("a")
            _, metrics_b, _, norm_b = self.embedded_artifacts("b")
            vote = embedded.committee_vote([norm_a, norm_b])
            return {
                "method": method,
                "k": k,
                "selected": embedded.top_k(vote, k),
                "fit_metrics_a": metrics_a.to_json_dict(),
                "fit_metrics_b": metrics_b.to_json_dict(),
                "ranking_a": norm_a.to_json_dict(),
                "ranking_b": norm_b.to_json_dict(),
                "committee": vote.to_json_dict(),
            }
        raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# scanning
# ---------------------------------------------------------------------------

def _scan_bundle(dd, features: list[str], cfg: PipelineConfig):
    """Scan, bootstrap p-value, effect estimate, characterization."""
    scan_cfg = cfg.scan_config(features)
    observed = mdss.scan(dd, features, scan_cfg)
    significance = inference.empirical_p_value(
        dd, features, scan_cfg, observed, cfg.bootstrap_r
    )
    effect = None
    if 0 < observed.n_members < dd.n_rows:
        effect = inference.odds_ratio(dd, observed.subset)
    character = inference.characterize(dd, observed)
    return observed, significance, effect, character


def _scan_report_payload(features, observed, significance, effect, character):
    return {
        "features_scanned": sorted(features),
        "subset": observed.to_json_dict(),
        "significance": significance.to_json_dict(),
        "effect": effect.to_json_dict() if effect is not None else None,
        "characterization": character.to_json_dict(),
    }


def _load_feature_list(arg: str, dataset: Dataset) -> list[str]:
    if arg == "all":
        return list(dataset.feature_names)
    with open(arg, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        features = doc.get("features", doc.get("selected"))
    else:
        features = doc
    if not isinstance(features, list) or not features:
        raise FeatscanError(f"{arg}: no feature list found")
    unknown = [f for f in features if f not in dataset.feature_names]
    if unknown:
        raise FeatscanError(f"{arg}: unknown features {unknown}")
    return [str(f) for f in features]


def _write_meta(out_dir: Path, command: str) -> None:
    meta = {
        "command": command,
        "written_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    with open(out_dir / "run_meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_select(cfg: PipelineConfig) -> int:
    dataset = load_csv(cfg.data, Schema.from_json_file(cfg.schema))
    if cfg.k is None:
        raise FeatscanError("select needs --k")
    methods = METHODS if cfg.method == "all" else (cfg.method,)
    runner = SelectionRunner(dataset, cfg, cfg.k)
    results = {}
    for method in methods:
        payload = runner.select(method, cfg.k)
        results[method] = payload["selected"]
        reportio.write_report(cfg.out_dir / f"select_{method}.json", payload)
        log.info("select %s -> %s", method, payload["selected"])
    if cfg.method == "all":
        overlap = len(set(results["embedded_a"]) & set(results["embedded_b"]))
        reportio.write_report(
            cfg.out_dir / "select_summary.json",
            {
                "k": cfg.k,
                "selected": results,
                "overlap_embedded_a_b": overlap,
            },
        )
        log.info("embedded A/B top-%d overlap: %d", cfg.k, overlap)
    _write_meta(cfg.out_dir, "select")
    return 0


def cmd_scan(cfg: PipelineConfig, features_arg: str) -> int:
    dataset = load_csv(cfg.data, Schema.from_json_file(cfg.schema))
    features = _load_feature_list(features_arg, dataset)
    dd = discretize(dataset, cfg.discretization())
    observed, significance, effect, character = _scan_bundle(dd, features, cfg)
    name = "all" if features_arg == "all" else Path(features_arg).stem
    reportio.write_report(
        cfg.out_dir / f"scan_{name}.json",
        _scan_report_payload(features, observed, significance, effect, character),
    )
    reportio.write_csv_atomic(
        cfg.out_dir / f"replicates_{name}.csv",
        ["replicate", "score"],
        [[i, s] for i, s in enumerate(significance.replicate_scores)],
    )
    reportio.write_report(
        cfg.out_dir / f"cutpoints_{name}.json",
        {"cut_points": dd.cut_points_json_dict()},
    )
    _write_meta(cfg.out_dir, "scan")
    log.info("scan over %d features: score=%.6g p=%.4g members=%d",
             len(features), observed.score, significance.p_value,
             observed.n_members)
    return 0


def cmd_pvalue(cfg: PipelineConfig, features_arg: str) -> int:
    dataset = load_csv(cfg.data, Schema.from_json_file(cfg.schema))
    features = _load_feature_list(features_arg, dataset)
    dd = discretize(dataset, cfg.discretization())
    scan_cfg = cfg.scan_config(features)
    observed = mdss.scan(dd, features, scan_cfg)
    significance = inference.empirical_p_value(
        dd, features, scan_cfg, observed, cfg.bootstrap_r
    )
    name = "all" if features_arg == "all" else Path(features_arg).stem
    reportio.write_report(
        cfg.out_dir / f"pvalue_{name}.json",
        {
            "features_scanned": sorted(features),
            "subset": observed.to_json_dict(),
            "significance": significance.to_json_dict(),
        },
    )
    reportio.write_csv_atomic(
        cfg.out_dir / f"replicates_{name}.csv",
        ["replicate", "score"],
        [[i, s] for i, s in enumerate(significance.replicate_scores)],
    )
    _write_meta(cfg.out_dir, "pvalue")
    log.info("p-value at R=%d: %.4g", cfg.bootstrap_r, significance.p_value)
    return 0


def _sweep_cell(dd, cell_method: str, k: int, features: list[str],
                cfg: PipelineConfig, out_dir: Path):
    observed, significance, effect, character = _scan_bundle(dd, features, cfg)
    payload = _scan_report_payload(features, observed, significance, effect,
                                   character)
    payload.update({"method": cell_method, "k": k})
    reportio.write_report(out_dir / f"sweep_{cell_method}_k{k}.json", payload)
    row = [
        cell_method, k, observed.score, significance.p_value,
        effect.odds_ratio if effect else "",
        effect.ci_low if effect else "",
        effect.ci_high if effect else "",
        observed.n_members,
    ]
    return row, observed.score


def cmd_sweep(cfg: PipelineConfig) -> int:
    dataset = load_csv(cfg.data, Schema.from_json_file(cfg.schema))
    if not cfg.k_sweep:
        raise FeatscanError("sweep needs a non-empty --k-sweep")
    k_values = tuple(sorted(set(cfg.k_sweep)))
    dd = discretize(dataset, cfg.discretization())

    runner = SelectionRunner(dataset, cfg, min(k_values))
    cells = []   # (method, k, features)
    for method in METHODS:
        for k in k_values:
            features = runner.select(method, k)["selected"]
            cells.append((method, k, features))
    cells.append(
        (ALL_FEATURES_LABEL, len(dataset.feature_names),
         list(dataset.feature_names))
    )

    results = {}
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = {
                (m, k): pool.submit(_sweep_cell, dd, m, k, feats, cfg, cfg.out_dir)
                for m, k, feats in cells
            }
            for key, fut in futures.items():
                results[key] = fut.result()
    else:
        for m, k, feats in cells:
            results[(m, k)] = _sweep_cell(dd, m, k, feats, cfg, cfg.out_dir)

    rows = [results[(m, k)][0] for m, k, _ in cells]
    reportio.write_csv_atomic(cfg.out_dir / "sweep.csv", SWEEP_CSV_HEADER, rows)

    all_score = results[(ALL_FEATURES_LABEL, len(dataset.feature_names))][1]
    floor = all_score * (1.0 - cfg.score_tolerance)
    sufficient = {}
    for method in METHODS:
        ks = [k for k in k_values if results[(method, k)][1] >= floor]
        sufficient[method] = min(ks) if ks else None
    reportio.write_report(
        cfg.out_dir / "sweep_summary.json",
        {
            "all_features_score": all_score,
            "score_tolerance": cfg.score_tolerance,
            "smallest_sufficient_k": sufficient,
            "n_scans": len(cells),
        },
    )
    _write_meta(cfg.out_dir, "sweep")
    log.info("sweep complete: %d scans, all-features score %.6g",
             len(cells), all_score)
    return 0


def cmd_synth(spec_path: str, out_dir: str, seed: int | None) -> int:
    with open(spec_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if seed is not None:
        doc["seed"] = seed
    spec = synth.SynthSpec.from_json_dict(doc)
    dataset, ground_truth = synth.generate(spec)
    paths = synth.save(dataset, ground_truth, out_dir)
    _write_meta(Path(out_dir), "synth")
    log.info("wrote %s (%d rows, %d features)", paths["data"], dataset.n_rows,
             len(dataset.feature_names))
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="input CSV")
    p.add_argument("--schema", help="schema JSON")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--bin-method", choices=[m.value for m in BinMethod])
    p.add_argument("--rho-max", type=float)
    p.add_argument("--vif-max", type=float)
    p.add_argument("--chi2-alpha", type=float)
    p.add_argument("--cramers-max", type=float)
    p.add_argument("--gbm-trees", type=int)
    p.add_argument("--gbm-depth", type=int)
    p.add_argument("--gbm-lr", type=float)
    p.add_argument("--restarts", type=int)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--bootstrap-r", type=int)
    p.add_argument("--score-tolerance", type=float)
    p.add_argument("--workers", type=int)


_FLAG_TO_FIELD = {
    "seed": "seed", "bins": "bins", "bin_method": "bin_method",
    "rho_max": "rho_max", "vif_max": "vif_max", "chi2_alpha": "chi2_alpha",
    "cramers_max": "cramers_v_max", "gbm_trees": "gbm_trees",
    "gbm_depth": "gbm_depth", "gbm_lr": "gbm_lr", "restarts": "n_restarts",
    "max_iterations": "max_iterations", "bootstrap_r": "bootstrap_r",
    "score_tolerance": "score_tolerance", "workers": "workers",
    "method": "method", "k": "k",
}


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    file_cfg = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise FeatscanError(f"{args.config}: config must be a JSON object")

    def pick(flag: str, field_name: str, default):
        flag_val = getattr(args, flag, None)
        if flag_val is not None:
            return flag_val
        if field_name in file_cfg:
            return file_cfg[field_name]
        return default

    data = pick("data", "data", None)
    schema = pick("schema", "schema", None)
    out = pick("out", "output_dir", None)
    if not data or not schema or not out:
        raise FeatscanError("--data, --schema, and --out are required")

    kwargs = {}
    for flag, field_name in _FLAG_TO_FIELD.items():
        val = pick(flag, field_name, None)
        if val is not None:
            kwargs[field_name] = val
    k_sweep = getattr(args, "k_sweep", None)
    if k_sweep is not None:
        kwargs["k_sweep"] = tuple(int(x) for x in k_sweep.split(","))
    elif "k_sweep" in file_cfg:
        kwargs["k_sweep"] = tuple(int(x) for x in file_cfg["k_sweep"])
    return PipelineConfig(data=Path(data), schema=Path(schema),
                          out_dir=Path(out), **kwargs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featscan",
        description="Feature selection plus anomalous subset scanning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="rank and select top-K features")
    _add_common(p)
    p.add_argument("--method", choices=METHODS + ("all",))
    p.add_argument("--k", type=int)

    p = sub.add_parser("scan", help="scan a feature list for the top subset")
    _add_common(p)
    p.add_argument("--features", required=True,
                   help="'all' or a JSON file with a feature list")

    p = sub.add_parser("sweep", help="select+scan across methods and K values")
    _add_common(p)
    p.add_argument("--k-sweep", help="comma-separated K values")

    p = sub.add_parser("pvalue", help="bootstrap p-value for a feature list")
    _add_common(p)
    p.add_argument("--features", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--spec", required=True, help="SynthSpec JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args.spec, args.out, args.seed)
        cfg = _build_config(args)
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "select":
            return cmd_select(cfg)
        if args.command == "scan":
            return cmd_scan(cfg, args.features)
        if args.command == "pvalue":
            return cmd_pvalue(cfg, args.features)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        parser.error(f"unknown command {args.command}")
    except FeatscanError as exc:
        log.error("%s", exc)
        return exc.exit_code
    except (ValueError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
