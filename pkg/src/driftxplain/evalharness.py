"""Quantitative evaluation against analytic ground truth.

Four experiments, each run over freshly drawn generators so the numbers
measure the method and not one lucky draw:

- identifiability: MSE of the estimated identifiability against the
  analytic value, pooled over draws from the training mixture, a 3x
  widened copy of it, and a uniform box (queries far off the data
  manifold are part of the contract).
- prototypes: mean analytic identifiability (and characterizing score) at
  the characteristic samples, with analytic identifiability as the
  resampling weight so the clustering is judged in isolation.
- checkerboard: end-to-end localization; a ground-truth change in a known
  set of grid cells must be found more reliably than a size-matched
  random guess (exact one-sided sign test).
- benchmarks: real feature tables with the prediction target replaced by
  a synthetic time bin of known identifiability.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .dataio import _atomic_write_text
from .errors import ValidationError
from .pipeline import OracleDetector, StreamConfig, explain_stream
from .proto import METHODS, find_characteristic_samples, prototype_quality
from .synth import (
    GmmSpec,
    analytic_characterizing,
    analytic_identifiability,
    build_mixture,
    cell_of_points,
    draw_checkerboard_spec,
    relabel_classification,
    relabel_regression,
    sample_checkerboard,
    sample_gmm,
    sample_uniform_box,
    stream_change_positions,
)
from .timeclf import (
    ForestConfig,
    estimate_identifiability,
    fit_forest,
    fit_knn,
    identifiability_mse,
)

FLAG_RULES = ("chars", "i-mass")


@dataclass(frozen=True)
class GmmConfig:
    """Mixture size written d/g/c: dim, gaussians per class, classes."""

    dim: int
    n_gauss: int
    n_class: int

    def __post_init__(self):
        if self.dim < 1 or self.n_gauss < 1 or self.n_class < 2:
            raise ValidationError("need dim >= 1, n_gauss >= 1 and n_class >= 2")

    @classmethod
    def parse(cls, text: str) -> "GmmConfig":
        parts = str(text).split("/")
        if len(parts) != 3:
            raise ValidationError(f"expected d/g/c, got {text!r}")
        try:
            d, g, c = (int(p) for p in parts)
        except ValueError:
            raise ValidationError(f"expected three integers in {text!r}") from None
        return cls(dim=d, n_gauss=g, n_class=c)

    @property
    def label(self) -> str:
        return f"{self.dim}/{self.n_gauss}/{self.n_class}"

    def spec(self, seed: int, sigma: float = 1.0) -> GmmSpec:
        return GmmSpec(
            dim=self.dim,
            n_gauss_per_class=self.n_gauss,
            n_class=self.n_class,
            sigma=sigma,
            seed=seed,
        )


@dataclass(frozen=True)
class ExperimentGrid:
    configs: tuple[GmmConfig, ...]
    classifiers: tuple[str, ...] = ("knn",)
    methods: tuple[str, ...] = ("kmeans-resampled",)
    runs: int = 30
    seed: int = 0
    train_n: int = 500
    eval_n: int = 1500

    def __post_init__(self):
        configs = tuple(
            c if isinstance(c, GmmConfig) else GmmConfig.parse(c) for c in self.configs
        )
        if not configs:
            raise ValidationError("need at least one mixture config")
        object.__setattr__(self, "configs", configs)
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        object.__setattr__(self, "methods", tuple(self.methods))
        for clf in self.classifiers:
            if clf not in ("knn", "rf"):
                raise ValidationError(f"unknown classifier {clf!r}")
        for method in self.methods:
            if method not in METHODS:
                raise ValidationError(f"unknown method {method!r}")
        if self.runs < 1 or self.train_n < 2 or self.eval_n < 1:
            raise ValidationError("runs, train_n and eval_n must be positive (train_n >= 2)")


@dataclass(frozen=True)
class ResultRow:
    """One aggregated metric plus the raw per-run values behind it."""

    experiment: str
    config: str
    variant: str
    metric: str
    mean: float
    std: float
    runs: int
    values: tuple[float, ...]


def _aggregate(experiment: str, config: str, variant: str, metric: str, values) -> ResultRow:
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return ResultRow(
        experiment=experiment,
        config=config,
        variant=variant,
        metric=metric,
        mean=float(arr.mean()),
        std=std,
        runs=int(arr.size),
        values=tuple(float(v) for v in arr),
    )


def _run_seeds(seed: int, key: tuple[int, ...], count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed, spawn_key=key).spawn(count)


def _seed_int(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1)[0])


def _fit(classifier: str, data: Dataset, seed_seq: np.random.SeedSequence):
    if classifier == "knn":
        return fit_knn(data)
    return fit_forest(data, ForestConfig(seed=_seed_int(seed_seq)))


# ---------------------------------------------------------------------------
# Identifiability estimation quality


def eval_identifiability(grid: ExperimentGrid) -> list[ResultRow]:
    """Pooled MSE of estimated vs analytic identifiability, per config."""
    rows = []
    for c_idx, cfg in enumerate(grid.configs):
        per_clf = {clf: [] for clf in grid.classifiers}
        for run in range(grid.runs):
            kids = _run_seeds(grid.seed, (c_idx, run), 6)
            spec = cfg.spec(seed=_seed_int(kids[0]))
            mix = build_mixture(spec)
            data, _ = sample_gmm(spec, grid.train_n, rng_seed=kids[1])
            x_p, _ = mix.sample(grid.eval_n, rng_seed=kids[2])
            x_wide, _ = mix.widened(3.0).sample(grid.eval_n, rng_seed=kids[3])
            x_unif = sample_uniform_box(spec.dim, spec.halfwidth, grid.eval_n, rng_seed=kids[4])
            queries = np.vstack([x_p, x_wide, x_unif])
            i_true = analytic_identifiability(mix, queries)
            for clf_name in grid.classifiers:
                clf = _fit(clf_name, data, kids[5])
                i_hat = estimate_identifiability(clf, queries)
                per_clf[clf_name].append(identifiability_mse(i_hat, i_true))
        for clf_name in grid.classifiers:
            rows.append(
                _aggregate("identifiability", cfg.label, clf_name, "mse", per_clf[clf_name])
            )
    return rows


# ---------------------------------------------------------------------------
# Prototype quality


def eval_prototypes(grid: ExperimentGrid) -> list[ResultRow]:
    """Mean analytic identifiability and characterizing score at prototypes.

    Resampling weights are the analytic identifiability of the training
    samples, so the measured quantity is how well the clustering places
    prototypes, not how well a classifier estimated the weights.
    """
    rows = []
    for c_idx, cfg in enumerate(grid.configs):
        per_method = {m: ([], []) for m in grid.methods}
        for run in range(grid.runs):
            kids = _run_seeds(grid.seed, (c_idx, run), 3)
            spec = cfg.spec(seed=_seed_int(kids[0]))
            mix = build_mixture(spec)
            data, truth = sample_gmm(spec, grid.train_n, rng_seed=kids[1])
            for m_idx, method in enumerate(grid.methods):
                chars = find_characteristic_samples(
                    data,
                    truth.i_true,
                    method=method,
                    rng_seed=np.random.SeedSequence(
                        grid.seed, spawn_key=(c_idx, run, m_idx)
                    ),
                )
                pts = np.vstack([c.x for c in chars])
                i_vals, c_vals = per_method[method]
                i_vals.append(prototype_quality(pts, lambda q: analytic_identifiability(mix, q)))
                c_vals.append(prototype_quality(pts, lambda q: analytic_characterizing(mix, q)))
        for method in grid.methods:
            i_vals, c_vals = per_method[method]
            rows.append(_aggregate("prototypes", cfg.label, method, "i_at_prototypes", i_vals))
            rows.append(_aggregate("prototypes", cfg.label, method, "char_at_prototypes", c_vals))
    return rows


# ---------------------------------------------------------------------------
# Checkerboard localization


@dataclass(frozen=True)
class CheckerboardResult:
    grid: int
    flag_rule: str
    scores: tuple[float, ...]
    baselines: tuple[float, ...]
    wins: int
    ties: int
    runs: int
    p_value: float

    def rows(self) -> list[ResultRow]:
        label = f"{self.grid}x{self.grid}"
        return [
            _aggregate("checkerboard", label, self.flag_rule, "score", self.scores),
            _aggregate("checkerboard", label, self.flag_rule, "baseline", self.baselines),
            ResultRow(
                "checkerboard",
                label,
                self.flag_rule,
                "p_value",
                self.p_value,
                0.0,
                self.runs,
                (self.p_value,),
            ),
        ]


def _sign_test_p(wins: int, n: int) -> float:
    """One-sided exact sign test: P[Bin(n, 1/2) >= wins]."""
    if n == 0:
        return 1.0
    return sum(math.comb(n, j) for j in range(wins, n + 1)) / 2.0**n


def eval_checkerboard(
    grid_size: int = 3,
    n_per_bin: int = 150,
    runs: int = 30,
    seed: int = 0,
    classifier: str = "knn",
    method: str = "kmeans-resampled",
    flag_rule: str = "chars",
) -> CheckerboardResult:
    """Do flagged cells match the truly changed cells better than chance?

    Per run a fresh board is drawn and the full pipeline explains the
    change. Under ``chars`` a cell is flagged when a characteristic sample
    lands in it; under ``i-mass`` when its share of the total estimated
    identifiability exceeds the uniform share. The baseline is the exact
    expected symmetric-difference score of flagging a size-matched random
    cell set: (f + c - 2fc/G) / G.
    """
    if flag_rule not in FLAG_RULES:
        raise ValidationError(f"unknown flag rule {flag_rule!r}; pick one of {FLAG_RULES}")
    total_cells = grid_size * grid_size
    scores, baselines = [], []
    wins = ties = 0
    for run in range(runs):
        kids = _run_seeds(seed, (run,), 3)
        spec = draw_checkerboard_spec(grid_size, rng_seed=kids[0])
        data, truth = sample_checkerboard(spec, n_per_bin, rng_seed=kids[1])
        changed = set(truth.meta["changed_cells"][(1, 2)])
        config = StreamConfig(
            classifier=classifier, method=method, seed=_seed_int(kids[2])
        )
        if flag_rule == "chars":
            detector = OracleDetector(stream_change_positions(data))
            report = explain_stream(data.x, detector, config)[-1]
            pts = np.asarray([c["features"] for c in report.characteristic_samples])
            flagged = set(int(c) for c in cell_of_points(pts, grid_size))
        else:
            clf = _fit(classifier, data, kids[2])
            i_hat = estimate_identifiability(clf, data.x)
            cells = cell_of_points(data.x, grid_size)
            mass = np.bincount(cells, weights=i_hat, minlength=total_cells)
            flagged = set(int(c) for c in np.nonzero(mass > mass.sum() / total_cells)[0])
        f, c = len(flagged), len(changed)
        score = len(flagged ^ changed) / total_cells
        baseline = (f + c - 2.0 * f * c / total_cells) / total_cells
        scores.append(score)
        baselines.append(baseline)
        if score < baseline:
            wins += 1
        elif score == baseline:
            ties += 1
    p_value = _sign_test_p(wins, runs - ties)
    return CheckerboardResult(
        grid=grid_size,
        flag_rule=flag_rule,
        scores=tuple(scores),
        baselines=tuple(baselines),
        wins=wins,
        ties=ties,
        runs=runs,
        p_value=p_value,
    )


# ---------------------------------------------------------------------------
# Relabelled real datasets


def eval_benchmarks(
    x,
    target,
    task: str = "regression",
    name: str = "benchmark",
    runs: int = 30,
    seed: int = 0,
    classifiers: tuple[str, ...] = ("knn",),
) -> list[ResultRow]:
    """MSE of estimated identifiability on a relabelled feature table.

    Each run redraws the synthetic bins, splits every bin in half
    (stratified), trains on one half and scores the held-out half.
    """
    if task not in ("regression", "classification"):
        raise ValidationError(f"task must be regression or classification, not {task!r}")
    x = np.ascontiguousarray(x, dtype=np.float64)
    per_clf = {clf: [] for clf in classifiers}
    for run in range(runs):
        kids = _run_seeds(seed, (run,), 3)
        if task == "regression":
            data, truth = relabel_regression(x, target, rng_seed=kids[0])
        else:
            data, truth = relabel_classification(x, target, rng_seed=kids[0])
        rng = np.random.default_rng(kids[1])
        train_idx, test_idx = [], []
        for t in range(1, data.n_bins + 1):
            members = rng.permutation(data.bin_indices(t))
            # a one-sample bin goes entirely into training so the fit stays valid
            cut = max(1, len(members) // 2)
            train_idx.extend(members[:cut])
            test_idx.extend(members[cut:])
        train_idx = np.asarray(sorted(train_idx))
        test_idx = np.asarray(sorted(test_idx))
        if test_idx.size == 0:
            raise ValidationError("dataset too small to hold out a test half")
        train = Dataset(x=data.x[train_idx], t=data.t[train_idx], n_bins=data.n_bins)
        for clf_name in classifiers:
            clf = _fit(clf_name, train, kids[2])
            i_hat = estimate_identifiability(clf, data.x[test_idx])
            per_clf[clf_name].append(identifiability_mse(i_hat, truth.i_true[test_idx]))
    return [
        _aggregate("benchmark", name, clf_name, "mse", per_clf[clf_name])
        for clf_name in classifiers
    ]


# ---------------------------------------------------------------------------
# Result serialization


def write_results_csv(path, rows) -> None:
    lines = ["experiment,config,variant,metric,mean,std,runs,values"]
    for r in rows:
        values = "|".join(repr(v) for v in r.values)
        lines.append(
            f"{r.experiment},{r.config},{r.variant},{r.metric},"
            f"{r.mean!r},{r.std!r},{r.runs},{values}"
        )
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_results_json(path, rows) -> None:
    doc = [
        {
            "experiment": r.experiment,
            "config": r.config,
            "variant": r.variant,
            "metric": r.metric,
            "mean": r.mean,
            "std": r.std,
            "runs": r.runs,
            "values": list(r.values),
        }
        for r in rows
    ]
    _atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
