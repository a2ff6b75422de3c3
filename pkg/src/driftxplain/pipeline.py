"""Streaming drift explanation pipeline.

Samples arrive one at a time and accumulate in a per-bin archive. A drift
detector watches the stream; each detection opens a new time bin, and the
triggering sample is recorded as the first member of that bin. A change is
explained once its post-change bin has closed (at the next detection, or
when the stream ends), so every report contrasts fully populated bins:

1. train a probabilistic time-bin classifier on the archive,
2. score every archived sample's identifiability,
3. cluster the identifiability-weighted data and snap the prototypes to
   archived samples (the characteristic samples),
4. pair each characteristic sample with its cheapest counterpart in every
   time bin by an exact assignment.

Reports hold plain Python values only, so serialization is trivially
deterministic: two runs over the same stream with the same configuration
produce byte-identical JSON.
"""

from __future__ import annotations

import copy
import json
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .assign import DISSIMILARITIES, associate_all
from .core import Dataset, mean_identifiability
from .errors import (
    DriftXplainError,
    EmptyBinError,
    StreamError,
    UnsupportedConfigError,
    ValidationError,
)
from .proto import METHODS, find_characteristic_samples
from .timeclf import (
    ForestConfig,
    KnnConfig,
    estimate_identifiability,
    fit_forest,
    fit_knn,
)

CLASSIFIERS = ("knn", "rf")


# ---------------------------------------------------------------------------
# Detectors. Anything with reset(), update(position, x) -> bool and
# describe() -> dict works; update is called before the sample is archived,
# so a triggering sample belongs to the bin it opens.


class OracleDetector:
    """Fires at fixed 1-based stream positions (known change points)."""

    def __init__(self, positions):
        listed = tuple(sorted({int(p) for p in positions}))
        if listed and listed[0] < 1:
            raise ValidationError("change positions are 1-based")
        self._positions = frozenset(listed)
        self._listed = listed

    def reset(self) -> None:
        pass

    def update(self, position: int, x) -> bool:
        return position in self._positions

    def describe(self) -> dict:
        return {"kind": "oracle", "positions": list(self._listed)}


class WindowMeanDetector:
    """Mean-shift test on a sliding window of the raw features.

    The newer half of the window is compared against the older half with a
    per-feature Welch z statistic; a change is flagged when any feature
    exceeds ``threshold``. The window is cleared on detection so one change
    fires once.
    """

    def __init__(self, window: int = 50, threshold: float = 3.0):
        if window < 4 or window % 2 != 0:
            raise ValidationError("window must be an even number >= 4")
        if not math.isfinite(threshold) or threshold <= 0:
            raise ValidationError("threshold must be positive")
        self.window = int(window)
        self.threshold = float(threshold)
        self._buf: deque = deque(maxlen=self.window)

    def reset(self) -> None:
        self._buf.clear()

    def update(self, position: int, x) -> bool:
        self._buf.append(np.asarray(x, dtype=np.float64))
        if len(self._buf) < self.window:
            return False
        arr = np.asarray(self._buf)
        half = self.window // 2
        old, new = arr[:half], arr[half:]
        gap = new.mean(axis=0) - old.mean(axis=0)
        scale = np.sqrt(old.var(axis=0, ddof=1) / half + new.var(axis=0, ddof=1) / half)
        # both halves constant: any gap at all is a jump, none is silence
        z = np.where(
            scale > 0.0,
            np.abs(gap) / np.where(scale > 0.0, scale, 1.0),
            np.where(gap != 0.0, np.inf, 0.0),
        )
        if (z > self.threshold).any():
            self._buf.clear()
            return True
        return False

    def describe(self) -> dict:
        return {"kind": "window-mean", "window": self.window, "threshold": self.threshold}


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class StreamConfig:
    """Knobs of the explanation pipeline.

    ``prototypes_per_bin`` only constrains the k-means methods; mean shift
    and affinity propagation choose their own prototype count. ``omega``
    (a positive definite matrix, stored as nested tuples) is consulted only
    by the mahalanobis dissimilarity. ``archive_cap`` bounds the per-bin
    archive with uniform reservoir sampling; None keeps everything.
    """

    classifier: str = "knn"
    knn: KnnConfig = field(default_factory=KnnConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    method: str = "kmeans-resampled"
    prototypes_per_bin: int = 5
    m_draw: int | None = None
    dissimilarity: str = "euclidean"
    omega: tuple | None = None
    standardize: bool = False
    archive_cap: int | None = None
    seed: int = 0
    feature_names: tuple[str, ...] | None = None
    bandwidth: float | None = None
    preference: float | None = None
    damping: float = 0.5

    def __post_init__(self):
        if self.classifier not in CLASSIFIERS:
            raise ValidationError(f"unknown classifier {self.classifier!r}; pick one of {CLASSIFIERS}")
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}; pick one of {METHODS}")
        if self.dissimilarity not in DISSIMILARITIES:
            raise ValidationError(
                f"unknown dissimilarity {self.dissimilarity!r}; pick one of {DISSIMILARITIES}"
            )
        if self.prototypes_per_bin < 1:
            raise ValidationError("prototypes_per_bin must be >= 1")
        if self.m_draw is not None and self.m_draw < 1:
            raise ValidationError("m_draw must be >= 1")
        if self.archive_cap is not None and self.archive_cap < 1:
            raise ValidationError("archive_cap must be >= 1")
        if self.omega is not None:
            omega = np.asarray(self.omega, dtype=np.float64)
            if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
                raise ValidationError("omega must be a square matrix")
            object.__setattr__(self, "omega", tuple(tuple(float(v) for v in row) for row in omega))
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(str(n) for n in self.feature_names))

    def omega_matrix(self) -> np.ndarray | None:
        return None if self.omega is None else np.asarray(self.omega, dtype=np.float64)


def _config_dict(config: StreamConfig, detector) -> dict:
    return {
        "classifier": config.classifier,
        "knn": {"k": config.knn.k, "distance": config.knn.distance},
        "forest": {
            "n_trees": config.forest.n_trees,
            "max_depth": config.forest.max_depth,
            "min_leaf": config.forest.min_leaf,
        },
        "method": config.method,
        "prototypes_per_bin": config.prototypes_per_bin,
        "m_draw": config.m_draw,
        "dissimilarity": config.dissimilarity,
        "omega": None if config.omega is None else [list(row) for row in config.omega],
        "standardize": config.standardize,
        "archive_cap": config.archive_cap,
        "seed": config.seed,
        "bandwidth": config.bandwidth,
        "preference": config.preference,
        "damping": config.damping,
        "detector": detector.describe() if detector is not None else None,
    }


# ---------------------------------------------------------------------------
# Archive


class _Archive:
    """Per-bin sample store; a cap keeps a uniform reservoir per bin."""

    def __init__(self, cap: int | None, rng: np.random.Generator):
        self.cap = cap
        self.rng = rng
        self._x: dict[int, list[np.ndarray]] = {}
        self._pos: dict[int, list[int]] = {}
        self._seen: dict[int, int] = {}

    def count(self, t: int) -> int:
        return len(self._x.get(t, ()))

    def add(self, t: int, row: np.ndarray, position: int) -> None:
        xs = self._x.setdefault(t, [])
        ps = self._pos.setdefault(t, [])
        seen = self._seen.get(t, 0) + 1
        self._seen[t] = seen
        if self.cap is None or len(xs) < self.cap:
            xs.append(row)
            ps.append(position)
        else:
            j = int(self.rng.integers(0, seen))
            if j < self.cap:
                xs[j] = row
                ps[j] = position

    def snapshot(self, n_bins: int) -> tuple[Dataset, np.ndarray]:
        """Dataset over bins 1..n_bins plus the stream position of each row."""
        xs, ts, ps = [], [], []
        for t in range(1, n_bins + 1):
            rows = self._x.get(t)
            if not rows:
                raise EmptyBinError(f"bin {t} holds no samples")
            xs.extend(rows)
            ts.extend([t] * len(rows))
            ps.extend(self._pos[t])
        data = Dataset(x=np.vstack(xs), t=np.asarray(ts, dtype=np.int64), n_bins=n_bins)
        return data, np.asarray(ps, dtype=np.int64)


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class ExplanationReport:
    """One explained change; nested content is plain dicts and lists."""

    schema_version: int
    event_index: int
    change_position: int
    change_positions: tuple[int, ...]
    n_bins: int
    n_samples: int
    mean_identifiability: float
    mean_identifiability_by_bin: tuple[float, ...]
    characteristic_samples: tuple[dict, ...]
    assignments: tuple[dict, ...]
    feature_summary: dict
    config: dict

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "event_index": self.event_index,
            "change_position": self.change_position,
            "change_positions": list(self.change_positions),
            "n_bins": self.n_bins,
            "n_samples": self.n_samples,
            "mean_identifiability": self.mean_identifiability,
            "mean_identifiability_by_bin": list(self.mean_identifiability_by_bin),
            "characteristic_samples": copy.deepcopy(list(self.characteristic_samples)),
            "assignments": copy.deepcopy(list(self.assignments)),
            "feature_summary": copy.deepcopy(self.feature_summary),
            "config": copy.deepcopy(self.config),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExplanationReport":
        if d.get("schema_version") != 1:
            raise ValidationError(f"unsupported report schema {d.get('schema_version')!r}")
        missing = [
            k
            for k in (
                "event_index",
                "change_position",
                "change_positions",
                "n_bins",
                "n_samples",
                "mean_identifiability",
                "mean_identifiability_by_bin",
                "characteristic_samples",
                "assignments",
                "feature_summary",
            )
            if k not in d
        ]
        if missing:
            raise ValidationError(f"report is missing fields: {missing}")
        return cls(
            schema_version=1,
            event_index=int(d["event_index"]),
            change_position=int(d["change_position"]),
            change_positions=tuple(int(p) for p in d["change_positions"]),
            n_bins=int(d["n_bins"]),
            n_samples=int(d["n_samples"]),
            mean_identifiability=float(d["mean_identifiability"]),
            mean_identifiability_by_bin=tuple(float(v) for v in d["mean_identifiability_by_bin"]),
            characteristic_samples=tuple(copy.deepcopy(c) for c in d["characteristic_samples"]),
            assignments=tuple(copy.deepcopy(a) for a in d["assignments"]),
            feature_summary=copy.deepcopy(d["feature_summary"]),
            config=copy.deepcopy(d.get("config") or {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def summarize_report(report: ExplanationReport, top: int = 3) -> str:
    """Short human-readable account of one report."""
    lines = [
        f"change {report.event_index} at position {report.change_position}: "
        f"{report.n_bins} bins, {report.n_samples} samples, "
        f"mean identifiability {report.mean_identifiability:.3f}",
        f"characteristic samples: {len(report.characteristic_samples)}",
    ]
    fs = report.feature_summary
    col = {n: j for j, n in enumerate(fs["names"])}
    for name in fs["ranking"][: max(0, top)]:
        j = col[name]
        lines.append(
            f"  {name}: mean shift {fs['mean_signed_difference'][j]:+.4f}"
            f" (|shift| {fs['mean_abs_difference'][j]:.4f},"
            f" range {fs['range'][j]:.4f})"
        )
    if fs["stable"]:
        lines.append("  stable features: " + ", ".join(fs["stable"]))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Report construction


def _fit_classifier(data: Dataset, config: StreamConfig, seed_seq: np.random.SeedSequence):
    if config.classifier == "knn":
        return fit_knn(data, config.knn)
    forest_seed = int(seed_seq.generate_state(1)[0])
    return fit_forest(data, replace(config.forest, seed=forest_seed))


def _feature_names(config: StreamConfig, dim: int) -> list[str]:
    if config.feature_names is None:
        return [f"f{j}" for j in range(dim)]
    names = list(config.feature_names)
    if len(names) != dim:
        raise ValidationError(f"{len(names)} feature names given for {dim} features")
    return names


def _build_report(
    data: Dataset,
    positions: np.ndarray,
    event_index: int,
    change_position: int,
    change_positions: tuple[int, ...],
    config: StreamConfig,
    seed_seq: np.random.SeedSequence,
    detector,
) -> ExplanationReport:
    names = _feature_names(config, data.dim)
    work = data
    if config.standardize:
        sd = data.x.std(axis=0)
        scaled = (data.x - data.x.mean(axis=0)) / np.where(sd > 0.0, sd, 1.0)
        work = Dataset(x=scaled, t=data.t, n_bins=data.n_bins)

    clf = _fit_classifier(work, config, seed_seq)
    i_hat = estimate_identifiability(clf, work.x)
    chars = find_characteristic_samples(
        work,
        i_hat,
        method=config.method,
        k=config.prototypes_per_bin * work.n_bins,
        m_draw=config.m_draw,
        rng_seed=seed_seq.spawn(1)[0],
        bandwidth=config.bandwidth,
        preference=config.preference,
        damping=config.damping,
    )
    assignments = associate_all(chars, work, config.dissimilarity, config.omega_matrix())

    char_rows = [
        {
            "index": int(c.index),
            "position": int(positions[c.index]),
            "bin": int(c.t),
            "i_value": float(c.i_value),
            "prototype_index": int(c.prototype_index),
            "features": [float(v) for v in data.x[c.index]],
        }
        for c in chars
    ]

    assign_rows = []
    diffs = []
    for t in range(1, data.n_bins + 1):
        result = assignments[t]
        pairs = []
        for p in result.pairs:
            # counterpart differences are reported in raw feature space
            diff = data.x[p.sample_index] - data.x[chars[p.row].index]
            pairs.append(
                {
                    "char_row": int(p.row),
                    "sample_index": int(p.sample_index),
                    "position": int(positions[p.sample_index]),
                    "cost": float(p.cost),
                    "features": [float(v) for v in data.x[p.sample_index]],
                    "difference": [float(v) for v in diff],
                }
            )
            if p.sample_index != chars[p.row].index:
                diffs.append(diff)
        assign_rows.append(
            {"target_bin": t, "total_cost": float(result.total_cost), "pairs": pairs}
        )

    span = data.x.max(axis=0) - data.x.min(axis=0)
    if diffs:
        dmat = np.vstack(diffs)
        mean_abs = np.abs(dmat).mean(axis=0)
        mean_signed = dmat.mean(axis=0)
    else:
        mean_abs = np.zeros(data.dim)
        mean_signed = np.zeros(data.dim)
    order = np.argsort(-mean_abs, kind="stable")
    # a feature whose counterparts moved less than 5% of its range did not
    # take part in the change
    stable = [names[j] for j in range(data.dim) if mean_abs[j] <= 0.05 * span[j]]
    feature_summary = {
        "names": names,
        "mean_abs_difference": [float(v) for v in mean_abs],
        "mean_signed_difference": [float(v) for v in mean_signed],
        "range": [float(v) for v in span],
        "ranking": [names[int(j)] for j in order],
        "stable": stable,
    }

    by_bin = tuple(float(i_hat[work.bin_indices(t)].mean()) for t in range(1, work.n_bins + 1))
    return ExplanationReport(
        schema_version=1,
        event_index=int(event_index),
        change_position=int(change_position),
        change_positions=tuple(int(p) for p in change_positions),
        n_bins=int(data.n_bins),
        n_samples=len(data),
        mean_identifiability=float(mean_identifiability(i_hat)),
        mean_identifiability_by_bin=by_bin,
        characteristic_samples=tuple(char_rows),
        assignments=tuple(assign_rows),
        feature_summary=feature_summary,
        config=_config_dict(config, detector),
    )


# ---------------------------------------------------------------------------
# Entry points


def explain_stream(samples, detector, config: StreamConfig | None = None) -> list[ExplanationReport]:
    """Run the full pipeline over a stream; one report per detected change.

    A change's report is emitted when its post-change bin closes, so the
    report for the final change arrives at the end of the stream. A
    detection before any sample was archived is ignored.
    """
    config = config or StreamConfig()
    x = np.ascontiguousarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValidationError("samples must form a non-empty (n, d) array")
    bad = ~np.isfinite(x).all(axis=1)
    if bad.any():
        raise ValidationError(f"non-finite sample at position {int(bad.argmax()) + 1}")

    root = np.random.SeedSequence(config.seed)
    archive = _Archive(config.archive_cap, np.random.default_rng(root.spawn(1)[0]))
    detector.reset()
    current_bin = 1
    fired_positions: list[int] = []
    reports: list[ExplanationReport] = []

    def close_current_bin() -> None:
        event = current_bin - 1
        change_position = fired_positions[event - 1]
        try:
            data, positions = archive.snapshot(current_bin)
            reports.append(
                _build_report(
                    data,
                    positions,
                    event,
                    change_position,
                    tuple(fired_positions[:event]),
                    config,
                    root,
                    detector,
                )
            )
        except DriftXplainError as exc:
            raise StreamError(
                f"failed to explain the change at position {change_position}: {exc}"
            ) from exc

    for idx in range(x.shape[0]):
        position = idx + 1
        row = x[idx]
        if bool(detector.update(position, row)) and archive.count(current_bin) > 0:
            if current_bin >= 2:
                close_current_bin()
            fired_positions.append(position)
            current_bin += 1
        archive.add(current_bin, row, position)
    if current_bin >= 2:
        close_current_bin()
    return reports


def explain_dataset(data: Dataset, config: StreamConfig | None = None) -> ExplanationReport:
    """One-shot explanation of an already bin-labelled dataset.

    The report explains the transition into the last bin; earlier bins
    still take part as assignment targets.
    """
    config = config or StreamConfig()
    if data.n_bins < 2:
        raise UnsupportedConfigError("explaining drift needs at least 2 time bins")
    positions = np.arange(1, len(data) + 1, dtype=np.int64)
    starts = tuple(int(positions[data.bin_indices(t)[0]]) for t in range(2, data.n_bins + 1))
    root = np.random.SeedSequence(config.seed)
    return _build_report(
        data,
        positions,
        data.n_bins - 1,
        starts[-1],
        starts,
        config,
        root,
        detector=None,
    )
