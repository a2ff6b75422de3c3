"""Synthetic drift generators with analytic ground truth.

Two families:

- Gaussian mixtures on R^d x {1, 2}: every component is an isotropic
  Gaussian whose samples fall into bin 1 with a per-class mixing weight
  j / n_class (j = 1..n_class), so the bins share density exactly where
  the weight is balanced. Posterior, identifiability and the
  density-weighted characterizing score are all closed form.
- Checkerboards on [0, 1]^2: per bin a set of active grid cells, samples
  uniform over the active cells. Ground truth records the per-sample
  identifiability and which cells appear or vanish between bins.

Real datasets are pulled in through the relabeling helpers, which replace
the original prediction target by a synthetic time bin with known
identifiability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import pairwise_sqdist
from .core import Dataset, entropy_rows, identifiability_rows
from .errors import ValidationError


def _rng(seed_or_rng) -> np.random.Generator:
    return np.random.default_rng(seed_or_rng)


@dataclass(frozen=True)
class GroundTruth:
    """Per-sample analytic values aligned with a generated Dataset."""

    i_true: np.ndarray
    char_true: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Gaussian mixture family


@dataclass(frozen=True)
class GmmSpec:
    """Configuration of the mixture generator.

    ``n_class`` controls the degrees of overlap between the two bins;
    ``time_weights`` may override the default j / n_class schedule (one
    P(bin 1) entry per class), which tests use to build a no-drift mixture.
    Component means are drawn from U([-a, a]^d) where a = box_halfwidth,
    default 10 * sigma.
    """

    dim: int = 2
    n_gauss_per_class: int = 2
    n_class: int = 2
    sigma: float = 1.0
    box_halfwidth: float | None = None
    seed: int = 0
    time_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.dim < 1 or self.n_gauss_per_class < 1 or self.n_class < 1:
            raise ValidationError("dim, n_gauss_per_class and n_class must be >= 1")
        if self.sigma <= 0:
            raise ValidationError("sigma must be positive")
        if self.box_halfwidth is not None and self.box_halfwidth <= 0:
            raise ValidationError("box_halfwidth must be positive")
        if self.time_weights is not None:
            w = tuple(float(v) for v in self.time_weights)
            if len(w) != self.n_class:
                raise ValidationError("time_weights needs one entry per class")
            if any(v < 0.0 or v > 1.0 for v in w):
                raise ValidationError("time_weights must lie in [0, 1]")
            object.__setattr__(self, "time_weights", w)

    @property
    def halfwidth(self) -> float:
        return self.box_halfwidth if self.box_halfwidth is not None else 10.0 * self.sigma


@dataclass(frozen=True)
class GmmMixture:
    """Materialized mixture: component means plus per-component P(bin 1)."""

    means: np.ndarray
    weight_bin1: np.ndarray
    sigma: float

    def __post_init__(self):
        means = np.ascontiguousarray(self.means, dtype=np.float64)
        w = np.ascontiguousarray(self.weight_bin1, dtype=np.float64)
        if means.ndim != 2 or means.shape[0] == 0:
            raise ValidationError("means must be a non-empty (n_comp, d) array")
        if w.shape != (means.shape[0],):
            raise ValidationError("one bin-1 weight per component required")
        if (w < 0.0).any() or (w > 1.0).any():
            raise ValidationError("component weights must lie in [0, 1]")
        if self.sigma <= 0:
            raise ValidationError("sigma must be positive")
        means.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "weight_bin1", w)

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def widened(self, factor: float) -> "GmmMixture":
        """Same means and weights, sigma scaled by ``factor``."""
        if factor <= 0:
            raise ValidationError("widening factor must be positive")
        return GmmMixture(self.means.copy(), self.weight_bin1.copy(), self.sigma * factor)

    def _log_component_densities(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.dim:
            raise ValidationError("query dimension does not match the mixture")
        d2 = pairwise_sqdist(x, self.means)
        const = -0.5 * self.dim * math.log(2.0 * math.pi * self.sigma**2)
        with np.errstate(over="ignore"):
            return const - d2 / (2.0 * self.sigma**2)

    def sample(self, n: int, rng_seed=None) -> tuple[np.ndarray, np.ndarray]:
        """Draw (x, t) pairs; returns arrays in draw order."""
        if n < 1:
            raise ValidationError("n must be >= 1")
        rng = _rng(rng_seed)
        comp = rng.integers(0, self.n_components, size=n)
        x = self.means[comp] + self.sigma * rng.standard_normal((n, self.dim))
        t = np.where(rng.random(n) < self.weight_bin1[comp], 1, 2).astype(np.int64)
        return x, t


def build_mixture(spec: GmmSpec) -> GmmMixture:
    """Draw the component means (deterministic in spec.seed)."""
    rng = _rng(spec.seed)
    n_comp = spec.n_gauss_per_class * spec.n_class
    a = spec.halfwidth
    means = rng.uniform(-a, a, size=(n_comp, spec.dim))
    if spec.time_weights is not None:
        per_class = np.asarray(spec.time_weights, dtype=np.float64)
    else:
        per_class = np.arange(1, spec.n_class + 1, dtype=np.float64) / spec.n_class
    weight_bin1 = np.repeat(per_class, spec.n_gauss_per_class)
    return GmmMixture(means, weight_bin1, spec.sigma)


def _as_mixture(spec_or_mixture) -> GmmMixture:
    if isinstance(spec_or_mixture, GmmMixture):
        return spec_or_mixture
    return build_mixture(spec_or_mixture)


def analytic_posterior(spec_or_mixture, x) -> np.ndarray:
    """Exact bin posterior at the query points, shape (n, 2).

    Computed from component log densities and the time mixing weights via
    log-sum-exp; when every component density underflows to zero the
    posterior degrades to uniform.
    """
    mix = _as_mixture(spec_or_mixture)
    logn = mix._log_component_densities(x)
    w1 = mix.weight_bin1
    out = np.empty((logn.shape[0], 2))
    with np.errstate(divide="ignore"):
        logw = np.stack([np.log(w1), np.log1p(-w1)])  # (2, n_comp)
    for col in range(2):
        out[:, col] = _logsumexp_rows(logn + logw[col][None, :])
    shift = out.max(axis=1, keepdims=True)
    dead = ~np.isfinite(shift[:, 0])
    shift[dead] = 0.0
    num = np.exp(out - shift)
    with np.errstate(invalid="ignore"):
        post = num / num.sum(axis=1, keepdims=True)
    post[dead] = 0.5
    return post


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    amax = a.max(axis=1, keepdims=True)
    safe = np.where(np.isfinite(amax), amax, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.exp(a - safe).sum(axis=1)) + safe[:, 0]
    return out


def analytic_identifiability(spec_or_mixture, x) -> np.ndarray:
    """Exact identifiability at the query points."""
    return identifiability_rows(analytic_posterior(spec_or_mixture, x))


def analytic_characterizing(spec_or_mixture, x) -> np.ndarray:
    """Sample density times identifiability; peaks mark characteristic regions."""
    mix = _as_mixture(spec_or_mixture)
    logn = mix._log_component_densities(x)
    density = np.exp(_logsumexp_rows(logn) - math.log(mix.n_components))
    return density * analytic_identifiability(mix, x)


def sample_gmm(spec: GmmSpec, n: int, rng_seed=None) -> tuple[Dataset, GroundTruth]:
    """Draw a labelled dataset in stream order (bin 1 block, then bin 2).

    Rejects degenerate specs that cannot populate both bins; the ground
    truth carries per-sample analytic identifiability and characterizing
    scores.
    """
    mix = _as_mixture(spec)
    if spec.n_class == 1 and spec.time_weights is None:
        raise ValidationError("n_class=1 puts every sample into bin 1; no drift to explain")
    if (mix.weight_bin1 >= 1.0).all() or (mix.weight_bin1 <= 0.0).all():
        raise ValidationError("mixing weights leave one bin empty")
    x, t = mix.sample(n, rng_seed)
    order = np.argsort(t, kind="stable")
    x, t = x[order], t[order]
    if t[0] != 1 or t[-1] != 2:
        raise ValidationError("drawn sample left a bin empty; increase n or change the seed")
    data = Dataset(x=x, t=t, n_bins=2)
    truth = GroundTruth(
        i_true=analytic_identifiability(mix, x),
        char_true=analytic_characterizing(mix, x),
    )
    return data, truth


def sample_uniform_box(dim: int, halfwidth: float, n: int, rng_seed=None) -> np.ndarray:
    """n points uniform on [-halfwidth, halfwidth]^dim."""
    if halfwidth <= 0:
        raise ValidationError("halfwidth must be positive")
    return _rng(rng_seed).uniform(-halfwidth, halfwidth, size=(n, dim))


# ---------------------------------------------------------------------------
# Checkerboard family


@dataclass(frozen=True)
class CheckerboardSpec:
    """Per-bin active cells of a grid x grid board over [0, 1]^2.

    Cells are numbered row major: cell = row * grid + col. Consecutive
    bins must share at least one cell and differ in at least one.
    """

    grid: int = 3
    active: tuple[tuple[int, ...], ...] = ((0, 4, 8), (0, 2, 6))

    def __post_init__(self):
        if self.grid < 1:
            raise ValidationError("grid must be >= 1")
        if len(self.active) < 2:
            raise ValidationError("need active cells for at least two bins")
        total = self.grid * self.grid
        norm = []
        for cells in self.active:
            cells = tuple(sorted(int(c) for c in set(cells)))
            if not cells:
                raise ValidationError("every bin needs at least one active cell")
            if cells[0] < 0 or cells[-1] >= total:
                raise ValidationError(f"cell ids must lie in 0..{total - 1}")
            norm.append(cells)
        for a, b in zip(norm, norm[1:]):
            if not set(a) & set(b):
                raise ValidationError("consecutive bins must share a cell")
            if not set(a) ^ set(b):
                raise ValidationError("consecutive bins must differ in a cell")
        object.__setattr__(self, "active", tuple(norm))

    @property
    def n_bins(self) -> int:
        return len(self.active)

    def changed_cells(self) -> dict[tuple[int, int], tuple[int, ...]]:
        """Cells appearing or vanishing between consecutive bins."""
        out = {}
        for t in range(1, self.n_bins):
            diff = set(self.active[t - 1]) ^ set(self.active[t])
            out[(t, t + 1)] = tuple(sorted(diff))
        return out


def draw_checkerboard_spec(grid: int = 3, rng_seed=None) -> CheckerboardSpec:
    """Random two-bin spec with at least one shared and one changed cell."""
    if grid < 2:
        raise ValidationError("grid must be >= 2 to allow shared and changed cells")
    rng = _rng(rng_seed)
    total = grid * grid
    while True:
        sizes = rng.integers(2, total, size=2)
        a = rng.choice(total, size=int(sizes[0]), replace=False)
        b = rng.choice(total, size=int(sizes[1]), replace=False)
        sa, sb = set(a.tolist()), set(b.tolist())
        if sa & sb and sa ^ sb:
            return CheckerboardSpec(grid=grid, active=(tuple(sorted(sa)), tuple(sorted(sb))))


def cell_of_points(points: np.ndarray, grid: int) -> np.ndarray:
    """Row-major cell index of each point of [0, 1]^2."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    scaled = np.clip((pts * grid).astype(np.int64), 0, grid - 1)
    return scaled[:, 1] * grid + scaled[:, 0]


def checkerboard_posterior(spec: CheckerboardSpec, points: np.ndarray) -> np.ndarray:
    """Exact bin posterior of checkerboard points (bins equally likely a priori)."""
    cells = cell_of_points(points, spec.grid)
    dens = np.zeros((len(cells), spec.n_bins))
    for t, active in enumerate(spec.active):
        member = np.isin(cells, np.asarray(active))
        dens[member, t] = 1.0 / len(active)
    total = dens.sum(axis=1, keepdims=True)
    dead = total[:, 0] == 0.0
    total[dead] = 1.0
    post = dens / total
    post[dead] = 1.0 / spec.n_bins
    return post


def sample_checkerboard(
    spec: CheckerboardSpec, n_per_bin: int, rng_seed=None
) -> tuple[Dataset, GroundTruth]:
    """Uniform draws over each bin's active cells, in stream order."""
    if n_per_bin < 1:
        raise ValidationError("n_per_bin must be >= 1")
    rng = _rng(rng_seed)
    xs, ts = [], []
    for t, active in enumerate(spec.active, start=1):
        cells = np.asarray(active)[rng.integers(0, len(active), size=n_per_bin)]
        offsets = rng.random((n_per_bin, 2))
        col = cells % spec.grid
        row = cells // spec.grid
        pts = (np.stack([col, row], axis=1) + offsets) / spec.grid
        xs.append(pts)
        ts.append(np.full(n_per_bin, t, dtype=np.int64))
    x = np.vstack(xs)
    t = np.concatenate(ts)
    data = Dataset(x=x, t=t, n_bins=spec.n_bins)
    post = checkerboard_posterior(spec, x)
    truth = GroundTruth(
        i_true=identifiability_rows(post),
        meta={
            "cell_of": cell_of_points(x, spec.grid),
            "changed_cells": spec.changed_cells(),
            "active": spec.active,
            "grid": spec.grid,
        },
    )
    return data, truth


# ---------------------------------------------------------------------------
# Relabeling real datasets


def _bernoulli_identifiability(p: np.ndarray) -> np.ndarray:
    post = np.stack([1.0 - p, p], axis=1)
    return 1.0 - entropy_rows(post) / math.log(2.0)


def relabel_regression(x, y, rng_seed=None) -> tuple[Dataset, GroundTruth]:
    """Replace a regression target by a synthetic time bin.

    y is min-max normalized; each sample lands in bin 2 with probability y
    (so bin 1 is the likely outcome where y is small), which makes the true
    identifiability 1 - H2(y) / log 2.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ValidationError("need an (n, d) feature matrix and n targets")
    if not np.isfinite(y).all():
        raise ValidationError("targets contain non-finite values")
    lo, hi = y.min(), y.max()
    if hi == lo:
        raise ValidationError("constant target column cannot induce time bins")
    yn = (y - lo) / (hi - lo)
    rng = _rng(rng_seed)
    t = 1 + (rng.random(len(yn)) < yn).astype(np.int64)
    if t.min() == t.max():
        raise ValidationError("relabeling left a bin empty; change the seed")
    return Dataset(x=x, t=t, n_bins=2), GroundTruth(i_true=_bernoulli_identifiability(yn))


def relabel_classification(
    x, labels, rng_seed=None, class_probs: dict | None = None
) -> tuple[Dataset, GroundTruth]:
    """Replace a class label by a synthetic time bin.

    Each original class c gets a bin-2 probability p_c ~ U[0, 1] (or the
    given override); samples of class c then land in bin 2 with that
    probability, so their true identifiability is 1 - H2(p_c) / log 2.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    if x.ndim != 2 or labels.shape != (x.shape[0],):
        raise ValidationError("need an (n, d) feature matrix and n labels")
    classes = sorted(set(labels.tolist()))
    if len(classes) < 1:
        raise ValidationError("no class labels given")
    rng = _rng(rng_seed)
    drawn = {c: float(rng.random()) for c in classes}
    if class_probs:
        unknown = set(class_probs) - set(classes)
        if unknown:
            raise ValidationError(f"class_probs for unknown classes: {sorted(unknown)}")
        drawn.update({c: float(p) for c, p in class_probs.items()})
    p = np.array([drawn[c] for c in labels.tolist()])
    if (p < 0.0).any() or (p > 1.0).any():
        raise ValidationError("class probabilities must lie in [0, 1]")
    t = 1 + (rng.random(len(p)) < p).astype(np.int64)
    if t.min() == t.max():
        raise ValidationError("relabeling left a bin empty; change the seed")
    truth = GroundTruth(i_true=_bernoulli_identifiability(p), meta={"class_probs": drawn})
    return Dataset(x=x, t=t, n_bins=2), truth


def stream_change_positions(data: Dataset) -> list[int]:
    """1-based positions where a new bin starts, for bin-sorted datasets."""
    t = data.t
    if (np.diff(t) < 0).any():
        raise ValidationError("dataset is not in stream order (bins must be nondecreasing)")
    return [int(i) + 1 for i in np.nonzero(np.diff(t) > 0)[0] + 1]
