"""Locating characteristic samples.

Samples with high identifiability and high density are the ones worth
showing a user: resampling the archive proportionally to estimated
identifiability turns density * identifiability into plain density, so any
density-seeking clusterer applied to the resampled set places its
prototypes at the characteristic peaks. Prototypes are snapped back to the
closest archived sample so every reported exemplar is a real observation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import ap_run, mean_shift_run, pairwise_sqdist
from .core import Dataset
from .errors import ValidationError

METHODS = (
    "kmeans-resampled",
    "kmeans-weighted",
    "kmeans-baseline",
    "mean-shift",
    "affinity-propagation",
)

_RESAMPLING_METHODS = ("kmeans-resampled", "mean-shift", "affinity-propagation")


@dataclass(frozen=True)
class CharacteristicSample:
    """An archived sample chosen as a drift prototype."""

    index: int
    x: np.ndarray
    t: int
    i_value: float
    prototype_index: int


@dataclass(frozen=True)
class KmeansResult:
    centers: np.ndarray
    labels: np.ndarray
    inertia_history: tuple[float, ...]
    n_iter: int


@dataclass(frozen=True)
class MeanShiftResult:
    modes: np.ndarray
    mode_of: np.ndarray
    bandwidth: float


@dataclass(frozen=True)
class ApResult:
    exemplar_indices: np.ndarray
    labels: np.ndarray
    n_iter: int
    converged: bool


def _check_weights(weights, n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,):
        raise ValidationError(f"need one weight per sample ({n}), got shape {w.shape}")
    if not np.isfinite(w).all():
        raise ValidationError("weights contain non-finite values")
    if (w < 0.0).any():
        raise ValidationError("weights must be nonnegative")
    return w


def weighted_resample(data, weights, m: int | None = None, rng_seed=None) -> np.ndarray:
    """Draw m indices with probability proportional to the weights.

    All-zero weights fall back to uniform draws, matching the convention
    that an entirely unidentifiable archive carries no preference.
    """
    n = len(data)
    if n == 0:
        raise ValidationError("cannot resample an empty dataset")
    w = _check_weights(weights, n)
    m = n if m is None else int(m)
    if m < 1:
        raise ValidationError("m must be >= 1")
    rng = np.random.default_rng(rng_seed)
    total = w.sum()
    if total == 0.0:
        return rng.integers(0, n, size=m)
    return rng.choice(n, size=m, replace=True, p=w / total)


def _points_matrix(points) -> np.ndarray:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValidationError("points must form a non-empty (n, d) matrix")
    if not np.isfinite(pts).all():
        raise ValidationError("points contain non-finite values")
    return pts


def _greedy_seed(
    pts: np.ndarray, k: int, w: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Greedy distance-weighted seeding: heavier and farther points first."""
    n = pts.shape[0]
    centers = np.empty((k, pts.shape[1]))
    prob = w / w.sum() if w.sum() > 0 else np.full(n, 1.0 / n)
    chosen = int(rng.choice(n, p=prob))
    centers[0] = pts[chosen]
    d2 = pairwise_sqdist(pts, centers[0][None, :])[:, 0]
    for j in range(1, k):
        mass = w * d2
        total = mass.sum()
        if total > 0.0:
            chosen = int(rng.choice(n, p=mass / total))
        else:
            # every remaining point coincides with a center; take the
            # first index not yet selected
            taken = pairwise_sqdist(pts, centers[:j]).min(axis=1)
            chosen = int(np.argmax(taken > 0.0)) if (taken > 0.0).any() else 0
        centers[j] = pts[chosen]
        d2 = np.minimum(d2, pairwise_sqdist(pts, centers[j][None, :])[:, 0])
    return centers


def kmeans(
    points,
    k: int,
    weights=None,
    rng_seed=None,
    max_iter: int = 300,
    init=None,
) -> KmeansResult:
    """Lloyd iterations with optional per-point weights.

    Seeding is greedy distance-weighted; a cluster that empties is reseeded
    to the point farthest from its assigned center, which keeps the
    weighted inertia nonincreasing.
    """
    pts = _points_matrix(points)
    n = pts.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in 1..{n}")
    w = np.ones(n) if weights is None else _check_weights(weights, n)
    if w.sum() == 0.0:
        w = np.ones(n)
    rng = np.random.default_rng(rng_seed)
    if init is not None:
        centers = np.array(init, dtype=np.float64, copy=True)
        if centers.shape != (k, pts.shape[1]):
            raise ValidationError("init must be a (k, d) array")
    else:
        centers = _greedy_seed(pts, k, w, rng)
    labels = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d2 = pairwise_sqdist(pts, centers)
        new_labels = d2.argmin(axis=1)
        counts = np.bincount(new_labels, minlength=k)
        for empty in np.nonzero(counts == 0)[0]:
            if (new_labels == empty).any():
                continue
            far = int(np.argmax(d2[np.arange(n), new_labels]))
            centers[empty] = pts[far]
            d2[:, empty] = pairwise_sqdist(pts, centers[empty][None, :])[:, 0]
            new_labels = d2.argmin(axis=1)
        history.append(float((w * d2[np.arange(n), new_labels]).sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            member = labels == j
            wm = w[member]
            if wm.sum() > 0.0:
                centers[j] = (wm[:, None] * pts[member]).sum(axis=0) / wm.sum()
            elif member.any():
                # members present but all carry zero weight
                centers[j] = pts[member].mean(axis=0)
    return KmeansResult(centers, labels, tuple(history), n_iter)


def _median_pairwise_distance(pts: np.ndarray) -> float:
    # cap the quadratic median at 2048 points via a deterministic stride
    n = pts.shape[0]
    if n > 2048:
        pts = pts[:: (n + 2047) // 2048]
    d2 = pairwise_sqdist(pts, pts)
    iu = np.triu_indices(pts.shape[0], k=1)
    if iu[0].size == 0:
        return 0.0
    return float(np.median(np.sqrt(d2[iu])))


def mean_shift(points, bandwidth: float | None = None, max_iter: int = 300) -> MeanShiftResult:
    """Gaussian-kernel mode seeking from every point.

    Default bandwidth is the median pairwise distance; converged seeds
    within bandwidth / 2 of an earlier mode merge into it.
    """
    pts = _points_matrix(points)
    if bandwidth is None:
        bandwidth = _median_pairwise_distance(pts)
    if bandwidth <= 0.0:
        raise ValidationError("bandwidth must be positive (identical points give 0)")
    fixpoints = mean_shift_run(pts, bandwidth, 1e-5 * bandwidth, max_iter)
    modes: list[np.ndarray] = []
    mode_of = np.empty(pts.shape[0], dtype=np.int64)
    merge2 = (bandwidth / 2.0) ** 2
    for i, y in enumerate(fixpoints):
        for m, mode in enumerate(modes):
            if ((y - mode) ** 2).sum() <= merge2:
                mode_of[i] = m
                break
        else:
            mode_of[i] = len(modes)
            modes.append(y)
    return MeanShiftResult(np.vstack(modes), mode_of, float(bandwidth))


def affinity_propagation(
    points,
    preference: float | None = None,
    damping: float = 0.5,
    max_iter: int = 200,
    conv_iter: int = 15,
) -> ApResult:
    """Exemplar election by message passing on negative squared distances.

    Default preference is the median off-diagonal similarity. When the
    exemplar set fails to stabilize the current exemplars are returned
    with converged=False rather than raising.
    """
    pts = _points_matrix(points)
    if not 0.0 <= damping < 1.0:
        raise ValidationError("damping must lie in [0, 1)")
    n = pts.shape[0]
    s = -pairwise_sqdist(pts, pts)
    if preference is None:
        iu = np.triu_indices(n, k=1)
        preference = float(np.median(s[iu])) if iu[0].size else 0.0
    np.fill_diagonal(s, preference)
    exemplars, n_iter, converged = ap_run(s, damping, max_iter, conv_iter)
    labels = exemplars[np.argmax(s[:, exemplars], axis=1)]
    labels[exemplars] = exemplars
    return ApResult(exemplars, labels, n_iter, converged)


def _snap_to_data(prototypes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Index of the closest dataset row per prototype, ties to lower index."""
    return pairwise_sqdist(prototypes, x).argmin(axis=1)


def find_characteristic_samples(
    data: Dataset,
    i_hat,
    method: str = "kmeans-resampled",
    k: int | None = None,
    m_draw: int | None = None,
    rng_seed=None,
    bandwidth: float | None = None,
    preference: float | None = None,
    damping: float = 0.5,
) -> list[CharacteristicSample]:
    """Cluster identifiability-weighted data and snap prototypes to samples.

    ``k`` (k-means only) defaults to 5 prototypes per time bin; mean shift
    and affinity propagation pick their own prototype count. Prototypes
    snapping to the same sample are reported once.
    """
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; pick one of {METHODS}")
    w = _check_weights(i_hat, len(data))
    rng = np.random.default_rng(rng_seed)
    if method in _RESAMPLING_METHODS:
        idx = weighted_resample(data, w, m_draw, rng)
        pts = data.x[idx]
    else:
        pts = data.x
    if method.startswith("kmeans"):
        if k is None:
            k = 5 * data.n_bins
        k = min(int(k), pts.shape[0])
        weights = None
        if method == "kmeans-weighted":
            weights = w
        prototypes = kmeans(pts, k, weights=weights, rng_seed=rng).centers
    elif method == "mean-shift":
        prototypes = mean_shift(pts, bandwidth=bandwidth).modes
    else:
        result = affinity_propagation(pts, preference=preference, damping=damping)
        prototypes = pts[result.exemplar_indices]
    snapped = _snap_to_data(prototypes, data.x)
    out: list[CharacteristicSample] = []
    seen: set[int] = set()
    for proto_idx, index in enumerate(snapped):
        index = int(index)
        if index in seen:
            continue
        seen.add(index)
        out.append(
            CharacteristicSample(
                index=index,
                x=data.x[index],
                t=int(data.t[index]),
                i_value=float(w[index]),
                prototype_index=proto_idx,
            )
        )
    return out


def prototype_quality(prototypes, truth_fn) -> float:
    """Mean ground-truth value at the prototypes."""
    if isinstance(prototypes, np.ndarray):
        pts = np.atleast_2d(prototypes)
    else:
        pts = np.vstack([p.x for p in prototypes]) if prototypes else np.empty((0, 0))
    if pts.shape[0] == 0:
        raise ValidationError("no prototypes to evaluate")
    values = np.asarray(truth_fn(pts), dtype=np.float64)
    if values.shape != (pts.shape[0],):
        raise ValidationError("truth_fn must return one value per prototype")
    return float(values.mean())
