"""Identifiability of time bins from sample posteriors.

A sample x observed in a stream carries a posterior over the time bins it
could have originated from. Its identifiability

    ident(p) = 1 - H(p) / log(n_bins)

is 0 exactly when the posterior is uniform (x tells nothing about time, no
drift at x) and 1 exactly when the posterior is a point mass (x pins down
its bin). Entropy is natural-log; the normalization makes the score base
independent. The mean identifiability over a stream is the drift indicator:
it is zero if and only if the per-bin distributions coincide.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedConfigError, ValidationError

SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class TimedSample:
    """A feature vector together with the time bin it was observed in."""

    x: np.ndarray
    t: int


@dataclass(frozen=True)
class Dataset:
    """Bin-labelled samples: ``x`` rows of shape (n, d), bins 1..n_bins.

    Every bin must hold at least one sample; arrays are frozen after
    validation so downstream stages can share them without copying.
    """

    x: np.ndarray
    t: np.ndarray
    n_bins: int

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        t = np.ascontiguousarray(self.t, dtype=np.int64)
        if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
            raise ValidationError("feature matrix must be non-empty and 2-d")
        if not np.isfinite(x).all():
            raise ValidationError("feature matrix contains non-finite values")
        if t.ndim != 1 or t.shape[0] != x.shape[0]:
            raise ValidationError("bin labels must be one per sample")
        if self.n_bins < 1:
            raise ValidationError("n_bins must be >= 1")
        if t.size and (t.min() < 1 or t.max() > self.n_bins):
            raise ValidationError(f"bin labels must lie in 1..{self.n_bins}")
        present = np.bincount(t, minlength=self.n_bins + 1)[1:]
        if (present == 0).any():
            empty = [int(b) + 1 for b in np.nonzero(present == 0)[0]]
            raise ValidationError(f"bins without samples: {empty}")
        x.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def sample(self, index: int) -> TimedSample:
        return TimedSample(x=self.x[index], t=int(self.t[index]))

    def bin_indices(self, t: int) -> np.ndarray:
        """Dataset positions of the samples in bin ``t``, ascending."""
        return np.nonzero(self.t == t)[0]


def validate_posterior(p, n_bins: int | None = None) -> np.ndarray:
    """Check simplex membership; renormalize drift within SIMPLEX_TOL."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValidationError("posterior must be a 1-d vector")
    if n_bins is not None and arr.size != n_bins:
        raise ValidationError(f"posterior has {arr.size} entries, expected {n_bins}")
    if not np.isfinite(arr).all():
        raise ValidationError("posterior contains non-finite entries")
    if (arr < 0.0).any():
        raise ValidationError("posterior contains negative entries")
    total = arr.sum()
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise ValidationError(f"posterior sums to {total!r}, not 1")
    if total != 1.0:
        arr = arr / total
    return arr


def entropy(p) -> float:
    """Shannon entropy in nats with the 0 * log 0 = 0 convention."""
    arr = validate_posterior(p)
    return float(entropy_rows(arr[None, :])[0])


def entropy_rows(p: np.ndarray) -> np.ndarray:
    """Entropy of each row of an (n, k) matrix of posteriors, no validation."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log(p), 0.0)
    return -terms.sum(axis=1)


def identifiability(p, n_bins: int | None = None) -> float:
    """Normalized complement of posterior entropy, in [0, 1]."""
    arr = validate_posterior(p, n_bins)
    if arr.size < 2:
        raise UnsupportedConfigError("identifiability needs at least 2 bins")
    return float(identifiability_rows(arr[None, :])[0])


def identifiability_rows(p: np.ndarray) -> np.ndarray:
    """Row-wise identifiability of an (n, k) posterior matrix, k >= 2."""
    if p.shape[1] < 2:
        raise UnsupportedConfigError("identifiability needs at least 2 bins")
    values = 1.0 - entropy_rows(p) / np.log(p.shape[1])
    # float round-off can leave scores a hair outside [0, 1]
    return np.clip(values, 0.0, 1.0)


def mean_identifiability(scores) -> float:
    """Arithmetic mean of identifiability scores; the drift indicator."""
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise ValidationError("cannot average an empty score collection")
    if not np.isfinite(arr).all():
        raise ValidationError("scores contain non-finite values")
    if (arr < 0.0).any() or (arr > 1.0).any():
        raise ValidationError("scores must lie in [0, 1]")
    return float(arr.mean())
