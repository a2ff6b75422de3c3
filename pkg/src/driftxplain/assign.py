"""Pairing characteristic samples with counterparts in every time bin.

For each target bin the cost of pairing a characteristic sample with an
archived sample is its dissimilarity, except that a characteristic sample
drawn from the target bin itself may only pair with itself (cost 0, all
other columns forbidden). Forbidden pairs are +inf sentinels, never large
finite values, so no cost scaling can smuggle them into a solution. The
minimum-cost injective assignment is solved exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import lsap_solve, pairwise_sqdist
from .core import Dataset
from .errors import EmptyBinError, InfeasibleAssignmentError, ValidationError
from .proto import CharacteristicSample

DISSIMILARITIES = ("euclidean", "sqeuclidean", "mahalanobis")


def dissimilarity_matrix(a, b, kind: str = "euclidean", omega=None) -> np.ndarray:
    """Pairwise dissimilarities between two point sets."""
    if kind not in DISSIMILARITIES:
        raise ValidationError(f"unknown dissimilarity {kind!r}; pick one of {DISSIMILARITIES}")
    a = np.ascontiguousarray(np.atleast_2d(a), dtype=np.float64)
    b = np.ascontiguousarray(np.atleast_2d(b), dtype=np.float64)
    if kind == "mahalanobis":
        if omega is None:
            raise ValidationError("mahalanobis dissimilarity needs a matrix")
        omega = np.asarray(omega, dtype=np.float64)
        if omega.shape != (a.shape[1], a.shape[1]):
            raise ValidationError("omega must be (d, d)")
        try:
            chol = np.linalg.cholesky(omega)
        except np.linalg.LinAlgError as exc:
            raise ValidationError("omega must be symmetric positive definite") from exc
        a = a @ chol
        b = b @ chol
    d2 = pairwise_sqdist(a, b)
    return d2 if kind == "sqeuclidean" else np.sqrt(d2)


@dataclass(frozen=True)
class CostMatrix:
    """Rows are characteristic samples, columns the target bin's samples."""

    values: np.ndarray
    rows: tuple[CharacteristicSample, ...]
    col_indices: np.ndarray
    target_bin: int


@dataclass(frozen=True)
class AssignmentPair:
    row: int
    char_index: int
    sample_index: int
    cost: float


@dataclass(frozen=True)
class AssignmentResult:
    target_bin: int
    pairs: tuple[AssignmentPair, ...]
    total_cost: float


def build_cost_matrix(
    chars,
    data: Dataset,
    target_bin: int,
    dissimilarity: str = "euclidean",
    omega=None,
) -> CostMatrix:
    """Cost of pairing each characteristic sample with each target-bin sample."""
    chars = tuple(chars)
    if not 1 <= target_bin <= data.n_bins:
        raise EmptyBinError(f"bin {target_bin} holds no samples (dataset has 1..{data.n_bins})")
    cols = data.bin_indices(target_bin)
    if cols.size == 0:
        raise EmptyBinError(f"bin {target_bin} holds no samples")
    if chars:
        rows_x = np.vstack([c.x for c in chars])
        values = dissimilarity_matrix(rows_x, data.x[cols], dissimilarity, omega)
        col_pos = {int(c): j for j, c in enumerate(cols)}
        for r, c in enumerate(chars):
            if c.t == target_bin:
                own = col_pos.get(c.index)
                if own is None:
                    raise ValidationError(
                        f"characteristic sample {c.index} claims bin {target_bin} "
                        "but is not archived there"
                    )
                values[r, :] = np.inf
                values[r, own] = 0.0
    else:
        values = np.empty((0, cols.size))
    return CostMatrix(values=values, rows=chars, col_indices=cols, target_bin=target_bin)


def _as_cost_matrix(cost) -> CostMatrix:
    if isinstance(cost, CostMatrix):
        return cost
    values = np.asarray(cost, dtype=np.float64)
    if values.ndim != 2:
        raise ValidationError("cost must be a 2-d matrix")
    return CostMatrix(
        values=values,
        rows=(),
        col_indices=np.arange(values.shape[1]),
        target_bin=0,
    )


def _blocked_rows(feasible: np.ndarray) -> list[int]:
    """Rows left unmatched by a maximum bipartite matching on feasibility."""
    n, m = feasible.shape
    match_col = np.full(m, -1)

    def augment(r: int, seen: np.ndarray) -> bool:
        for j in range(m):
            if feasible[r, j] and not seen[j]:
                seen[j] = True
                if match_col[j] < 0 or augment(match_col[j], seen):
                    match_col[j] = r
                    return True
        return False

    matched = set()
    for r in range(n):
        if augment(r, np.zeros(m, dtype=bool)):
            matched.add(r)
    # an unmatched row marks a Hall violator together with its neighbourhood
    return [r for r in range(n) if r not in matched]


def hungarian(cost) -> AssignmentResult:
    """Exact minimum-cost assignment of every row to a distinct column.

    Requires rows <= columns; +inf entries are never selected and an
    unsatisfiable instance raises with the blocked row indices. Equal-cost
    optima resolve deterministically toward lower column indices.
    """
    matrix = _as_cost_matrix(cost)
    values = np.asarray(matrix.values, dtype=np.float64)
    n, m = values.shape
    if n == 0:
        return AssignmentResult(matrix.target_bin, (), 0.0)
    if n > m:
        raise ValidationError(f"{n} rows cannot be assigned injectively to {m} columns")
    if np.isnan(values).any() or (values[np.isfinite(values)] < 0).any():
        raise ValidationError("costs must be nonnegative and not NaN")
    feasible = np.isfinite(values)
    blocked = _blocked_rows(feasible)
    if blocked:
        raise InfeasibleAssignmentError(blocked)
    cols = lsap_solve(values)
    pairs = []
    for r, j in enumerate(cols):
        char_index = matrix.rows[r].index if matrix.rows else r
        pairs.append(
            AssignmentPair(
                row=r,
                char_index=char_index,
                sample_index=int(matrix.col_indices[j]),
                cost=float(values[r, j]),
            )
        )
    total = float(sum(p.cost for p in pairs))
    return AssignmentResult(matrix.target_bin, tuple(pairs), total)


def associate_all(
    chars,
    data: Dataset,
    dissimilarity: str = "euclidean",
    omega=None,
) -> dict[int, AssignmentResult]:
    """Counterpart assignment of the characteristic samples in every bin."""
    chars = tuple(chars)
    return {
        t: hungarian(build_cost_matrix(chars, data, t, dissimilarity, omega))
        for t in range(1, data.n_bins + 1)
    }


def feature_difference(char: CharacteristicSample, counterpart) -> np.ndarray:
    """Per-feature change from the characteristic sample to its counterpart."""
    other = np.asarray(counterpart, dtype=np.float64)
    if other.shape != char.x.shape:
        raise ValidationError("counterpart dimension does not match")
    return other - char.x
