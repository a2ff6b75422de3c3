"""Hot-kernel dispatch: compiled backend when available, NumPy otherwise.

Set ``DRIFTXPLAIN_PURE_PYTHON=1`` to force the NumPy backend.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

_impl = _pykernels
if os.environ.get("DRIFTXPLAIN_PURE_PYTHON", "0") in ("", "0"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykernels

BACKEND = "compiled" if _impl is not _pykernels else "python"


def _as_matrix(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a 2-d array")
    return a


def pairwise_sqdist(a, b) -> np.ndarray:
    a = _as_matrix(a)
    b = _as_matrix(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError("dimension mismatch between point sets")
    return _impl.pairwise_sqdist(a, b)


def lsap_solve(cost) -> np.ndarray:
    return _impl.lsap_solve(_as_matrix(cost))


def ap_run(similarity, damping: float, max_iter: int, conv_iter: int):
    return _impl.ap_run(_as_matrix(similarity), float(damping), int(max_iter), int(conv_iter))


def mean_shift_run(points, bandwidth: float, tol: float, max_iter: int) -> np.ndarray:
    return _impl.mean_shift_run(_as_matrix(points), float(bandwidth), float(tol), int(max_iter))
