"""Numeric kernels with two interchangeable backends.

The compiled backend uses numba when it is importable; setting the
environment variable SCENARIOKIT_NO_NUMBA=1 (before import) forces the
plain numpy implementations. Both give identical results.
"""

from __future__ import annotations

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("SCENARIOKIT_NO_NUMBA", "") == "1"

try:
    if _FORCE_NUMPY:
        raise ImportError("disabled by SCENARIOKIT_NO_NUMBA")
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    njit = None
    HAS_NUMBA = False


def backend_name() -> str:
    return "numba" if HAS_NUMBA else "numpy"


def _pareto_mask_numpy(values: np.ndarray) -> np.ndarray:
    """Boolean mask of rows not dominated by any other row. Row j
    dominates row i when it is >= everywhere and > somewhere."""
    n = values.shape[0]
    mask = np.ones(n, dtype=np.bool_)
    for i in range(n):
        ge = np.all(values >= values[i], axis=1)
        gt = np.any(values > values[i], axis=1)
        if np.any(ge & gt):
            mask[i] = False
    return mask


def _l1_matrix_numpy(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Pairwise L1 distances between rows of xs and rows of ys."""
    return np.abs(xs[:, None, :] - ys[None, :, :]).sum(axis=2)


if HAS_NUMBA:

    @njit(cache=True)
    def _pareto_mask_numba(values):  # pragma: no cover - thin jit wrapper
        n, m = values.shape
        mask = np.ones(n, dtype=np.bool_)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                ge_all = True
                gt_any = False
                for k in range(m):
                    if values[j, k] < values[i, k]:
                        ge_all = False
                        break
                    if values[j, k] > values[i, k]:
                        gt_any = True
                if ge_all and gt_any:
                    mask[i] = False
                    break
        return mask

    @njit(cache=True)
    def _l1_matrix_numba(xs, ys):  # pragma: no cover - thin jit wrapper
        n, m = xs.shape[0], ys.shape[0]
        d = xs.shape[1]
        out = np.zeros((n, m), dtype=np.float64)
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for k in range(d):
                    diff = xs[i, k] - ys[j, k]
                    acc += diff if diff >= 0.0 else -diff
                out[i, j] = acc
        return out


def pareto_mask(values: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-d array of row vectors")
    if arr.shape[0] == 0:
        return np.zeros(0, dtype=np.bool_)
    if HAS_NUMBA:
        return _pareto_mask_numba(arr)
    return _pareto_mask_numpy(arr)


def l1_matrix(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(xs, dtype=np.float64)
    b = np.ascontiguousarray(ys, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError("expected 2-d arrays with matching width")
    if HAS_NUMBA:
        return _l1_matrix_numba(a, b)
    return _l1_matrix_numpy(a, b)
