"""Test statistics used by the applications, plus pooled transforms.

Every function accepts either one observation or a leading batch axis, so the
same code scores the observed data and a whole block of proposal draws.
"""

from __future__ import annotations

import enum

import numpy as np
from scipy import stats as sps

from .errors import ShapeError


class StatisticKind(str, enum.Enum):
    IDENTITY = "identity"
    MEDIAN_DIFF = "median_diff"
    LINEAR_COVARIATE = "linear_covariate"
    LAG_COUNT_PLUS = "lag_count_plus"
    LAG_COUNT_MINUS = "lag_count_minus"
    FINCH_S2BAR = "finch_s2bar"
    COLUMN_INDEX_SUM = "column_index_sum"


class PooledTransform(str, enum.Enum):
    NONE = "none"
    RANK = "rank"
    CENTER_SCALE = "center_scale"


def median_diff(values, labels):
    """median(values with label 1) - median(values with label 0).

    ``labels`` may be ``(m,)`` or ``(batch, m)``. Even-sized groups use the
    midpoint of the two central order statistics.
    """
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels).astype(bool)
    if labels.shape[-1] != values.shape[-1]:
        raise ShapeError("labels and values differ in length")
    single = labels.ndim == 1
    labels = np.atleast_2d(labels)
    order = np.argsort(values, kind="stable")
    v_sorted = values[order]
    lab_sorted = labels[:, order]
    r = int(lab_sorted[0].sum())
    if not (lab_sorted.sum(axis=1) == r).all():
        raise ShapeError("every labeling in a batch must have the same number of ones")
    if r == 0 or r == values.size:
        raise ShapeError("both label groups must be nonempty")
    out = _sorted_group_median(v_sorted, lab_sorted, r) - _sorted_group_median(v_sorted, ~lab_sorted, values.size - r)
    return float(out[0]) if single else out


def _sorted_group_median(v_sorted, mask, size):
    # k-th smallest member of each row's group via the cumulative count
    csum = np.cumsum(mask, axis=1)
    lo = (size - 1) // 2 + 1
    hi = size // 2 + 1
    i_lo = np.argmax(csum >= lo, axis=1)
    i_hi = np.argmax(csum >= hi, axis=1)
    return 0.5 * (v_sorted[i_lo] + v_sorted[i_hi])


def linear_covariate(matrix, covariates):
    """Sufficient statistic ``sum_ij x_ij v_ij`` for the covariate effect."""
    x = np.asarray(matrix, dtype=float)
    v = np.asarray(covariates, dtype=float)
    if x.shape[-2:] != v.shape:
        raise ShapeError(f"matrix shape {x.shape[-2:]} does not match covariates {v.shape}")
    out = np.einsum("...ij,ij->...", x, v)
    return float(out) if out.ndim == 0 else out


def lag_counts(train_i, train_j, lags=(1, 2, 3, 4)):
    """Number of pairs with ``T^j - T^i == d`` for each lag ``d``.

    Trains are 0/1 arrays over time bins, shape ``(B,)`` or ``(batch, B)``.
    Returns shape ``(..., len(lags))``.
    """
    ti = np.asarray(train_i, dtype=np.int32)
    tj = np.asarray(train_j, dtype=np.int32)
    if ti.shape[-1] != tj.shape[-1]:
        raise ShapeError("spike trains differ in length")
    B = ti.shape[-1]
    cols = []
    for d in lags:
        if d >= 0:
            cols.append(np.sum(ti[..., : B - d] * tj[..., d:], axis=-1))
        else:
            cols.append(np.sum(ti[..., -d:] * tj[..., : B + d], axis=-1))
    return np.stack(cols, axis=-1)


def lag_count_plus(train_i, train_j, lags=(1, 2, 3, 4)):
    out = lag_counts(train_i, train_j, lags).max(axis=-1)
    return out.astype(float) if np.ndim(out) else float(out)


def lag_count_minus(train_i, train_j, lags=(1, 2, 3, 4)):
    out = -lag_counts(train_i, train_j, lags).min(axis=-1)
    return out.astype(float) if np.ndim(out) else float(out)


def events_to_train(times, length: int) -> np.ndarray:
    train = np.zeros(length, dtype=np.int8)
    train[np.asarray(times, dtype=int)] = 1
    return train


def finch_s2bar(matrix):
    """Mean squared co-occurrence ``sum_{i != j} (x x^T)_ij^2 / (m (m - 1))``."""
    x = np.asarray(matrix, dtype=np.int64)
    if x.ndim < 2:
        raise ShapeError("finch statistic needs a matrix")
    m = x.shape[-2]
    s = x @ np.swapaxes(x, -1, -2)
    total = np.sum(s**2, axis=(-2, -1)) - np.sum(np.diagonal(s, axis1=-2, axis2=-1) ** 2, axis=-1)
    out = total / (m * (m - 1))
    return float(out) if np.ndim(out) == 0 else out


def column_index_sum(matrix):
    """Sum of the 1-based column indices of the ones in the first row."""
    x = np.asarray(matrix)
    if x.ndim < 2:
        raise ShapeError("column index sum needs a matrix")
    idx = np.arange(1, x.shape[-1] + 1)
    out = np.sum(x[..., 0, :] * idx, axis=-1)
    return float(out) if np.ndim(out) == 0 else out.astype(float)


def evaluate_statistic(kind: StatisticKind | str, data, **params):
    """Dispatch on ``kind``; ``data`` is whatever the statistic consumes.

    * IDENTITY: a real (or array)
    * MEDIAN_DIFF: ``(values, labels)``
    * LINEAR_COVARIATE: matrix, with ``covariates=`` keyword
    * LAG_COUNT_PLUS / LAG_COUNT_MINUS: ``(train_i, train_j)``; event time
      lists are accepted with ``length=``
    * FINCH_S2BAR, COLUMN_INDEX_SUM: 0/1 matrix
    """
    kind = StatisticKind(kind)
    if kind is StatisticKind.IDENTITY:
        return data
    if kind is StatisticKind.MEDIAN_DIFF:
        values, labels = data
        return median_diff(values, labels)
    if kind is StatisticKind.LINEAR_COVARIATE:
        return linear_covariate(data, params["covariates"])
    if kind in (StatisticKind.LAG_COUNT_PLUS, StatisticKind.LAG_COUNT_MINUS):
        ti, tj = data
        if "length" in params:
            ti = events_to_train(ti, params["length"])
            tj = events_to_train(tj, params["length"])
        lags = params.get("lags", (1, 2, 3, 4))
        fn = lag_count_plus if kind is StatisticKind.LAG_COUNT_PLUS else lag_count_minus
        return fn(ti, tj, lags)
    if kind is StatisticKind.FINCH_S2BAR:
        return finch_s2bar(data)
    return column_index_sum(data)


def pooled_transform(obs_stat, stats, transform: PooledTransform | str = PooledTransform.NONE):
    """Apply a permutation-invariant transform to the pooled sequence.

    The transform sees ``(t(X), t(Y_1), ..., t(Y_n))`` as a whole, so its
    result does not depend on which element is the observation.
    Returns ``(obs_stat', stats')``.
    """
    transform = PooledTransform(transform)
    pooled = np.concatenate(([float(obs_stat)], np.asarray(stats, dtype=float).ravel()))
    if transform is PooledTransform.RANK:
        pooled = sps.rankdata(pooled, method="average")
    elif transform is PooledTransform.CENTER_SCALE:
        finite = pooled[np.isfinite(pooled)]
        center = finite.mean() if finite.size else 0.0
        scale = finite.std() if finite.size > 1 else 0.0
        pooled = (pooled - center) / (scale if scale > 0 else 1.0)
    return float(pooled[0]), pooled[1:]
