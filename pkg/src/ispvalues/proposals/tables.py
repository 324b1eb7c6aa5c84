"""Binary matrices with fixed margins: feasibility, sequential sampling, exact probabilities.

The sampler fills columns left to right. For a column with sum ``c`` it picks
a size-``c`` subset of rows by conditional Poisson sampling: the subset ``S``
has probability ``prod_{i in S} w_i / e_c(w)`` where ``e_c`` is the
elementary symmetric polynomial. The row weights are ``r_i / (k - r_i)`` for
residual row sum ``r_i`` and ``k`` columns left (current one included),
optionally tilted by ``exp(theta * v_ij)``. Rows with ``r_i == k`` have
infinite weight and are forced in. A draw whose residual margins fail the
Gale-Ryser test is a dead end and gets importance weight zero.

Everything is vectorized over a batch of draws; the same routine evaluates
the exact probability of a given matrix, so sampling and evaluation agree
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from ..errors import DomainError, InfeasibleMargins, NotInFiber, ShapeError


def _conjugate(col_sums, m: int) -> np.ndarray:
    """``conj[k-1] = sum_j min(c_j, k)`` for ``k = 1..m``."""
    col_sums = np.asarray(col_sums, dtype=np.int64)
    k = np.arange(1, m + 1)
    return np.minimum(col_sums[None, :], k[:, None]).sum(axis=1)


def gale_ryser_feasible(row_sums, col_sums) -> bool:
    rows = np.asarray(row_sums, dtype=np.int64)
    cols = np.asarray(col_sums, dtype=np.int64)
    if (rows < 0).any() or (cols < 0).any() or rows.sum() != cols.sum():
        return False
    if rows.size == 0:
        return True
    s = np.cumsum(np.sort(rows)[::-1])
    return bool((s <= _conjugate(cols, rows.size)).all())


def _gale_ryser_batch(rows: np.ndarray, conj: np.ndarray) -> np.ndarray:
    # totals agree by construction; only the majorization inequalities are checked
    s = np.cumsum(-np.sort(-rows, axis=1), axis=1)
    return (s <= conj[None, :]).all(axis=1)


@dataclass(frozen=True)
class MarginFiber:
    row_sums: np.ndarray
    col_sums: np.ndarray

    def __init__(self, row_sums, col_sums):
        rows = np.asarray(row_sums, dtype=np.int64).ravel()
        cols = np.asarray(col_sums, dtype=np.int64).ravel()
        if (rows < 0).any() or (cols < 0).any():
            raise InfeasibleMargins("margins must be nonnegative")
        if rows.sum() != cols.sum():
            raise InfeasibleMargins(f"row total {rows.sum()} != column total {cols.sum()}")
        if not gale_ryser_feasible(rows, cols):
            raise InfeasibleMargins("margins violate the Gale-Ryser condition")
        object.__setattr__(self, "row_sums", rows)
        object.__setattr__(self, "col_sums", cols)

    @property
    def shape(self) -> tuple[int, int]:
        return self.row_sums.size, self.col_sums.size

    @classmethod
    def from_matrix(cls, matrix) -> "MarginFiber":
        x = np.asarray(matrix)
        return cls(x.sum(axis=1), x.sum(axis=0))

    @classmethod
    def from_csv(cls, path) -> "MarginFiber":
        """Two non-empty lines: row sums, then column sums (comma separated)."""
        lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
        if len(lines) != 2:
            raise ShapeError(f"{path}: expected 2 lines (row sums, column sums), got {len(lines)}")
        rows, cols = ([int(tok) for tok in ln.split(",")] for ln in lines)
        return cls(rows, cols)

    def contains(self, matrices) -> np.ndarray | bool:
        x = np.asarray(matrices)
        if x.shape[-2:] != self.shape:
            return np.zeros(x.shape[:-2], dtype=bool) if x.ndim > 2 else False
        ok = (
            ((x == 0) | (x == 1)).all(axis=(-2, -1))
            & (x.sum(axis=-1) == self.row_sums).all(axis=-1)
            & (x.sum(axis=-2) == self.col_sums).all(axis=-1)
        )
        return bool(ok) if x.ndim == 2 else ok


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            row = [int(tok) for tok in line.split(",")]
        except ValueError as exc:
            raise ShapeError(f"{path}:{lineno}: {exc}") from None
        if any(v not in (0, 1) for v in row):
            raise ShapeError(f"{path}:{lineno}: entries must be 0 or 1")
        if rows and len(row) != len(rows[0]):
            raise ShapeError(f"{path}:{lineno}: ragged row")
        rows.append(row)
    return np.array(rows, dtype=np.int8)


class ConditionalPoissonColumns:
    """Column-wise sequential sampler with conditional Poisson row selection.

    ``covariates`` and ``theta`` tilt row ``i``'s weight in column ``j`` by
    ``exp(theta * v_ij)``; with ``theta = 0`` this is the untilted sampler.
    """

    def __init__(self, fiber: MarginFiber, covariates=None, theta: float = 0.0, batch_size: int = 4096):
        self.fiber = fiber
        self.theta = float(theta)
        if covariates is not None:
            covariates = np.asarray(covariates, dtype=float)
            if covariates.shape != fiber.shape:
                raise ShapeError(f"covariates shape {covariates.shape} != fiber shape {fiber.shape}")
            if not np.isfinite(covariates).all():
                raise DomainError("covariates must be finite")
        self.covariates = covariates
        self.batch_size = int(batch_size)
        m, n = fiber.shape
        self._conj = [_conjugate(fiber.col_sums[j + 1 :], m) for j in range(n)]

    def _tilt(self, j: int):
        if self.covariates is None or self.theta == 0.0:
            return None
        return self.theta * self.covariates[:, j]

    def _run(self, count: int, rng: np.random.Generator | None, given: np.ndarray | None, keep_matrices: bool = True):
        """Sample ``count`` draws (``given is None``) or evaluate ``given``.

        Returns ``(matrices or None, log_q, dead)``.
        """
        m, n = self.fiber.shape
        sampling = given is None
        B = count if sampling else given.shape[0]
        resid = np.tile(self.fiber.row_sums, (B, 1))
        log_q = np.zeros(B)
        dead = np.zeros(B, dtype=bool)
        # column-major storage keeps each column write contiguous
        out = np.zeros((B, n, m), dtype=np.int8) if (sampling and keep_matrices) else None
        alive = np.arange(B)
        everyone = True
        for j in range(n):
            if alive.size == 0:
                break
            sel = slice(None) if everyone else alive
            c = int(self.fiber.col_sums[j])
            k_left = n - j
            R = resid[sel]
            forced = R == k_left
            free = (R > 0) & ~forced
            with np.errstate(divide="ignore", invalid="ignore"):
                lw = np.log(R) - np.log(k_left - R)
            tilt = self._tilt(j)
            if tilt is not None:
                lw = lw + tilt[None, :]
            logw = np.where(free, lw, -np.inf)
            col_given = None if given is None else given[sel, :, j].astype(bool)
            if c == 0:
                col, lq, ok = self._empty_column(forced, col_given)
            elif c == 1:
                col, lq, ok = self._unit_column(logw, forced, free, rng, col_given)
            else:
                col, lq, ok = self._general_column(c, logw, forced, free, rng, col_given)
            log_q[sel] += np.where(ok, lq, 0.0)
            resid[sel] -= col
            if out is not None:
                out[sel, j, :] = col
            feasible = ok & _gale_ryser_batch(resid[sel], self._conj[j])
            if not feasible.all():
                dead[alive[~feasible]] = True
                alive = alive[feasible]
                everyone = False
        if out is not None:
            out = out.transpose(0, 2, 1)
        return out, log_q, dead

    @staticmethod
    def _empty_column(forced, col_given):
        A = forced.shape[0]
        ok = ~forced.any(axis=1)
        if col_given is not None:
            ok &= ~col_given.any(axis=1)
        return np.zeros_like(forced, dtype=np.int8), np.zeros(A), ok

    @staticmethod
    def _unit_column(logw, forced, free, rng, col_given):
        A, m = logw.shape
        nforced = forced.sum(axis=1)
        top = np.max(logw, axis=1)
        safe_top = np.where(np.isfinite(top), top, 0.0)
        with np.errstate(divide="ignore"):
            total = np.log(np.sum(np.exp(logw - safe_top[:, None]), axis=1)) + safe_top
        total = np.where(nforced == 1, 0.0, total)
        ok = (nforced <= 1) & np.isfinite(total)
        rows = np.arange(A)
        if col_given is None:
            with np.errstate(invalid="ignore", over="ignore"):
                p = np.exp(logw - total[:, None])
            p = np.where(free & (nforced == 0)[:, None], p, 0.0)
            p = np.where(forced & (nforced == 1)[:, None], 1.0, p)
            cs = np.cumsum(p, axis=1)
            target = rng.random(A) * cs[:, -1]
            pick = np.argmax(cs > target[:, None], axis=1)
        else:
            ok &= col_given.sum(axis=1) == 1
            pick = np.argmax(col_given, axis=1)
        chosen_free = free[rows, pick] & (nforced == 0)
        allowed = chosen_free | (forced[rows, pick] & (nforced == 1))
        ok &= allowed
        lq = np.where(chosen_free, logw[rows, pick], 0.0) - total
        col = np.zeros((A, m), dtype=np.int8)
        col[rows, pick] = 1
        return col, lq, ok

    @staticmethod
    def _general_column(c, logw, forced, free, rng, col_given):
        A, m = logw.shape
        # L[i][:, k] = log of the total weight of ways to pick k rows from rows i..m-1
        L = np.empty((m + 1, A, c + 1))
        L[m] = -np.inf
        L[m][:, 0] = 0.0
        for i in range(m - 1, -1, -1):
            nxt = L[i + 1]
            sh = np.empty_like(nxt)
            sh[:, 0] = -np.inf
            sh[:, 1:] = nxt[:, :-1]
            with np.errstate(invalid="ignore"):
                add = np.logaddexp(nxt, sh + logw[:, i, None])
            L[i] = np.where(free[:, i, None], add, np.where(forced[:, i, None], sh, nxt))
        total = L[0][:, c]
        ok = np.isfinite(total)
        rows = np.arange(A)
        need = np.full(A, c)
        lq = np.zeros(A)
        col = np.zeros((A, m), dtype=np.int8)
        u = rng.random((A, m)) if col_given is None else None
        for i in range(m):
            has = need > 0
            if col_given is None:
                prev = np.maximum(need - 1, 0)
                with np.errstate(invalid="ignore"):
                    p = np.exp(logw[:, i] + L[i + 1][rows, prev] - L[i][rows, need])
                p = np.where(has & free[:, i], p, 0.0)
                p = np.where(has & forced[:, i], 1.0, p)
                inc = u[:, i] < p
            else:
                inc = col_given[:, i]
                ok &= ~(inc & ~(free[:, i] | forced[:, i]))
                ok &= ~(forced[:, i] & ~inc)
                ok &= ~(inc & ~has)
            lq += np.where(inc & free[:, i], logw[:, i], 0.0)
            need = need - inc
            col[:, i] = inc
        if col_given is not None:
            ok &= need == 0
        lq = lq - total
        return col, lq, ok

    def sample_with_status(self, rng: np.random.Generator, size: int):
        """Return ``(matrices, log_q, dead)``. Dead draws hold a partial matrix."""
        mats, lqs, deads = [], [], []
        for start in range(0, size, self.batch_size):
            mat, lq, dead = self._run(min(self.batch_size, size - start), rng, None)
            mats.append(mat)
            lqs.append(lq)
            deads.append(dead)
        if not mats:
            m, n = self.fiber.shape
            return np.zeros((0, m, n), dtype=np.int8), np.zeros(0), np.zeros(0, dtype=bool)
        return np.concatenate(mats), np.concatenate(lqs), np.concatenate(deads)

    def sample(self, rng: np.random.Generator, size: int):
        """Return ``(matrices, log_q)``; dead-end draws get ``log_q = -inf``.

        A dead-end outcome lies outside the fiber, so it carries importance
        weight zero whatever its path probability was.
        """
        mats, lq, dead = self.sample_with_status(rng, size)
        return mats, np.where(dead, -np.inf, lq)

    def sample_statistic(self, rng: np.random.Generator, size: int, statistic):
        """Sample and keep only ``statistic(batch_of_matrices)``; saves memory on big fibers.

        Returns ``(stats, log_q, dead)``.
        """
        stats, lqs, deads = [], [], []
        for start in range(0, size, self.batch_size):
            mat, lq, dead = self._run(min(self.batch_size, size - start), rng, None)
            stats.append(np.asarray(statistic(mat), dtype=float))
            lqs.append(lq)
            deads.append(dead)
        if not stats:
            return np.zeros(0), np.zeros(0), np.zeros(0, dtype=bool)
        return np.concatenate(stats), np.concatenate(lqs), np.concatenate(deads)

    def logprob(self, matrices) -> np.ndarray:
        """Exact log sampling probability; ``-inf`` for matrices outside the fiber."""
        x = np.asarray(matrices)
        single = x.ndim == 2
        x = x.reshape((-1,) + x.shape[-2:]) if not single else x[None]
        inside = self.fiber.contains(x)
        out = np.full(x.shape[0], -np.inf)
        idx = np.flatnonzero(inside)
        for start in range(0, idx.size, self.batch_size):
            sel = idx[start : start + self.batch_size]
            _, lq, dead = self._run(0, None, x[sel])
            out[sel] = np.where(dead, -np.inf, lq)
        return float(out[0]) if single else out


def cp_column_sample(fiber: MarginFiber, rng: np.random.Generator, size: int = 1):
    """``(matrices, log_q, dead)`` from the untilted conditional Poisson sampler."""
    return ConditionalPoissonColumns(fiber).sample_with_status(rng, size)


def cp_column_logprob(fiber: MarginFiber, matrix) -> float:
    if not fiber.contains(matrix):
        raise NotInFiber("matrix does not have the fiber's margins")
    return ConditionalPoissonColumns(fiber).logprob(matrix)


def theta_tilted_matrix_sample(fiber: MarginFiber, covariates, theta: float, rng: np.random.Generator, size: int = 1):
    return ConditionalPoissonColumns(fiber, covariates, theta).sample_with_status(rng, size)


# --- the 52 x 102 structured table -------------------------------------------

STRUCTURED_ROWS = 52
STRUCTURED_COLS = 102
STRUCTURED_FIRST_ROW = 51


def structured_fiber() -> MarginFiber:
    rows = np.ones(STRUCTURED_ROWS, dtype=np.int64)
    rows[0] = STRUCTURED_FIRST_ROW
    return MarginFiber(rows, np.ones(STRUCTURED_COLS, dtype=np.int64))


def structured_log_size() -> float:
    """log of C(102, 51) * 51!, the number of matrices in the fiber."""
    return float(gammaln(STRUCTURED_COLS + 1) - gammaln(STRUCTURED_COLS - STRUCTURED_FIRST_ROW + 1))


def structured_first_row(rng: np.random.Generator, size: int) -> np.ndarray:
    """Sorted 1-based column indices of the first-row ones for ``size`` uniform draws."""
    keys = rng.random((size, STRUCTURED_COLS))
    picks = np.argpartition(keys, STRUCTURED_FIRST_ROW, axis=1)[:, :STRUCTURED_FIRST_ROW]
    return np.sort(picks, axis=1) + 1


def structured_table_direct_sample(rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Exact uniform draws from the 52 x 102 fiber.

    The first row's ones go to a uniform 51-subset of columns; the other 51
    rows are matched to the remaining columns by a uniform bijection.
    """
    first = structured_first_row(rng, size) - 1
    out = np.zeros((size, STRUCTURED_ROWS, STRUCTURED_COLS), dtype=np.int8)
    for b in range(size):
        out[b, 0, first[b]] = 1
        rest = np.setdiff1d(np.arange(STRUCTURED_COLS), first[b], assume_unique=True)
        out[b, 1 + np.arange(rest.size), rng.permutation(rest)] = 1
    return out


def structured_matrix_from_indices(ell) -> np.ndarray:
    """Matrix whose first row has ones at 1-based columns ``ell``.

    The remaining rows take the remaining columns in increasing order.
    """
    ell = np.asarray(ell, dtype=int)
    if ell.size != STRUCTURED_FIRST_ROW or len(set(ell.tolist())) != ell.size:
        raise ShapeError("need 51 distinct column indices")
    if ell.min() < 1 or ell.max() > STRUCTURED_COLS:
        raise ShapeError("column indices must lie in 1..102")
    x = np.zeros((STRUCTURED_ROWS, STRUCTURED_COLS), dtype=np.int8)
    x[0, ell - 1] = 1
    rest = np.setdiff1d(np.arange(STRUCTURED_COLS), ell - 1)
    x[1 + np.arange(rest.size), rest] = 1
    return x
