"""Partialing-out of controls by least squares or LASSO.

For a response ``v`` and regressors ``m`` the best linear predictor is
``m @ pinv(m'm) m'v`` (no implicit intercept: include a constant column in
``m`` if you want one). The residualised system keeps

* block 1 (demand): Y, P, Z^s residualised on (W, Z^d)
* block 2 (supply): Y, P, Z^d residualised on (W, Z^s)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, LassoConvergenceError
from .structural import Dataset

__all__ = [
    "LinearProjection",
    "ResidualizedDataset",
    "best_linear_predictor",
    "partial_out",
    "lasso_fit",
    "lasso_partial_out",
    "default_lasso_penalty",
]

PINV_RCOND = 1e-12


@dataclass(frozen=True, eq=False)
class LinearProjection:
    """Result of projecting one column on a set of regressors."""

    coefficients: np.ndarray
    residuals: np.ndarray
    regressor_labels: tuple[str, ...] = ()
    rank_deficient: bool = False
    intercept: float = 0.0
    n_sweeps: int = 0
    objective_path: tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class ResidualizedDataset:
    """Partialed-out columns feeding the moment conditions.

    ``zs1`` and ``zd2`` are ``(n, k)`` instrument blocks; the rest are vectors.
    """

    y1: np.ndarray
    p1: np.ndarray
    zs1: np.ndarray
    y2: np.ndarray
    p2: np.ndarray
    zd2: np.ndarray
    method: str = "ols"

    def __post_init__(self):
        n = np.asarray(self.y1).reshape(-1).shape[0]
        for name in ("y1", "p1", "y2", "p2"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if v.shape[0] != n:
                raise DimensionError(f"{name} has {v.shape[0]} rows, expected {n}")
            object.__setattr__(self, name, v)
        for name in ("zs1", "zd2"):
            z = np.asarray(getattr(self, name), dtype=float)
            if z.ndim == 1:
                z = z[:, None]
            if z.shape[0] != n:
                raise DimensionError(f"{name} has {z.shape[0]} rows, expected {n}")
            object.__setattr__(self, name, z)

    @property
    def n(self) -> int:
        return self.y1.shape[0]

    @classmethod
    def from_arrays(cls, y1, p1, zs1, y2=None, p2=None, zd2=None, method="ols"):
        """Build from raw arrays; block 2 defaults to a copy of block 1."""
        if y2 is None:
            y2, p2, zd2 = y1, p1, zs1
        return cls(y1=y1, p1=p1, zs1=zs1, y2=y2, p2=p2, zd2=zd2, method=method)


def _as_matrix(m, n):
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return np.zeros((n, 0))
    if m.ndim == 1:
        m = m[:, None]
    return m


def best_linear_predictor(v, m, labels=None) -> LinearProjection:
    """Least-squares projection of ``v`` on the columns of ``m``.

    Collinear regressors get the minimum-norm coefficient vector; singular
    values below ``1e-12`` times the largest are treated as zero.
    """
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise DimensionError("empty response")
    squeeze = v.ndim == 1
    v2 = v[:, None] if squeeze else v
    n = v2.shape[0]
    m = _as_matrix(m, n)
    if m.shape[0] != n:
        raise DimensionError(f"regressors have {m.shape[0]} rows, response has {n}")
    k = m.shape[1]
    labels = tuple(labels) if labels is not None else tuple(f"x{j + 1}" for j in range(k))
    if k == 0:
        coef = np.zeros((0, v2.shape[1]))
        rank_def = False
    else:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
        keep = s > PINV_RCOND * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
        rank_def = int(keep.sum()) < k
        inv_s = np.zeros_like(s)
        inv_s[keep] = 1.0 / s[keep]
        coef = vt.T @ (inv_s[:, None] * (u.T @ v2))
    resid = v2 - m @ coef
    if squeeze:
        coef, resid = coef[:, 0], resid[:, 0]
    return LinearProjection(coefficients=coef, residuals=resid, regressor_labels=labels,
                            rank_deficient=bool(rank_def))


def _labels(data: Dataset, prefix):
    dzd, dzs, dw = data.dims
    w = [f"W{j + 1}" for j in range(dw)]
    z = [f"{prefix}{j + 1}" for j in range(dzd if prefix == "ZD" else dzs)]
    return w + z


def _require_instruments(data: Dataset):
    dzd, dzs, _ = data.dims
    if dzd == 0 or dzs == 0:
        raise DimensionError("both demand (Z^d) and supply (Z^s) shifters are required")


def partial_out(data: Dataset) -> ResidualizedDataset:
    """Residualise against (W, Z^d) for the demand block and (W, Z^s) for supply."""
    _require_instruments(data)
    m1 = np.column_stack([data.w, data.zd])
    m2 = np.column_stack([data.w, data.zs])
    r1 = best_linear_predictor(np.column_stack([data.y, data.p, data.zs]), m1).residuals
    r2 = best_linear_predictor(np.column_stack([data.y, data.p, data.zd]), m2).residuals
    return ResidualizedDataset(
        y1=r1[:, 0], p1=r1[:, 1], zs1=r1[:, 2:],
        y2=r2[:, 0], p2=r2[:, 1], zd2=r2[:, 2:],
        method="ols",
    )


def _soft_threshold(x, t):
    return np.sign(x) * max(abs(x) - t, 0.0)


def _lasso_objective(xs, yc, b, lam):
    r = yc - xs @ b
    return 0.5 * float(r @ r) / yc.shape[0] + lam * float(np.abs(b).sum())


def lasso_fit(v, m, lam, *, max_sweeps=10_000, tol=1e-8, labels=None) -> LinearProjection:
    """LASSO projection by cyclic coordinate descent.

    Minimises ``(1/2n)||v - c - m b||^2 + lam * ||b||_1`` with an unpenalised
    intercept ``c`` and the columns of ``m`` scaled to unit (population) standard
    deviation. ``lam`` is therefore on the standardised scale; coefficients are
    returned on the original scale. Constant columns are absorbed by the
    intercept and get coefficient 0.

    Converged when the largest coefficient change in a sweep is below ``tol``.
    """
    if lam < 0:
        raise ValueError("penalty must be nonnegative")
    v = np.asarray(v, dtype=float).reshape(-1)
    n = v.shape[0]
    if n == 0:
        raise DimensionError("empty response")
    m = _as_matrix(m, n)
    if m.shape[0] != n:
        raise DimensionError(f"regressors have {m.shape[0]} rows, response has {n}")
    k = m.shape[1]
    labels = tuple(labels) if labels is not None else tuple(f"x{j + 1}" for j in range(k))

    mean_m = m.mean(axis=0)
    sd = m.std(axis=0)
    active = sd > 1e-12 * np.maximum(1.0, np.abs(mean_m))
    xs = np.zeros_like(m)
    xs[:, active] = (m[:, active] - mean_m[active]) / sd[active]
    v_mean = v.mean()
    yc = v - v_mean

    gram = xs.T @ xs / n
    xty = xs.T @ yc / n
    b = np.zeros(k)
    # grad_j = xty_j - (gram @ b)_j, kept up to date incrementally
    gb = np.zeros(k)
    path = [_lasso_objective(xs, yc, b, lam)]
    idx = np.flatnonzero(active)
    converged = k == 0 or idx.size == 0
    sweeps = 0
    while not converged:
        if sweeps >= max_sweeps:
            coef = np.zeros(k)
            coef[active] = b[active] / sd[active]
            raise LassoConvergenceError(
                f"coordinate descent did not converge in {max_sweeps} sweeps",
                coefficients=coef, intercept=v_mean - mean_m @ coef,
            )
        sweeps += 1
        max_delta = 0.0
        for j in idx:
            gjj = gram[j, j]
            rho = xty[j] - gb[j] + gjj * b[j]
            new = _soft_threshold(rho, lam) / gjj
            delta = new - b[j]
            if delta != 0.0:
                gb += gram[:, j] * delta
                b[j] = new
                max_delta = max(max_delta, abs(delta))
        path.append(_lasso_objective(xs, yc, b, lam))
        converged = max_delta < tol

    coef = np.zeros(k)
    coef[active] = b[active] / sd[active]
    intercept = float(v_mean - mean_m @ coef)
    resid = v - intercept - m @ coef
    return LinearProjection(
        coefficients=coef, residuals=resid, regressor_labels=labels,
        rank_deficient=False, intercept=intercept, n_sweeps=sweeps,
        objective_path=tuple(path),
    )


def default_lasso_penalty(v, m, c=1.1) -> float:
    """Plug-in style penalty ``c * sd(v) * sqrt(2 log(max(p, n)) / n)``."""
    v = np.asarray(v, dtype=float).reshape(-1)
    n = v.shape[0]
    p = _as_matrix(m, n).shape[1]
    return float(c * v.std() * np.sqrt(2.0 * np.log(max(p, n, 2)) / n))


def lasso_partial_out(data: Dataset, lam=None, **kwargs) -> ResidualizedDataset:
    """Like :func:`partial_out` with :func:`lasso_fit` as the projection.

    ``lam=None`` picks :func:`default_lasso_penalty` separately for every
    residualised column.
    """
    _require_instruments(data)

    def resid(v, m):
        pen = default_lasso_penalty(v, m) if lam is None else lam
        return lasso_fit(v, m, pen, **kwargs).residuals

    m1 = np.column_stack([data.w, data.zd])
    m2 = np.column_stack([data.w, data.zs])
    zs1 = np.column_stack([resid(data.zs[:, j], m1) for j in range(data.zs.shape[1])])
    zd2 = np.column_stack([resid(data.zd[:, j], m2) for j in range(data.zd.shape[1])])
    return ResidualizedDataset(
        y1=resid(data.y, m1), p1=resid(data.p, m1), zs1=zs1,
        y2=resid(data.y, m2), p2=resid(data.p, m2), zd2=zd2,
        method="lasso",
    )
