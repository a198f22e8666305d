"""Linear GMM for the residualised demand/supply system.

Per-observation scores are affine in theta = (a, b)::

    g(X_i, theta) = g0_i + d_i * theta[block]

with ``g0_i = (y1 * zs1, y2 * zd2)`` and ``d_i = (-p1 * zs1, -p2 * zd2)``;
``block[j]`` is 0 for demand moments and 1 for supply moments. Everything
below (closed-form GMM, iterated GMM, CUE, covariance kernels) works off
this decomposition.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .exceptions import (
    BoundaryWarning,
    DimensionError,
    IdentificationError,
    RidgeWarning,
    SingularCovarianceError,
)
from .partialing import ResidualizedDataset

__all__ = [
    "ThetaBox",
    "MomentSystem",
    "WeightingMatrix",
    "GmmFit",
    "CovarianceKernel",
    "build_moment_system",
    "solve_gmm",
    "estimate_omega",
    "sandwich_vcov",
    "iterative_gmm",
    "cue",
    "indirect_least_squares",
    "newey_west_default_lags",
    "OMEGA_KINDS",
]

OMEGA_KINDS = ("iid_centered", "iid_uncentered", "newey_west")
EIG_CUTOFF = 1e-12
RIDGE_SCALE = 1e-10


@dataclass(frozen=True)
class ThetaBox:
    """Rectangular parameter space for (a, b)."""

    lower: tuple[float, float] = (-10.0, -10.0)
    upper: tuple[float, float] = (10.0, 10.0)

    def __post_init__(self):
        lo = tuple(float(x) for x in self.lower)
        hi = tuple(float(x) for x in self.upper)
        if len(lo) != 2 or len(hi) != 2:
            raise ValueError("ThetaBox needs two lower and two upper bounds")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"lower {lo} must be strictly below upper {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def width(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    def contains(self, theta) -> bool:
        t = np.asarray(theta, dtype=float)
        return bool(np.all(t >= self.lower) and np.all(t <= self.upper))

    def clip(self, theta):
        return np.clip(theta, self.lower, self.upper)

    def axes(self, resolution) -> tuple[np.ndarray, np.ndarray]:
        ra, rb = (resolution, resolution) if np.isscalar(resolution) else resolution
        return (np.linspace(self.lower[0], self.upper[0], int(ra)),
                np.linspace(self.lower[1], self.upper[1], int(rb)))

    def on_boundary(self, theta, rtol=1e-6) -> bool:
        t = np.asarray(theta, dtype=float)
        tol = rtol * self.width
        return bool(np.any(np.abs(t - self.lower) <= tol) or np.any(np.abs(t - self.upper) <= tol))


def newey_west_default_lags(n: int) -> int:
    return int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))


def _long_run_cross(a, b, kind, lags=None):
    """Bilinear long-run covariance between the columns of ``a`` and ``b``."""
    n = a.shape[0]
    if kind == "iid_uncentered":
        return a.T @ b / n
    ac = a - a.mean(axis=0)
    bc = b - b.mean(axis=0)
    out = ac.T @ bc / n
    if kind == "iid_centered":
        return out
    if kind != "newey_west":
        raise ValueError(f"unknown omega kind {kind!r}; expected one of {OMEGA_KINDS}")
    lags = newey_west_default_lags(n) if lags is None else int(lags)
    if lags < 0:
        raise ValueError("lags must be nonnegative")
    if n <= lags:
        raise ValueError(f"need more observations ({n}) than lags ({lags})")
    for lag in range(1, lags + 1):
        w = 1.0 - lag / (lags + 1.0)
        out = out + w * (ac[lag:].T @ bc[:-lag] + ac[:-lag].T @ bc[lag:]) / n
    return out


@dataclass(frozen=True, eq=False)
class MomentSystem:
    """Affine moment system ``g_i(theta) = g0_i + d_i * theta[block]``.

    Attributes
    ----------
    g0_obs, d_obs : ndarray, shape (n, m)
    blocks : ndarray of int, shape (m,)
        Parameter index (0 = a, 1 = b) each moment depends on.
    instrument_moment : ndarray, shape (m, m), optional
        Block-diagonal instrument second moments, used for the first GMM step.
    """

    g0_obs: np.ndarray
    d_obs: np.ndarray
    blocks: np.ndarray
    instrument_moment: np.ndarray | None = None

    def __post_init__(self):
        g0 = np.asarray(self.g0_obs, dtype=float)
        d = np.asarray(self.d_obs, dtype=float)
        if g0.ndim != 2 or g0.shape != d.shape:
            raise DimensionError("g0_obs and d_obs must be equal-shape (n, m) arrays")
        if g0.shape[0] < 2:
            raise DimensionError("need at least two observations")
        blocks = np.asarray(self.blocks, dtype=int).reshape(-1)
        if blocks.shape[0] != g0.shape[1] or not np.all((blocks == 0) | (blocks == 1)):
            raise DimensionError("blocks must hold 0/1 for every moment")
        object.__setattr__(self, "g0_obs", g0)
        object.__setattr__(self, "d_obs", d)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "_g0_bar", g0.mean(axis=0))
        object.__setattr__(self, "_d_bar", d.mean(axis=0))

    @property
    def n(self) -> int:
        return self.g0_obs.shape[0]

    @property
    def m(self) -> int:
        return self.g0_obs.shape[1]

    @property
    def g0_bar(self) -> np.ndarray:
        return self._g0_bar.copy()

    @property
    def g_jacobian(self) -> np.ndarray:
        jac = np.zeros((self.m, 2))
        jac[np.arange(self.m), self.blocks] = self._d_bar
        return jac

    @property
    def exactly_identified(self) -> bool:
        return bool(np.sum(self.blocks == 0) == 1 and np.sum(self.blocks == 1) == 1)

    def expand(self, theta) -> np.ndarray:
        """theta[..., blocks]: the parameter multiplying each moment's slope."""
        return np.asarray(theta, dtype=float)[..., self.blocks]

    def scores(self, theta) -> np.ndarray:
        """Per-observation scores g(X_i, theta), shape (n, m)."""
        return self.g0_obs + self.d_obs * self.expand(theta)

    def gbar(self, theta) -> np.ndarray:
        """Average score; accepts a single theta or a stack of shape (N, 2)."""
        return self._g0_bar + self._d_bar * self.expand(theta)


def build_moment_system(resid: ResidualizedDataset) -> MomentSystem:
    """Scores ``((y1 - a p1) zs1, (y2 - b p2) zd2)`` from residualised data."""
    if resid.n < 2:
        raise DimensionError("need at least two observations")
    zs1, zd2 = resid.zs1, resid.zd2
    k1, k2 = zs1.shape[1], zd2.shape[1]
    if k1 == 0 or k2 == 0:
        raise DimensionError("both blocks need at least one instrument")
    g0 = np.column_stack([resid.y1[:, None] * zs1, resid.y2[:, None] * zd2])
    d = np.column_stack([-resid.p1[:, None] * zs1, -resid.p2[:, None] * zd2])
    inst = np.zeros((k1 + k2, k1 + k2))
    inst[:k1, :k1] = zs1.T @ zs1 / resid.n
    inst[k1:, k1:] = zd2.T @ zd2 / resid.n
    return MomentSystem(g0, d, np.array([0] * k1 + [1] * k2), instrument_moment=inst)


def _as_moment_system(obj) -> MomentSystem:
    if isinstance(obj, MomentSystem):
        return obj
    if isinstance(obj, ResidualizedDataset):
        return build_moment_system(obj)
    raise TypeError(f"expected MomentSystem or ResidualizedDataset, got {type(obj).__name__}")


def _symmetrize(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def spd_inverse(mat, ridge=True, what="covariance"):
    """Inverse of a symmetric PSD matrix through its eigendecomposition.

    When the smallest eigenvalue is at or below ``1e-12`` times the largest the
    matrix is ridged by ``1e-10 * trace / m`` (if ``ridge``), otherwise
    :class:`SingularCovarianceError` is raised. Returns ``(inverse, ridged)``.
    """
    mat = _symmetrize(np.asarray(mat, dtype=float))
    vals, vecs = np.linalg.eigh(mat)
    ridged = False
    top = vals[-1]
    if not (top > 0 and vals[0] > EIG_CUTOFF * top):
        trace = float(np.trace(mat))
        if not ridge or not trace > 0:
            raise SingularCovarianceError(
                f"{what} is singular (eigenvalues {vals.min():.3g} .. {vals.max():.3g})"
            )
        vals = vals + RIDGE_SCALE * trace / mat.shape[0]
        ridged = True
        if not vals[0] > EIG_CUTOFF * vals[-1]:
            raise SingularCovarianceError(f"{what} remains singular after ridging")
    inv = (vecs / vals) @ vecs.T
    return _symmetrize(inv), ridged


@dataclass(frozen=True, eq=False)
class WeightingMatrix:
    """Symmetric positive-definite GMM weighting matrix."""

    matrix: np.ndarray
    kind: str = "identity"

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError("weighting matrix must be square")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        if np.max(np.abs(a - a.T), initial=0.0) > 1e-12 * scale:
            raise ValueError("weighting matrix is not symmetric")
        a = _symmetrize(a)
        if a.size and np.linalg.eigvalsh(a)[0] <= 0:
            raise ValueError("weighting matrix is not positive definite")
        object.__setattr__(self, "matrix", a)

    @classmethod
    def identity(cls, m) -> "WeightingMatrix":
        return cls(np.eye(m), "identity")

    @classmethod
    def from_inverse(cls, omega, kind="inverse_omega", ridge=True) -> "WeightingMatrix":
        inv, ridged = spd_inverse(omega, ridge=ridge)
        if ridged:
            warnings.warn("weighting covariance was ridged before inversion", RidgeWarning,
                          stacklevel=2)
        return cls(inv, kind)


def _weight_array(a_matrix):
    return a_matrix.matrix if isinstance(a_matrix, WeightingMatrix) else np.asarray(a_matrix, float)


def solve_gmm(ms, a_matrix) -> np.ndarray:
    """Closed-form GMM estimate ``-(G'AG)^{-1} G'A g(0)``.

    Raises :class:`IdentificationError` when ``G'AG`` is numerically singular.
    """
    ms = _as_moment_system(ms)
    a = _weight_array(a_matrix)
    jac = ms.g_jacobian
    gag = _symmetrize(jac.T @ a @ jac)
    vals = np.linalg.eigvalsh(gag)
    if not (vals[-1] > 0 and vals[0] > EIG_CUTOFF * vals[-1]):
        raise IdentificationError(
            f"G'AG is rank deficient: smallest eigenvalue {vals[0]:.3g} "
            f"(largest {vals[-1]:.3g}); instruments may be weak or irrelevant",
            eigenvalue=float(vals[0]),
        )
    chol = np.linalg.cholesky(gag)
    rhs = -(jac.T @ a @ ms.g0_bar)
    return np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))


def estimate_omega(ms, theta, kind="iid_centered", lags=None) -> np.ndarray:
    """Covariance of the scores at ``theta``, computed from the score series."""
    ms = _as_moment_system(ms)
    if kind not in OMEGA_KINDS:
        raise ValueError(f"unknown omega kind {kind!r}; expected one of {OMEGA_KINDS}")
    g = ms.scores(theta)
    return _symmetrize(_long_run_cross(g, g, kind, lags))


class CovarianceKernel:
    """Cross covariance ``Omega(theta, theta_bar)`` of the average scores.

    Because scores are affine in theta, ``Omega`` is bilinear::

        Omega(t, s) = C00 + C0d D(s) + D(t) Cd0 + D(t) Cdd D(s)

    where ``C`` is the long-run covariance of the stacked series
    ``[g0_i, d_i]`` and ``D(t) = diag(t[blocks])``. For ``kind="iid_centered"``
    this is ``E_n g(t) g(s)' - E_n g(t) E_n g(s)'``.
    """

    def __init__(self, ms, kind="iid_centered", lags=None):
        ms = _as_moment_system(ms)
        if kind not in OMEGA_KINDS:
            raise ValueError(f"unknown omega kind {kind!r}; expected one of {OMEGA_KINDS}")
        self.ms = ms
        self.kind = kind
        self.lags = lags
        stacked = np.column_stack([ms.g0_obs, ms.d_obs])
        c = _symmetrize(_long_run_cross(stacked, stacked, kind, lags))
        m = ms.m
        self.c00 = c[:m, :m]
        self.c0d = c[:m, m:]
        self.cd0 = c[m:, :m]
        self.cdd = c[m:, m:]

    def __call__(self, theta, theta_bar=None) -> np.ndarray:
        """Omega for one pair or for stacks of shape (N, 2) (result (N, m, m))."""
        if theta_bar is None:
            theta_bar = theta
        t = self.ms.expand(theta)
        s = self.ms.expand(theta_bar)
        t, s = np.broadcast_arrays(t, s)
        out = (self.c00 + self.c0d * s[..., None, :] + t[..., :, None] * self.cd0
               + t[..., :, None] * self.cdd * s[..., None, :])
        return out

    def omega(self, theta) -> np.ndarray:
        return _symmetrize(self(theta, theta))


def batched_quad_form(omegas, g):
    """``g' Omega^{-1} g`` for stacks, ridging near-singular Omegas.

    Returns ``(values, ridged_mask)``; values are inf where Omega is zero.
    """
    omegas = _symmetrize(np.asarray(omegas, dtype=float))
    g = np.asarray(g, dtype=float)
    vals, vecs = np.linalg.eigh(omegas)
    top = vals[..., -1]
    bad = ~(vals[..., 0] > EIG_CUTOFF * top) | ~(top > 0)
    if np.any(bad):
        trace = np.trace(omegas, axis1=-2, axis2=-1)
        eps = RIDGE_SCALE * trace / omegas.shape[-1]
        vals = np.where(bad[..., None], vals + eps[..., None], vals)
    proj = np.einsum("...ji,...j->...i", vecs, g)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.sum(proj * proj / vals, axis=-1)
    dead = bad & ~(np.trace(omegas, axis1=-2, axis2=-1) > 0)
    q = np.where(dead, np.where(np.all(g == 0, axis=-1), 0.0, np.inf), q)
    return q, bad


def sandwich_vcov(ms, a_matrix, omega) -> np.ndarray:
    """``M Omega M' / n`` with ``M = -(G'AG)^{-1} G'A``."""
    ms = _as_moment_system(ms)
    a = _weight_array(a_matrix)
    jac = ms.g_jacobian
    gag = _symmetrize(jac.T @ a @ jac)
    mmat = -np.linalg.solve(gag, jac.T @ a)
    return _symmetrize(mmat @ omega @ mmat.T) / ms.n


@dataclass(frozen=True, eq=False)
class GmmFit:
    """Point estimate and inference output of a GMM-type estimator."""

    theta_hat: np.ndarray
    vcov: np.ndarray
    omega_hat: np.ndarray
    weighting: WeightingMatrix
    steps: tuple
    mode: str
    n: int
    omega_kind: str = "iid_centered"
    estimator: str = "iterative_gmm"
    objective: float | None = None
    on_boundary: bool = False
    foc_norm: float = 0.0
    notes: tuple[str, ...] = ()

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.vcov), 0.0, None))

    def wald_interval(self, level=0.95) -> np.ndarray:
        """Rows (lower, upper) for a and b."""
        z = NormalDist().inv_cdf(0.5 + level / 2.0)
        return np.column_stack([self.theta_hat - z * self.se, self.theta_hat + z * self.se])

    def covers(self, theta, level=0.95) -> np.ndarray:
        ci = self.wald_interval(level)
        t = np.asarray(theta, dtype=float)
        return (ci[:, 0] <= t) & (t <= ci[:, 1])

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "mode": self.mode,
            "omega_kind": self.omega_kind,
            "n": int(self.n),
            "theta_hat": {"alpha1": float(self.theta_hat[0]), "beta1": float(self.theta_hat[1])},
            "se": {"alpha1": float(self.se[0]), "beta1": float(self.se[1])},
            "vcov": self.vcov.tolist(),
            "omega_hat": self.omega_hat.tolist(),
            "weighting_kind": self.weighting.kind,
            "steps": [list(map(float, s)) for s in self.steps],
            "objective": None if self.objective is None else float(self.objective),
            "on_boundary": bool(self.on_boundary),
            "foc_norm": float(self.foc_norm),
            "notes": list(self.notes),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _limited(omega, blocks):
    same = blocks[:, None] == blocks[None, :]
    return np.where(same, omega, 0.0)


def _foc_norm(ms, a, theta):
    return float(np.linalg.norm(ms.g_jacobian.T @ a @ ms.gbar(theta)))


def iterative_gmm(resid, k_steps=2, mode="full_information", omega_kind="iid_centered",
                  lags=None) -> GmmFit:
    """Iterated GMM.

    Step 1 weights by the inverse block-diagonal instrument second moments,
    which is two-stage least squares equation by equation. Steps 2..K weight by
    the inverse score covariance at the previous estimate; in
    ``"limited_information"`` mode its cross-equation blocks are zeroed.
    ``vcov`` is the sandwich ``M Omega M' / n`` at the final estimate.
    """
    if k_steps < 1:
        raise ValueError("k_steps must be at least 1")
    if mode not in ("full_information", "limited_information"):
        raise ValueError(f"unknown mode {mode!r}")
    ms = _as_moment_system(resid)
    notes = []
    if ms.instrument_moment is not None:
        inst_inv, ridged = spd_inverse(ms.instrument_moment, what="instrument second moment")
        if ridged:
            notes.append("instrument second-moment matrix ridged")
        weighting = WeightingMatrix(inst_inv, "block_instrument_moments")
    else:
        weighting = WeightingMatrix.identity(ms.m)
    theta = solve_gmm(ms, weighting)
    steps = [theta]
    for _ in range(2, k_steps + 1):
        omega = estimate_omega(ms, theta, omega_kind, lags)
        if mode == "limited_information":
            omega = _limited(omega, ms.blocks)
        try:
            inv, ridged = spd_inverse(omega)
        except SingularCovarianceError:
            if not ms.exactly_identified:
                raise
            # estimate does not depend on the weighting here
            notes.append("score covariance singular; weighting left unchanged")
            steps.append(theta)
            continue
        if ridged:
            notes.append("score covariance ridged before inversion")
        weighting = WeightingMatrix(inv, "inverse_omega")
        theta = solve_gmm(ms, weighting)
        steps.append(theta)
    omega_final = estimate_omega(ms, theta, omega_kind, lags)
    vcov = sandwich_vcov(ms, weighting, omega_final)
    return GmmFit(
        theta_hat=theta, vcov=vcov, omega_hat=omega_final, weighting=weighting,
        steps=tuple(steps), mode=mode, n=ms.n, omega_kind=omega_kind,
        estimator="iterative_gmm", foc_norm=_foc_norm(ms, weighting.matrix, theta),
        notes=tuple(notes),
    )


def compass_minimize(fun, x0, scale, lower, upper, tol=1e-8, max_iter=10_000):
    """Batched derivative-free compass search inside a box.

    ``fun`` maps an ``(N, 2)`` array of points to ``(N,)`` values; row ``i`` of
    every call belongs to run ``i``. Each run polls the four axis moves of size
    ``s * scale``, takes the best improving one, and halves ``s`` otherwise.
    Stops once ``s * max(scale) < tol``. Returns ``(x, f)``.
    """
    x = np.array(x0, dtype=float, copy=True)
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    scale = np.asarray(scale, float)
    f = np.asarray(fun(x), dtype=float)
    s = np.ones(x.shape[0])
    moves = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    for _ in range(max_iter):
        live = s * scale.max() >= tol
        if not np.any(live):
            break
        idx = np.flatnonzero(live)
        base = x[idx]
        cands = np.clip(base[:, None, :] + moves[None] * (s[idx, None, None] * scale),
                        lower, upper)
        vals = np.asarray(fun(cands.reshape(-1, 2), np.repeat(idx, 4)), dtype=float)
        vals = vals.reshape(-1, 4)
        best = np.argmin(vals, axis=1)
        fbest = vals[np.arange(idx.size), best]
        better = fbest < f[idx]
        win = idx[better]
        x[win] = cands[np.flatnonzero(better), best[better]]
        f[win] = fbest[better]
        lose = idx[~better]
        s[lose] *= 0.5
    return x, f


def cue_objective(ms, kernel, theta):
    """``g(theta)' Omega(theta)^{-1} g(theta)`` for one theta or a stack."""
    theta = np.asarray(theta, dtype=float)
    q, _ = batched_quad_form(kernel.omega(theta), ms.gbar(theta))
    return q


def minimize_cue_objective(ms, kernel, box: ThetaBox, grid=61, starts=(), tol=1e-8):
    """Grid search over ``box`` followed by compass polish from the best grid
    point and every extra start. Returns ``(theta, objective, grid_best)``."""
    a_ax, b_ax = box.axes(grid)
    aa, bb = np.meshgrid(a_ax, b_ax, indexing="ij")
    pts = np.column_stack([aa.ravel(), bb.ravel()])
    vals = cue_objective(ms, kernel, pts)
    grid_best = pts[int(np.argmin(vals))]
    x0 = [grid_best] + [box.clip(np.asarray(s, float)) for s in starts]
    x0 = np.asarray(x0)
    scale = np.array([a_ax[1] - a_ax[0], b_ax[1] - b_ax[0]])

    def fun(points, index=None):
        return cue_objective(ms, kernel, points)

    x, f = compass_minimize(fun, x0, scale, box.lower, box.upper, tol=tol)
    k = int(np.argmin(f))
    return x[k], float(f[k]), grid_best


def cue(resid, box: ThetaBox | None = None, omega_kind="iid_centered", lags=None, grid=61,
        start=None, tol=1e-8) -> GmmFit:
    """Continuous-updating GMM.

    Minimises ``g(theta)' Omega(theta)^{-1} g(theta)`` by a ``grid x grid``
    search over ``box`` and compass polish. The polish also starts from
    ``start`` (default: two-step GMM when it exists), so the CUE objective never
    exceeds its value there. ``objective`` is the AR statistic divided by n.
    """
    ms = _as_moment_system(resid)
    box = box or ThetaBox()
    kernel = CovarianceKernel(ms, omega_kind, lags)
    starts = []
    if start is None:
        try:
            start = iterative_gmm(ms, 2, omega_kind=omega_kind, lags=lags).theta_hat
        except (IdentificationError, SingularCovarianceError):
            start = None
    if start is not None:
        starts.append(np.asarray(start, float))
    theta, obj, grid_best = minimize_cue_objective(ms, kernel, box, grid, starts, tol)
    boundary = box.on_boundary(theta)
    notes = []
    if boundary:
        warnings.warn("CUE optimum on the parameter box boundary; identification may be weak",
                      BoundaryWarning, stacklevel=2)
        notes.append("optimum on box boundary")
    omega = kernel.omega(theta)
    try:
        weighting = WeightingMatrix.from_inverse(omega)
        jac = ms.g_jacobian
        info = _symmetrize(jac.T @ weighting.matrix @ jac)
        vcov = _symmetrize(np.linalg.pinv(info, rcond=EIG_CUTOFF)) / ms.n
    except SingularCovarianceError:
        weighting = WeightingMatrix.identity(ms.m)
        vcov = np.full((2, 2), np.nan)
        notes.append("score covariance singular at optimum; vcov unavailable")
    return GmmFit(
        theta_hat=theta, vcov=vcov, omega_hat=omega, weighting=weighting,
        steps=tuple([grid_best] + starts + [theta]), mode="full_information", n=ms.n,
        omega_kind=omega_kind, estimator="cue", objective=obj, on_boundary=boundary,
        notes=tuple(notes),
    )


def indirect_least_squares(resid: ResidualizedDataset) -> np.ndarray:
    """Ratio of reduced-form slopes: coef(Y on Z) / coef(P on Z), per block."""
    if resid.zs1.shape[1] != 1 or resid.zd2.shape[1] != 1:
        raise DimensionError("indirect least squares needs one instrument per block")
    out = []
    for y, p, z in ((resid.y1, resid.p1, resid.zs1[:, 0]), (resid.y2, resid.p2, resid.zd2[:, 0])):
        zz = float(z @ z)
        if zz == 0:
            raise IdentificationError("instrument is identically zero", eigenvalue=0.0)
        coef_y = float(y @ z) / zz
        coef_p = float(p @ z) / zz
        if coef_p == 0:
            raise IdentificationError("price does not load on the instrument", eigenvalue=0.0)
        out.append(coef_y / coef_p)
    return np.array(out)
