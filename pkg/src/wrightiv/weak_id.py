"""Inference that stays valid when the instruments are weak.

* Anderson-Rubin: ``S(theta) = n g(theta)' Omega(theta)^{-1} g(theta)`` compared
  with a chi-square(m) quantile, inverted over a grid.
* Conditional quasi-LR: ``LR(theta) = S(theta) - inf S`` with a critical value
  simulated conditionally on the orthogonalised moment process
  ``h(., theta0) = g(.) - Omega(., theta0) Omega(theta0, theta0)^{-1} g(theta0)``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chi2 import chi2_quantile
from .exceptions import BoundaryWarning, RidgeWarning, SimulationError
from .gmm import (
    CovarianceKernel,
    ThetaBox,
    _as_moment_system,
    batched_quad_form,
    compass_minimize,
    minimize_cue_objective,
    spd_inverse,
)

__all__ = [
    "CovarianceKernel",
    "ThetaGrid",
    "ConfidenceRegion",
    "LrStarDraws",
    "ar_statistic",
    "ar_region",
    "lr_statistic",
    "conditioning_statistic",
    "simulate_lr_star",
    "clr_critical_value",
    "clr_region",
]


@dataclass(frozen=True, eq=False)
class ThetaGrid:
    """Rectangular grid of (a, b) values; points are ordered a-major."""

    a_axis: np.ndarray
    b_axis: np.ndarray

    def __post_init__(self):
        for name in ("a_axis", "b_axis"):
            ax = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if ax.size < 2:
                raise ValueError(f"{name} needs at least two points")
            if not np.all(np.diff(ax) > 0):
                raise ValueError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, ax)

    @classmethod
    def from_box(cls, box: ThetaBox, resolution=61) -> "ThetaGrid":
        a, b = box.axes(resolution)
        return cls(a, b)

    @property
    def shape(self) -> tuple[int, int]:
        return self.a_axis.size, self.b_axis.size

    def points(self) -> np.ndarray:
        aa, bb = np.meshgrid(self.a_axis, self.b_axis, indexing="ij")
        return np.column_stack([aa.ravel(), bb.ravel()])

    @property
    def cell_area(self) -> float:
        return float(np.mean(np.diff(self.a_axis)) * np.mean(np.diff(self.b_axis)))


@dataclass(frozen=True, eq=False)
class ConfidenceRegion:
    """Grid-inverted confidence set.

    ``statistic``, ``critical`` (broadcast to per-point), ``member`` and
    ``ridged`` are flat arrays aligned with ``grid.points()``.
    """

    grid: ThetaGrid
    statistic: np.ndarray
    critical: np.ndarray
    member: np.ndarray
    level: float
    kind: str
    ridged: np.ndarray | None = None

    @property
    def n_members(self) -> int:
        return int(self.member.sum())

    @property
    def area(self) -> float:
        """Number of member points times the average cell area."""
        return self.n_members * self.grid.cell_area

    def member_grid(self) -> np.ndarray:
        return self.member.reshape(self.grid.shape)

    def member_points(self) -> np.ndarray:
        return self.grid.points()[self.member]

    def to_csv(self, path_or_buffer=None) -> str | None:
        """Columns ``a_value,b_value,statistic,critical,member``.

        Returns the text when no destination is given.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["a_value", "b_value", "statistic", "critical", "member"])
        crit = np.broadcast_to(self.critical, self.statistic.shape)
        for (a, b), s, c, mem in zip(self.grid.points(), self.statistic, crit, self.member):
            writer.writerow([format(a, ".17g"), format(b, ".17g"), format(s, ".17g"),
                             format(c, ".17g"), int(bool(mem))])
        text = buf.getvalue()
        if path_or_buffer is None:
            return text
        if hasattr(path_or_buffer, "write"):
            path_or_buffer.write(text)
        else:
            with open(path_or_buffer, "w", newline="") as fh:
                fh.write(text)
        return None


def _kernel(ms, kernel):
    return kernel if kernel is not None else CovarianceKernel(ms)


def _ar_values(ms, kernel, points):
    q, ridged = batched_quad_form(kernel.omega(points), ms.gbar(points))
    return ms.n * q, ridged


def ar_statistic(ms, kernel=None, theta=(0.0, 0.0)):
    """``n g(theta)' Omega(theta, theta)^{-1} g(theta)``.

    Accepts a single theta (returns float) or a stack (returns array). A
    near-singular Omega is ridged and a :class:`RidgeWarning` issued.
    """
    ms = _as_moment_system(ms)
    kernel = _kernel(ms, kernel)
    theta = np.asarray(theta, dtype=float)
    s, ridged = _ar_values(ms, kernel, theta)
    if np.any(ridged):
        warnings.warn("score covariance ridged in AR statistic", RidgeWarning, stacklevel=2)
    return float(s) if theta.ndim == 1 else s


def ar_region(ms, kernel, grid: ThetaGrid, p=0.05) -> ConfidenceRegion:
    """Grid points with ``S(theta) <= chi2_{1-p}(m)``."""
    ms = _as_moment_system(ms)
    kernel = _kernel(ms, kernel)
    stat, ridged = _ar_values(ms, kernel, grid.points())
    crit = chi2_quantile(1.0 - p, ms.m)
    return ConfidenceRegion(grid=grid, statistic=stat, critical=np.full(stat.shape, crit),
                            member=stat <= crit, level=1.0 - p, kind="ar", ridged=ridged)


def _min_ar(ms, kernel, box, grid, extra=()):
    theta, obj, _ = minimize_cue_objective(ms, kernel, box, grid, starts=extra)
    if box.on_boundary(theta):
        warnings.warn("inner minimisation of S stopped on the box boundary", BoundaryWarning,
                      stacklevel=3)
    return ms.n * obj, theta


def lr_statistic(ms, kernel, theta, box: ThetaBox | None = None, grid=61) -> float:
    """``S(theta) - inf_box S``; the infimum also considers ``theta`` itself."""
    ms = _as_moment_system(ms)
    kernel = _kernel(ms, kernel)
    box = box or ThetaBox()
    theta = np.asarray(theta, dtype=float)
    s_theta = float(_ar_values(ms, kernel, theta)[0])
    s_min, _ = _min_ar(ms, kernel, box, grid, extra=[theta])
    return max(s_theta - min(s_min, s_theta), 0.0)


def conditioning_statistic(ms, kernel, theta, theta0) -> np.ndarray:
    """``g(theta) - Omega(theta, theta0) Omega(theta0, theta0)^{-1} g(theta0)``.

    ``theta`` may be a stack of shape (N, 2).
    """
    ms = _as_moment_system(ms)
    kernel = _kernel(ms, kernel)
    theta0 = np.asarray(theta0, dtype=float)
    inv00, _ = spd_inverse(kernel.omega(theta0), ridge=False, what="Omega(theta0, theta0)")
    proj = inv00 @ ms.gbar(theta0)
    cross = kernel(np.asarray(theta, float), theta0)
    return ms.gbar(theta) - cross @ proj


@dataclass(frozen=True, eq=False)
class LrStarDraws:
    """Simulated conditional LR draws at one hypothesised theta0.

    ``lr_direct`` uses the first line of the definition (quadratic form of the
    simulated moment at theta0), ``lr_xi`` the second (quadratic form of the
    draw itself). They agree algebraically.
    """

    lr_direct: np.ndarray
    lr_xi: np.ndarray
    inner_min: np.ndarray
    failed: int

    @property
    def values(self) -> np.ndarray:
        return self.lr_xi


def _standard_normals(seed, draws, m):
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0x5EED])))
    return gen.standard_normal((draws, m))


def _psd_factor(mat):
    vals, vecs = np.linalg.eigh(0.5 * (mat + mat.T))
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def simulate_lr_star(ms, kernel, theta0, box: ThetaBox | None = None, draws=1000, seed=0,
                     inner_grid=31, tol=1e-8, normals=None) -> LrStarDraws:
    """Draw LR*(theta0) holding ``h(., theta0)`` and ``Omega(., .)`` fixed.

    For each draw ``xi ~ N(0, Omega(theta0, theta0))``::

        g*(theta) = h(theta, theta0) + Omega(theta, theta0) Omega00^{-1} xi / sqrt(n)
        LR* = xi' Omega00^{-1} xi - n inf_box g*' Omega(theta, theta)^{-1} g*

    The infimum uses an ``inner_grid`` square grid over ``box`` (plus theta0)
    and batched compass polish from the best grid point of each draw.
    """
    ms = _as_moment_system(ms)
    kernel = _kernel(ms, kernel)
    box = box or ThetaBox()
    if draws < 100:
        raise ValueError("need at least 100 draws")
    n, m = ms.n, ms.m
    theta0 = np.asarray(theta0, dtype=float)
    omega00 = kernel.omega(theta0)
    inv00, _ = spd_inverse(omega00, ridge=False, what="Omega(theta0, theta0)")
    z = _standard_normals(seed, draws, m) if normals is None else np.asarray(normals, float)
    xi = z @ _psd_factor(omega00).T
    v = xi @ inv00 / math.sqrt(n)  # Omega00^{-1} xi / sqrt(n), rows per draw
    g0_proj = inv00 @ ms.gbar(theta0)

    def h_and_b(points):
        cross = kernel(points, theta0)
        h = ms.gbar(points) - cross @ g0_proj
        return h, cross

    a_ax, b_ax = box.axes(inner_grid)
    aa, bb = np.meshgrid(a_ax, b_ax, indexing="ij")
    pts = np.vstack([np.column_stack([aa.ravel(), bb.ravel()]), theta0[None]])
    h, cross = h_and_b(pts)
    om = kernel.omega(pts)
    vals, vecs = np.linalg.eigh(om)
    top = vals[:, -1]
    bad = ~(vals[:, 0] > 1e-12 * top) | ~(top > 0)
    trace = np.trace(om, axis1=1, axis2=2)
    vals = np.where(bad[:, None], vals + 1e-10 * trace[:, None] / m, vals)
    usable = vals[:, 0] > 0
    winv = np.einsum("jik,jk,jlk->jil", vecs, 1.0 / np.where(usable[:, None], vals, 1.0), vecs)
    # n (h + B v)' W (h + B v) = n [c0 + 2 c1.v + v' C2 v]
    wh = np.einsum("jkl,jl->jk", winv, h)
    c0 = np.einsum("jk,jk->j", h, wh)
    c1 = np.einsum("jkl,jk->jl", cross, wh)
    c2 = np.einsum("jki,jkl,jlm->jim", cross, winv, cross)
    q = c0[None, :] + 2.0 * v @ c1.T + np.einsum("di,dm,jim->dj", v, v, c2, optimize=True)
    q = np.where(usable[None, :], n * q, np.inf)
    best = np.argmin(q, axis=1)
    grid_min = q[np.arange(draws), best]

    def fun(points, index=None):
        if index is None:
            index = np.arange(points.shape[0])
        hh, bb_ = h_and_b(points)
        gstar = hh + np.einsum("kij,kj->ki", bb_, v[index])
        val, _ = batched_quad_form(kernel.omega(points), gstar)
        return n * val

    scale = np.array([a_ax[1] - a_ax[0], b_ax[1] - b_ax[0]])
    _, polished = compass_minimize(fun, pts[best], scale, box.lower, box.upper, tol=tol)
    inner = np.minimum(grid_min, polished)

    gstar0 = h[-1][None, :] + v @ cross[-1].T
    direct = n * np.einsum("di,ij,dj->d", gstar0, inv00, gstar0) - inner
    via_xi = np.einsum("di,ij,dj->d", xi, inv00, xi) - inner
    ok = np.isfinite(via_xi) & np.isfinite(direct)
    failed = int(draws - ok.sum())
    if failed > 0.01 * draws:
        raise SimulationError(f"{failed} of {draws} LR* draws failed")
    return LrStarDraws(lr_direct=direct[ok], lr_xi=via_xi[ok], inner_min=inner[ok], failed=failed)


def _upper_order_statistic(values, prob):
    s = np.sort(values)
    k = max(int(math.ceil(prob * s.size - 1e-9)), 1)
    return float(s[k - 1])


def clr_critical_value(ms, kernel, theta0, box: ThetaBox | None = None, p=0.05, draws=1000,
                       seed=0, inner_grid=31) -> float:
    """Simulated ``1 - p`` quantile of LR*(theta0) (upper order statistic)."""
    sim = simulate_lr_star(ms, kernel, theta0, box, draws, seed, inner_grid)
    return _upper_order_statistic(sim.values, 1.0 - p)


def clr_region(ms, kernel, grid: ThetaGrid, box: ThetaBox | None = None, p=0.05, draws=1000,
               seed=0, inner_grid=31, outer_grid=61, threads=1) -> ConfidenceRegion:
    """Points where ``LR(theta) <= c_{1-p}(theta)``.

    Every grid point reuses the same standard-normal draws (derived from
    ``seed``), so the result does not depend on ``threads``.
    """
    ms = _as_moment_system(ms)
    kernel = _kernel(ms, kernel)
    box = box or ThetaBox()
    pts = grid.points()
    stat_s, ridged = _ar_values(ms, kernel, pts)
    s_min, _ = _min_ar(ms, kernel, box, outer_grid, extra=[pts[int(np.argmin(stat_s))]])
    s_min = min(s_min, float(np.min(stat_s)))
    lr = np.maximum(stat_s - s_min, 0.0)
    normals = _standard_normals(seed, draws, ms.m)

    def crit(point):
        sim = simulate_lr_star(ms, kernel, point, box, draws, seed, inner_grid, normals=normals)
        return _upper_order_statistic(sim.values, 1.0 - p)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            crits = np.array(list(pool.map(crit, pts)))
    else:
        crits = np.array([crit(pt) for pt in pts])
    return ConfidenceRegion(grid=grid, statistic=lr, critical=crits, member=lr <= crits,
                            level=1.0 - p, kind="clr", ridged=ridged)


def region_contains(region: ConfidenceRegion, theta) -> bool:
    """Membership of the grid point nearest to ``theta``."""
    pts = region.grid.points()
    k = int(np.argmin(np.sum((pts - np.asarray(theta, float)) ** 2, axis=1)))
    return bool(region.member[k])
