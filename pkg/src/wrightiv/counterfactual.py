"""Tariff counterfactuals in the log-linear demand/supply system.

A proportional tariff ``tau`` on imports shifts supply to
``S*(p) = beta1 (p - tau) + U^s`` while demand is unchanged. With pass-through
``c = beta1 / (beta1 - alpha1)`` the equilibrium moves by ``dP = c tau`` and
``dY = alpha1 dP``. Welfare terms are expressed as ratios to base revenue
``exp(Y + P)``::

    consumer surplus:  -(1 + dY/2) dP          = -c tau - alpha1 c^2 tau^2 / 2
    tariff revenue:    tau + c (1 + alpha1) tau^2 + c^3 alpha1^2 tau^3

The cubic revenue term above is the default. Setting
``revenue_terms="expanded"`` uses ``alpha1 c^2 tau^3`` instead, which is
what expanding ``tau (dP + dY + dP dY)`` gives; ``"quadratic"`` drops it.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateSystemError

__all__ = [
    "TariffScenario",
    "CounterfactualOutcome",
    "WelfareCurve",
    "pass_through",
    "apply_tariff",
    "consumer_surplus_change_exact",
    "welfare_polynomial",
    "optimal_tariff",
    "quadratic_stationary_point",
    "REVENUE_TERMS",
]

REVENUE_TERMS = ("cubic", "quadratic", "expanded")
DEFAULT_TAU_GRID = np.round(np.arange(0, 501) * 1e-3, 12)


def pass_through(alpha1: float, beta1: float) -> float:
    """Share of the tariff passed to the consumer price."""
    gap = beta1 - alpha1
    if not gap > 1e-10:
        raise DegenerateSystemError(f"beta1 - alpha1 must be positive, got {gap!r}")
    return beta1 / gap


@dataclass(frozen=True)
class TariffScenario:
    tau: float
    alpha1: float
    beta1: float
    baseline_p: float = 0.0
    baseline_y: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.tau < 1.0:
            raise ValueError(f"tau must lie in [0, 1), got {self.tau!r}")
        if self.alpha1 > 0 or self.beta1 < 0:
            raise ValueError("expected alpha1 <= 0 <= beta1")
        pass_through(self.alpha1, self.beta1)


@dataclass(frozen=True)
class CounterfactualOutcome:
    pass_through_c: float
    delta_p: float
    delta_y: float
    p_star: float
    y_star: float
    cs_change_ratio: float
    revenue_ratio: float
    welfare_sum: float

    def as_row(self, tau: float) -> dict:
        return {"tau": tau, **self.__dict__}


def _revenue(c, alpha1, tau, revenue_terms):
    if revenue_terms not in REVENUE_TERMS:
        raise ValueError(f"revenue_terms must be one of {REVENUE_TERMS}")
    rev = tau + c * (1.0 + alpha1) * tau ** 2
    if revenue_terms == "cubic":
        rev = rev + c ** 3 * alpha1 ** 2 * tau ** 3
    elif revenue_terms == "expanded":
        rev = rev + alpha1 * c ** 2 * tau ** 3
    return rev


def _cs(c, alpha1, tau):
    return -c * tau - 0.5 * alpha1 * c ** 2 * tau ** 2


def apply_tariff(s: TariffScenario, revenue_terms="cubic") -> CounterfactualOutcome:
    c = pass_through(s.alpha1, s.beta1)
    dp = c * s.tau
    dy = s.alpha1 * dp
    cs = _cs(c, s.alpha1, s.tau)
    rev = _revenue(c, s.alpha1, s.tau, revenue_terms)
    return CounterfactualOutcome(
        pass_through_c=c, delta_p=dp, delta_y=dy,
        p_star=s.baseline_p + dp, y_star=s.baseline_y + dy,
        cs_change_ratio=cs, revenue_ratio=rev, welfare_sum=cs + rev,
    )


def consumer_surplus_change_exact(s: TariffScenario, levels=False) -> float:
    """Trapezoid consumer-surplus change over base revenue.

    By default evaluates ``-(1 + dY/2) dP`` from the equilibrium shifts. With
    ``levels=True`` it evaluates ``((Q + Q*)/2)(P - P*) / (P Q)`` on the
    exponentiated prices and quantities; that version differs from the
    polynomial at second order in ``tau``.
    """
    c = pass_through(s.alpha1, s.beta1)
    dp = c * s.tau
    dy = s.alpha1 * dp
    if not levels:
        return -(1.0 + dy / 2.0) * dp
    q, q_star = math.exp(s.baseline_y), math.exp(s.baseline_y + dy)
    p, p_star = math.exp(s.baseline_p), math.exp(s.baseline_p + dp)
    return 0.5 * (q + q_star) * (p - p_star) / (p * q)


def welfare_polynomial(alpha1, beta1, tau, revenue_terms="cubic"):
    """Vectorised ``cs_change_ratio + revenue_ratio`` over ``tau``."""
    c = pass_through(alpha1, beta1)
    tau = np.asarray(tau, dtype=float)
    return _cs(c, alpha1, tau) + _revenue(c, alpha1, tau, revenue_terms)


def quadratic_stationary_point(alpha1, beta1):
    """Stationary point of ``(1 - c) tau + (c(1 + alpha1) - alpha1 c^2 / 2) tau^2``.

    Returns ``(tau, is_maximum)``, or ``(None, False)`` when the quadratic
    coefficient vanishes.
    """
    c = pass_through(alpha1, beta1)
    denom = alpha1 * c ** 2 - 2.0 * c * (1.0 + alpha1)
    if denom == 0:
        return None, False
    # second derivative is -denom
    return (1.0 - c) / denom, denom > 0


@dataclass(frozen=True, eq=False)
class WelfareCurve:
    tau_grid: np.ndarray
    cs_ratio: np.ndarray
    revenue_ratio: np.ndarray
    welfare: np.ndarray
    argmax_tau: float
    argmax_value: float
    stationary_tau: float | None
    revenue_terms: str = "cubic"

    def to_csv(self, path_or_buffer=None) -> str | None:
        """Columns ``tau,cs_ratio,revenue_ratio,welfare_sum``, sorted by tau."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["tau", "cs_ratio", "revenue_ratio", "welfare_sum"])
        for row in zip(self.tau_grid, self.cs_ratio, self.revenue_ratio, self.welfare):
            writer.writerow([format(float(x), ".17g") for x in row])
        text = buf.getvalue()
        if path_or_buffer is None:
            return text
        if hasattr(path_or_buffer, "write"):
            path_or_buffer.write(text)
        else:
            with open(path_or_buffer, "w", newline="") as fh:
                fh.write(text)
        return None


def optimal_tariff(alpha1, beta1, tau_grid=None, revenue_terms="cubic") -> WelfareCurve:
    """Grid maximiser of the welfare sum; ties go to the smallest tau.

    ``stationary_tau`` reports the interior maximiser of the quadratic
    truncation when it lies inside the grid range, else ``None``.
    """
    tau = DEFAULT_TAU_GRID if tau_grid is None else np.asarray(tau_grid, dtype=float)
    if tau.size == 0:
        raise ValueError("empty tariff grid")
    tau = np.sort(tau)
    if tau[0] < 0 or tau[-1] >= 1:
        raise ValueError("tariff grid must lie in [0, 1)")
    c = pass_through(alpha1, beta1)
    cs = _cs(c, alpha1, tau)
    rev = _revenue(c, alpha1, tau, revenue_terms)
    welfare = cs + rev
    k = int(np.argmax(welfare))  # first occurrence = smallest tau
    t_star, is_max = quadratic_stationary_point(alpha1, beta1)
    if t_star is None or not is_max or not (tau[0] <= t_star <= tau[-1]):
        t_star = None
    return WelfareCurve(tau_grid=tau, cs_ratio=cs, revenue_ratio=rev, welfare=welfare,
                        argmax_tau=float(tau[k]), argmax_value=float(welfare[k]),
                        stationary_tau=t_star, revenue_terms=revenue_terms)
