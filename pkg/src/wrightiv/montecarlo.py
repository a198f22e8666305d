"""Monte Carlo experiments over the simulated demand/supply model."""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .chi2 import chi2_quantile
from .config import ExperimentConfig, derive_seed
from .exceptions import WrightError
from .gmm import CovarianceKernel, build_moment_system, cue, iterative_gmm
from .partialing import lasso_partial_out, partial_out
from .structural import simulate_dataset
from .weak_id import ar_statistic, clr_critical_value, lr_statistic

__all__ = ["MonteCarloReport", "run_replication", "run_montecarlo", "residualize", "fit_dataset"]

PARAM_NAMES = ("alpha1", "beta1")


def residualize(data, cfg: ExperimentConfig):
    if cfg.partialing == "lasso":
        return lasso_partial_out(data, cfg.lasso_lambda)
    return partial_out(data)


def fit_dataset(data, cfg: ExperimentConfig):
    """Partial out and run iterated GMM with the configured options."""
    return iterative_gmm(residualize(data, cfg), cfg.k_steps, cfg.mode, cfg.omega_kind, cfg.lags)


def run_replication(cfg: ExperimentConfig, index: int) -> dict:
    """One simulated dataset, its estimates and inference outcomes at theta0.

    Failures are recorded in the ``error`` field instead of raised.
    """
    seed = derive_seed(cfg.base_seed, index)
    theta0 = cfg.theta0
    rec = {"index": int(index), "seed": seed, "error": None}
    try:
        data = simulate_dataset(cfg.params, cfg.shifters, cfg.n, seed)
        resid = residualize(data, cfg)
        fit = iterative_gmm(resid, cfg.k_steps, cfg.mode, cfg.omega_kind, cfg.lags)
        rec["theta_hat"] = fit.theta_hat.tolist()
        rec["se"] = fit.se.tolist()
        rec["wald_cover"] = [bool(c) for c in fit.covers(theta0, cfg.level)]
        ms = build_moment_system(resid)
        kernel = CovarianceKernel(ms, cfg.omega_kind, cfg.lags)
        p = 1.0 - cfg.level
        if cfg.run_ar:
            s0 = ar_statistic(ms, kernel, theta0)
            rec["ar_stat"] = s0
            rec["ar_cover"] = bool(s0 <= chi2_quantile(cfg.level, ms.m))
        if cfg.run_cue:
            cfit = cue(ms, cfg.box, cfg.omega_kind, cfg.lags, grid=cfg.cue_grid,
                       start=fit.theta_hat)
            rec["cue_theta"] = cfit.theta_hat.tolist()
            rec["cue_on_boundary"] = bool(cfit.on_boundary)
        if cfg.run_clr:
            crit = clr_critical_value(ms, kernel, theta0, cfg.box, p, cfg.clr_draws, seed,
                                      cfg.clr_inner_grid)
            lr0 = lr_statistic(ms, kernel, theta0, cfg.box, grid=cfg.cue_grid)
            rec["lr_stat"] = lr0
            rec["clr_critical"] = crit
            rec["clr_cover"] = bool(lr0 <= crit)
    except (WrightError, np.linalg.LinAlgError) as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
    return rec


def _rate(records, key, idx=None):
    vals = [r[key] if idx is None else r[key][idx] for r in records if key in r]
    return float(np.mean(vals)) if vals else None


@dataclass
class MonteCarloReport:
    config: dict
    replications: list
    summary: dict = field(default_factory=dict)
    timing: dict | None = None

    def to_dict(self, include_timing=False) -> dict:
        out = {"config": self.config, "summary": self.summary, "replications": self.replications}
        if include_timing and self.timing is not None:
            out["timing"] = self.timing
        return out

    def to_json(self, include_timing=False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=False) + "\n"


def summarize(records, theta0, level) -> dict:
    ok = [r for r in records if r["error"] is None]
    out = {"replications": len(records), "failures": len(records) - len(ok),
           "level": level, "parameters": {}}
    if not ok:
        return out
    est = np.array([r["theta_hat"] for r in ok])
    se = np.array([r["se"] for r in ok])
    for j, name in enumerate(PARAM_NAMES):
        err = est[:, j] - theta0[j]
        z = err / se[:, j]
        z = z[np.isfinite(z)]
        entry = {
            "true": float(theta0[j]),
            "mean": float(est[:, j].mean()),
            "bias": float(err.mean()),
            "sd": float(est[:, j].std(ddof=1)) if len(ok) > 1 else 0.0,
            "rmse": float(np.sqrt(np.mean(err ** 2))),
            "wald_coverage": _rate(ok, "wald_cover", j),
            "ks_pvalue_standardized": (float(stats.kstest(z, "norm").pvalue)
                                       if z.size > 1 else None),
        }
        if any("cue_theta" in r for r in ok):
            cue_est = np.array([r["cue_theta"][j] for r in ok if "cue_theta" in r])
            entry["cue_mean"] = float(cue_est.mean())
        out["parameters"][name] = entry
    out["wald_joint_coverage"] = float(np.mean([all(r["wald_cover"]) for r in ok]))
    if any("ar_cover" in r for r in ok):
        out["ar_coverage"] = _rate(ok, "ar_cover")
        out["ar_rejection_rate"] = 1.0 - out["ar_coverage"]
    if any("clr_cover" in r for r in ok):
        out["clr_coverage"] = _rate(ok, "clr_cover")
        out["clr_rejection_rate"] = 1.0 - out["clr_coverage"]
    if any("cue_theta" in r for r in ok):
        close = [
            bool(np.all(np.abs(np.array(r["cue_theta"]) - np.array(r["theta_hat"]))
                        <= 3.0 * np.array(r["se"])))
            for r in ok if "cue_theta" in r
        ]
        out["cue_within_3se_rate"] = float(np.mean(close))
    return out


def run_montecarlo(cfg: ExperimentConfig, threads: int = 1) -> MonteCarloReport:
    """Run ``cfg.count`` replications; output does not depend on ``threads``."""
    start = time.perf_counter()
    indices = range(cfg.count)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            records = list(pool.map(lambda i: run_replication(cfg, i), indices))
    else:
        records = [run_replication(cfg, i) for i in indices]
    summary = summarize(records, cfg.theta0, cfg.level)
    elapsed = time.perf_counter() - start
    return MonteCarloReport(config=cfg.raw, replications=records, summary=summary,
                            timing={"seconds": elapsed, "threads": int(threads or 1)})
