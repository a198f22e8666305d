"""JSON experiment configuration.

Layout (every block and key optional; defaults shown by :func:`default_config`)::

    {
      "dgp": {"params": {...}, "shifters": {...}, "n": 2000},
      "estimator": {"mode": "full_information", "k_steps": 2,
                    "omega_kind": "iid_centered", "lags": null,
                    "partialing": "ols", "lasso_lambda": null,
                    "box": {"lower": [-10, -10], "upper": [10, 10]},
                    "grid": 61, "cue_grid": 61, "clr_inner_grid": 31,
                    "clr_draws": 1000, "level": 0.95},
      "replications": {"count": 100, "base_seed": 0, "cue": true,
                       "ar": true, "clr": false},
      "output": {"path": null}
    }

Command-line flags override file values, which override these defaults.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass

import numpy as np

from .exceptions import SchemaError
from .gmm import OMEGA_KINDS, ThetaBox
from .structural import ShifterSpec, StructuralParams

__all__ = ["ExperimentConfig", "default_config", "load_config", "derive_seed"]

_DEFAULTS = {
    "dgp": {
        "params": {
            "alpha1": -0.8, "beta1": 0.9,
            "alpha2": [1.0], "beta2": [1.0],
            "alpha3": [0.5, 0.3], "beta3": [-0.2, 0.4],
            "sigma_d": 1.0, "sigma_s": 1.0,
        },
        "shifters": {
            "dim_zd": 1, "dim_zs": 1, "dim_w": 2, "w_has_constant": True,
            "k1_loadings_zd": [0.5], "k1_loadings_zs": [0.5], "k1_loadings_w": [0.0, 0.5],
            "k2_loading_d": 0.5, "k2_loading_s": 0.5,
        },
        "n": 2000,
        "seed": 0,
    },
    "estimator": {
        "mode": "full_information",
        "k_steps": 2,
        "omega_kind": "iid_centered",
        "lags": None,
        "partialing": "ols",
        "lasso_lambda": None,
        "box": {"lower": [-10.0, -10.0], "upper": [10.0, 10.0]},
        "grid": 61,
        "cue_grid": 61,
        "clr_inner_grid": 31,
        "clr_draws": 1000,
        "level": 0.95,
    },
    "replications": {"count": 100, "base_seed": 0, "cue": True, "ar": True, "clr": False},
    "output": {"path": None},
}


def default_config() -> dict:
    return copy.deepcopy(_DEFAULTS)


def _merge(base, override, path=""):
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise SchemaError(f"unknown configuration key {where!r}")
        if isinstance(base[key], dict) and key not in ("params", "shifters"):
            if not isinstance(value, dict):
                raise SchemaError(f"{where!r} must be an object")
            _merge(base[key], value, where)
        elif key in ("params", "shifters"):
            if not isinstance(value, dict):
                raise SchemaError(f"{where!r} must be an object")
            base[key] = dict(value)
        else:
            base[key] = value
    return base


def derive_seed(base_seed: int, index: int) -> int:
    """Seed of replication ``index``; independent of execution order."""
    state = np.random.SeedSequence([int(base_seed), int(index)]).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


@dataclass(frozen=True)
class ExperimentConfig:
    params: StructuralParams
    shifters: ShifterSpec
    n: int
    seed: int
    mode: str
    k_steps: int
    omega_kind: str
    lags: int | None
    partialing: str
    lasso_lambda: float | None
    box: ThetaBox
    grid: int
    cue_grid: int
    clr_inner_grid: int
    clr_draws: int
    level: float
    count: int
    base_seed: int
    run_cue: bool
    run_ar: bool
    run_clr: bool
    output_path: str | None
    raw: dict

    @classmethod
    def from_dict(cls, doc: dict | None = None) -> "ExperimentConfig":
        merged = _merge(default_config(), doc or {})
        dgp, est, rep = merged["dgp"], merged["estimator"], merged["replications"]
        try:
            params = StructuralParams.from_dict(dgp["params"])
            shifters = ShifterSpec.from_dict(dgp["shifters"])
            params.check_against(shifters)
            box = ThetaBox(tuple(est["box"]["lower"]), tuple(est["box"]["upper"]))
        except (TypeError, ValueError, KeyError) as exc:
            raise SchemaError(f"invalid dgp/box block: {exc}") from None
        if est["mode"] not in ("full_information", "limited_information"):
            raise SchemaError("estimator.mode must be full_information or limited_information")
        if est["omega_kind"] not in OMEGA_KINDS:
            raise SchemaError(f"estimator.omega_kind must be one of {OMEGA_KINDS}")
        if est["partialing"] not in ("ols", "lasso"):
            raise SchemaError("estimator.partialing must be 'ols' or 'lasso'")
        ints = {
            "dgp.n": (dgp["n"], 2), "estimator.k_steps": (est["k_steps"], 1),
            "estimator.grid": (est["grid"], 2), "estimator.cue_grid": (est["cue_grid"], 2),
            "estimator.clr_inner_grid": (est["clr_inner_grid"], 2),
            "estimator.clr_draws": (est["clr_draws"], 100),
            "replications.count": (rep["count"], 1),
        }
        for name, (value, low) in ints.items():
            if not isinstance(value, int) or isinstance(value, bool) or value < low:
                raise SchemaError(f"{name} must be an integer >= {low}")
        if not 0.0 < float(est["level"]) < 1.0:
            raise SchemaError("estimator.level must lie in (0, 1)")
        return cls(
            params=params, shifters=shifters, n=int(dgp["n"]), seed=int(dgp["seed"]),
            mode=est["mode"], k_steps=int(est["k_steps"]), omega_kind=est["omega_kind"],
            lags=est["lags"], partialing=est["partialing"], lasso_lambda=est["lasso_lambda"],
            box=box, grid=int(est["grid"]), cue_grid=int(est["cue_grid"]),
            clr_inner_grid=int(est["clr_inner_grid"]), clr_draws=int(est["clr_draws"]),
            level=float(est["level"]), count=int(rep["count"]), base_seed=int(rep["base_seed"]),
            run_cue=bool(rep["cue"]), run_ar=bool(rep["ar"]), run_clr=bool(rep["clr"]),
            output_path=merged["output"]["path"], raw=merged,
        )

    def override(self, **flags) -> "ExperimentConfig":
        """Apply flag values (``None`` means not given) on top of this config."""
        doc = copy.deepcopy(self.raw)
        where = {
            "seed": ("dgp", "seed"), "n": ("dgp", "n"),
            "mode": ("estimator", "mode"), "k_steps": ("estimator", "k_steps"),
            "omega_kind": ("estimator", "omega_kind"), "lags": ("estimator", "lags"),
            "partialing": ("estimator", "partialing"),
            "lasso_lambda": ("estimator", "lasso_lambda"), "grid": ("estimator", "grid"),
            "clr_draws": ("estimator", "clr_draws"), "level": ("estimator", "level"),
            "count": ("replications", "count"), "base_seed": ("replications", "base_seed"),
            "out": ("output", "path"),
        }
        for key, value in flags.items():
            if value is None:
                continue
            if key == "box":
                doc["estimator"]["box"] = {"lower": [value[0], value[2]],
                                           "upper": [value[1], value[3]]}
                continue
            block, name = where[key]
            doc[block][name] = value
        return ExperimentConfig.from_dict(doc)

    @property
    def theta0(self) -> np.ndarray:
        return np.array([self.params.alpha1, self.params.beta1])


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError:
        raise
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise SchemaError("configuration must be a JSON object", line=1)
    return ExperimentConfig.from_dict(doc)
