"""Log-linear demand and supply system, equilibrium solver and data simulator.

Demand and supply curves in logs::

    D(p) = alpha1 * p + U^d,   U^d = alpha2'Z^d + alpha3'W + k2_loading_d * K2 + sigma_d * eps^d
    S(p) = beta1  * p + U^s,   U^s = beta2'Z^s  + beta3'W  + k2_loading_s * K2 + sigma_s * eps^s

The observed pair (P, Y) is the Walrasian equilibrium D(P) = S(P) = Y.
Shifters may share a latent common factor K1 (see :class:`ShifterSpec`).
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .exceptions import DegenerateSystemError, DimensionError, SchemaError

__all__ = [
    "StructuralParams",
    "ShifterSpec",
    "MarketObservation",
    "Dataset",
    "evaluate_demand",
    "evaluate_supply",
    "solve_equilibrium",
    "simulate_dataset",
    "reduced_form_slopes",
    "read_csv",
    "write_csv",
]

DEGENERACY_TOL = 1e-10

# Rows per RNG substream. Changing this changes every simulated dataset.
SIMULATION_BLOCK = 4096


def _as_tuple(values) -> tuple[float, ...]:
    return tuple(float(v) for v in np.atleast_1d(np.asarray(values, dtype=float)))


@dataclass(frozen=True)
class StructuralParams:
    """Elasticities and shifter loadings of the structural system.

    Parameters
    ----------
    alpha1, beta1 : float
        Demand and supply price elasticities. ``beta1 - alpha1`` must be positive.
    alpha2, beta2 : sequence of float
        Loadings of the demand shifters Z^d and supply shifters Z^s.
    alpha3, beta3 : sequence of float
        Loadings of the common shifters W in demand and supply.
    sigma_d, sigma_s : float
        Standard deviations of the unobserved shocks.
    """

    alpha1: float
    beta1: float
    alpha2: tuple[float, ...] = ()
    beta2: tuple[float, ...] = ()
    alpha3: tuple[float, ...] = ()
    beta3: tuple[float, ...] = ()
    sigma_d: float = 1.0
    sigma_s: float = 1.0

    def __post_init__(self):
        for name in ("alpha2", "beta2", "alpha3", "beta3"):
            object.__setattr__(self, name, _as_tuple(getattr(self, name)))
        for name in ("alpha1", "beta1", "sigma_d", "sigma_s"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.beta1 - self.alpha1 < DEGENERACY_TOL:
            raise DegenerateSystemError(
                f"beta1 - alpha1 must be positive, got {self.beta1 - self.alpha1!r}"
            )
        if self.sigma_d < 0 or self.sigma_s < 0:
            raise ValueError("shock standard deviations must be nonnegative")

    def check_against(self, spec: "ShifterSpec") -> None:
        expected = {
            "alpha2": spec.dim_zd,
            "beta2": spec.dim_zs,
            "alpha3": spec.dim_w,
            "beta3": spec.dim_w,
        }
        for name, dim in expected.items():
            got = len(getattr(self, name))
            if got != dim:
                raise DimensionError(f"{name} has {got} entries, shifter spec needs {dim}")

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "StructuralParams":
        return cls(**d)


@dataclass(frozen=True)
class ShifterSpec:
    """Layout and joint law of the observed shifters and latent factors.

    K1 and K2 are independent standard normal scalars. Each shifter component is
    ``k1_loading * K1 + sd * e`` with ``e`` standard normal. When
    ``w_has_constant`` is set the first W component is the constant 1 and its
    loading/SD entries are ignored. ``k1_loadings_w`` realises the optional
    ``K1 -> W`` edge.
    """

    dim_zd: int = 1
    dim_zs: int = 1
    dim_w: int = 1
    w_has_constant: bool = True
    k1_loadings_zd: tuple[float, ...] | None = None
    k1_loadings_zs: tuple[float, ...] | None = None
    k1_loadings_w: tuple[float, ...] | None = None
    k2_loading_d: float = 0.0
    k2_loading_s: float = 0.0
    sd_zd: tuple[float, ...] | None = None
    sd_zs: tuple[float, ...] | None = None
    sd_w: tuple[float, ...] | None = None

    def __post_init__(self):
        for name in ("dim_zd", "dim_zs", "dim_w"):
            v = int(getattr(self, name))
            if v < 0:
                raise ValueError(f"{name} must be nonnegative")
            object.__setattr__(self, name, v)
        if self.w_has_constant and self.dim_w < 1:
            raise DimensionError("w_has_constant requires dim_w >= 1")
        fills = {
            "k1_loadings_zd": (self.dim_zd, 0.0),
            "k1_loadings_zs": (self.dim_zs, 0.0),
            "k1_loadings_w": (self.dim_w, 0.0),
            "sd_zd": (self.dim_zd, 1.0),
            "sd_zs": (self.dim_zs, 1.0),
            "sd_w": (self.dim_w, 1.0),
        }
        for name, (dim, default) in fills.items():
            value = getattr(self, name)
            value = (default,) * dim if value is None else _as_tuple(value)
            if dim == 0:
                value = ()
            if len(value) != dim:
                raise DimensionError(f"{name} has {len(value)} entries, expected {dim}")
            object.__setattr__(self, name, value)
        for name in ("sd_zd", "sd_zs", "sd_w"):
            if any(s < 0 for s in getattr(self, name)):
                raise ValueError(f"{name} entries must be nonnegative")
        object.__setattr__(self, "k2_loading_d", float(self.k2_loading_d))
        object.__setattr__(self, "k2_loading_s", float(self.k2_loading_s))
        object.__setattr__(self, "w_has_constant", bool(self.w_has_constant))

    @property
    def n_random_w(self) -> int:
        return self.dim_w - int(self.w_has_constant)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ShifterSpec":
        return cls(**d)


class MarketObservation(NamedTuple):
    p: float
    y: float
    zd: np.ndarray
    zs: np.ndarray
    w: np.ndarray


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n`` market equilibria stored column-wise.

    ``zd``, ``zs`` and ``w`` are ``(n, k)`` arrays (``k`` may be 0).
    Iterating yields :class:`MarketObservation` rows.
    """

    p: np.ndarray
    y: np.ndarray
    zd: np.ndarray
    zs: np.ndarray
    w: np.ndarray
    seed: int | None = None
    provenance: str = "synthetic"
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(-1)
        n = p.shape[0]
        if n < 1:
            raise DimensionError("a dataset needs at least one observation")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float).reshape(-1))
        for name in ("zd", "zs", "w"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.size == 0:
                arr = np.zeros((n, 0))
            elif arr.ndim == 1:
                arr = arr[:, None]
            if arr.shape[0] != n:
                raise DimensionError(f"{name} has {arr.shape[0]} rows, expected {n}")
            object.__setattr__(self, name, arr)
        if self.y.shape[0] != n:
            raise DimensionError(f"y has {self.y.shape[0]} rows, expected {n}")
        for arr in (self.p, self.y, self.zd, self.zs, self.w):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.zd.shape[1], self.zs.shape[1], self.w.shape[1]

    def __len__(self):
        return self.n

    def __getitem__(self, i) -> MarketObservation:
        return MarketObservation(self.p[i], self.y[i], self.zd[i], self.zs[i], self.w[i])

    def __iter__(self) -> Iterator[MarketObservation]:
        for i in range(self.n):
            yield self[i]

    def columns(self) -> tuple[list[str], np.ndarray]:
        """Header names and the ``(n, 2 + k)`` value matrix in CSV order."""
        dzd, dzs, dw = self.dims
        names = ["P", "Y"]
        names += [f"ZD{j + 1}" for j in range(dzd)]
        names += [f"ZS{j + 1}" for j in range(dzs)]
        names += [f"W{j + 1}" for j in range(dw)]
        values = np.column_stack([self.p, self.y, self.zd, self.zs, self.w])
        return names, values

    def equals(self, other: "Dataset") -> bool:
        return all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in ("p", "y", "zd", "zs", "w")
        )


def evaluate_demand(params: StructuralParams, p, u_d):
    """Log quantity demanded at log price ``p`` given the demand shock."""
    return params.alpha1 * p + u_d


def evaluate_supply(params: StructuralParams, p, u_s):
    """Log quantity supplied at log price ``p`` given the supply shock."""
    return params.beta1 * p + u_s


def solve_equilibrium(params: StructuralParams, u_d, u_s):
    """Market-clearing log price and quantity.

    Works elementwise on arrays. Raises :class:`DegenerateSystemError` when the
    two slopes are (numerically) equal.
    """
    slope_gap = params.beta1 - params.alpha1
    if abs(slope_gap) < DEGENERACY_TOL:
        raise DegenerateSystemError(f"|beta1 - alpha1| = {abs(slope_gap)!r} below tolerance")
    p = (np.asarray(u_d, dtype=float) - u_s) / slope_gap
    y = params.alpha1 * p + u_d
    if np.ndim(p) == 0:
        return float(p), float(y)
    return p, y


def reduced_form_slopes(params: StructuralParams) -> dict:
    """Population projection coefficients of P and Y on each shifter.

    Valid when the shifters are mutually uncorrelated (no K1 loadings).
    """
    gap = params.beta1 - params.alpha1
    b2 = np.asarray(params.beta2)
    a2 = np.asarray(params.alpha2)
    return {
        "p_on_zs": -b2 / gap,
        "y_on_zs": -params.alpha1 * b2 / gap,
        "p_on_zd": a2 / gap,
        "y_on_zd": params.beta1 * a2 / gap,
    }


def _block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block)])))


def simulate_dataset(params: StructuralParams, spec: ShifterSpec, n: int, seed: int) -> Dataset:
    """Draw ``n`` iid market equilibria.

    Rows are generated in fixed blocks of :data:`SIMULATION_BLOCK`, each from its
    own Philox substream keyed by ``(seed, block index)``, so the output does
    not depend on how blocks are scheduled.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    params.check_against(spec)
    dzd, dzs, dw = spec.dim_zd, spec.dim_zs, spec.dim_w
    nrw = spec.n_random_w
    ncols = 2 + dzd + dzs + nrw + 2

    draws = np.empty((n, ncols))
    for b, start in enumerate(range(0, n, SIMULATION_BLOCK)):
        stop = min(start + SIMULATION_BLOCK, n)
        draws[start:stop] = _block_generator(seed, b).standard_normal((stop - start, ncols))

    k1, k2 = draws[:, 0], draws[:, 1]
    c = 2
    e_zd = draws[:, c:c + dzd]
    c += dzd
    e_zs = draws[:, c:c + dzs]
    c += dzs
    e_w = draws[:, c:c + nrw]
    c += nrw
    eps_d, eps_s = draws[:, c], draws[:, c + 1]

    zd = k1[:, None] * np.asarray(spec.k1_loadings_zd) + e_zd * np.asarray(spec.sd_zd)
    zs = k1[:, None] * np.asarray(spec.k1_loadings_zs) + e_zs * np.asarray(spec.sd_zs)
    off = int(spec.w_has_constant)
    w_rand = k1[:, None] * np.asarray(spec.k1_loadings_w[off:]) + e_w * np.asarray(spec.sd_w[off:])
    w = np.column_stack([np.ones(n)] * off + [w_rand]) if dw else np.zeros((n, 0))

    u_d = zd @ np.asarray(params.alpha2) + w @ np.asarray(params.alpha3)
    u_d = u_d + spec.k2_loading_d * k2 + params.sigma_d * eps_d
    u_s = zs @ np.asarray(params.beta2) + w @ np.asarray(params.beta3)
    u_s = u_s + spec.k2_loading_s * k2 + params.sigma_s * eps_s
    p, y = solve_equilibrium(params, u_d, u_s)
    p = np.atleast_1d(p)
    y = np.atleast_1d(y)
    return Dataset(p=p, y=y, zd=zd, zs=zs, w=w, seed=int(seed), provenance="synthetic")


def _format_float(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(data: Dataset, path) -> None:
    """Write with header ``P,Y,ZD1..,ZS1..,W1..`` and 17 significant digits."""
    names, values = data.columns()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in values:
            writer.writerow([_format_float(v) for v in row])


def _column_groups(header: Sequence[str]) -> dict:
    groups = {"P": [], "Y": [], "ZD": [], "ZS": [], "W": []}
    for idx, raw in enumerate(header):
        name = raw.strip().upper()
        if name in ("P", "Y"):
            if groups[name]:
                raise SchemaError(f"duplicate column {name!r}", line=1)
            groups[name].append((0, idx))
            continue
        for prefix in ("ZD", "ZS", "W"):
            suffix = name[len(prefix):]
            if name.startswith(prefix) and suffix.isdigit() and int(suffix) >= 1:
                groups[prefix].append((int(suffix), idx))
                break
        else:
            raise SchemaError(f"unrecognised column {raw.strip()!r}", line=1)
    for key in ("P", "Y"):
        if not groups[key]:
            raise SchemaError(f"missing required column {key!r}", line=1)
    for prefix in ("ZD", "ZS", "W"):
        nums = sorted(k for k, _ in groups[prefix])
        if nums != list(range(1, len(nums) + 1)):
            missing = sorted(set(range(1, max(nums, default=0) + 1)) - set(nums))
            if missing:
                raise SchemaError(f"missing column {prefix}{missing[0]}", line=1)
            raise SchemaError(f"duplicate {prefix} column", line=1)
        groups[prefix].sort()
    return groups


def read_csv(path) -> Dataset:
    """Read a dataset written by :func:`write_csv` (or by hand).

    Schema problems raise :class:`SchemaError` with the offending line number.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError("empty file", line=1)
    header = rows[0]
    groups = _column_groups(header)
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise SchemaError(f"expected {len(header)} fields, found {len(row)}", line=lineno)
        try:
            values.append([float(c) for c in row])
        except ValueError as exc:
            raise SchemaError(f"non-numeric value ({exc})", line=lineno) from None
    if not values:
        raise SchemaError("no data rows", line=2)
    arr = np.asarray(values)
    if not np.all(np.isfinite(arr)):
        bad = int(np.argwhere(~np.isfinite(arr))[0, 0]) + 2
        raise SchemaError("non-finite value", line=bad)

    def cols(key):
        return arr[:, [idx for _, idx in groups[key]]]

    return Dataset(
        p=arr[:, groups["P"][0][1]],
        y=arr[:, groups["Y"][0][1]],
        zd=cols("ZD"),
        zs=cols("ZS"),
        w=cols("W"),
        seed=None,
        provenance="ingested",
    )


def load_model_json(path) -> tuple[StructuralParams, ShifterSpec]:
    """Read ``{"params": {...}, "shifters": {...}}``."""
    with open(path) as fh:
        doc = json.load(fh)
    return StructuralParams.from_dict(doc["params"]), ShifterSpec.from_dict(doc["shifters"])
