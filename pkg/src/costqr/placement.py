"""Sensor selection: pre-processing, cost builders, greedy placement, gamma sweeps."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import GridMismatch, IndexOutOfRange, RankRequestTooLarge
from .linalg import as_cost, as_matrix, cost_pivoted_qr, thin_svd

STRATEGIES = ("raw", "svd_modes", "random_mix")


@dataclass(frozen=True)
class PreprocessSpec:
    """How the pivoted matrix is derived from the training data.

    ``p`` is the sensor count that sizes the mode count (``p`` SVD modes or
    ``2p`` random row mixtures). ``None`` means "use the k being placed".
    """

    strategy: str = "raw"
    p: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(
                f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}"
            )
        if self.p is not None and self.p < 1:
            raise ValueError(f"p must be positive, got {self.p}")

    def resolved(self, k) -> PreprocessSpec:
        return self if self.p is not None else replace(self, p=int(k))

    def to_dict(self):
        return {"strategy": self.strategy, "p": self.p, "seed": self.seed}


@dataclass(frozen=True)
class SensorSet:
    """Ordered sensor indices (0-based, pivot order) and their provenance."""

    sensors: tuple
    gamma: float
    total_cost: float
    preprocess: PreprocessSpec
    seed: int
    degenerate: bool = False

    @property
    def k(self):
        return len(self.sensors)

    def to_dict(self):
        return {
            "sensors": [int(j) for j in self.sensors],
            "gamma": self.gamma,
            "total_cost": self.total_cost,
            "preprocess": self.preprocess.to_dict(),
            "seed": self.seed,
            "degenerate": self.degenerate,
        }


def preprocess(X_train, spec: PreprocessSpec) -> np.ndarray:
    X = as_matrix(X_train, "X_train")
    if spec.strategy == "raw":
        return X
    if spec.p is None:
        raise ValueError(f"{spec.strategy} needs a mode count p")
    if spec.strategy == "svd_modes":
        if spec.p > min(X.shape):
            raise RankRequestTooLarge(
                f"{spec.p} SVD modes requested from a {X.shape[0]}x{X.shape[1]} matrix"
            )
        _, _, V = thin_svd(X, spec.p)
        return V.T
    G = np.random.default_rng(spec.seed).standard_normal((2 * spec.p, X.shape[0]))
    return G @ X


def total_cost(J, eta) -> float:
    eta = np.asarray(eta, dtype=float).ravel()
    J = np.asarray(J, dtype=int).ravel()
    if J.size == 0:
        return 0.0
    if J.min() < 0 or J.max() >= eta.size:
        raise IndexOutOfRange(f"sensor index outside [0, {eta.size})")
    return math.fsum(eta[J])


def place_sensors(
    Psi, k, eta=None, gamma=0.0, *, spec=None, recompute_norms=False
) -> SensorSet:
    """Pick ``k`` sensors as the first pivots of the cost-weighted QR of ``Psi``.

    A rank-exhausted ``Psi`` yields a shorter set flagged ``degenerate``.
    """
    Psi = as_matrix(Psi, "Psi")
    eta = as_cost(eta, Psi.shape[1])
    if k > min(Psi.shape):
        raise RankRequestTooLarge(
            f"cannot place {k} sensors with a {Psi.shape[0]}x{Psi.shape[1]} matrix"
        )
    spec = spec if spec is not None else PreprocessSpec()
    f = cost_pivoted_qr(Psi, k, eta, gamma, recompute_norms=recompute_norms)
    if f.degenerate:
        warnings.warn(
            f"rank exhausted after {f.k} of {k} sensors (gamma={gamma})",
            RuntimeWarning,
            stacklevel=2,
        )
    J = tuple(int(j) for j in f.pivots)
    return SensorSet(
        sensors=J,
        gamma=float(gamma),
        total_cost=total_cost(J, eta),
        preprocess=spec,
        seed=spec.seed,
        degenerate=f.degenerate,
    )


def sweep_gamma(X_train, spec: PreprocessSpec, k, eta, gammas, *, workers=1):
    """One :class:`SensorSet` per gamma, all from the same pre-processed matrix."""
    gammas = [float(g) for g in gammas]
    if not gammas:
        raise ValueError("gammas must be non-empty")
    if any(g < 0 for g in gammas) or any(a > b for a, b in zip(gammas, gammas[1:])):
        raise ValueError("gammas must be non-negative and ascending")
    spec = spec.resolved(k)
    Psi = preprocess(X_train, spec)
    eta = as_cost(eta, Psi.shape[1])

    def one(g):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return place_sensors(Psi, k, eta, g, spec=spec)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            out = list(pool.map(one, gammas))
    else:
        out = [one(g) for g in gammas]
    for s in out:
        if s.degenerate:
            warnings.warn(
                f"gamma={s.gamma}: only {s.k} of {k} sensors placed",
                RuntimeWarning,
                stacklevel=2,
            )
    return out


def _check_grid(grid, n):
    h, w = (int(d) for d in grid)
    if h < 1 or w < 1:
        raise GridMismatch(f"grid {grid} must have positive dimensions")
    if n is not None and h * w != n:
        raise GridMismatch(f"grid {h}x{w} has {h * w} cells but data has {n} columns")
    return h, w


def gaussian_cost(grid, center, sigma, amplitude=1.0, *, n=None) -> np.ndarray:
    """Gaussian bump on an ``h x w`` grid, flattened row-major.

    ``center`` is a 0-based ``(row, col)`` and may be fractional.
    """
    h, w = _check_grid(grid, n)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    r, c = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    d2 = (r - center[0]) ** 2 + (c - center[1]) ** 2
    return (amplitude * np.exp(-d2 / (2.0 * sigma**2))).ravel()


def step_cost(mask, level=1.0) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool).ravel()
    if level < 0:
        raise ValueError("level must be non-negative")
    return np.where(mask, float(level), 0.0)


def region_mask(grid, rows=None, cols=None, *, n=None) -> np.ndarray:
    """Boolean row-major mask of the rectangle ``rows x cols`` (half-open ranges)."""
    h, w = _check_grid(grid, n)
    r0, r1 = rows if rows is not None else (0, h)
    c0, c1 = cols if cols is not None else (0, w)
    mask = np.zeros((h, w), dtype=bool)
    mask[r0:r1, c0:c1] = True
    return mask.ravel()
