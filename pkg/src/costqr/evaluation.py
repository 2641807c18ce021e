"""Train/test protocol, error metrics, cross-validation and brute-force baselines."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations, islice

import numpy as np

from .errors import (
    CombinatorialBlowup,
    CostQRError,
    DegenerateSplit,
    EmptyTestSet,
    RankRequestTooLarge,
    ShapeMismatch,
)
from .linalg import as_cost, as_matrix, least_squares, thin_svd
from .placement import PreprocessSpec, preprocess, sweep_gamma, total_cost

_EPS = np.finfo(float).eps
DEFAULT_ORACLE_CAP = 2_000_000


def _columns(J, n):
    J = np.asarray(J, dtype=int).ravel()
    if J.size == 0:
        raise ValueError("sensor set is empty")
    if J.min() < 0 or J.max() >= n:
        raise ShapeMismatch(f"sensor index outside [0, {n})")
    return J


def reconstruction_map(X_train, J) -> np.ndarray:
    """Least-squares map ``T`` (|J| x n) with ``X_train[:, J] @ T ~ X_train``."""
    X = as_matrix(X_train, "X_train")
    J = _columns(J, X.shape[1])
    return least_squares(X[:, J], X)


def train_error(X, J) -> float:
    X = as_matrix(X)
    T = reconstruction_map(X, J)
    J = np.asarray(J, dtype=int).ravel()
    return float(np.linalg.norm(X - X[:, J] @ T) / np.linalg.norm(X))


def test_error(X_test, X_train, J) -> float:
    """Relative error on ``X_test`` of the map fitted on ``X_train``.

    ``X_train`` may be any matrix whose columns align with ``X_test``
    (e.g. a pre-processed ``Psi``); the map is always fitted on it.
    """
    X_test = np.asarray(X_test, dtype=float)
    if X_test.ndim != 2 or X_test.shape[0] == 0:
        raise EmptyTestSet("test set has no rows")
    X_test = as_matrix(X_test, "X_test")
    if X_test.shape[1] != np.shape(X_train)[1]:
        raise ShapeMismatch(
            f"test set has {X_test.shape[1]} columns, training set {np.shape(X_train)[1]}"
        )
    denom = np.linalg.norm(X_test)
    if denom == 0:
        raise EmptyTestSet("test set is identically zero")
    T = reconstruction_map(X_train, J)
    J = np.asarray(J, dtype=int).ravel()
    return float(np.linalg.norm(X_test - X_test[:, J] @ T) / denom)


def stability_metric(T) -> float:
    T = np.asarray(T, dtype=float)
    return float(np.max(np.abs(T))) if T.size else 0.0


@dataclass(frozen=True)
class SplitSpec:
    kind: str = "interpolative"
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("interpolative", "extrapolative"):
            raise ValueError(f"unknown split kind {self.kind!r}")
        if not 0 < self.train_fraction < 1:
            raise DegenerateSplit(f"train_fraction {self.train_fraction} not in (0, 1)")

    def to_dict(self):
        return asdict(self)


def split(X, spec: SplitSpec):
    """Return ``(X_train, X_test)``.

    Extrapolative splits keep the leading ``ceil(fraction * m)`` rows for
    training; interpolative splits draw that many rows uniformly at random.
    Row order is preserved within each part.
    """
    X = as_matrix(X)
    m = X.shape[0]
    n_train = math.ceil(round(spec.train_fraction * m, 9))
    if n_train < 1 or n_train >= m:
        raise DegenerateSplit(f"{m} rows cannot be split {n_train}/{m - n_train}")
    if spec.kind == "extrapolative":
        return X[:n_train], X[n_train:]
    rng = np.random.default_rng(spec.seed)
    train = np.zeros(m, dtype=bool)
    train[rng.choice(m, n_train, replace=False)] = True
    return X[train], X[~train]


@dataclass(frozen=True)
class EvalRecord:
    gamma: float
    total_cost: float
    train_error: float
    test_error: float
    stability: float
    k: int
    fold_id: int
    sensors: tuple = ()


@dataclass
class CostErrorCurve:
    """Evaluation records for one sensor count, ordered by (gamma, fold)."""

    k: int
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def __post_init__(self):
        self.records = sorted(self.records, key=lambda r: (r.gamma, r.fold_id))

    @property
    def gammas(self):
        return sorted({r.gamma for r in self.records})

    def summary(self):
        """Per-gamma mean and sample standard deviation across folds."""
        out = []
        for g in self.gammas:
            rs = [r for r in self.records if r.gamma == g]
            row = {"gamma": g, "k": self.k, "folds": len(rs)}
            for name in ("total_cost", "train_error", "test_error", "stability"):
                vals = np.array([getattr(r, name) for r in rs])
                row[f"{name}_mean"] = float(vals.mean())
                row[f"{name}_std"] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            out.append(row)
        return out

    def within_budget(self, budget):
        return [r for r in self.records if r.total_cost <= budget]


@dataclass(frozen=True)
class PlacementConfig:
    k: int
    eta: np.ndarray
    preprocess: PreprocessSpec = PreprocessSpec()


def evaluate_sensors(X_train, X_test, sensor_set, fold_id=0) -> EvalRecord:
    J = list(sensor_set.sensors)
    T = reconstruction_map(X_train, J)
    Jn = np.asarray(J)
    return EvalRecord(
        gamma=sensor_set.gamma,
        total_cost=sensor_set.total_cost,
        train_error=float(
            np.linalg.norm(X_train - X_train[:, Jn] @ T) / np.linalg.norm(X_train)
        ),
        test_error=float(
            np.linalg.norm(X_test - X_test[:, Jn] @ T) / np.linalg.norm(X_test)
        ),
        stability=stability_metric(T),
        k=len(J),
        fold_id=fold_id,
        sensors=tuple(J),
    )


def _run_fold(X, split_spec, config, gammas, fold):
    X_train, X_test = split(X, replace(split_spec, seed=split_spec.seed + fold))
    if np.linalg.norm(X_test) == 0:
        raise EmptyTestSet("test set is identically zero")
    spec = replace(config.preprocess, seed=config.preprocess.seed + fold)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sets = sweep_gamma(X_train, spec, config.k, config.eta, gammas)
    records, failures = [], []
    for s in sets:
        if s.degenerate:
            failures.append(
                {"fold": fold, "gamma": s.gamma, "reason": f"only {s.k} of {config.k} sensors placed"}
            )
            continue
        records.append(evaluate_sensors(X_train, X_test, s, fold))
    return records, failures


def cross_validate(X, split_spec: SplitSpec, folds, config: PlacementConfig, gammas, *, workers=1):
    """Repeated random sub-sampling: each fold re-splits, re-places and evaluates.

    Fold ``f`` uses split seed ``split_spec.seed + f`` and pre-processing seed
    ``config.preprocess.seed + f``. Failed folds are listed in
    ``curve.failures`` and excluded from the records.
    """
    if folds < 1:
        raise ValueError("folds must be >= 1")
    X = as_matrix(X)
    config = replace(config, eta=as_cost(config.eta, X.shape[1]))

    def one(fold):
        try:
            return _run_fold(X, split_spec, config, gammas, fold)
        except (ValueError, np.linalg.LinAlgError) as exc:
            return [], [{"fold": fold, "gamma": None, "reason": f"{type(exc).__name__}: {exc}"}]

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, range(folds)))
    else:
        results = [one(f) for f in range(folds)]

    records, failures = [], []
    for recs, fails in results:
        records.extend(recs)
        failures.extend(fails)
    for fail in failures:
        warnings.warn(f"excluded fold {fail['fold']} (gamma={fail['gamma']}): {fail['reason']}")
    if not records:
        raise CostQRError(f"every fold failed: {failures}")
    return CostErrorCurve(k=config.k, records=records, failures=failures)


def subset_errors(X, subsets) -> np.ndarray:
    """Relative errors ``e(J)`` for a stack of equal-size subsets (rows of ``subsets``)."""
    X = as_matrix(X)
    subsets = np.atleast_2d(np.asarray(subsets, dtype=int))
    m, n = X.shape
    k = subsets.shape[1]
    XJ = np.moveaxis(X[:, subsets], 1, 0)  # (S, m, k)
    P = np.linalg.pinv(XJ, rcond=max(m, k) * _EPS)
    resid = X - XJ @ (P @ X)
    return np.linalg.norm(resid, axis=(1, 2)) / np.linalg.norm(X)


def subset_objective(X, J, eta, gamma) -> float:
    """``e(J) + gamma * sum(eta[J])`` evaluated exactly as the oracle does."""
    J = np.sort(np.asarray(J, dtype=int))[None, :]
    eta = as_cost(eta, np.shape(X)[1])
    return float(subset_errors(X, J)[0] + gamma * eta[J].sum(axis=1)[0])


def brute_force_oracle(X, eta, k, gamma=0.0, *, cap=DEFAULT_ORACLE_CAP, chunk=None):
    """Exhaustive minimizer of ``e(J) + gamma * sum(eta[J])`` over size-``k`` subsets.

    Returns ``(J_opt, objective)``; among exact ties the lexicographically
    first subset wins.
    """
    X = as_matrix(X)
    m, n = X.shape
    eta = as_cost(eta, n)
    if not 1 <= k <= n:
        raise RankRequestTooLarge(f"k={k} outside [1, {n}]")
    total = math.comb(n, k)
    if total > cap:
        raise CombinatorialBlowup(f"C({n}, {k}) = {total} subsets exceeds cap {cap}")
    if chunk is None:
        chunk = max(1, 2_000_000 // (m * n + m * k))
    best_obj, best_J = math.inf, None
    it = combinations(range(n), k)
    while True:
        block = np.array(list(islice(it, chunk)), dtype=int)
        if block.size == 0:
            break
        obj = subset_errors(X, block) + gamma * eta[block].sum(axis=1)
        i = int(np.argmin(obj))
        if obj[i] < best_obj:
            best_obj, best_J = float(obj[i]), tuple(int(j) for j in block[i])
    return best_J, best_obj


@dataclass(frozen=True)
class BoundReport:
    """Error-optimal subset checked against the interpolative decomposition bounds."""

    k: int
    l: int
    sensors: tuple
    error: float
    error_bound: float
    holds: bool
    map_norm: float
    map_norm_bound: float


def interpolative_bound_check(X, k, *, cap=DEFAULT_ORACLE_CAP, atol=1e-12) -> BoundReport:
    """Check ``||X - X_J T||_F <= sqrt(1 + k(l-k)) * sum_{j>k} s_j`` for the best J.

    ``holds`` allows ``atol * ||X||_F`` of round-off. The map-norm bound
    ``sqrt(k(n-k) + k)`` is reported but not asserted: it is only guaranteed
    for some (possibly different) subset.
    """
    X = as_matrix(X)
    m, n = X.shape
    l = min(m, n)
    if not 1 <= k <= l:
        raise RankRequestTooLarge(f"k={k} outside [1, {l}]")
    J, _ = brute_force_oracle(X, None, k, 0.0, cap=cap)
    T = reconstruction_map(X, J)
    err = float(np.linalg.norm(X - X[:, list(J)] @ T))
    s = np.linalg.svd(X, compute_uv=False)
    bound = math.sqrt(1 + k * (l - k)) * float(np.sum(s[k:l]))
    return BoundReport(
        k=k,
        l=l,
        sensors=J,
        error=err,
        error_bound=bound,
        holds=err <= bound + atol * float(np.linalg.norm(X)),
        map_norm=float(np.linalg.norm(T)),
        map_norm_bound=math.sqrt(k * (n - k) + k),
    )


def svd_projection_reference(X_train, X_test, p) -> float:
    """Error of projecting ``X_test`` onto the leading ``p`` right singular vectors of ``X_train``."""
    X_test = as_matrix(X_test, "X_test")
    _, _, V = thin_svd(X_train, p)
    return float(np.linalg.norm(X_test - (X_test @ V) @ V.T) / np.linalg.norm(X_test))


def random_sensor_baseline(X_train, X_test, k, eta, trials, seed, *, basis=None):
    """Cost and test error of ``trials`` uniformly random size-``k`` sensor sets.

    The map is fitted on ``basis`` when given (e.g. randomized modes),
    otherwise on ``X_train``.
    """
    X_train = as_matrix(X_train, "X_train")
    n = X_train.shape[1]
    eta = as_cost(eta, n)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 1 <= k <= n:
        raise RankRequestTooLarge(f"k={k} outside [1, {n}]")
    fit = X_train if basis is None else basis
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(trials):
        J = np.sort(rng.choice(n, k, replace=False))
        out.append((total_cost(J, eta), test_error(X_test, fit, J)))
    return out


METHODS = ("raw_qr", "rm_qr_2p", "svd_qr_1p", "raw_rs", "rm_rs_2p")


@dataclass(frozen=True)
class ComparisonPoint:
    method: str
    fold: int
    gamma: float | None
    total_cost: float
    test_error: float
    dominated: bool | None = None


def compare_preprocessing(
    X, split_spec: SplitSpec, k, eta, gammas, *, folds=1, trials=20, seed=0
):
    """Cost/error points for QR placement under each pre-processing and random sensors.

    QR points come from a gamma sweep on raw data, ``2k`` random row mixtures
    and ``k`` SVD modes, always evaluated with the map fitted on raw training
    data. Random-sensor points fit the map on raw data (``raw_rs``) or on the
    ``2k`` random mixtures (``rm_rs_2p``). Each random-sensor point is flagged
    ``dominated`` when some QR point of the same fold is no worse in both cost
    and error and strictly better in one.
    """
    X = as_matrix(X)
    eta = as_cost(eta, X.shape[1])
    points = []
    for fold in range(folds):
        X_train, X_test = split(X, replace(split_spec, seed=split_spec.seed + fold))
        qr = []
        for label, strategy in (
            ("raw_qr", "raw"),
            ("rm_qr_2p", "random_mix"),
            ("svd_qr_1p", "svd_modes"),
        ):
            spec = PreprocessSpec(strategy, k, seed + fold)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                sets = sweep_gamma(X_train, spec, k, eta, gammas)
            for s in sets:
                if s.degenerate:
                    continue
                qr.append(
                    ComparisonPoint(
                        label, fold, s.gamma, s.total_cost,
                        test_error(X_test, X_train, s.sensors),
                    )
                )
        Psi = preprocess(X_train, PreprocessSpec("random_mix", k, seed + fold))
        rs = [
            ComparisonPoint("raw_rs", fold, None, c, e)
            for c, e in random_sensor_baseline(X_train, X_test, k, eta, trials, seed + fold)
        ] + [
            ComparisonPoint("rm_rs_2p", fold, None, c, e)
            for c, e in random_sensor_baseline(
                X_train, X_test, k, eta, trials, seed + fold, basis=Psi
            )
        ]
        rs = [replace(p, dominated=_dominated(p, qr)) for p in rs]
        points.extend(qr + rs)
    return points


def _dominated(p, others):
    return any(
        o.total_cost <= p.total_cost
        and o.test_error <= p.test_error
        and (o.total_cost < p.total_cost or o.test_error < p.test_error)
        for o in others
    )
