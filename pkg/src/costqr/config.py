"""Experiment config: a single JSON document.

Example::

    {
      "data": {"synthetic": {"kind": "mirror_symmetric", "m": 60, "grid": [8, 6],
                             "rank": 8, "noise": 0.01}},
      "cost": {"step": {"level": 1.0, "rows": [4, 8]}},
      "preprocess": {"strategy": "random_mix"},
      "k": [4, 6],
      "gammas": [0, 1, 10],
      "split": {"kind": "interpolative", "train_fraction": 0.8},
      "folds": 10,
      "seed": 0,
      "output": {"path": "curve.json", "format": "json"}
    }

``data`` is either ``{"path": ...}`` (CQR1 binary or CSV) or
``{"synthetic": {...}}`` (fields of :class:`SyntheticSpec`). ``cost`` is one
of ``{"path": ...}``, ``{"uniform": value}``, ``{"gaussian": {...}}`` or
``{"step": {...}}``; step masks are given as ``indices``, a boolean ``mask``
or a ``rows``/``cols`` rectangle (0-based, half-open) on ``grid``. Builders
may omit ``grid`` when the data comes from a gridded synthetic spec.
Relative paths are resolved against the config file's directory. The
top-level ``seed`` drives the split and pre-processing randomness; synthetic
data keeps its own ``seed`` (default 0).
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataio import load_matrix, load_vector
from .errors import ConfigError, CostQRError
from .evaluation import DEFAULT_ORACLE_CAP, SplitSpec
from .placement import STRATEGIES, PreprocessSpec, gaussian_cost, region_mask, step_cost
from .synthetic import SyntheticSpec, generate

_TOP_KEYS = {
    "data", "cost", "preprocess", "k", "gammas", "split", "folds", "seed",
    "output", "oracle", "baseline",
}


@dataclass
class ExperimentConfig:
    raw: dict
    base_dir: Path
    seed: int
    data: dict
    cost: dict
    preprocess: PreprocessSpec
    ks: list
    gammas: list
    split: SplitSpec
    folds: int
    output: dict = field(default_factory=dict)
    oracle_cap: int = DEFAULT_ORACLE_CAP
    trials: int = 20

    def echo(self):
        out = copy.deepcopy(self.raw)
        out["seed"] = self.seed
        return out

    @property
    def synthetic(self):
        spec = self.data.get("synthetic")
        return _synthetic_spec(spec) if spec is not None else None

    def load_data(self) -> np.ndarray:
        try:
            if "path" in self.data:
                return load_matrix(self.base_dir / self.data["path"])
            return generate(self.synthetic)
        except OSError as exc:
            raise ConfigError("data.path", str(exc)) from exc
        except CostQRError as exc:
            raise ConfigError("data", str(exc)) from exc

    def load_cost(self, n) -> np.ndarray:
        ((kind, body),) = self.cost.items()
        where = f"cost.{kind}"
        try:
            if kind == "path":
                eta = load_vector(self.base_dir / body)
            elif kind == "uniform":
                eta = np.full(n, float(body))
            elif kind == "gaussian":
                eta = gaussian_cost(
                    self._grid(body, where), body["center"], body["sigma"],
                    body.get("amplitude", 1.0), n=n,
                )
            else:
                eta = step_cost(self._mask(body, n, where), body.get("level", 1.0))
        except OSError as exc:
            raise ConfigError(where, str(exc)) from exc
        except (CostQRError, KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(where, f"{type(exc).__name__}: {exc}") from exc
        if eta.shape != (n,):
            raise ConfigError(where, f"cost has length {eta.size}, data has {n} columns")
        if np.any(eta < 0) or not np.all(np.isfinite(eta)):
            raise ConfigError(where, "costs must be finite and non-negative")
        return eta

    def _grid(self, body, where):
        if "grid" in body:
            return body["grid"]
        syn = self.synthetic
        if syn is not None and syn.grid is not None:
            return syn.grid
        raise ConfigError(f"{where}.grid", "required unless the data has a grid")

    def _mask(self, body, n, where):
        if "indices" in body:
            mask = np.zeros(n, dtype=bool)
            idx = np.asarray(body["indices"], dtype=int)
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise ConfigError(f"{where}.indices", f"index outside [0, {n})")
            mask[idx] = True
            return mask
        if "mask" in body:
            mask = np.asarray(body["mask"], dtype=bool)
            if mask.shape != (n,):
                raise ConfigError(f"{where}.mask", f"length {mask.size}, expected {n}")
            return mask
        return region_mask(self._grid(body, where), body.get("rows"), body.get("cols"), n=n)


def _synthetic_spec(d):
    d = dict(d)
    if "grid" in d and d["grid"] is not None:
        d["grid"] = tuple(d["grid"])
    try:
        return SyntheticSpec(**d).validate()
    except TypeError as exc:
        raise ConfigError("data.synthetic", str(exc)) from exc
    except CostQRError as exc:
        raise ConfigError("data.synthetic", str(exc)) from exc


def _int(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}")
    return value


def parse_config(raw: dict, base_dir=".", seed=None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = sorted(set(raw) - _TOP_KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    seed = _int(raw.get("seed", 0) if seed is None else seed, "seed")

    data = raw.get("data")
    if not isinstance(data, dict) or len(set(data) & {"path", "synthetic"}) != 1 or len(data) != 1:
        raise ConfigError("data", 'needs exactly one of "path" or "synthetic"')
    if "synthetic" in data:
        _synthetic_spec(data["synthetic"])

    cost = raw.get("cost", {"uniform": 0.0})
    kinds = ("path", "uniform", "gaussian", "step")
    if not isinstance(cost, dict) or len(cost) != 1 or next(iter(cost)) not in kinds:
        raise ConfigError("cost", f"needs exactly one of {kinds}")

    pre = raw.get("preprocess", {})
    if pre.get("strategy", "raw") not in STRATEGIES:
        raise ConfigError("preprocess.strategy", f"expected one of {STRATEGIES}")
    p = pre.get("p")
    if p is not None:
        _int(p, "preprocess.p", 1)
    preprocess_spec = PreprocessSpec(pre.get("strategy", "raw"), p, seed)

    ks = raw.get("k", 1)
    ks = [ks] if not isinstance(ks, list) else ks
    if not ks:
        raise ConfigError("k", "must not be empty")
    ks = [_int(v, f"k[{i}]", 1) for i, v in enumerate(ks)]

    gammas = raw.get("gammas", [0.0])
    if not isinstance(gammas, list) or not gammas:
        raise ConfigError("gammas", "must be a non-empty list")
    for i, g in enumerate(gammas):
        if isinstance(g, bool) or not isinstance(g, (int, float)) or g < 0:
            raise ConfigError(f"gammas[{i}]", f"expected a non-negative number, got {g!r}")
    gammas = [float(g) for g in gammas]
    if gammas != sorted(gammas):
        raise ConfigError("gammas", "must be ascending")

    sp = raw.get("split", {})
    try:
        split_spec = SplitSpec(sp.get("kind", "interpolative"), float(sp.get("train_fraction", 0.8)), seed)
    except (ValueError, TypeError) as exc:
        raise ConfigError("split", str(exc)) from exc

    return ExperimentConfig(
        raw=raw,
        base_dir=Path(base_dir),
        seed=seed,
        data=data,
        cost=cost,
        preprocess=preprocess_spec,
        ks=ks,
        gammas=gammas,
        split=split_spec,
        folds=_int(raw.get("folds", 1), "folds", 1),
        output=raw.get("output", {}),
        oracle_cap=_int(raw.get("oracle", {}).get("cap", DEFAULT_ORACLE_CAP), "oracle.cap", 1),
        trials=_int(raw.get("baseline", {}).get("trials", 20), "baseline.trials", 1),
    )


def load_config(path, seed=None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(str(path), str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from exc
    return parse_config(raw, path.parent, seed)
