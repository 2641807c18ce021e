"""Seeded synthetic data sets with controlled spectral structure."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import BadSpec

KINDS = ("low_rank_noise", "traveling_wave", "mirror_symmetric")


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for :func:`generate`.

    low_rank_noise
        ``A @ B + noise * E`` with A m x rank, B rank x n and E standard
        normal. Column ``j`` of A is scaled by ``(j + 1) ** -decay``.
    traveling_wave
        ``X[i, j] = sin(2 pi (frequency * i / m + j / n))`` plus noise; rank 2.
    mirror_symmetric
        Periodic wave field on an ``h x w`` grid (``grid``), mirrored about
        the horizontal midline so grid rows ``y`` and ``h - 1 - y`` are
        identical. ``ceil(rank / 2)`` harmonics give rank ``2 * ceil(rank / 2)``
        without noise; the noise is mirrored too.
    """

    kind: str
    m: int = 100
    n: int | None = None
    grid: tuple | None = None
    rank: int = 3
    noise: float = 0.0
    frequency: float = 1.0
    decay: float = 0.0
    seed: int = 0

    @property
    def columns(self):
        if self.grid is not None:
            return int(self.grid[0]) * int(self.grid[1])
        return self.n

    def validate(self):
        if self.kind not in KINDS:
            raise BadSpec(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.m < 1:
            raise BadSpec("m must be positive")
        if self.grid is not None:
            if len(self.grid) != 2 or min(self.grid) < 1:
                raise BadSpec(f"grid must be two positive ints, got {self.grid}")
            if self.n is not None and self.n != self.columns:
                raise BadSpec(f"n={self.n} disagrees with grid {self.grid}")
        if self.columns is None or self.columns < 1:
            raise BadSpec("need a positive n or a grid")
        if self.kind == "mirror_symmetric" and (self.grid is None or self.grid[0] < 2):
            raise BadSpec("mirror_symmetric needs a grid with at least 2 rows")
        if self.rank < 1:
            raise BadSpec("rank must be positive")
        if self.noise < 0 or not math.isfinite(self.noise):
            raise BadSpec("noise must be finite and non-negative")
        if not math.isfinite(self.frequency) or not math.isfinite(self.decay):
            raise BadSpec("frequency and decay must be finite")
        return self

    def to_dict(self):
        d = asdict(self)
        d["grid"] = list(self.grid) if self.grid is not None else None
        return d


def generate(spec: SyntheticSpec) -> np.ndarray:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    m, n = spec.m, spec.columns
    if spec.kind == "low_rank_noise":
        scale = np.arange(1, spec.rank + 1, dtype=float) ** -spec.decay
        A = rng.standard_normal((m, spec.rank)) * scale
        B = rng.standard_normal((spec.rank, n))
        X = A @ B
    elif spec.kind == "traveling_wave":
        t = np.arange(m)[:, None] / m
        x = np.arange(n)[None, :] / n
        X = np.sin(2 * np.pi * (spec.frequency * t + x))
    else:
        return _mirror_field(spec, rng)
    if spec.noise > 0:
        X = X + spec.noise * rng.standard_normal(X.shape)
    return X


def _mirror_field(spec, rng):
    h, w = (int(d) for d in spec.grid)
    top = (h + 1) // 2
    t = np.arange(spec.m)[:, None, None] / spec.m
    y = np.arange(top)[None, :, None]
    x = np.arange(w)[None, None, :] / w
    field = np.zeros((spec.m, top, w))
    for q in range(1, math.ceil(spec.rank / 2) + 1):
        envelope = np.exp(-((top - 1 - y) / max(top, 1)) ** 2 * q)
        phase = rng.uniform(0, 2 * np.pi, size=(1, top, 1))
        field += envelope / q * np.sin(2 * np.pi * q * (spec.frequency * t - x) + phase)
    if spec.noise > 0:
        field += spec.noise * rng.standard_normal(field.shape)
    full = np.empty((spec.m, h, w))
    full[:, :top] = field
    full[:, h - top :] = field[:, ::-1]
    return full.reshape(spec.m, h * w)


def mirror_index(grid) -> np.ndarray:
    """Row-major index of each grid cell's mirror image across the midline."""
    h, w = (int(d) for d in grid)
    idx = np.arange(h * w).reshape(h, w)
    return idx[::-1].ravel()
