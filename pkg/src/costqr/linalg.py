"""Dense kernels: Householder reflectors, cost-weighted pivoted QR, least squares.

All index arrays are 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneratePivot,
    InvalidCost,
    RankRequestTooLarge,
    ShapeMismatch,
    StepOutOfRange,
    ZeroVector,
)

_EPS = np.finfo(float).eps
# LAPACK xLAQP2 threshold for trusting a downdated column norm.
_DOWNDATE_TOL = np.sqrt(_EPS)


def as_matrix(X, name="X") -> np.ndarray:
    """Return ``X`` as a finite 2-D float array (no copy when possible)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ShapeMismatch(f"{name} must be non-empty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} has non-finite entries")
    return X


def as_cost(eta, n) -> np.ndarray:
    if eta is None:
        return np.zeros(n)
    eta = np.asarray(eta, dtype=float).ravel()
    if eta.shape != (n,):
        raise InvalidCost(f"cost vector has length {eta.size}, expected {n}")
    if not np.all(np.isfinite(eta)) or np.any(eta < 0):
        raise InvalidCost("cost entries must be finite and non-negative")
    return eta


@dataclass(frozen=True)
class HouseholderReflector:
    """The map ``I - w w^T``; ``sigma`` is the norm of the generating vector."""

    w: np.ndarray
    sigma: float

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        return x - np.multiply.outer(self.w, self.w @ x)

    def matrix(self):
        return np.eye(self.w.size) - np.outer(self.w, self.w)


def householder_vector(v) -> HouseholderReflector:
    """Build the reflector sending ``v`` to ``-sign(v[0]) * ||v|| * e1``.

    ``w = (v + sign(v1) sigma e1) / sqrt(sigma (sigma + |v1|))`` so that
    ``w w^T`` equals ``2 u u^T`` for the unit vector ``u`` along ``w``.
    ``sign(0)`` is taken as +1.
    """
    v = np.asarray(v, dtype=float).ravel()
    if v.size < 1:
        raise ZeroVector("empty vector")
    sigma = float(np.linalg.norm(v))
    if sigma == 0.0:
        raise ZeroVector("cannot reflect the zero vector")
    s = 1.0 if v[0] >= 0 else -1.0
    w = v.copy()
    w[0] += s * sigma
    w /= np.sqrt(sigma * (sigma + abs(v[0])))
    return HouseholderReflector(w, sigma)


@dataclass
class PivotedFactors:
    """Packed result of :func:`cost_pivoted_qr`.

    ``R`` holds the triangular factor in its upper part, the reflector tails
    below the diagonal of the first ``k`` columns, and the untouched trailing
    block ``C`` in ``R[k:, k:]``. ``tau[i]`` is the first component of the
    i-th reflector and ``J`` the column permutation (``J[:k]`` are the pivots).
    """

    R: np.ndarray
    tau: np.ndarray
    J: np.ndarray
    k: int
    gamma: float
    degenerate: bool = False

    @property
    def shape(self):
        return self.R.shape

    @property
    def pivots(self) -> np.ndarray:
        return self.J[: self.k]

    def reflector(self, i) -> np.ndarray:
        if not 0 <= i < self.k:
            raise StepOutOfRange(f"reflector {i} not computed (k={self.k})")
        return np.concatenate(([self.tau[i]], self.R[i + 1 :, i]))

    def upper(self) -> np.ndarray:
        """``[[A, B], [0, C]]`` with the reflector storage cleared."""
        U = self.R.copy()
        for i in range(self.k):
            U[i + 1 :, i] = 0.0
        return U

    def q(self) -> np.ndarray:
        """Accumulate the full m x m orthogonal factor ``H_1 H_2 ... H_k``."""
        m = self.R.shape[0]
        Q = np.eye(m)
        for i in range(self.k - 1, -1, -1):
            w = self.reflector(i)
            Q[i:, :] -= np.outer(w, w @ Q[i:, :])
        return Q

    def blocks(self):
        """Return ``(A, B, C)`` of the partial factorization."""
        U = self.upper()
        k = self.k
        return U[:k, :k], U[:k, k:], U[k:, k:]


def cost_pivoted_qr(
    Psi,
    k,
    eta=None,
    gamma=0.0,
    *,
    recompute_norms=False,
    on_degenerate="stop",
    degenerate_tol=None,
) -> PivotedFactors:
    """Column-pivoted Householder QR with a cost-weighted pivot score.

    At step ``i`` every remaining column ``p`` is scored by its residual norm
    minus ``gamma * eta[J[p]]``; the best column is swapped into position
    ``i`` and eliminated. Ties go to the lowest original column index.

    Residual norms are downdated between steps and recomputed when
    cancellation makes the downdate untrustworthy; ``recompute_norms=True``
    recomputes every norm at every step instead.

    If the chosen column's residual norm is at most ``degenerate_tol``
    (default ``max(m, n) * eps * max column norm``) the factorization stops
    early with ``degenerate=True``, or raises :class:`DegeneratePivot` when
    ``on_degenerate="raise"``.
    """
    R = np.array(as_matrix(Psi, "Psi"), dtype=float, copy=True)
    m, n = R.shape
    if not 1 <= k <= min(m, n):
        raise RankRequestTooLarge(f"k={k} outside [1, {min(m, n)}]")
    eta = as_cost(eta, n)
    gamma = float(gamma)
    if not np.isfinite(gamma) or gamma < 0:
        raise ValueError(f"gamma must be finite and non-negative, got {gamma}")
    if on_degenerate not in ("stop", "raise"):
        raise ValueError(f"unknown on_degenerate policy {on_degenerate!r}")

    tau = np.zeros(min(m, n))
    J = np.arange(n)
    norms = np.linalg.norm(R, axis=0)
    ref = norms.copy()
    if degenerate_tol is None:
        degenerate_tol = max(m, n) * _EPS * norms.max()
    weighted = gamma * eta

    done = 0
    degenerate = False
    for i in range(k):
        if recompute_norms:
            norms[i:] = np.linalg.norm(R[i:, i:], axis=0)
        score = norms[i:] - weighted[J[i:]]
        ties = np.flatnonzero(score == score.max())
        l = i + ties[np.argmin(J[i + ties])]

        if l != i:
            R[:, [i, l]] = R[:, [l, i]]
            J[[i, l]] = J[[l, i]]
            norms[[i, l]] = norms[[l, i]]
            ref[[i, l]] = ref[[l, i]]

        v = R[i:, i].copy()
        sigma = float(np.linalg.norm(v))
        if sigma <= degenerate_tol:
            if on_degenerate == "raise":
                raise DegeneratePivot(
                    f"step {i}: best column {J[i]} has residual norm {sigma:.3e}"
                )
            degenerate = True
            break

        v1 = v[0]
        s = 1.0 if v1 >= 0 else -1.0
        w = v
        w[0] += s * sigma
        w /= np.sqrt(sigma * (sigma + abs(v1)))
        if i + 1 < n:
            R[i:, i + 1 :] -= np.outer(w, w @ R[i:, i + 1 :])
        R[i, i] = -s * sigma
        tau[i] = w[0]
        R[i + 1 :, i] = w[1:]
        done = i + 1

        if not recompute_norms and i + 1 < n:
            _downdate_norms(R, norms, ref, i)

    return PivotedFactors(R=R, tau=tau, J=J, k=done, gamma=gamma, degenerate=degenerate)


def _downdate_norms(R, norms, ref, i):
    tail = slice(i + 1, None)
    nrm = norms[tail]
    live = nrm > 0
    ratio = np.zeros_like(nrm)
    ratio[live] = np.abs(R[i, tail][live]) / nrm[live]
    t = np.maximum(1.0 - ratio**2, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        drift = t * (nrm / ref[tail]) ** 2
    stale = live & ~(drift > _DOWNDATE_TOL)
    nrm[live] *= np.sqrt(t[live])
    if np.any(stale):
        cols = np.flatnonzero(stale) + i + 1
        fresh = np.linalg.norm(R[i + 1 :, cols], axis=0)
        nrm[cols - i - 1] = fresh
        ref[cols] = fresh
    norms[tail] = nrm


def residual_error_at(f: PivotedFactors, i, normX) -> float:
    """Relative residual ``||C^i||_F / normX`` after ``i`` elimination steps.

    Later reflectors act on rows ``>= i`` and later swaps permute columns
    ``>= i``, so ``||C^i||_F`` equals the norm of ``upper()[i:, i:]``.
    """
    if not 0 <= i <= f.k:
        raise StepOutOfRange(f"step {i} outside [0, {f.k}]")
    if not normX > 0:
        raise ValueError("normX must be positive")
    U = f.upper()
    return float(np.linalg.norm(U[i:, i:]) / normX)


def step_errors(f: PivotedFactors, normX) -> np.ndarray:
    """Residual errors after 0, 1, ..., k steps."""
    U = f.upper()
    sq = U**2
    return np.array(
        [np.sqrt(sq[i:, i:].sum()) / normX for i in range(f.k + 1)], dtype=float
    )


def thin_svd(X, p):
    """Leading ``p`` singular triplets: ``X ~ U diag(s) V^T`` with V n x p."""
    X = as_matrix(X)
    if not 1 <= p <= min(X.shape):
        raise RankRequestTooLarge(f"p={p} outside [1, {min(X.shape)}]")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    return U[:, :p], s[:p], Vt[:p].T


def least_squares(A, B) -> np.ndarray:
    """Minimum-norm least-squares solution of ``A T ~ B`` via the SVD.

    Singular values below ``max(m, l) * eps * s_max`` are treated as zero.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2:
        raise ShapeMismatch(f"A must be 2-D, got shape {A.shape}")
    vector = B.ndim == 1
    if vector:
        B = B[:, None]
    if B.ndim != 2 or B.shape[0] != A.shape[0]:
        raise ShapeMismatch(f"A has {A.shape[0]} rows but B has shape {B.shape}")
    if A.shape[0] < 1:
        raise ShapeMismatch("A must have at least one row")
    if A.shape[1] == 0:
        T = np.zeros((0, B.shape[1]))
        return T[:, 0] if vector else T
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    cutoff = max(A.shape) * _EPS * (s[0] if s.size else 0.0)
    keep = s > cutoff
    T = (Vt[keep].T / s[keep]) @ (U[:, keep].T @ B)
    return T[:, 0] if vector else T
