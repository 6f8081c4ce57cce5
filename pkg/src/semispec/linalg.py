"""Dense non-Hermitian eigenvalues and two-resolution trust filtering."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

MAX_DENSE_DIM = 4096


class EigensolverError(RuntimeError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


def eigenvalues_dense(M) -> np.ndarray:
    """All eigenvalues of a dense complex matrix (LAPACK geev: balancing,
    Hessenberg reduction, shifted QR)."""
    A = getattr(M, "entries", M)
    A = np.asarray(A, dtype=complex)
    if A.shape[0] > MAX_DENSE_DIM:
        raise EigensolverError(f"dimension {A.shape[0]} exceeds {MAX_DENSE_DIM}")
    try:
        return scipy.linalg.eigvals(A, overwrite_a=False, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"eigenvalue iteration failed: {exc}") from exc


@dataclass(frozen=True, eq=False)
class EigenvalueCloud:
    values: np.ndarray
    trusted: np.ndarray
    basis_pair: Tuple[int, int]
    match_tol: float
    h: float = 0.0
    partner: np.ndarray = None

    def trusted_values(self) -> np.ndarray:
        return self.values[self.trusted]

    def nearest(self, z0: complex, k: int = None, radius: float = None) -> np.ndarray:
        """Trusted values ordered by distance from z0."""
        v = self.trusted_values()
        v = v[np.argsort(np.abs(v - z0), kind="stable")]
        if radius is not None:
            v = v[np.abs(v - z0) <= radius]
        return v if k is None else v[:k]


def _greedy_match(low: np.ndarray, high: np.ndarray):
    dist = np.abs(low[:, None] - high[None, :])
    order = np.argsort(dist, axis=None, kind="stable")
    nl = len(low)
    partner = np.full(nl, -1)
    used_low = np.zeros(nl, dtype=bool)
    used_high = np.zeros(len(high), dtype=bool)
    left = min(nl, len(high))
    for flat in order:
        i, j = divmod(int(flat), len(high))
        if used_low[i] or used_high[j]:
            continue
        partner[i] = j
        used_low[i] = used_high[j] = True
        left -= 1
        if left == 0:
            break
    return partner, dist


def filter_trusted(low, high, h: float, tol: float = 1e-6) -> EigenvalueCloud:
    """Keep low-resolution eigenvalues that persist at the higher resolution.

    Pairs are formed greedily by increasing distance, each high value used
    once; a value is trusted when its partner lies within tol*(|value| + h).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    low = np.asarray(low, dtype=complex).ravel()
    high = np.asarray(high, dtype=complex).ravel()
    partner, dist = _greedy_match(low, high)
    trusted = np.zeros(len(low), dtype=bool)
    matched = partner >= 0
    d = np.full(len(low), np.inf)
    d[matched] = dist[np.flatnonzero(matched), partner[matched]]
    trusted = d <= tol * (np.abs(low) + h)
    partners = np.where(matched, high[np.maximum(partner, 0)], np.nan + 0j)
    return EigenvalueCloud(
        values=low,
        trusted=trusted,
        basis_pair=(len(low), len(high)),
        match_tol=tol,
        h=h,
        partner=partners,
    )
