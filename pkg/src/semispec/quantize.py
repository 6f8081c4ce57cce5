"""Dense matrix discretisations of h-Weyl quantised polynomial symbols.

Two independent routes:

* Hermite: the orthonormal eigenbasis of (x^2 + (hD)^2)/2, where x and hD are
  tridiagonal ladder matrices and every monomial is Weyl-ordered exactly.
* Chebyshev: collocation on [-L, L] with Dirichlet ends, for xi^2 + V(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb
from typing import Optional, Tuple

import numpy as np
from scipy import sparse

from semispec.symbols import PolySymbol, SymbolError, eval_symbol

MAX_HERMITE_DIM = 8192


class QuantizeError(ValueError):
    pass


@dataclass(frozen=True)
class HermiteBasisSpec:
    h: float
    N: int
    assembly_pad: Optional[int] = None

    def __post_init__(self):
        if not self.h > 0:
            raise QuantizeError("h must be positive")
        if self.N < 2:
            raise QuantizeError("N must be at least 2")
        if self.assembly_pad is not None and self.assembly_pad < 0:
            raise QuantizeError("assembly_pad must be nonnegative")
        if self.N + (self.assembly_pad or 0) > MAX_HERMITE_DIM:
            raise QuantizeError(f"N + assembly_pad exceeds {MAX_HERMITE_DIM}")

    @property
    def pad(self) -> int:
        return self.assembly_pad or 0


@dataclass(frozen=True)
class ChebyshevGridSpec:
    L: float
    N: int
    h: float

    def __post_init__(self):
        if not self.L > 0 or not self.h > 0:
            raise QuantizeError("L and h must be positive")
        if self.N < 8:
            raise QuantizeError("Chebyshev grid needs N >= 8")

    @property
    def underresolved(self) -> bool:
        return math.sqrt(self.h) > 0.25 * self.L


@dataclass(frozen=True)
class ScalingSpec:
    eps: float
    h: float
    h_tilde: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.eps <= 1:
            raise QuantizeError("eps must lie in (0, 1]")
        object.__setattr__(self, "h_tilde", self.h / self.eps**2)


@dataclass(frozen=True)
class Basis:
    kind: str  # "hermite" | "chebyshev"
    h: float
    N: int
    L: Optional[float] = None

    def label(self) -> str:
        if self.kind == "hermite":
            return f"hermite:{self.N}"
        return f"chebyshev:{self.L:g}:{self.N}"


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    entries: np.ndarray
    basis: Basis
    symbol_fingerprint: str

    def __post_init__(self):
        e = self.entries
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise QuantizeError("operator matrix must be square")
        if not np.all(np.isfinite(e)):
            raise QuantizeError("operator matrix has non-finite entries")

    @property
    def N(self) -> int:
        return self.entries.shape[0]


# ---------------------------------------------------------------------------
# Hermite route


def ladder_matrices(spec: HermiteBasisSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Position and momentum (hD) matrices at dimension N + pad.

    A e_k = sqrt(k) e_{k-1}; X = sqrt(h/2)(A + A^T), P = sqrt(h/2)(A - A^T)/i.
    """
    M = spec.N + spec.pad
    A = np.diag(np.sqrt(np.arange(1, M, dtype=float)), 1)
    s = math.sqrt(spec.h / 2)
    X = s * (A + A.T)
    P = -1j * s * (A - A.T)
    return X.astype(complex), P


def _sparse_ladder(spec: HermiteBasisSpec):
    M = spec.N + spec.pad
    k = np.sqrt(np.arange(1, M, dtype=float))
    A = sparse.diags(k, 1, shape=(M, M), format="csr")
    s = math.sqrt(spec.h / 2)
    return (s * (A + A.T)).astype(complex).tocsr(), (-1j * s * (A - A.T)).tocsr()


def _powers(M, n: int):
    out = [sparse.identity(M.shape[0], dtype=complex, format="csr")]
    for _ in range(n):
        out.append((out[-1] @ M).tocsr())
    return out


def weyl_quantize_hermite(p: PolySymbol, spec: HermiteBasisSpec) -> OperatorMatrix:
    """Weyl quantisation of p in the truncated Hermite basis.

    x^j xi^k -> 2^-j sum_r C(j, r) X^r P^k X^(j-r), assembled at the padded
    dimension and cut back to N x N.
    """
    d = p.degree
    if spec.assembly_pad is None:
        spec = HermiteBasisSpec(spec.h, spec.N, d)
    elif spec.assembly_pad < d:
        raise QuantizeError(f"assembly_pad {spec.assembly_pad} < symbol degree {d}")
    N = spec.N
    # banded products; only the result is densified
    X, P = _sparse_ladder(spec)
    jmax = max((j for j, _ in p.coeffs), default=0)
    kmax = max((k for _, k in p.coeffs), default=0)
    Xp = _powers(X, jmax)
    Pp = _powers(P, kmax)
    out = sparse.csr_matrix((N, N), dtype=complex)
    for (j, k), c in p.coeffs.items():
        term = sparse.csr_matrix((N, N), dtype=complex)
        for r in range(j + 1):
            term = term + comb(j, r) * (Xp[r][:N] @ Pp[k] @ Xp[j - r][:, :N])
        out = out + (c / 2**j) * term
    return OperatorMatrix(out.toarray(), Basis("hermite", spec.h, N), p.fingerprint())


# ---------------------------------------------------------------------------
# Chebyshev route


def cheb(N: int) -> Tuple[np.ndarray, np.ndarray]:
    """Chebyshev differentiation matrix and the N+1 points cos(pi j/N)."""
    j = np.arange(N + 1)
    x = np.cos(np.pi * j / N)
    c = np.hstack([2.0, np.ones(N - 1), 2.0]) * (-1.0) ** j
    dX = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return D, x


def _potential_of(p: PolySymbol) -> PolySymbol:
    if all(k == 0 for _, k in p.coeffs):
        return p
    if p.is_schrodinger():
        return p.potential()
    raise SymbolError("Chebyshev route needs a symbol of the form xi^2 + V(x)")


def chebyshev_schrodinger(p: PolySymbol, grid: ChebyshevGridSpec) -> OperatorMatrix:
    """-h^2 d^2/dx^2 + V(x) on [-L, L] with u(+-L) = 0.

    ``p`` is either V(x) itself or xi^2 + V(x). Returns the (N-1)x(N-1)
    interior block.
    """
    V = _potential_of(p)
    D, x = cheb(grid.N)
    D = D / grid.L
    x = x * grid.L
    D2 = (D @ D)[1:-1, 1:-1]
    xs = x[1:-1]
    Vx = np.asarray(eval_symbol(V, xs, 0.0), dtype=complex) * np.ones_like(xs)
    M = -(grid.h**2) * D2 + np.diag(Vx)
    return OperatorMatrix(
        M.astype(complex), Basis("chebyshev", grid.h, grid.N, grid.L), p.fingerprint()
    )


# ---------------------------------------------------------------------------
# scaling x = eps*y, h~ = h/eps^2


def scale_symbol(p: PolySymbol, s: ScalingSpec) -> PolySymbol:
    """eps^-2 p(eps y, eps eta): coefficient (j, k) times eps^(j+k-2)."""
    e = s.eps
    return PolySymbol({(j, k): v * e ** (j + k - 2) for (j, k), v in p.coeffs.items()})
