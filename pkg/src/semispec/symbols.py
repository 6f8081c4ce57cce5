"""Polynomial phase-space symbols p(x, xi) with complex coefficients.

Parsing, Horner evaluation, derivatives, real critical points, range
sampling and the exterior cone test all live here.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from semispec.quadratics import QuadForm

MAX_DEGREE = 16
SAMPLE_BUDGET = 10**7

Coeffs = Dict[Tuple[int, int], complex]


class SymbolError(ValueError):
    pass


class ParseError(SymbolError):
    """Malformed symbol text. ``offset`` is the byte offset of the problem."""

    def __init__(self, message, text="", pos=0):
        self.offset = len(text[:pos].encode("utf-8"))
        self.text = text
        super().__init__(f"{message} (at byte {self.offset})")


class DegreeError(SymbolError):
    pass


class Inconclusive(Exception):
    """Raised by exterior_cone_check when sampled distances sit inside
    the uncertainty band and no verdict can be given."""


# ---------------------------------------------------------------------------
# coefficient-map arithmetic


def _canon(c: Coeffs) -> Coeffs:
    return {m: complex(v) for m, v in sorted(c.items()) if v != 0}


def _add(a: Coeffs, b: Coeffs, sign=1) -> Coeffs:
    out = dict(a)
    for m, v in b.items():
        out[m] = out.get(m, 0) + sign * v
    return _canon(out)


def _mul(a: Coeffs, b: Coeffs) -> Coeffs:
    out: Coeffs = {}
    for (j1, k1), v1 in a.items():
        for (j2, k2), v2 in b.items():
            m = (j1 + j2, k1 + k2)
            out[m] = out.get(m, 0) + v1 * v2
    return _canon(out)


def _degree(c: Coeffs) -> int:
    return max((j + k for j, k in c), default=0)


@dataclass(frozen=True, eq=False)
class PolySymbol:
    """Bivariate complex polynomial as a map (deg_x, deg_xi) -> coefficient.

    Zero coefficients are never stored, so two symbols are equal exactly when
    their coefficient maps are.
    """

    coeffs: Coeffs = field(default_factory=dict)
    source_text: Optional[str] = None

    def __post_init__(self):
        canon = _canon(self.coeffs)
        for j, k in canon:
            if j < 0 or k < 0:
                raise SymbolError(f"negative exponent in monomial {(j, k)}")
        object.__setattr__(self, "coeffs", canon)

    def __eq__(self, other):
        if not isinstance(other, PolySymbol):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(self.coeffs.items()))

    def __repr__(self):
        return f"PolySymbol({self.to_text()!r})"

    def __str__(self):
        return self.to_text()

    @property
    def degree(self) -> int:
        return _degree(self.coeffs)

    @property
    def scale(self) -> float:
        """Coefficient 1-norm."""
        return float(sum(abs(v) for v in self.coeffs.values()))

    def coeff(self, j: int, k: int) -> complex:
        return self.coeffs.get((j, k), 0j)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    def to_text(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for (j, k), v in self.coeffs.items():
            parts = []
            if v != 1:
                parts.append(_format_complex(v))
            if j:
                parts.append("x" if j == 1 else f"x^{j}")
            if k:
                parts.append("xi" if k == 1 else f"xi^{k}")
            terms.append("*".join(parts) if parts else "1")
        return " + ".join(terms)

    def diff_x(self) -> "PolySymbol":
        return PolySymbol({(j - 1, k): j * v for (j, k), v in self.coeffs.items() if j})

    def diff_xi(self) -> "PolySymbol":
        return PolySymbol({(j, k - 1): k * v for (j, k), v in self.coeffs.items() if k})

    @cached_property
    def _derivs(self):
        px, pxi = self.diff_x(), self.diff_xi()
        return px, pxi, px.diff_x(), px.diff_xi(), pxi.diff_xi()

    def is_schrodinger(self) -> bool:
        """True for xi^2 + V(x)."""
        return self.coeff(0, 2) == 1 and all(
            k == 0 for (j, k) in self.coeffs if (j, k) != (0, 2)
        )

    def potential(self) -> "PolySymbol":
        return PolySymbol({m: v for m, v in self.coeffs.items() if m[1] == 0})


def _format_complex(v: complex) -> str:
    re_, im = v.real, v.imag
    if im == 0:
        s = repr(re_)
        return s if re_ >= 0 else f"({s})"
    if re_ == 0:
        return f"{im!r}i" if im >= 0 else f"({im!r}i)"
    sign = "+" if im >= 0 else "-"
    return f"({re_!r}{sign}{abs(im)!r}i)"


# ---------------------------------------------------------------------------
# parser
#
#   expr   := ['-'] term (('+'|'-') term)*
#   term   := factor ('*' factor)*
#   factor := base ['^' uint]
#   base   := 'x' | 'xi' | number | '(' expr ')'
#   number := decimal ['i'] | 'i'

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>i(?![A-Za-z_]))?"
    r"|(?P<name>[A-Za-z_]+)|(?P<op>[-+*^()]))"
)


class _Parser:
    def __init__(self, text: str, max_degree: int):
        self.text = text
        self.max_degree = max_degree
        self.tokens = self._tokenize(text)
        self.i = 0

    def _tokenize(self, text):
        toks = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
            start = m.start(m.lastgroup) if m.lastgroup != "imag" else m.start("num")
            if m.group("num") is not None:
                toks.append(("num", m.group("num"), bool(m.group("imag")), start))
            elif m.group("name") is not None:
                name = m.group("name")
                if name not in ("x", "xi", "i"):
                    raise ParseError(f"unknown identifier {name!r}", text, start)
                toks.append(("name", name, False, start))
            else:
                toks.append(("op", m.group("op"), False, start))
            pos = m.end()
        toks.append(("end", "", False, len(text)))
        return toks

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, self.text, tok[3])

    def check(self, c: Coeffs, tok) -> Coeffs:
        if _degree(c) > self.max_degree:
            raise DegreeError(
                f"total degree {_degree(c)} exceeds cap {self.max_degree} "
                f"(at byte {len(self.text[:tok[3]].encode())})"
            )
        return c

    def parse(self) -> Coeffs:
        c = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return c

    def expr(self) -> Coeffs:
        neg = False
        if self.peek()[:2] == ("op", "-"):
            self.take()
            neg = True
        acc = self.term()
        if neg:
            acc = _canon({m: -v for m, v in acc.items()})
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            sign = 1 if self.take()[1] == "+" else -1
            acc = _add(acc, self.term(), sign)
        return acc

    def term(self) -> Coeffs:
        acc = self.factor()
        while self.peek()[:2] == ("op", "*"):
            tok = self.take()
            acc = self.check(_mul(acc, self.factor()), tok)
        return acc

    def factor(self) -> Coeffs:
        base = self.base()
        if self.peek()[:2] != ("op", "^"):
            return base
        caret = self.take()
        tok = self.take()
        if tok[0] != "num" or tok[2] or not tok[1].isdigit():
            self.fail("exponent must be a nonnegative integer", tok)
        n = int(tok[1])
        if n * _degree(base) > self.max_degree:
            self.check({(n * _degree(base), 0): 1}, caret)
        out: Coeffs = {(0, 0): 1}
        for _ in range(n):
            out = _mul(out, base)
        return self.check(out, caret)

    def base(self) -> Coeffs:
        tok = self.take()
        kind, val, imag = tok[:3]
        if kind == "num":
            v = float(val)
            return _canon({(0, 0): complex(0, v) if imag else complex(v, 0)})
        if kind == "name":
            return {"x": {(1, 0): 1 + 0j}, "xi": {(0, 1): 1 + 0j}, "i": {(0, 0): 1j}}[val]
        if tok[:2] == ("op", "("):
            inner = self.expr()
            if self.peek()[:2] != ("op", ")"):
                self.fail("expected ')'")
            self.take()
            return inner
        self.fail("expected x, xi, a number or '('", tok)


def parse_symbol(text: str, max_degree: int = MAX_DEGREE) -> PolySymbol:
    """Parse symbol text such as ``"xi^2 + (1+3i)*x^2 + x^4"``.

    Raises ParseError (with a byte offset) on malformed input and DegreeError
    when the total degree exceeds ``max_degree``.
    """
    coeffs = _Parser(text, max_degree).parse()
    return PolySymbol(coeffs, source_text=text)


# ---------------------------------------------------------------------------
# evaluation


def eval_symbol(p: PolySymbol, x, xi):
    """Evaluate p at (x, xi); scalars or broadcastable arrays.

    Horner in xi for each power of x, then Horner in x.
    """
    if not p.coeffs:
        shape = np.broadcast(x, xi).shape
        return np.zeros(shape, dtype=complex) if shape else 0j
    rows: Dict[int, Dict[int, complex]] = {}
    for (j, k), v in p.coeffs.items():
        rows.setdefault(j, {})[k] = v
    jmax = max(rows)
    acc = 0j
    for j in range(jmax, -1, -1):
        row = rows.get(j)
        if row:
            kmax = max(row)
            r = 0j
            for k in range(kmax, -1, -1):
                r = r * xi + row.get(k, 0j)
        else:
            r = 0j
        acc = acc * x + r
    return acc


def gradient(p: PolySymbol, x, xi):
    """(dp/dx, dp/dxi) at (x, xi)."""
    px, pxi = p._derivs[:2]
    return eval_symbol(px, x, xi), eval_symbol(pxi, x, xi)


def hessian_at(p: PolySymbol, x0: float, xi0: float) -> QuadForm:
    _, _, pxx, pxxi, pxixi = p._derivs
    a = complex(eval_symbol(pxx, x0, xi0))
    b = complex(eval_symbol(pxxi, x0, xi0))
    c = complex(eval_symbol(pxixi, x0, xi0))
    return QuadForm(np.array([[a, b], [b, c]], dtype=complex))


# ---------------------------------------------------------------------------
# real critical points


@dataclass(frozen=True)
class CriticalPoint:
    location: Tuple[float, float]
    value: complex
    hessian: QuadForm
    nondegenerate: bool
    residual: float

    @property
    def z0(self) -> complex:
        return self.value


GN_MAX_ITER = 50
GN_MAX_HALVINGS = 12
MERGE_TOL = 1e-6
NONDEGENERACY_RATIO = 1e-8


def _stacked_residual(p, x, xi):
    px, pxi = gradient(p, x, xi)
    px = np.asarray(px, dtype=complex) * np.ones_like(x)
    pxi = np.asarray(pxi, dtype=complex) * np.ones_like(x)
    return np.stack([px.real, px.imag, pxi.real, pxi.imag], axis=-1)


def _stacked_jacobian(p, x, xi):
    _, _, pxx, pxxi, pxixi = p._derivs
    ones = np.ones_like(x)
    a = np.asarray(eval_symbol(pxx, x, xi), dtype=complex) * ones
    b = np.asarray(eval_symbol(pxxi, x, xi), dtype=complex) * ones
    c = np.asarray(eval_symbol(pxixi, x, xi), dtype=complex) * ones
    rows = [
        np.stack([a.real, b.real], -1),
        np.stack([a.imag, b.imag], -1),
        np.stack([b.real, c.real], -1),
        np.stack([b.imag, c.imag], -1),
    ]
    return np.stack(rows, axis=-2)


def find_real_critical_points(
    p: PolySymbol, box_halfwidth: float = 4.0, seeds_per_axis: int = 32
) -> List[CriticalPoint]:
    """Real points where both partial derivatives of p vanish.

    Gauss-Newton on (Re, Im) of the gradient from a uniform seed grid,
    all seeds advanced together. An empty list means no critical point was
    found in the box.
    """
    if box_halfwidth <= 0:
        raise ValueError("box_halfwidth must be positive")
    if seeds_per_axis < 8:
        raise ValueError("seeds_per_axis must be at least 8")

    tol = 1e-12 * (1.0 + p.scale)
    g = np.linspace(-box_halfwidth, box_halfwidth, seeds_per_axis)
    x, xi = (a.ravel().copy() for a in np.meshgrid(g, g, indexing="ij"))

    r = _stacked_residual(p, x, xi)
    norm = np.linalg.norm(r, axis=-1)
    # iterate past the tolerance: degenerate zeros converge only linearly
    stalled = ~np.isfinite(norm)
    for _ in range(GN_MAX_ITER):
        active = ~stalled & (norm > 0)
        if not active.any():
            break
        J = _stacked_jacobian(p, x[active], xi[active])
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(J), r[active])
        xa, xia, na = x[active], xi[active], norm[active]
        t = np.ones(len(xa))
        pending = np.ones(len(xa), dtype=bool)
        new_x, new_xi = xa.copy(), xia.copy()
        new_r = r[active].copy()
        new_n = na.copy()
        for _ in range(GN_MAX_HALVINGS):
            cx = xa[pending] + t[pending] * step[pending, 0]
            cxi = xia[pending] + t[pending] * step[pending, 1]
            cr = _stacked_residual(p, cx, cxi)
            cn = np.linalg.norm(cr, axis=-1)
            ok = cn < na[pending]
            idx = np.flatnonzero(pending)[ok]
            new_x[idx], new_xi[idx] = cx[ok], cxi[ok]
            new_r[idx], new_n[idx] = cr[ok], cn[ok]
            pending[idx] = False
            t[pending] *= 0.5
            if not pending.any():
                break
        x[active], xi[active] = new_x, new_xi
        r[active], norm[active] = new_r, new_n
        stalled[np.flatnonzero(active)[pending]] = True

    res = np.max(np.abs(r), axis=-1)
    inside = (np.abs(x) <= box_halfwidth * (1 + 1e-9)) & (np.abs(xi) <= box_halfwidth * (1 + 1e-9))
    good = np.flatnonzero((res <= tol) & inside)
    good = good[np.argsort(res[good], kind="stable")]

    reps: List[int] = []
    for n in good:
        if all(math.hypot(x[n] - x[m], xi[n] - xi[m]) > MERGE_TOL for m in reps):
            reps.append(int(n))

    points = []
    for n in reps:
        x0, xi0 = float(x[n]), float(xi[n])
        hess = hessian_at(p, x0, xi0)
        s = np.linalg.svd(hess.H, compute_uv=False)
        nondeg = bool(s[-1] >= NONDEGENERACY_RATIO * max(s[0], p.scale))
        points.append(
            CriticalPoint(
                location=(x0, xi0),
                value=complex(eval_symbol(p, x0, xi0)),
                hessian=hess,
                nondegenerate=nondeg,
                residual=float(res[n]),
            )
        )
    points.sort(key=lambda c: c.location)
    return points


# ---------------------------------------------------------------------------
# range sampling and the exterior cone test


@dataclass(frozen=True, eq=False)
class RangeSample:
    """p evaluated on the grid -b + step*(0..n-1) in both variables, stored
    row-major (x is the slow index)."""

    values: np.ndarray
    box_halfwidth: float
    grid_step: float
    shape: Tuple[int, int]

    def nodes(self) -> np.ndarray:
        n = self.shape[0]
        return -self.box_halfwidth + self.grid_step * np.arange(n)

    def grid(self) -> np.ndarray:
        return self.values.reshape(self.shape)


def sample_range(p: PolySymbol, box_halfwidth: float = 4.0, grid_step: float = 0.02) -> RangeSample:
    if not 0 < grid_step < box_halfwidth:
        raise ValueError("need 0 < grid_step < box_halfwidth")
    n = int(math.floor(2 * box_halfwidth / grid_step + 1e-9)) + 1
    if n * n > SAMPLE_BUDGET:
        raise SymbolError(f"sample budget exceeded: {n * n} nodes > {SAMPLE_BUDGET}")
    g = -box_halfwidth + grid_step * np.arange(n)
    vals = np.empty((n, n), dtype=complex)
    for i, xv in enumerate(g):
        vals[i] = eval_symbol(p, xv, g)
    return RangeSample(vals.ravel(), box_halfwidth, grid_step, (n, n))


@dataclass(frozen=True)
class ConeSpec:
    theta0: float
    eps0: float

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValueError("eps0 must be positive")
        t = math.remainder(self.theta0, 2 * math.pi)
        if t <= -math.pi:
            t += 2 * math.pi
        object.__setattr__(self, "theta0", t)


def _local_lipschitz(grid: np.ndarray, step: float) -> np.ndarray:
    """Per-node slope bound: largest difference quotient to any of the
    8 neighbours, then maximised over the 3x3 block."""
    n0, n1 = grid.shape
    pad = np.pad(grid, 1, mode="edge")
    slope = np.zeros(grid.shape)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == dj == 0:
                continue
            nb = pad[1 + di:1 + di + n0, 1 + dj:1 + dj + n1]
            slope = np.maximum(slope, np.abs(nb - grid) / (step * math.hypot(di, dj)))
    pads = np.pad(slope, 1, mode="edge")
    out = slope.copy()
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            out = np.maximum(out, pads[1 + di:1 + di + n0, 1 + dj:1 + dj + n1])
    return out


def _cone_test_points(z0, cone: ConeSpec, margin: float, n_r=16, n_theta=33):
    radii = np.geomspace(margin * cone.eps0, cone.eps0, n_r + 2)[1:-1]
    thetas = np.linspace(cone.theta0 - cone.eps0, cone.theta0 + cone.eps0, n_theta + 2)[1:-1]
    return (z0 + radii[:, None] * np.exp(1j * thetas[None, :])).ravel()


def exterior_cone_check(
    sample: RangeSample, z0: complex, cone: ConeSpec, margin: float = 0.05
) -> bool:
    """Check that a small sector at z0 stays clear of the sampled range.

    Each test point is compared against every sampled value p(n) using that
    node's local slope bound L(n): a distance <= L*step means the point may
    well be attained (False); a distance > 2*L*step for every node clears
    it. Anything in between raises Inconclusive.

    Only the sampled box is seen; behaviour at infinity is not certified.
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    step = sample.grid_step
    vals = sample.values
    lip = _local_lipschitz(sample.grid(), step).ravel()
    pts = _cone_test_points(complex(z0), cone, margin)
    P = np.column_stack([pts.real, pts.imag])

    hit = np.zeros(len(pts), dtype=bool)
    unsure = np.zeros(len(pts), dtype=bool)
    finite = np.isfinite(vals) & np.isfinite(lip)
    lip_pos = np.where(lip > 0, lip, np.min(lip[lip > 0], initial=1.0))
    # bucket nodes by slope so each ball query uses a tight radius
    levels = np.floor(np.log2(lip_pos)).astype(int)
    for lev in np.unique(levels[finite]):
        sel = np.flatnonzero(finite & (levels == lev))
        tree = cKDTree(np.column_stack([vals[sel].real, vals[sel].imag]))
        radius = 2 * float(lip[sel].max()) * step
        for t, nbrs in enumerate(tree.query_ball_point(P, radius)):
            if not nbrs:
                continue
            nodes = sel[nbrs]
            d = np.abs(pts[t] - vals[nodes])
            band = lip[nodes] * step
            if np.any(d <= band):
                hit[t] = True
            elif np.any(d <= 2 * band):
                unsure[t] = True
    if hit.any():
        return False
    if unsure.any():
        raise Inconclusive(
            f"{int(unsure.sum())} of {len(pts)} test points lie in the uncertainty band"
        )
    return True
