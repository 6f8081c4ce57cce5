"""Complex quadratic forms on the real phase plane.

A form is stored through its Hessian H, q(X) = <HX, X>/2 (bilinear, no
conjugation). The Hamilton map F is defined by q(X, Y) = sigma(X, FY) with
sigma((x1, xi1), (x2, xi2)) = xi1*x2 - x1*xi2.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar


class QuadraticError(ValueError):
    pass


class SingularHamiltonMap(QuadraticError):
    pass


class AmbiguousSelection(QuadraticError):
    pass


class RealZeroError(QuadraticError):
    """The form vanishes at a nonzero real point."""


@dataclass(frozen=True, eq=False)
class QuadForm:
    H: np.ndarray

    def __post_init__(self):
        H = np.array(self.H, dtype=complex).reshape(2, 2)
        off = H[0, 1]
        if abs(H[1, 0] - off) > 1e-12 * (1 + np.abs(H).max()):
            raise QuadraticError("Hessian must be symmetric")
        H[1, 0] = off
        H.setflags(write=False)
        object.__setattr__(self, "H", H)

    @classmethod
    def from_coeffs(cls, a: complex, b: complex, c: complex = 0) -> "QuadForm":
        """Form a*x^2 + b*xi^2 + 2c*x*xi."""
        return cls(np.array([[2 * a, 2 * c], [2 * c, 2 * b]], dtype=complex))

    @property
    def h_xx(self) -> complex:
        return complex(self.H[0, 0])

    @property
    def h_xxi(self) -> complex:
        return complex(self.H[0, 1])

    @property
    def h_xixi(self) -> complex:
        return complex(self.H[1, 1])

    @property
    def scale(self) -> float:
        return float(np.abs(self.H).max())

    def __call__(self, x, xi):
        return 0.5 * (self.h_xx * x * x + 2 * self.h_xxi * x * xi + self.h_xixi * xi * xi)

    def bilinear(self, X, Y) -> complex:
        return complex(0.5 * np.asarray(X) @ self.H @ np.asarray(Y))

    def congruent(self, S) -> "QuadForm":
        """The form X -> q(S X)."""
        S = np.asarray(S)
        return QuadForm(S.T @ self.H @ S)

    def rotated(self, alpha: complex) -> "QuadForm":
        return QuadForm(alpha * self.H)


def symplectic_form(X, Y) -> complex:
    return X[1] * Y[0] - X[0] * Y[1]


@dataclass(frozen=True, eq=False)
class HamiltonMap:
    F: np.ndarray

    def __call__(self, Y):
        return self.F @ np.asarray(Y)


def hamilton_map(q: QuadForm) -> HamiltonMap:
    a, b, c = q.h_xx, q.h_xxi, q.h_xixi
    F = 0.5 * np.array([[b, c], [-a, -b]], dtype=complex)
    return HamiltonMap(F)


def hamilton_eigenvalues(F: HamiltonMap) -> Tuple[complex, complex]:
    """The pair (mu, -mu), mu^2 = -det F.

    mu_plus is taken with Re(mu/i) > 0 (ties broken by Im(mu/i) > 0).
    """
    M = F.F
    det = complex(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])
    if abs(det) <= 1e-14 * float(np.abs(M).max()) ** 2:
        raise SingularHamiltonMap("Hamilton map is singular (degenerate Hessian)")
    mu = cmath.sqrt(-det)
    w = mu / 1j
    if w.real < 0 or (w.real == 0 and w.imag < 0):
        mu = -mu
    return mu, -mu


# ---------------------------------------------------------------------------
# positivity direction


@dataclass(frozen=True)
class PositivityCertificate:
    alpha: complex
    admissible_arc: Tuple[float, float]

    @classmethod
    def from_arc(cls, lo: float, hi: float) -> "PositivityCertificate":
        return cls(cmath.exp(0.5j * (lo + hi)), (float(lo), float(hi)))


SCAN_STEP = 1e-3
BISECT_TOL = 1e-9


def _min_eig_re(H: np.ndarray, theta):
    """Smallest eigenvalue of Re(e^{i theta} H) (vectorised in theta)."""
    R, J = H.real, H.imag
    c, s = np.cos(theta), np.sin(theta)
    p = c * R[0, 0] - s * J[0, 0]
    r = c * R[1, 1] - s * J[1, 1]
    o = c * R[0, 1] - s * J[0, 1]
    return 0.5 * (p + r) - np.hypot(0.5 * (p - r), o)


def _bisect(f, good: float, bad: float) -> float:
    while abs(good - bad) > BISECT_TOL:
        mid = 0.5 * (good + bad)
        if f(mid) > 0:
            good = mid
        else:
            bad = mid
    return good


def positivity_direction(q: QuadForm) -> Optional[PositivityCertificate]:
    """Find unit alpha with Re(alpha q) positive definite.

    Scans arguments on a 1e-3 grid, bisects the arc ends to 1e-9 and returns
    the arc midpoint. None when no direction qualifies.
    """
    n = int(math.ceil(2 * math.pi / SCAN_STEP))
    thetas = np.arange(n) * (2 * math.pi / n)
    pos = _min_eig_re(q.H, thetas) > 0
    if not pos.any():
        return None
    if pos.all():
        raise QuadraticError("Re(e^{it}q) positive for every t; form is not a quadratic")
    # rotate so the scan starts on a non-positive sample, making the arc contiguous
    first_bad = int(np.flatnonzero(~pos)[0])
    order = np.roll(np.arange(n), -first_bad)
    rolled = pos[order]
    idx = np.flatnonzero(rolled)
    start, stop = int(idx[0]), int(idx[-1])
    if not rolled[start:stop + 1].all():
        raise QuadraticError("positivity set is not a single arc")
    step = 2 * math.pi / n
    t_first = thetas[order[start]]
    t_last = t_first + (stop - start) * step
    f = lambda t: float(_min_eig_re(q.H, t))
    lo = _bisect(f, t_first, t_first - step)
    hi = _bisect(f, t_last, t_last + step)
    shift = math.remainder(0.5 * (lo + hi), 2 * math.pi) - 0.5 * (lo + hi)
    return PositivityCertificate.from_arc(lo + shift, hi + shift)


def select_mu(q: QuadForm, cert: PositivityCertificate) -> complex:
    """The eigenvalue mu of the Hamilton map with Re(alpha mu / i) > 0."""
    mu, _ = hamilton_eigenvalues(hamilton_map(q))
    picks = [m for m in (mu, -mu) if (cert.alpha * m / 1j).real > 0]
    if len(picks) != 1:
        raise AmbiguousSelection(
            f"{len(picks)} of +-mu satisfy Re(alpha mu/i) > 0 (mu={mu}, alpha={cert.alpha})"
        )
    return picks[0]


# ---------------------------------------------------------------------------
# range of a quadratic form


@dataclass(frozen=True)
class RangeClass:
    """Either the whole plane (winding +-2) or a proper closed convex cone."""

    kind: str
    winding: int = 0
    bisector: Optional[float] = None
    half_aperture: Optional[float] = None

    @property
    def is_full_plane(self) -> bool:
        return self.kind == "FullPlane"

    def contains_direction(self, theta: float, slack: float = 0.0) -> bool:
        if self.is_full_plane:
            return True
        return abs(math.remainder(theta - self.bisector, 2 * math.pi)) <= self.half_aperture + slack

    def as_dict(self) -> dict:
        if self.is_full_plane:
            return {"kind": self.kind, "winding": self.winding}
        return {
            "kind": self.kind,
            "bisector_rad": self.bisector,
            "half_aperture_rad": self.half_aperture,
        }


WINDING_SAMPLES = 4096


def _check_no_real_zero(q: QuadForm) -> None:
    scale = q.scale
    if scale == 0 or abs(q.h_xx) <= 1e-14 * scale:
        raise RealZeroError("form vanishes on the x axis")
    roots = np.roots([q.h_xx, 2 * q.h_xxi, q.h_xixi])
    for r in roots:
        if abs(r.imag) <= 1e-12 * (1 + abs(r)):
            raise RealZeroError(f"form vanishes along (x, xi) = ({r.real:.6g}, 1)")


def _winding(q: QuadForm, n: int) -> Tuple[int, np.ndarray, np.ndarray]:
    t = np.arange(n) * (2 * math.pi / n)
    w = q(np.cos(t), np.sin(t))
    inc = np.angle(np.roll(w, -1) / w)
    total = inc.sum() / (2 * math.pi)
    wn = int(round(total))
    if abs(total - wn) > 1e-6 or np.abs(inc).max() > math.pi / 2:
        wn = 99
    return wn, t, w


def classify_range(q: QuadForm) -> RangeClass:
    """Range of q on R^2: the whole plane or a proper closed convex cone.

    Decided by the winding number of t -> q(cos t, sin t); the cone edges come
    from the extreme arguments along that curve, refined by 1-d optimisation.
    """
    _check_no_real_zero(q)
    n = WINDING_SAMPLES
    for _ in range(4):
        wn, t, w = _winding(q, n)
        if wn in (-2, 0, 2):
            break
        n *= 4
    else:
        raise QuadraticError(f"winding sampling failed (got {wn})")
    if wn != 0:
        return RangeClass("FullPlane", winding=wn)

    ref = float(np.angle(w.mean())) if abs(w.mean()) > 0 else float(np.angle(w[0]))
    rel = np.angle(w * cmath.exp(-1j * ref))
    dt = 2 * math.pi / n

    def rel_arg(s):
        return cmath.phase(q(math.cos(s), math.sin(s)) * cmath.exp(-1j * ref))

    edges = []
    for k, sign in ((int(np.argmin(rel)), 1.0), (int(np.argmax(rel)), -1.0)):
        res = minimize_scalar(
            lambda s: sign * rel_arg(s),
            bounds=(t[k] - dt, t[k] + dt),
            method="bounded",
            options={"xatol": 1e-13},
        )
        edges.append(min(sign * rel[k], res.fun) * sign)
    lo, hi = edges
    bis = math.remainder(ref + 0.5 * (lo + hi), 2 * math.pi)
    if bis <= -math.pi:
        bis += 2 * math.pi
    return RangeClass("ProperCone", winding=0, bisector=float(bis), half_aperture=float(0.5 * (hi - lo)))


def range_ellipse(q: QuadForm) -> Tuple[complex, complex, complex]:
    """(center, u, v) with q(cos t, sin t) = center + u cos 2t + v sin 2t."""
    a, b, c = q.h_xx / 2, q.h_xixi / 2, q.h_xxi / 2
    return (a + b) / 2, (a - b) / 2, c


def root_halfplane_class(q: QuadForm) -> int:
    """Winding predicted from the roots r of q(r, 1) = 0: each root in the
    upper half-plane contributes -1, each in the lower +1."""
    roots = np.roots([q.h_xx, 2 * q.h_xxi, q.h_xixi])
    return int(sum(-np.sign(r.imag) for r in roots))


# ---------------------------------------------------------------------------
# symplectic normal form


@dataclass(frozen=True, eq=False)
class NormalForm:
    lam: float
    a: float
    b: float
    alpha_nf: float
    mu_over_i: complex
    transforms: np.ndarray
    rotation: complex

    @property
    def d(self) -> complex:
        return (self.lam + 1j * self.b) / (self.lam + 1j * self.a)


def _rotation_eigh(M: np.ndarray):
    w, Q = np.linalg.eigh(M)
    if np.linalg.det(Q) < 0:
        Q[:, 1] = -Q[:, 1]
    return w, Q


def symplectic_normal_form(q: QuadForm, cert: PositivityCertificate) -> NormalForm:
    """Reduce alpha*q by real symplectic maps to

        (lam/2)(x^2 + xi^2) + (i/2)(a x^2 + b xi^2),  b >= a,

    then dilate to equal coefficient moduli. mu_over_i is the principal root
    ((lam + ia)(lam + ib))^{1/2} / 2 for the rotated form alpha*q.
    """
    Ha = cert.alpha * q.H
    R, J = Ha.real, Ha.imag
    w, Q = _rotation_eigh(R)
    if w[0] <= 0 or w[1] / w[0] > 1e12:
        raise QuadraticError(f"Re(alpha q) is not safely positive definite (eigenvalues {w})")
    lam = math.sqrt(w[0] * w[1])
    S = Q @ np.diag(np.sqrt(lam / w))
    J1 = S.T @ J @ S
    (a, b), Q2 = _rotation_eigh(0.5 * (J1 + J1.T))
    S = S @ Q2
    if b < a:
        S = S @ np.array([[0.0, 1.0], [-1.0, 0.0]])
        a, b = b, a
    s = (abs(complex(lam, b)) / abs(complex(lam, a))) ** 0.25
    S = S @ np.diag([s, 1.0 / s])
    d = complex(lam, b) / complex(lam, a)
    mu_over_i = cmath.sqrt(complex(lam, a) * complex(lam, b)) / 2
    return NormalForm(
        lam=float(lam),
        a=float(a),
        b=float(b),
        alpha_nf=float(cmath.phase(d)) if d.imag > 0 else 0.0,
        mu_over_i=mu_over_i,
        transforms=S,
        rotation=cert.alpha,
    )
