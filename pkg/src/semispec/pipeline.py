"""End-to-end analysis: symbol -> critical points -> mu -> spectra -> fit.

``analyze`` runs everything for one RunConfig and writes report.json, one
CSV per (h, basis) run and an SVG figure into the output directory.
"""

from __future__ import annotations

import cmath
import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from semispec import plotting
from semispec.linalg import EigensolverError, EigenvalueCloud, eigenvalues_dense, filter_trusted
from semispec.predict import FitError, fit_direction, predict_string, wrap_angle
from semispec.quadratics import (
    QuadraticError,
    classify_range,
    positivity_direction,
    select_mu,
)
from semispec.quantize import (
    Basis,
    ChebyshevGridSpec,
    HermiteBasisSpec,
    chebyshev_schrodinger,
    weyl_quantize_hermite,
)
from semispec.symbols import (
    ConeSpec,
    Inconclusive,
    PolySymbol,
    SymbolError,
    exterior_cone_check,
    find_real_critical_points,
    parse_symbol,
    sample_range,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NO_CRITICAL_POINT = 3
EXIT_EIGENSOLVER = 4
EXIT_CONE = 5

CHEB_SHIFT_TOL = 1e-8
CHEB_MAX_N = 2048


class AnalysisError(RuntimeError):
    exit_code = 1


class InputError(AnalysisError):
    exit_code = EXIT_INPUT


class NoCriticalPoint(AnalysisError):
    exit_code = EXIT_NO_CRITICAL_POINT


class SolverFailure(AnalysisError):
    exit_code = EXIT_EIGENSOLVER


class ConeCheckFailed(AnalysisError):
    exit_code = EXIT_CONE


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class BasisConfig:
    kind: str
    N: int
    L: Optional[float] = None

    @classmethod
    def parse(cls, text: str) -> "BasisConfig":
        """``hermite[:N]`` or ``chebyshev[:L:N]`` (``chebyshev:N`` keeps L=8)."""
        parts = text.strip().lower().split(":")
        try:
            if parts[0] == "hermite":
                return cls("hermite", int(parts[1]) if len(parts) > 1 else 400)
            if parts[0] == "chebyshev":
                if len(parts) == 1:
                    return cls("chebyshev", 128, 8.0)
                if len(parts) == 2:
                    return cls("chebyshev", int(parts[1]), 8.0)
                return cls("chebyshev", int(parts[2]), float(parts[1]))
        except ValueError as exc:
            raise InputError(f"bad basis {text!r}: {exc}") from exc
        raise InputError(f"unknown basis {text!r} (use hermite:N or chebyshev:L:N)")

    def label(self) -> str:
        return f"hermite:{self.N}" if self.kind == "hermite" else f"chebyshev:{self.L:g}:{self.N}"


def _as_basis(b) -> BasisConfig:
    if isinstance(b, BasisConfig):
        return b
    if isinstance(b, str):
        return BasisConfig.parse(b)
    return BasisConfig(**b)


@dataclass
class RunConfig:
    symbol_text: str
    h_list: List[float]
    bases: List[BasisConfig] = field(default_factory=lambda: [BasisConfig("hermite", 400)])
    disc_radius: float = 0.5
    k_use: int = 5
    out_dir: str = "semispec-out"
    strict: bool = False
    # the pipeline has no stochastic step; kept so configs round-trip
    seed: int = 0
    box_halfwidth: float = 4.0
    grid_step: float = 0.02
    seeds_per_axis: int = 32
    trust_tol: float = 1e-6
    cone_margin: float = 0.05
    workers: Optional[int] = None

    def __post_init__(self):
        self.h_list = [float(h) for h in self.h_list]
        self.bases = [_as_basis(b) for b in self.bases]

    def validate(self) -> None:
        if not self.h_list:
            raise InputError("h_list must be nonempty")
        if any(h <= 0 for h in self.h_list):
            raise InputError("every h must be positive")
        if any(b >= a for a, b in zip(self.h_list, self.h_list[1:])):
            raise InputError("h_list must be strictly decreasing")
        if not self.disc_radius > 0:
            raise InputError("disc_radius must be positive")
        if self.k_use < 3:
            raise InputError("k_use must be at least 3")
        if not self.bases:
            raise InputError("at least one basis is required")

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        data = json.loads(Path(path).read_text())
        if "basis" in data and "bases" not in data:
            b = data.pop("basis")
            data["bases"] = b if isinstance(b, list) else [b]
        return cls(**data)

    def resolved_out_dir(self) -> Path:
        return Path(os.environ.get("SEMISPEC_OUT") or self.out_dir)


# ---------------------------------------------------------------------------
# spectra


def hermite_cloud(p: PolySymbol, h: float, N: int, tol: float = 1e-6) -> Tuple[EigenvalueCloud, Basis]:
    low = eigenvalues_dense(weyl_quantize_hermite(p, HermiteBasisSpec(h, N)))
    high = eigenvalues_dense(weyl_quantize_hermite(p, HermiteBasisSpec(h, 2 * N)))
    return filter_trusted(low, high, h, tol), Basis("hermite", h, N)


def chebyshev_cloud(
    p: PolySymbol,
    h: float,
    L: float,
    N: int,
    tol: float = 1e-6,
    center: complex = 0j,
    k_check: int = 5,
    max_N: int = CHEB_MAX_N,
) -> Tuple[EigenvalueCloud, Basis]:
    """Chebyshev spectrum at N with partner 2N.

    N is doubled while any of the k_check eigenvalues nearest ``center`` is
    untrusted or moves by more than 1e-8 between N and 2N.
    """
    grid = ChebyshevGridSpec(L, N, h)
    if grid.underresolved:
        log.warning("sqrt(h)=%.3g is not small against L=%g", math.sqrt(h), L)
    high = eigenvalues_dense(chebyshev_schrodinger(p, grid))
    while True:
        low = high
        high = eigenvalues_dense(chebyshev_schrodinger(p, ChebyshevGridSpec(L, 2 * N, h)))
        cloud = filter_trusted(low, high, h, tol)
        near = np.argsort(np.abs(cloud.values - center), kind="stable")[:k_check]
        shift = np.abs(cloud.values[near] - cloud.partner[near])
        settled = cloud.trusted[near].all() and np.all(
            shift <= CHEB_SHIFT_TOL * np.maximum(1.0, np.abs(cloud.values[near]))
        )
        if settled or 2 * N >= max_N:
            if not settled:
                log.warning("Chebyshev refinement stopped at N=%d without settling", N)
            return cloud, Basis("chebyshev", h, N, L)
        log.info("Chebyshev N=%d not settled near %s; doubling", N, center)
        N *= 2


def compute_cloud(p, basis: BasisConfig, h, tol=1e-6, center=0j, k_check=5):
    try:
        if basis.kind == "hermite":
            return hermite_cloud(p, h, basis.N, tol)
        return chebyshev_cloud(p, h, basis.L, basis.N, tol, center, k_check)
    except EigensolverError as exc:
        raise SolverFailure(str(exc)) from exc
    except SymbolError as exc:
        raise InputError(str(exc)) from exc


# ---------------------------------------------------------------------------
# report


@dataclass
class PointAnalysis:
    x: float
    xi: float
    z0: complex
    mu: Optional[complex]
    alpha: Optional[complex]
    direction: Optional[float]
    range_class: Optional[dict]
    cone_check: str = "skipped"

    def as_dict(self) -> dict:
        pair = lambda z: None if z is None else [z.real, z.imag]
        return {
            "x": self.x,
            "xi": self.xi,
            "z0": pair(self.z0),
            "mu": pair(self.mu),
            "alpha": pair(self.alpha),
            "direction_rad": self.direction,
        }


@dataclass
class RunReport:
    symbol: str
    critical_points: List[PointAnalysis]
    range_class: Optional[dict]
    runs: List[dict]
    cone_check: dict
    warnings: List[str] = field(default_factory=list)
    exit_code: int = 0
    files: List[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "symbol": self.symbol,
            "critical_points": [c.as_dict() for c in self.critical_points],
            "range_class": self.range_class,
            "runs": self.runs,
            "cone_check": self.cone_check,
            "warnings": self.warnings,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"


def analyze_point(cp, sample, margin) -> PointAnalysis:
    x0, xi0 = cp.location
    q = cp.hessian
    try:
        rc = classify_range(q)
    except QuadraticError as exc:
        log.warning("range classification failed at %s: %s", cp.location, exc)
        rc = None
    cert = positivity_direction(q)
    mu = select_mu(q, cert) if cert is not None else None
    pa = PointAnalysis(
        x=x0,
        xi=xi0,
        z0=cp.value,
        mu=mu,
        alpha=cert.alpha if cert else None,
        direction=cmath.phase(mu / 1j) if mu is not None else None,
        range_class=rc.as_dict() if rc else None,
    )
    if rc is not None and not rc.is_full_plane and sample is not None:
        opening = 0.5 * math.pi - rc.half_aperture
        cone = ConeSpec(rc.bisector + math.pi, min(0.3, 0.5 * opening))
        try:
            pa.cone_check = "pass" if exterior_cone_check(sample, cp.value, cone, margin) else "fail"
        except Inconclusive:
            pa.cone_check = "inconclusive"
    elif rc is not None and rc.is_full_plane:
        pa.cone_check = "fail"
    return pa


def eigen_table(cloud: EigenvalueCloud, centers, radius) -> List[complex]:
    """Eigenvalues within ``radius`` of any center, nearest-first."""
    v = cloud.values
    if not centers:
        keep = np.ones(len(v), dtype=bool)
        d = np.abs(v)
    else:
        dist = np.min(np.abs(v[:, None] - np.asarray(centers)[None, :]), axis=1)
        keep = dist <= radius
        d = np.abs(v - centers[0])
    idx = np.flatnonzero(keep)
    return idx[np.argsort(d[idx], kind="stable")]


def analyze(config: RunConfig, write: bool = True) -> RunReport:
    """Run the full pipeline; raises an AnalysisError subclass on failure."""
    config.validate()
    try:
        p = parse_symbol(config.symbol_text)
    except SymbolError as exc:
        raise InputError(str(exc)) from exc

    cps = find_real_critical_points(p, config.box_halfwidth, config.seeds_per_axis)
    warnings = [f"degenerate critical point at {c.location}" for c in cps if not c.nondegenerate]
    cps = [c for c in cps if c.nondegenerate]
    if not cps:
        raise NoCriticalPoint("no nondegenerate real critical point in the search box")

    try:
        sample = sample_range(p, config.box_halfwidth, config.grid_step)
    except SymbolError as exc:
        warnings.append(f"range sampling skipped: {exc}")
        sample = None
    points = [analyze_point(c, sample, config.cone_margin) for c in cps]
    for pa in points:
        if pa.mu is None:
            warnings.append(f"critical value {pa.z0} is not on the boundary (no positivity direction)")
    boundary = [pa for pa in points if pa.mu is not None]
    primary = boundary[0] if boundary else None

    cone_status = [pa.cone_check for pa in boundary]
    cone_summary = {
        "status": "pass" if cone_status and all(s == "pass" for s in cone_status)
        else ("fail" if "fail" in cone_status or not cone_status else "inconclusive"),
        "per_point": [pa.cone_check for pa in points],
    }
    if cone_summary["status"] != "pass":
        msg = f"exterior cone check: {cone_summary['status']}"
        if config.strict:
            raise ConeCheckFailed(msg)
        warnings.append(msg)

    jobs = [(h, b) for h in config.h_list for b in config.bases]
    workers = config.workers or min(len(jobs), os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        center = primary.z0 if primary else 0j
        futures = [
            pool.submit(compute_cloud, p, b, h, config.trust_tol, center, config.k_use)
            for h, b in jobs
        ]
        results = [f.result() for f in futures]

    centers = [pa.z0 for pa in boundary]
    runs = []
    tables = []
    for (h, b), (cloud, used) in zip(jobs, results):
        idx = eigen_table(cloud, centers, config.disc_radius)
        entry = {
            "h": h,
            "basis": used.label(),
            "N": used.N,
            "eigenvalues": [
                {"re": float(cloud.values[i].real), "im": float(cloud.values[i].imag), "trusted": bool(cloud.trusted[i])}
                for i in idx
            ],
            "fitted_direction_rad": None,
            "predicted_direction_rad": primary.direction if primary else None,
            "angle_error_rad": None,
        }
        if primary is not None:
            try:
                phi = fit_direction(cloud, primary.z0, config.k_use, radius=config.disc_radius)
                entry["fitted_direction_rad"] = phi
                entry["angle_error_rad"] = abs(wrap_angle(phi - primary.direction))
            except FitError as exc:
                warnings.append(f"h={h} {used.label()}: {exc}")
        runs.append(entry)
        tables.append((h, used, cloud, idx))

    report = RunReport(
        symbol=p.to_text(),
        critical_points=points,
        range_class=primary.range_class if primary else points[0].range_class,
        runs=runs,
        cone_check=cone_summary,
        warnings=warnings,
    )
    if write:
        write_outputs(report, tables, boundary, config)
    return report


def run_csv_name(h: float, basis_label: str) -> str:
    return f"spectrum_h{h!r}_{basis_label.replace(':', '-')}.csv"


def write_eigen_csv(path, rows) -> None:
    """rows: iterable of (h, k, z, trusted)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["h", "k", "re", "im", "trusted"])
        for h, k, z, t in rows:
            w.writerow([repr(float(h)), k, repr(float(z.real)), repr(float(z.imag)), int(bool(t))])


def write_outputs(report: RunReport, tables, boundary, config: RunConfig) -> None:
    out = config.resolved_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for h, used, cloud, idx in tables:
        name = run_csv_name(h, used.label())
        write_eigen_csv(
            out / name,
            ((h, k, cloud.values[i], cloud.trusted[i]) for k, i in enumerate(idx)),
        )
        files.append(name)

    fig_runs = []
    for h, used, cloud, idx in tables:
        vals = cloud.values[idx][cloud.trusted[idx]]
        fig_runs.append((f"h={h:g} ({used.label()})", vals))
    rays = [(pa.z0, pa.direction, config.disc_radius) for pa in boundary]
    disc = (boundary[0].z0, config.disc_radius) if boundary else None
    plotting.spectrum_figure(out / "spectrum.svg", fig_runs, rays, disc=disc, title=report.symbol)
    files.append("spectrum.svg")
    report.files = files + ["report.json"]
    (out / "report.json").write_text(report.to_json())


def config_dict(config: RunConfig) -> dict:
    d = asdict(config)
    d["bases"] = [b.label() for b in config.bases]
    return d
