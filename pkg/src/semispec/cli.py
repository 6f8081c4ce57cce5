"""Command line entry point: ``semispec <subcommand> [flags]``.

Subcommands
-----------
analyze         full pipeline, report.json + per-run CSV + spectrum.svg
spectrum        eigenvalues with trust flags for one basis
pseudospectrum  sampled range p(R^2), optional exterior cone test
classify        range class, positivity direction, mu and normal form of a Hessian
predict         predicted eigenvalue string z_k = z0 + (mu/i) h (2k+1)
"""

from __future__ import annotations

import argparse
import cmath
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from semispec import plotting
from semispec.pipeline import (
    EXIT_CONE,
    EXIT_INPUT,
    EXIT_NO_CRITICAL_POINT,
    SCHEMA_VERSION,
    AnalysisError,
    BasisConfig,
    InputError,
    RunConfig,
    analyze,
    compute_cloud,
    write_eigen_csv,
)
from semispec.predict import predict_string
from semispec.quadratics import (
    QuadraticError,
    classify_range,
    positivity_direction,
    range_ellipse,
    select_mu,
    symplectic_normal_form,
)
from semispec.symbols import (
    ConeSpec,
    Inconclusive,
    SymbolError,
    exterior_cone_check,
    find_real_critical_points,
    hessian_at,
    parse_symbol,
    sample_range,
)

log = logging.getLogger("semispec")


def _pair(z):
    return None if z is None else [float(z.real), float(z.imag)]


def _complex_arg(text: str) -> complex:
    """Constant complex number written in the symbol grammar, e.g. ``1-2i``."""
    p = parse_symbol(text)
    if any(m != (0, 0) for m in p.coeffs):
        raise InputError(f"{text!r} is not a constant")
    return p.coeff(0, 0)


def _float_list(text: str):
    return [float(t) for t in text.split(",") if t.strip()]


def _out_dir(args) -> Path:
    out = Path(os.environ.get("SEMISPEC_OUT") or args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, kind: str, payload: dict) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "kind": kind}
    doc.update(payload)
    path.write_text(json.dumps(doc, indent=2) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_analyze(args) -> int:
    if args.config:
        config = RunConfig.from_json(args.config)
    else:
        if not args.symbol or not args.h:
            raise InputError("analyze needs --symbol and --h (or --config)")
        config = RunConfig(symbol_text=args.symbol, h_list=_float_list(args.h))
    if args.symbol and args.config:
        config.symbol_text = args.symbol
    if args.h and args.config:
        config.h_list = _float_list(args.h)
    if args.basis:
        config.bases = [BasisConfig.parse(b) for b in args.basis]
    for name in ("disc_radius", "k_use", "seed", "box_halfwidth", "grid_step", "workers"):
        val = getattr(args, name)
        if val is not None:
            setattr(config, name, val)
    if args.out:
        config.out_dir = args.out
    config.strict = config.strict or args.strict

    report = analyze(config)
    for w in report.warnings:
        log.warning(w)
    for cp in report.critical_points:
        if cp.direction is not None:
            print(
                f"critical point ({cp.x:.6g}, {cp.xi:.6g}) z0={cp.z0:.6g} mu={cp.mu:.6g} "
                f"direction={cp.direction:.6f} rad slope={math.tan(cp.direction):.4f}"
            )
    for run in report.runs:
        fit = run["fitted_direction_rad"]
        fit_s = "n/a" if fit is None else f"{fit:.6f}"
        err = run["angle_error_rad"]
        err_s = "n/a" if err is None else f"{err:.2e}"
        ntr = sum(e["trusted"] for e in run["eigenvalues"])
        print(f"h={run['h']:g} {run['basis']}: {ntr} trusted in disc, fitted={fit_s} error={err_s}")
    print(f"wrote {', '.join(report.files)} to {config.resolved_out_dir()}")
    return 0


def cmd_spectrum(args) -> int:
    p = parse_symbol(args.symbol)
    basis = BasisConfig.parse(args.basis)
    center = _complex_arg(args.center)
    out = _out_dir(args)
    rows, runs, fig = [], [], []
    for h in _float_list(args.h):
        cloud, used = compute_cloud(p, basis, h, args.tol, center, args.count)
        order = np.argsort(np.abs(cloud.values - center), kind="stable")
        rows += [(h, k, cloud.values[i], cloud.trusted[i]) for k, i in enumerate(order)]
        tv = cloud.nearest(center, args.count)
        runs.append(
            {
                "h": h,
                "basis": used.label(),
                "N": used.N,
                "eigenvalues": [
                    {"re": float(cloud.values[i].real), "im": float(cloud.values[i].imag),
                     "trusted": bool(cloud.trusted[i])}
                    for i in order
                ],
            }
        )
        fig.append((f"h={h:g} ({used.label()})", tv))
        print(f"h={h:g} {used.label()}: {int(cloud.trusted.sum())} trusted of {len(cloud.values)}")
        for z in tv:
            print(f"  {z.real:+.12f} {z.imag:+.12f}i")
    write_eigen_csv(out / "spectrum.csv", rows)
    _write_json(out / "spectrum.json", "spectrum", {"symbol": p.to_text(), "runs": runs})
    plotting.spectrum_figure(out / "spectrum.svg", fig, [], title=p.to_text())
    return 0


def cmd_pseudospectrum(args) -> int:
    p = parse_symbol(args.symbol)
    sample = sample_range(p, args.box, args.step)
    out = _out_dir(args)
    nodes = sample.nodes()
    grid = sample.grid()
    with open(out / "pseudospectrum.csv", "w") as fh:
        fh.write("x,xi,re,im\n")
        for i, xv in enumerate(nodes):
            for j, xiv in enumerate(nodes):
                z = complex(grid[i, j])
                fh.write(f"{float(xv)!r},{float(xiv)!r},{z.real!r},{z.imag!r}\n")
    vals = sample.values
    payload = {
        "symbol": p.to_text(),
        "box_halfwidth": args.box,
        "grid_step": args.step,
        "n_values": int(vals.size),
        "re_range": [float(vals.real.min()), float(vals.real.max())],
        "im_range": [float(vals.imag.min()), float(vals.imag.max())],
        "cone_check": None,
    }
    if args.theta0 is not None:
        cone = ConeSpec(args.theta0, args.eps0)
        try:
            ok = exterior_cone_check(sample, _complex_arg(args.z0), cone, args.margin)
            payload["cone_check"] = "pass" if ok else "fail"
        except Inconclusive:
            payload["cone_check"] = "inconclusive"
        print(f"exterior cone check: {payload['cone_check']}")
    _write_json(out / "pseudospectrum.json", "pseudospectrum", payload)
    plotting.range_figure(out / "pseudospectrum.svg", vals, title=p.to_text())
    print(f"{vals.size} samples; Re in {payload['re_range']}, Im in {payload['im_range']}")
    if args.strict and payload["cone_check"] not in (None, "pass"):
        return EXIT_CONE
    return 0


def _hessian_for(p, at):
    if at is not None:
        x0, xi0 = _float_list(at)
        return hessian_at(p, x0, xi0), (x0, xi0)
    cps = [c for c in find_real_critical_points(p, 4.0, 32) if c.nondegenerate]
    if cps:
        return cps[0].hessian, cps[0].location
    return hessian_at(p, 0.0, 0.0), (0.0, 0.0)


def cmd_classify(args) -> int:
    p = parse_symbol(args.symbol)
    q, loc = _hessian_for(p, args.at)
    rc = classify_range(q)
    m, u, v = range_ellipse(q)
    payload = {
        "symbol": p.to_text(),
        "at": list(loc),
        "hessian": [[_pair(complex(z)) for z in row] for row in q.H],
        "range_class": rc.as_dict(),
        "ellipse": {"center": _pair(m), "u": _pair(u), "v": _pair(v)},
        "alpha": None,
        "admissible_arc": None,
        "mu": None,
        "direction_rad": None,
        "normal_form": None,
    }
    cert = positivity_direction(q)
    if cert is not None:
        mu = select_mu(q, cert)
        nf = symplectic_normal_form(q, cert)
        payload.update(
            alpha=_pair(cert.alpha),
            admissible_arc=list(cert.admissible_arc),
            mu=_pair(mu),
            direction_rad=cmath.phase(mu / 1j),
            normal_form={
                "lambda": nf.lam,
                "a": nf.a,
                "b": nf.b,
                "alpha_nf": nf.alpha_nf,
                "mu_over_i": _pair(nf.mu_over_i),
            },
        )
    out = _out_dir(args)
    _write_json(out / "classify.json", "classify", payload)
    if rc.is_full_plane:
        print(f"FullPlane (winding {rc.winding})")
    else:
        print(f"ProperCone bisector={rc.bisector:.6f} half_aperture={rc.half_aperture:.6f}")
    if payload["mu"] is not None:
        print(f"mu={complex(*payload['mu']):.10g} direction={payload['direction_rad']:.6f} rad")
    return 0


def cmd_predict(args) -> int:
    z0 = _complex_arg(args.z0)
    if args.mu is not None:
        mu = _complex_arg(args.mu)
    elif args.mu_from_symbol:
        p = parse_symbol(args.mu_from_symbol)
        q, _ = _hessian_for(p, args.at)
        cert = positivity_direction(q)
        if cert is None:
            raise InputError("Hessian admits no positivity direction; mu is undefined")
        mu = select_mu(q, cert)
    else:
        raise InputError("predict needs --mu or --mu-from-symbol")
    pred = predict_string(z0, mu, args.h, args.k)
    out = _out_dir(args)
    _write_json(
        out / "predict.json",
        "predict",
        {
            "z0": _pair(pred.z0),
            "mu": _pair(pred.mu),
            "h": pred.h,
            "k_max": pred.k_max,
            "direction_rad": pred.direction,
            "slope": pred.slope,
            "string": [_pair(z) for z in pred.string],
        },
    )
    with open(out / "predict.csv", "w") as fh:
        fh.write("h,k,re,im\n")
        for k, z in enumerate(pred.string):
            fh.write(f"{float(pred.h)!r},{k},{float(z.real)!r},{float(z.imag)!r}\n")
    print(f"direction={pred.direction:.6f} rad slope={pred.slope:.4f}")
    for k, z in enumerate(pred.string):
        print(f"  k={k}: {z.real:+.10f} {z.imag:+.10f}i")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="semispec", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", default="semispec-out", help="output directory (env SEMISPEC_OUT wins)")

    a = sub.add_parser("analyze", help="full pipeline")
    a.add_argument("--symbol")
    a.add_argument("--config", help="JSON RunConfig")
    a.add_argument("--h", help="comma separated, strictly decreasing")
    a.add_argument("--basis", action="append", help="hermite:N or chebyshev:L:N (repeatable)")
    a.add_argument("--disc", dest="disc_radius", type=float)
    a.add_argument("--k-use", dest="k_use", type=int)
    a.add_argument("--seed", type=int)
    a.add_argument("--box", dest="box_halfwidth", type=float)
    a.add_argument("--step", dest="grid_step", type=float)
    a.add_argument("--workers", type=int)
    a.add_argument("--strict", action="store_true", help="cone-check failure is an error")
    a.add_argument("--out", default=None)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("spectrum", help="eigenvalues with trust flags")
    s.add_argument("--symbol", required=True)
    s.add_argument("--h", required=True)
    s.add_argument("--basis", default="hermite:400")
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--center", default="0")
    s.add_argument("--count", type=int, default=10)
    common(s)
    s.set_defaults(func=cmd_spectrum)

    ps = sub.add_parser("pseudospectrum", help="sample p over a real box")
    ps.add_argument("--symbol", required=True)
    ps.add_argument("--box", type=float, default=4.0)
    ps.add_argument("--step", type=float, default=0.02)
    ps.add_argument("--z0", default="0")
    ps.add_argument("--theta0", type=float)
    ps.add_argument("--eps0", type=float, default=0.3)
    ps.add_argument("--margin", type=float, default=0.05)
    ps.add_argument("--strict", action="store_true")
    common(ps)
    ps.set_defaults(func=cmd_pseudospectrum)

    c = sub.add_parser("classify", help="quadratic range class and mu")
    c.add_argument("--symbol", required=True)
    c.add_argument("--at", help="x,xi of the Hessian (default: first critical point)")
    common(c)
    c.set_defaults(func=cmd_classify)

    pr = sub.add_parser("predict", help="predicted eigenvalue string")
    pr.add_argument("--z0", default="0")
    pr.add_argument("--mu")
    pr.add_argument("--mu-from-symbol", dest="mu_from_symbol")
    pr.add_argument("--at")
    pr.add_argument("--h", type=float, required=True)
    pr.add_argument("--k", type=int, default=9)
    common(pr)
    pr.set_defaults(func=cmd_predict)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except AnalysisError as exc:
        log.error("%s", exc)
        return exc.exit_code
    except SymbolError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except QuadraticError as exc:
        log.error("%s", exc)
        return EXIT_NO_CRITICAL_POINT


if __name__ == "__main__":
    sys.exit(main())
