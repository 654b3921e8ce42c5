"""Command-line frontend: spectra, scans, correlations, BCH, and checks.

Outputs are CSV for series/spectra and JSON for summaries; every file embeds
the resolved configuration hash, code version, and seed.  With ``--plot`` a
PNG figure is rendered next to each delimited output.

Exit codes: 0 success, 2 validation error, 3 numerical non-convergence,
4 conjecture-check failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import reports
from .bch import bch_series, divergence_order, eff_overlap
from .correlations import (asymptotic_decay, exact_correlation, fit_decay,
                           truncated_correlation)
from .model import (OBSERVABLE_NAMES, ModelParams, convert_params, invert_params,
                    observable)
from .pauli import Sector
from .propagator import DENSE_GUARD, make_handle
from .spectral import (bound_verdict, condition_number, full_spectrum,
                       leading_eigenvalues, ring_prediction, singular_values)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NO_CONVERGENCE = 3
EXIT_CONJECTURE = 4


class Validation(Exception):
    pass


def _outdir(args) -> Path:
    if args.outdir:
        return Path(args.outdir)
    return Path(os.environ.get("KIRP_OUTDIR", "."))


def _params(args) -> ModelParams:
    if getattr(args, "alt_params", None):
        j, hx_alt, hz_alt = args.alt_params
        return invert_params(j, hx_alt, hz_alt)
    return ModelParams(tau=args.tau, hx=args.hx, hz=args.hz)


def _sector(spec: str) -> Sector:
    try:
        return Sector.parse(spec)
    except ValueError as exc:
        raise Validation(str(exc)) from None


def _grid(spec: str, name: str) -> np.ndarray:
    """'start:stop:num' (inclusive linspace) or a comma-separated list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise Validation(f"--{name} range must be start:stop:num")
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        if num < 1:
            raise Validation(f"--{name} grid is empty")
        return np.linspace(start, stop, num)
    vals = np.array([float(x) for x in spec.split(",") if x.strip()])
    if vals.size == 0:
        raise Validation(f"--{name} grid is empty")
    return vals


def _base_config(args, **extra) -> dict:
    p = _params(args)
    cfg = {"command": args.command, "tau": p.tau, "hx": p.hx, "hz": p.hz,
           "seed": args.seed}
    cfg.update(extra)
    return cfg


def cmd_spectrum(args) -> int:
    p = _params(args)
    sector = _sector(args.sector)
    h = make_handle(p, args.r, sector)
    cfg = _base_config(args, sector=sector.label, r=args.r, method=args.method,
                       n=args.n, tol=args.tol)
    method = args.method
    if method == "auto":
        method = "dense" if h.size <= min(args.dense_limit, DENSE_GUARD) else "krylov"
    if method == "dense":
        spec = full_spectrum(h)
    else:
        spec = leading_eigenvalues(h, n=args.n, tol=args.tol,
                                   max_iter=args.max_iter, seed=args.seed)
        if spec.converged is not None and not spec.converged.all():
            bad = int((~spec.converged).sum())
            print(f"warning: {bad} eigenpairs above residual tolerance", file=sys.stderr)
    out = _outdir(args)
    ev = spec.eigenvalues
    rows = [(i, v.real, v.imag, abs(v), np.angle(v),
             spec.residuals[i] if spec.residuals is not None else float("nan"))
            for i, v in enumerate(ev)]
    csv = reports.write_csv(out / f"spectrum_{sector.label}_r{args.r}.csv",
                            ("index", "re", "im", "abs", "arg", "residual"),
                            rows, cfg, seed=args.seed)
    verdict = bound_verdict(spec)
    summary = {"r": args.r, "sector": sector.label, "method": spec.method,
               "n_eigenvalues": int(ev.size), "lambda1": complex(spec.lambda1),
               "ring": verdict, "condition_number": condition_number(p.tau)}
    reports.write_json(csv.with_suffix(".json"), summary, cfg, seed=args.seed)
    if args.plot:
        ring = ring_prediction(p.tau)
        reports.render_spectrum(csv.with_suffix(".png"), ev, ring.r_in, ring.r_out,
                                title=f"{sector.label}, r={args.r}")
    print(f"wrote {csv} ({ev.size} eigenvalues, |lambda1|={abs(spec.lambda1):.6f})")
    if spec.method == "krylov" and spec.converged is not None and not spec.converged.all():
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _scan_point(job):
    tau, hx, hz, k_label, r, n, tol, max_iter, seed = job
    p = ModelParams(tau, hx, hz)
    h = make_handle(p, r, Sector.parse(k_label))
    try:
        spec = leading_eigenvalues(h, n=n, tol=tol, max_iter=max_iter, seed=seed)
    except Exception as exc:  # partial failures are recorded per grid point
        return {"tau": tau, "k": k_label, "r": r, "error": str(exc)}
    lam = spec.lambda1
    ring = ring_prediction(tau)
    verdict = bound_verdict(spec)
    res = float(spec.residuals[0]) if spec.residuals is not None else float("nan")
    return {"tau": tau, "k": k_label, "r": r, "abs": abs(lam), "re": lam.real,
            "im": lam.imag, "residual": res, "r_out": ring.r_out,
            "bound_ok": verdict["bound_ok"],
            "real_lambda1": abs(lam.imag) < 1e-8 * max(1.0, abs(lam.real))}


def cmd_scan(args) -> int:
    p = _params(args)
    taus = _grid(args.tau_grid, "tau-grid") if args.tau_grid else np.array([p.tau])
    if args.k_grid is not None:
        ks = [f"{k:.17g}" for k in _grid(args.k_grid, "k-grid")]
    else:
        ks = [s.strip() for s in args.sectors.split(",") if s.strip()]
    if not ks or taus.size == 0 or not args.r:
        raise Validation("scan grid is empty")
    for k in ks:
        _sector(k)  # validate early
    cfg = _base_config(args, taus=list(map(float, taus)), ks=ks, rs=args.r,
                       n=args.n, tol=args.tol)
    jobs = [(float(t), p.hx, p.hz, k, r, args.n, args.tol, args.max_iter, args.seed)
            for t in taus for k in ks for r in args.r]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_scan_point, jobs))
    else:
        results = [_scan_point(j) for j in jobs]
    out = _outdir(args)
    header = ("k", "tau", "r", "abs_lambda1", "re", "im", "residual", "r_out",
              "bound_ok", "real_lambda1", "error")
    rows = []
    failures = 0
    for res in results:
        if "error" in res:
            failures += 1
            rows.append((res["k"], res["tau"], res["r"], "", "", "", "", "", "", "",
                         res["error"].replace(",", ";")))
        else:
            rows.append((res["k"], res["tau"], res["r"], res["abs"], res["re"],
                         res["im"], res["residual"], res["r_out"],
                         res["bound_ok"], res["real_lambda1"], ""))
    csv = reports.write_csv(out / "scan.csv", header, rows, cfg, seed=args.seed)
    if args.plot:
        ok = [r for r in results if "error" not in r]
        if ok:
            if taus.size > 1:
                xs = sorted({r["tau"] for r in ok})
                key, xlabel = "tau", "$\\tau$"
            else:
                xs = sorted({float(Sector.parse(r["k"]).k) for r in ok})
                key, xlabel = "k", "k"
            groups, marks = {}, {}
            for label in sorted({(r["k"] if key == "tau" else r["r"]) for r in ok},
                                key=str):
                sel = [r for r in ok if (r["k"] if key == "tau" else r["r"]) == label]
                sel.sort(key=lambda r: float(r["tau"]) if key == "tau"
                         else float(Sector.parse(r["k"]).k))
                name = str(label) if key == "tau" else f"r={label}"
                groups[name] = [r["abs"] for r in sel]
                marks[name] = [r["real_lambda1"] for r in sel]
            reports.render_scan(csv.with_suffix(".png"), xs, groups, xlabel, marks)
    print(f"wrote {csv} ({len(rows)} grid points, {failures} failures)")
    return EXIT_OK if failures == 0 else EXIT_NO_CONVERGENCE


def cmd_correlate(args) -> int:
    p = _params(args)
    obs = observable(args.observable, p)
    cfg = _base_config(args, observable=obs.name, method=args.corr_method,
                       t_max=args.t_max, L=args.L, r=args.r,
                       n_states=args.n_states)
    out = _outdir(args)
    tag = f"corr_{obs.name}_{args.corr_method}"
    overlays = []
    if args.corr_method == "exact":
        if args.L is None:
            raise Validation("exact correlations need --L")
        series = exact_correlation(obs, p, L=args.L, t_max=args.t_max,
                                   n_states=args.n_states, seed=args.seed)
        tag += f"_L{args.L}"
    elif args.corr_method == "truncated":
        if args.r is None:
            raise Validation("truncated correlations need --r")
        h = make_handle(p, args.r, obs.sector)
        series = truncated_correlation(obs, h, args.t_max)
        tag += f"_r{args.r}"
    elif args.corr_method == "asymptotic":
        if args.r is None:
            raise Validation("asymptotic decay needs --r for the spectrum")
        h = make_handle(p, args.r, obs.sector)
        spec = leading_eigenvalues(h, n=args.n, tol=args.tol,
                                   max_iter=args.max_iter, seed=args.seed)
        series = asymptotic_decay(spec, np.arange(args.t_max + 1))
        tag += f"_r{args.r}"
    else:
        raise Validation(f"unknown method {args.corr_method!r}")
    rows = [(int(t), complex(v).real, complex(v).imag)
            for t, v in zip(series.times, series.values)]
    csv = reports.write_csv(out / f"{tag}.csv", ("t", "re", "im"), rows, cfg,
                            seed=args.seed)
    summary: dict = {"observable": obs.name, "sector": obs.sector.label,
                     "method": series.method, "meta": series.meta}
    if args.fit:
        window = tuple(int(x) for x in args.fit_window.split(":"))
        if len(window) != 2:
            raise Validation("--fit-window must be t0:t1")
        fit = fit_decay(series, model=args.fit, window=window)
        summary["fit"] = asdict(fit)
        ts = np.asarray(series.times, dtype=float)
        if args.fit == "exponential":
            overlays.append((f"fit {fit.rate:.4f}^t",
                             ts, fit.prefactor * fit.rate ** ts))
        else:
            pos = ts > 0
            overlays.append((f"fit t^-{fit.exponent:.2f}", ts[pos],
                             fit.prefactor * ts[pos] ** -fit.exponent))
    reports.write_json(csv.with_suffix(".json"), summary, cfg, seed=args.seed)
    if args.plot:
        reports.render_series(csv.with_suffix(".png"), series.times, series.values,
                              label=f"{obs.name} ({series.method})", overlays=overlays)
    print(f"wrote {csv} ({len(rows)} time steps)")
    return EXIT_OK


def cmd_bch(args) -> int:
    p = _params(args)
    cfg = _base_config(args, p_max=args.p_max, overlap_r=args.overlap_r)
    series = bch_series(args.p_max, p)
    norms = series.norms_sq
    rows = [(q + 1, norms[q], series.supports[q], len(series.terms[q]))
            for q in range(args.p_max)]
    out = _outdir(args)
    csv = reports.write_csv(out / "bch_norms.csv",
                            ("p", "norm_sq", "support", "n_terms"), rows, cfg,
                            seed=args.seed)
    p0 = divergence_order([math.sqrt(n) for n in norms])
    summary: dict = {"p_max": args.p_max,
                     "divergence_order": p0 if p0 is not None else "convergent in range",
                     "prune_threshold": 1e-14}
    overlays: dict = {}
    for r in args.overlap_r:
        h = make_handle(p, r, Sector.parse("0+"))
        if h.size <= args.dense_limit:
            spec = full_spectrum(h, want_vector=True)
        else:
            spec = leading_eigenvalues(h, n=args.n, tol=args.tol,
                                       max_iter=args.max_iter, seed=args.seed,
                                       want_vector=True)
        errs = []
        for q in range(1, args.p_max + 1):
            rep = eff_overlap(spec.leading_vector, series.conserved_sum(q), h.basis)
            errs.append(rep.error)
        overlays[f"r={r}"] = errs
        summary[f"overlap_error_r{r}"] = errs
        orows = [(q + 1, errs[q]) for q in range(args.p_max)]
        reports.write_csv(out / f"bch_overlap_r{r}.csv", ("p", "one_minus_overlap"),
                          orows, cfg, seed=args.seed)
    if args.dump_terms:
        trows = []
        for q, dens in enumerate(series.terms):
            for key in sorted(dens):
                c = dens[key]
                label = "".join("1XYZ"[d] for d in key)
                trows.append((q + 1, label, c.real, c.imag))
        reports.write_csv(out / "bch_terms.csv", ("p", "string", "re", "im"),
                          trows, cfg, seed=args.seed)
    reports.write_json(csv.with_suffix(".json"), summary, cfg, seed=args.seed)
    if args.plot:
        reports.render_bch(csv.with_suffix(".png"), norms, overlays or None)
    print(f"wrote {csv} (p_max={args.p_max}, divergence order: "
          f"{summary['divergence_order']})")
    return EXIT_OK


def cmd_svd_check(args) -> int:
    p = _params(args)
    sector = _sector(args.sector)
    if sector.is_parity:
        raise Validation("the multiplicity check needs a full momentum sector")
    h = make_handle(p, args.r, sector)
    cfg = _base_config(args, sector=sector.label, r=args.r, tol=args.tol)
    chk = singular_values(h, tol=args.tol)
    summary = {"r": args.r, "sector": sector.label, "ok": chk.ok,
               "max_deviation": chk.max_deviation, "tolerance": chk.tolerance,
               "levels": list(chk.levels), "multiplicities": [int(x) for x in chk.multiplicities],
               "condition_number": condition_number(p.tau)}
    out = _outdir(args)
    reports.write_json(out / f"svd_check_r{args.r}.json", summary, cfg, seed=args.seed)
    print(f"singular-value check r={args.r}: max deviation {chk.max_deviation:.3e} "
          f"({'ok' if chk.ok else 'VIOLATION'})")
    return EXIT_OK if chk.ok else EXIT_CONJECTURE


def cmd_params_convert(args) -> int:
    cfg = {"command": args.command, "seed": args.seed}
    if args.alt_params:
        j, hx_alt, hz_alt = args.alt_params
        p = invert_params(j, hx_alt, hz_alt)
        payload = {"direction": "alt_to_native", "J": j, "hx_alt": hx_alt,
                   "hz_alt": hz_alt, "tau": p.tau, "hx": p.hx, "hz": p.hz}
    else:
        cp = convert_params(ModelParams(args.tau, args.hx, args.hz))
        payload = {"direction": "native_to_alt", "tau": args.tau, "hx": args.hx,
                   "hz": args.hz, **asdict(cp)}
    cfg.update(payload)
    out = _outdir(args)
    path = reports.write_json(out / "params_convert.json", payload, cfg, seed=args.seed)
    for k, v in payload.items():
        print(f"{k} = {v}")
    print(f"wrote {path}")
    return EXIT_OK


def _read_config_file(path: str) -> list[str]:
    """key = value lines become --key value argument pairs."""
    extra: list[str] = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise Validation(f"bad config line {line!r} (expected key = value)")
        key, val = (s.strip() for s in line.split("=", 1))
        extra.append(f"--{key.replace('_', '-')}")
        extra.extend(val.split())
    return extra


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kirp", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, params=True):
        if params:
            sp.add_argument("--tau", type=float, default=0.45)
            sp.add_argument("--hx", type=float, default=0.9)
            sp.add_argument("--hz", type=float, default=0.8)
            sp.add_argument("--alt-params", type=float, nargs=3,
                            metavar=("J", "HX_ALT", "HZ_ALT"),
                            help="single-kick parametrization; converted before use")
        sp.add_argument("--outdir", default=None,
                        help="output directory (default: $KIRP_OUTDIR or .)")
        sp.add_argument("--seed", type=int, default=7)
        sp.add_argument("--config", default=None,
                        help="key = value file providing defaults for this command")
        sp.add_argument("--plot", action="store_true",
                        help="render a PNG next to each delimited output")

    def solver(sp):
        sp.add_argument("--n", type=int, default=6, help="number of leading eigenvalues")
        sp.add_argument("--tol", type=float, default=1e-9)
        sp.add_argument("--max-iter", type=int, default=5000)
        sp.add_argument("--dense-limit", type=int, default=7000,
                        help="largest sector size solved densely in auto mode")

    sp = sub.add_parser("spectrum", help="eigenvalues of M(k) in one sector")
    common(sp)
    solver(sp)
    sp.add_argument("--sector", required=True, help="0+, 0-, pi, or a k value in radians")
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--method", choices=("auto", "dense", "krylov"), default="auto")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("scan", help="leading eigenvalue over a k and/or tau grid")
    common(sp)
    solver(sp)
    sp.add_argument("--k-grid", default=None, help="start:stop:num or comma list (radians)")
    sp.add_argument("--sectors", default="0+,0-,pi",
                    help="sector labels when no --k-grid is given")
    sp.add_argument("--tau-grid", default=None, help="start:stop:num or comma list")
    sp.add_argument("--r", type=int, nargs="+", required=True)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("correlate", help="correlation series and decay fits")
    common(sp)
    solver(sp)
    sp.add_argument("--observable", required=True, choices=OBSERVABLE_NAMES)
    sp.add_argument("--method", dest="corr_method", required=True,
                    choices=("exact", "truncated", "asymptotic"))
    sp.add_argument("--t-max", type=int, default=50)
    sp.add_argument("--L", type=int, default=None)
    sp.add_argument("--r", type=int, default=None)
    sp.add_argument("--n-states", type=int, default=1)
    sp.add_argument("--fit", choices=("exponential", "power_law"), default=None)
    sp.add_argument("--fit-window", default="10:40")
    sp.set_defaults(func=cmd_correlate)

    sp = sub.add_parser("bch", help="BCH term norms, divergence order, overlaps")
    common(sp)
    solver(sp)
    sp.add_argument("--p-max", type=int, default=12)
    sp.add_argument("--overlap-r", type=int, nargs="*", default=[],
                    help="sector support bounds for eigenvector overlap curves")
    sp.add_argument("--dump-terms", action="store_true")
    sp.set_defaults(func=cmd_bch)

    sp = sub.add_parser("svd-check", help="exact singular-value conjecture check")
    common(sp)
    sp.add_argument("--sector", default="0.7853981633974483",
                    help="full momentum sector (k in radians)")
    sp.add_argument("--r", type=int, default=4)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.set_defaults(func=cmd_svd_check)

    sp = sub.add_parser("params-convert", help="native <-> single-kick parametrization")
    common(sp)
    sp.set_defaults(func=cmd_params_convert)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        # a config file contributes defaults; explicit flags win by coming later
        if "--config" in argv:
            i = argv.index("--config")
            extra = _read_config_file(argv[i + 1])
            argv = argv[:1] + extra + argv[1:]
        args = ap.parse_args(argv)
        if getattr(args, "p_max", 1) < 1:
            raise Validation("--p-max must be >= 1")
        return args.func(args)
    except Validation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
