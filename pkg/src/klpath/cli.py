"""Command-line front end: sums, paths, series samples, moments, verification.

Exit codes: 0 ok, 1 verification failure, 2 usage, 3 unsupported regime,
4 resource guard.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from time import perf_counter

import numpy as np

from . import output
from .errors import (
    DomainError,
    KlpathError,
    NotCoprime,
    NotInvertible,
    PatternCollision,
    PreconditionViolated,
    ResourceLimit,
    UnsupportedRegime,
)
from .kloosterman import (
    KloostermanParams,
    kl_closed,
    kl_closed_over_units,
    kl_naive,
    partial_sums_stream,
)
from .modular import PrimePowerModulus
from .random_series import (
    limit_mixed_second_moment,
    mu_moment,
    series_moment_mc,
    series_sample_paths,
)
from .stats import ExperimentReport, MomentSpec, _jsonable, empirical_moment
from .verify import DEFAULT_SEED, SUITES, run_suite

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_UNSUPPORTED = 3
EXIT_RESOURCE = 4

PATH_MODULUS_GUARD = 10 ** 8

_DEFAULT_MOMENT_TOL = {1: 0.05, 2: 0.05, 3: 0.10, 4: 0.15, 6: 0.60}


def _resolve_threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("KLPATH_THREADS")
    if env and env.isdigit():
        return int(env)
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="klpath",
        description="Kloosterman sums and paths modulo odd prime powers",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker hint (results are thread-count independent); "
        "defaults to KLPATH_THREADS or the logical core count",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sum = sub.add_parser("sum", help="one complete normalized sum")
    p_sum.add_argument("--p", type=int, required=True)
    p_sum.add_argument("--n", type=int, required=True)
    p_sum.add_argument("--a", type=int, required=True)
    p_sum.add_argument("--b", type=int, required=True)
    p_sum.add_argument("--method", choices=("naive", "closed", "both"), default="both")
    p_sum.set_defaults(func=cmd_sum)

    p_path = sub.add_parser("path", help="partial-sum path as CSV/SVG/PNG")
    p_path.add_argument("--p", type=int, required=True)
    p_path.add_argument("--n", type=int, required=True)
    p_path.add_argument("--a", type=int, required=True)
    p_path.add_argument("--b", type=int, required=True)
    p_path.add_argument("--csv", help="CSV target path, or - for stdout")
    p_path.add_argument("--svg", help="SVG target path")
    p_path.add_argument("--figure", help="PNG figure target path")
    p_path.set_defaults(func=cmd_path)

    p_series = sub.add_parser("series", help="sample the limiting random series")
    p_series.add_argument("--H", type=int, default=1024, help="truncation order")
    p_series.add_argument("--samples", type=int, default=4)
    p_series.add_argument("--grid", type=int, default=512, help="grid size on [0, 1]")
    p_series.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_series.add_argument("--out", help="CSV target path, or - for stdout")
    p_series.add_argument("--figure", help="PNG figure target path")
    p_series.set_defaults(func=cmd_series)

    p_mom = sub.add_parser("moments", help="empirical moments against references")
    p_mom.add_argument("--p", type=int, required=True)
    p_mom.add_argument("--n", type=int, required=True)
    p_mom.add_argument("--b0", type=int, default=1)
    p_mom.add_argument(
        "--power",
        type=int,
        action="append",
        default=None,
        help="complete-sum moment order(s); repeatable",
    )
    p_mom.add_argument("--t", help="comma list of times for a joint path moment")
    p_mom.add_argument("--conj", help="comma list of conjugate powers")
    p_mom.add_argument("--pow", dest="plain", help="comma list of plain powers")
    p_mom.add_argument("--tol", type=float, default=None)
    p_mom.add_argument("--mc-samples", type=int, default=None,
                       help="Monte Carlo reference sample count")
    p_mom.add_argument("--mc-H", type=int, default=1024)
    p_mom.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_mom.add_argument("--csv", help="CSV target path")
    p_mom.add_argument("--figure", help="PNG figure target path")
    p_mom.set_defaults(func=cmd_moments)

    p_ver = sub.add_parser("verify", help="run verification suites")
    p_ver.add_argument(
        "--suite",
        choices=sorted(SUITES) + ["all"],
        default="all",
    )
    p_ver.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_ver.add_argument("--json", action="store_true", help="machine-readable output")
    p_ver.add_argument("--outdir", help="write report JSON, CSV dumps and figures here")
    p_ver.set_defaults(func=cmd_verify)

    return parser


def cmd_sum(args) -> int:
    started = perf_counter()
    mod = PrimePowerModulus(args.p, args.n)
    params = KloostermanParams(mod, args.a, args.b)
    payload: dict = {
        "p": args.p,
        "n": args.n,
        "a": args.a,
        "b": args.b,
        "method": args.method,
    }
    values: dict = {}
    if args.method in ("naive", "both"):
        v = kl_naive(params)
        values["naive"] = {"re": v.real, "im": v.imag}
    if args.method in ("closed", "both"):
        values["closed"] = kl_closed(params)
    payload["values"] = values
    if args.method == "both":
        diff = abs(complex(values["closed"]) - complex(
            values["naive"]["re"], values["naive"]["im"]
        ))
        payload["max_abs_diff"] = diff
    payload["seconds"] = perf_counter() - started
    print(json.dumps(_jsonable(payload), sort_keys=True))
    return EXIT_OK


def cmd_path(args) -> int:
    mod = PrimePowerModulus(args.p, args.n)
    if mod.q > PATH_MODULUS_GUARD:
        raise ResourceLimit(
            f"path emission is gated to q <= {PATH_MODULUS_GUARD}; got q = {mod.q}"
        )
    params = KloostermanParams(mod, args.a, args.b)
    config = {
        "command": "path",
        "p": args.p,
        "n": args.n,
        "a": params.a,
        "b": params.b,
    }
    points = list(partial_sums_stream(params))
    wrote_any = False
    csv_target = args.csv
    if csv_target is None and not args.svg and not args.figure:
        csv_target = "-"
    if csv_target:
        if csv_target == "-":
            output.write_path_csv(points, sys.stdout, config)
        else:
            with open(csv_target, "w") as fh:
                output.write_path_csv(points, fh, config)
        wrote_any = True
    if args.svg:
        output.write_path_svg(points, args.svg, config)
        wrote_any = True
    if args.figure:
        from . import figures

        figures.save_path_figure(
            points, args.figure, label=f"q = {args.p}^{args.n}, (a, b) = ({params.a}, {params.b})"
        )
        wrote_any = True
    return EXIT_OK if wrote_any else EXIT_USAGE


def cmd_series(args) -> int:
    if args.H < 1 or args.samples < 1 or args.grid < 1:
        raise PreconditionViolated("H, samples and grid must all be >= 1")
    grid = np.linspace(0.0, 1.0, args.grid)
    paths = series_sample_paths(grid, args.H, args.samples, args.seed)
    config = {
        "command": "series",
        "H": args.H,
        "samples": args.samples,
        "grid": args.grid,
        "seed": args.seed,
    }
    target = args.out or "-"
    if target == "-":
        output.write_series_csv(grid, paths, sys.stdout, config)
    else:
        with open(target, "w") as fh:
            output.write_series_csv(grid, paths, fh, config)
    if args.figure:
        from . import figures

        figures.save_series_figure(grid, paths, args.figure)
    return EXIT_OK


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def cmd_moments(args) -> int:
    mod = PrimePowerModulus(args.p, args.n)
    config = {
        "command": "moments",
        "p": args.p,
        "n": args.n,
        "b0": args.b0,
        "seed": args.seed,
    }
    reports: list[ExperimentReport] = []
    if args.power:
        started = perf_counter()
        values = kl_closed_over_units(mod, b0=args.b0)
        for m in args.power:
            t0 = perf_counter()
            est = float(np.mean(values ** m))
            ref = mu_moment(m)
            tol = args.tol if args.tol is not None else _DEFAULT_MOMENT_TOL.get(
                m, 0.1 * (1.0 + abs(ref))
            )
            reports.append(
                ExperimentReport(
                    name=f"complete-sum-moment-m{m}",
                    params=dict(config, power=m),
                    observed=est,
                    reference=ref,
                    provenance="central binomial moments of the limit law",
                    tolerance=tol,
                    passed=abs(est - ref) <= tol,
                    seconds=perf_counter() - t0,
                )
            )
        config["batch_seconds"] = perf_counter() - started
    if args.t:
        ts = _parse_float_list(args.t)
        conj = _parse_int_list(args.conj) if args.conj else tuple(0 for _ in ts)
        plain = _parse_int_list(args.plain) if args.plain else tuple(1 for _ in ts)
        spec = MomentSpec(ts, conj, plain, b0=args.b0)
        t0 = perf_counter()
        est = empirical_moment(spec, mod)
        reference = None
        provenance = "no reference requested"
        if args.mc_samples:
            reference, se = series_moment_mc(
                ts, conj, plain, H=args.mc_H, N=args.mc_samples, seed=args.seed
            )
            provenance = f"Monte Carlo (stderr {se:.2e})"
        elif len(ts) == 1 and conj == (1,) and plain == (1,):
            reference = complex(ts[0])
            provenance = "series covariance identity"
        elif len(ts) == 2 and conj == (1, 0) and plain == (0, 1):
            reference = limit_mixed_second_moment(ts[0], ts[1])
            provenance = "series covariance identity"
        tol = args.tol if args.tol is not None else 0.05
        passed = True if reference is None else abs(est - reference) <= tol
        reports.append(
            ExperimentReport(
                name="joint-path-moment",
                params=dict(config, t=list(ts), conj=list(conj), pow=list(plain)),
                observed=est,
                reference=reference,
                provenance=provenance,
                tolerance=tol,
                passed=passed,
                seconds=perf_counter() - t0,
            )
        )
    if not reports:
        print("nothing to compute: pass --power and/or --t", file=sys.stderr)
        return EXIT_USAGE
    print(output.reports_json(reports, config))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(output.config_comment(config) + "\n")
            fh.write("name,observed,reference,tolerance,pass\n")
            for r in reports:
                obs = r.observed if not isinstance(r.observed, complex) else r.observed.real
                ref = r.reference if not isinstance(r.reference, complex) else r.reference.real
                fh.write(
                    f"{r.name},{output.format_float(obs)},"
                    f"{'' if ref is None else output.format_float(ref)},"
                    f"{output.format_float(r.tolerance)},{int(r.passed)}\n"
                )
    if args.figure and args.power:
        from . import figures

        labels = list(args.power)
        obs = [r.observed for r in reports[: len(labels)]]
        ref = [r.reference for r in reports[: len(labels)]]
        figures.save_moment_figure(labels, obs, ref, args.figure)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY_FAILED


def _write_verify_artifacts(reports: list[ExperimentReport], outdir: Path, config: dict) -> None:
    from . import figures

    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "verify_report.json").write_text(output.reports_json(reports, config))
    by_name = {r.name: r for r in reports}
    if "equidistribution-499^2" in by_name:
        values = kl_closed_over_units(PrimePowerModulus(499, 2), b0=1)
        figures.save_cdf_figure(values, outdir / "equidistribution_cdf.png")
        with open(outdir / "equidistribution_histogram.csv", "w") as fh:
            output.write_histogram_csv(values, fh, config=config)
    if "measure-moments-499^2" in by_name:
        rep = by_name["measure-moments-499^2"]
        labels = sorted(rep.observed, key=int)
        figures.save_moment_figure(
            labels,
            [rep.observed[m] for m in labels],
            [rep.reference[int(m)] if isinstance(rep.reference, dict) else 0.0
             for m in labels],
            outdir / "measure_moments.png",
        )
    if "series-truncation-decay" in by_name:
        rep = by_name["series-truncation-decay"]
        hs = rep.params["H_values"]
        figures.save_decay_figure(
            hs,
            [rep.observed["gaps"][str(h)] for h in hs],
            rep.observed["fitted_exponent"],
            outdir / "series_decay.png",
        )
    if "fourth-moment-ratio-cap" in by_name:
        rep = by_name["fourth-moment-ratio-cap"]
        figures.save_ratio_histogram(
            rep.observed["ratios"],
            rep.reference["ratio_cap"],
            outdir / "fourth_moment_ratios.png",
            "fourth-moment ratio",
        )
    for name, rep in by_name.items():
        if name.startswith("tightness-increment-q"):
            figures.save_ratio_histogram(
                rep.observed["ratios"],
                rep.reference["ratio_cap"],
                outdir / f"{name}.png",
                "increment ratio",
            )


def cmd_verify(args) -> int:
    config = {
        "command": "verify",
        "suite": args.suite,
        "seed": args.seed,
    }
    reports = run_suite(args.suite, seed=args.seed)
    if args.json:
        print(output.reports_json(reports, config))
    else:
        print(output.config_comment(config))
        for r in reports:
            tag = "PASS" if r.passed else "FAIL"
            print(f"{tag}  {r.name:<36} ({r.seconds:.2f}s)")
    if args.outdir:
        _write_verify_artifacts(reports, Path(args.outdir), config)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY_FAILED


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    _resolve_threads(args)
    try:
        return args.func(args)
    except UnsupportedRegime as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except ResourceLimit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (
        DomainError,
        NotCoprime,
        NotInvertible,
        PatternCollision,
        PreconditionViolated,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KlpathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
