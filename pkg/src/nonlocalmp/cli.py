"""Command-line entry point.

Runs a single solve or a convergence study from a flat key = value
configuration file or a bundled case preset.  Exit codes: 0 converged,
2 trivial-solution capture, 3 solver failure, 4 configuration error.
"""

import argparse
import sys

from . import assembly, cases, fem, kernels, verify
from .config import parse_config_file, parse_config_text
from .errors import ConfigError, NonlocalMPError

__all__ = ["main"]

EXIT_OK = 0
EXIT_TRIVIAL = 2
EXIT_SOLVER = 3
EXIT_CONFIG = 4


def _build_parser():
    p = argparse.ArgumentParser(
        prog="nonlocalmp",
        description="Mountain-pass descent solver for nonlocal equations "
                    "-Lu = f(x,u) with Dirichlet or Neumann volume "
                    "constraints, plus a residual/error verification "
                    "harness.")
    p.add_argument("--config", metavar="PATH", help="run configuration file")
    p.add_argument("--case", metavar="NAME",
                   help="bundled case preset (see --list-cases)")
    p.add_argument("--list-cases", action="store_true",
                   help="print the bundled case presets and exit")
    p.add_argument("--out", metavar="PATH",
                   help="write the solution as two-column CSV")
    p.add_argument("--log", metavar="PATH",
                   help="write the iteration log CSV here instead of stdout")
    p.add_argument("--dump-matrix", metavar="PATH",
                   help="write the assembled matrix in coordinate format")
    p.add_argument("--jobs", type=int, default=1, metavar="N",
                   help="parallel workers for convergence-study rows")
    return p


def _print_header(spec, out=None):
    out = out if out is not None else sys.stdout
    for key, value in spec.echo_items():
        print(f"# {key} = {value}", file=out)
    try:
        diag = kernels.diagnostics(spec.make_kernel(), 1e-8)
        d = spec.domain[1] - spec.domain[0]
        beta_est = 0.5 * diag.second_moment / d**2
        print(f"# kernel mass = {diag.total_mass:.6g}, second moment = "
              f"{diag.second_moment:.6g}", file=out)
        print(f"# coercivity heuristic ~ {beta_est:.3g} "
              f"(second moment / 2 d^2; informational only)", file=out)
    except NonlocalMPError:
        pass


def _log_records(result, path):
    lines = ["iteration,energy,grad_norm_h1,t_star,halvings"]
    for r in result.records:
        lines.append(f"{r.iteration},{r.energy:.12g},{r.grad_norm_h1:.8g},"
                     f"{r.t_star:.10g},{r.halvings_used}")
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report_line(r):
    return (f"{r.h:.10g},{r.n_dof},{r.R_L1:.8g},{r.R_L2:.8g},"
            f"{r.E_L1:.8g},{r.E_L2:.8g},{r.iterations},{r.wall_time_s:.3g}")


def _exit_code(reports):
    if any(r.failed for r in reports):
        return EXIT_SOLVER
    if any(r.trivial for r in reports):
        return EXIT_TRIVIAL
    return EXIT_OK


def _run_single(spec, args):
    run = verify.run_single(spec, spec.h)
    r = run.report
    if run.result is not None:
        _log_records(run.result, args.log or spec.outputs.get("log"))
        out_path = args.out or spec.outputs.get("solution")
        if out_path:
            fem.write_function_csv(out_path, run.result.solution)
    if args.dump_matrix:
        assembly.dump_matrix(args.dump_matrix, run.form)
    print(",".join(verify.REPORT_COLUMNS))
    print(_report_line(r))
    if r.failed:
        print(f"solver failure: {r.error}", file=sys.stderr)
    elif r.trivial:
        print("note: converged to the trivial (near-zero) solution",
              file=sys.stderr)
    return _exit_code([r])


def _run_study(spec, args):
    study = verify.convergence_study(spec, jobs=max(1, args.jobs))
    print(",".join(verify.REPORT_COLUMNS))
    for r in study.reports:
        print(_report_line(r))
    for col, order in study.orders.items():
        shown = "n/a" if order is None else f"{order:.3f}"
        print(f"# fitted order {col}: {shown}")
    report_path = spec.outputs.get("report")
    if report_path:
        verify.write_report_csv(report_path, study.reports)
    plot_path = spec.outputs.get("plot")
    if plot_path:
        verify.write_plot_data(plot_path, study.reports)
    for r in study.reports:
        if r.failed:
            print(f"row h={r.h:.6g} failed: {r.error}", file=sys.stderr)
        elif r.trivial:
            print(f"row h={r.h:.6g} captured the trivial solution",
                  file=sys.stderr)
    return _exit_code(study.reports)


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.list_cases:
        print(cases.list_cases_text())
        return EXIT_OK

    if bool(args.config) == bool(args.case):
        print("error: exactly one of --config or --case is required "
              "(or --list-cases)", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.case:
            spec = parse_config_text(cases.case_config_text(args.case))
        else:
            spec = parse_config_file(args.config)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        where = f" (line {exc.line})" if exc.line else ""
        print(f"config error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    _print_header(spec)
    try:
        if spec.h_list:
            return _run_study(spec, args)
        return _run_single(spec, args)
    except NonlocalMPError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
