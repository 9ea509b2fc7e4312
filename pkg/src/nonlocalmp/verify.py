"""Verification pipeline: strong-form residuals, reference errors and
convergence studies over mesh families.

A converged iterate u* is certified in two independent ways.  First, the
strong residual r(x) = (-L u*)(x) - f(u*(x)) is measured in L1 and L2
over the physical domain.  Second, the linear problem -L ubar = f(u*)
is solved with the same constraint handling and the L1/L2 distances
between u* and ubar are reported.  Running both over a family of meshes
and fitting log-log slopes gives the observed convergence orders.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import assembly, fem, mountain_pass
from .errors import (MaxIterations, NonlocalMPError, StallError)

__all__ = ["CaseReport", "StudyResult", "residual_norms", "reference_errors",
           "l1_norm_p1", "is_trivial_capture", "run_single",
           "convergence_study", "fit_orders", "write_report_csv",
           "write_plot_data", "REPORT_COLUMNS"]

REPORT_COLUMNS = ("h", "n_dof", "R_L1", "R_L2", "E_L1", "E_L2",
                  "iterations", "wall_time_s")

TRIVIAL_CAPTURE_RATIO = 1e-2


@dataclass
class CaseReport:
    """One row of a convergence table."""

    h: float
    n_dof: int
    R_L1: float
    R_L2: float
    E_L1: float
    E_L2: float
    iterations: int
    wall_time_s: float
    converged: bool = True
    trivial: bool = False
    failed: bool = False
    error: str = None


@dataclass
class StudyResult:
    reports: list
    orders: dict


@dataclass
class SingleRun:
    """Full artifacts of one (spec, h) pipeline run."""

    report: CaseReport
    result: object          # SolveResult or None on assembly failure
    form: object
    mesh: object
    M: np.ndarray
    S: np.ndarray
    u_bar: object           # FeFunction reference solution or None


def residual_norms(form, nl, u):
    """(L1, L2) norms of (-L u)(x) - f(u(x)) over the physical domain.

    The residual is sampled at the assembly Gauss points and integrated
    by the same rule.
    """
    u_full = form.as_full(u)
    r = form.operator_at_omega_quad(u_full) \
        - nl.f(form.values_at_omega_quad(u_full))
    w = form.omega_quad_weights()
    return float(w @ np.abs(r)), float(np.sqrt(max(w @ r**2, 0.0)))


def l1_norm_p1(mesh, values):
    """Exact integral of |v| over the physical domain for P1 nodal values."""
    lo, hi = mesh.interior_range
    va = values[lo:hi]
    vb = values[lo + 1:hi + 1]
    h = mesh.h
    same = va * vb >= 0.0
    trapez = 0.5 * h * (np.abs(va) + np.abs(vb))
    denom = np.abs(va) + np.abs(vb)
    denom = np.where(denom == 0.0, 1.0, denom)
    crossing = 0.5 * h * (va**2 + vb**2) / denom
    return float(np.sum(np.where(same, trapez, crossing)))


def reference_errors(form, M, nl, u, grounding_rel=1e-4):
    """Solve -L ubar = f(u) with the form's constraints; return the errors.

    Returns (E_L1, E_L2, ubar) where the norms measure u - ubar over the
    physical domain.  The linear solve reuses the grounded factorization
    of the descent problem.
    """
    u_full = form.as_full(u)
    load = form.load_vector(nl.f(form.values_at_omega_quad(u_full)))
    ubar_unknown = form.solve_spd(load, grounding_rel)
    ubar = form.fe(ubar_unknown)
    diff = u_full - ubar.values
    e_l1 = l1_norm_p1(form.mesh, diff)
    e_l2 = float(np.sqrt(max(diff @ M @ diff, 0.0)))
    return e_l1, e_l2, ubar


def is_trivial_capture(result, M):
    """True when the iterate collapsed far below its rescaled initial guess."""
    v = result.solution.values
    l2 = float(np.sqrt(max(v @ M @ v, 0.0)))
    return l2 < TRIVIAL_CAPTURE_RATIO * result.initial_l2


def run_single(spec, h, check_invariants=False):
    """Assemble, solve and verify one mesh size of a run specification."""
    t0 = time.perf_counter()
    mesh = spec.build_mesh(h)
    kernel = spec.make_kernel()
    nl = spec.make_nonlinearity()
    if spec.constraint == "dirichlet":
        form = assembly.assemble_dirichlet(mesh, kernel, spec.quad_order)
    else:
        form = assembly.assemble_neumann(mesh, kernel, spec.quad_order)
    M, S = fem.omega_norm_matrices(mesh)
    u1 = spec.initial_guess_fe(mesh)
    cfg = spec.solver_config(check_invariants=check_invariants)

    result = None
    error = None
    try:
        result = mountain_pass.solve(form, M, S, nl, u1, cfg)
    except (StallError, MaxIterations) as exc:
        result = exc.result
        error = f"{type(exc).__name__}: {exc}"
    except NonlocalMPError as exc:
        error = f"{type(exc).__name__}: {exc}"

    report = CaseReport(h=mesh.h, n_dof=mesh.n_elements,
                        R_L1=np.nan, R_L2=np.nan, E_L1=np.nan, E_L2=np.nan,
                        iterations=0, wall_time_s=0.0,
                        converged=False, failed=error is not None, error=error)
    u_bar = None
    if result is not None:
        report.iterations = result.iterations
        report.converged = result.converged
        report.trivial = is_trivial_capture(result, M)
        try:
            report.R_L1, report.R_L2 = residual_norms(form, nl, result.solution)
            report.E_L1, report.E_L2, u_bar = reference_errors(
                form, M, nl, result.solution, spec.grounding_rel)
        except NonlocalMPError as exc:
            report.failed = True
            report.error = (report.error or "") + f" verify: {exc}"
    report.wall_time_s = time.perf_counter() - t0
    return SingleRun(report, result, form, mesh, M, S, u_bar)


def _study_row(args):
    spec, h = args
    return run_single(spec, h).report


def convergence_study(spec, h_list=None, jobs=1):
    """Run the full pipeline for every mesh size and fit convergence orders.

    Rows that fail propagate their error message in the report and are
    excluded from the order fits, as are trivial-capture rows.
    """
    h_list = tuple(h_list if h_list is not None else spec.h_list)
    if len(h_list) < 3:
        raise ValueError("a convergence study needs at least 3 mesh sizes")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_study_row,
                                    [(spec, h) for h in h_list]))
    else:
        reports = [run_single(spec, h).report for h in h_list]
    return StudyResult(reports=reports, orders=fit_orders(reports))


def fit_orders(reports):
    """Least-squares log-log slopes of each norm column against h.

    Trivial-capture and failed rows are excluded; a fit needs at least 3
    usable rows, otherwise the order is None.
    """
    orders = {}
    for col in ("R_L1", "R_L2", "E_L1", "E_L2"):
        pts = [(r.h, getattr(r, col)) for r in reports
               if not r.failed and not r.trivial
               and np.isfinite(getattr(r, col)) and getattr(r, col) > 0.0]
        if len(pts) < 3:
            orders[col] = None
            continue
        logh = np.log([p[0] for p in pts])
        logv = np.log([p[1] for p in pts])
        slope = np.polyfit(logh, logv, 1)[0]
        orders[col] = float(slope)
    return orders


def write_report_csv(path, reports):
    """CSV with exactly the table columns of the convergence studies."""
    with open(path, "w") as fh:
        fh.write(",".join(REPORT_COLUMNS) + "\n")
        for r in reports:
            fh.write(f"{r.h:.10g},{r.n_dof},{r.R_L1:.8g},{r.R_L2:.8g},"
                     f"{r.E_L1:.8g},{r.E_L2:.8g},{r.iterations},"
                     f"{r.wall_time_s:.3g}\n")


def write_plot_data(path, reports):
    """Gnuplot-ready (log10 h, log10 value) pairs, one block per norm."""
    with open(path, "w") as fh:
        for col in ("R_L1", "R_L2", "E_L1", "E_L2"):
            fh.write(f"# {col}: log10(h) log10(value)\n")
            for r in reports:
                v = getattr(r, col)
                if np.isfinite(v) and v > 0.0:
                    fh.write(f"{np.log10(r.h):.8g} {np.log10(v):.8g}\n")
            fh.write("\n")
