"""Global error norms, empirical convergence orders, and sweep tables.

Fourteen error measures are computed per run: four on the node solution,
three on the local solution at the quadrature nodal points, four on the
local solution at grid nodes, and three continuous norms of the local
solution.  Orders come from a least-squares fit of lg e against lg dt.
"""

from dataclasses import dataclass, field
from typing import Optional

import mpmath as mp

from .basis import compute_nodes, compute_weights
from .solver import eval_local, trajectory_eval

# column layout of the order table, matching the reference presentation
ORDER_COLUMNS = ("n_final", "n_l1", "n_l2", "n_linf", "p_G",
                 "ln_final", "ln_l1", "ln_l2", "ln_linf",
                 "l_l1", "l_l2", "l_linf",
                 "lq_l1", "lq_l2", "lq_linf", "p_L")

ERROR_FIELDS = ("n_l1", "n_l2", "n_linf", "n_final",
                "lq_l1", "lq_l2", "lq_linf",
                "ln_l1", "ln_l2", "ln_linf", "ln_final",
                "l_l1", "l_l2", "l_linf")


class AnalysisError(ValueError):
    pass


class ZeroErrorFloor(AnalysisError):
    """An error hit exact zero: below the roundoff floor, no order fits."""


@dataclass(frozen=True)
class ErrorReport:
    n: int
    m: int
    dt: mp.mpf
    errors: dict    # name -> value, names per ERROR_FIELDS

    def __getitem__(self, key):
        return self.errors[key]


@dataclass(frozen=True)
class ConvergenceTable:
    n_values: tuple
    m_values: tuple
    orders: dict        # N -> {column -> fitted order}, plus p_G / p_L refs
    fit_residuals: dict  # N -> {column -> rms residual of the log-log fit}
    reports: dict       # (N, M) -> ErrorReport
    trajectories: Optional[dict] = None


def _vec_err(u, v, norm):
    if norm == "euclid":
        return mp.sqrt(mp.fsum(abs(a - b) ** 2 for a, b in zip(u, v)))
    return max(abs(a - b) for a, b in zip(u, v))


def _golden_max(f, lo, hi, iters=60):
    inv = (mp.sqrt(5) - 1) / 2
    a, b = lo, hi
    x1 = b - inv * (b - a)
    x2 = a + inv * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv * (b - a)
            f1 = f(x1)
    return max(f1, f2)


def compute_errors(traj, reference, ctx, *, norm="max", sup_samples=64):
    """All 14 global error measures of a trajectory against a reference.

    Node sums run n = 0..M weighting term n by the step of interval
    min(n, M-1); the local solution at an interior grid node is taken
    from the left interval.  Continuous L1/L2 norms use a Gauss rule with
    N+8 points per interval; the continuous sup-norm is sampled densely
    and polished by golden-section refinement around the best sample.
    """
    tab = traj.tableau
    basis = tab.basis
    m = len(traj.locals)
    n = tab.n
    with ctx.workdps(10):
        ref_nodes = [reference(t) for t in traj.times]
        dtn = lambda i: traj.locals[min(i, m - 1)].dt_n

        # node solution
        node_err = [_vec_err(traj.values[i], ref_nodes[i], norm)
                    for i in range(m + 1)]
        e = {}
        e["n_l1"] = mp.fsum(dtn(i) * node_err[i] for i in range(m + 1))
        e["n_l2"] = mp.sqrt(mp.fsum(dtn(i) * node_err[i] ** 2
                                    for i in range(m + 1)))
        e["n_linf"] = max(node_err)
        e["n_final"] = node_err[m]

        # local solution at grid nodes (left interval at interior nodes)
        ln_err = [_vec_err(trajectory_eval(traj, traj.times[i]),
                           ref_nodes[i], norm) for i in range(m + 1)]
        e["ln_l1"] = mp.fsum(dtn(i) * ln_err[i] for i in range(m + 1))
        e["ln_l2"] = mp.sqrt(mp.fsum(dtn(i) * ln_err[i] ** 2
                                     for i in range(m + 1)))
        e["ln_linf"] = max(ln_err)
        e["ln_final"] = ln_err[m]

        # local solution at the quadrature nodal points
        tf = traj.times[-1]
        pts = []
        for i, loc in enumerate(traj.locals):
            for p in range(tab.stages):
                t_np = loc.t_n + basis.tau[p] * loc.dt_n
                err = _vec_err(loc.qhat[p], reference(t_np), norm)
                pts.append((t_np, err))
        lq_l1 = lq_l2 = mp.mpf(0)
        lq_linf = mp.mpf(0)
        for j, (t_np, err) in enumerate(pts):
            nxt = pts[j + 1][0] if j + 1 < len(pts) else tf
            gap = nxt - t_np
            lq_l1 += gap * err
            lq_l2 += gap * err ** 2
            lq_linf = max(lq_linf, err)
        e["lq_l1"], e["lq_l2"], e["lq_linf"] = lq_l1, mp.sqrt(lq_l2), lq_linf

        # continuous norms of the local solution
        qn = n + 7  # degree for an (N+8)-point Gauss rule
        qtau = compute_nodes(qn, "gauss-legendre", ctx)
        qw = compute_weights(qtau, ctx)
        l_l1 = l_l2 = mp.mpf(0)
        l_linf = mp.mpf(0)
        for loc in traj.locals:
            def err_at(t):
                return _vec_err(eval_local(loc, basis, t), reference(t), norm)
            for tq, wq in zip(qtau, qw):
                v = err_at(loc.t_n + tq * loc.dt_n)
                l_l1 += loc.dt_n * wq * v
                l_l2 += loc.dt_n * wq * v ** 2
            ts = [loc.t_n + loc.dt_n * mp.mpf(i) / (sup_samples - 1)
                  for i in range(sup_samples)]
            vals = [err_at(t) for t in ts]
            best = max(range(sup_samples), key=lambda i: vals[i])
            lo = ts[max(best - 1, 0)]
            hi = ts[min(best + 1, sup_samples - 1)]
            l_linf = max(l_linf, vals[best], _golden_max(err_at, lo, hi))
        e["l_l1"], e["l_l2"], e["l_linf"] = l_l1, mp.sqrt(l_l2), l_linf

        return ErrorReport(n=n, m=m, dt=max(loc.dt_n for loc in traj.locals),
                           errors=e)


def fit_order(points, floor=None):
    """Least-squares slope of lg e against lg dt; needs >= 3 points.

    Returns (order, rms_residual).  Raises ZeroErrorFloor when any error
    is zero or sits at or below the supplied roundoff floor (run at
    higher digits or lower degree).
    """
    if len(points) < 3:
        raise AnalysisError("order fit needs at least 3 grid levels")
    for dt, err in points:
        if err <= 0 or (floor is not None and err <= floor):
            raise ZeroErrorFloor(
                "error at the roundoff floor; cannot fit an order")
    xs = [mp.log10(dt) for dt, _ in points]
    if len(set(str(x) for x in xs)) != len(xs):
        raise AnalysisError("dt values must be distinct")
    ys = [mp.log10(err) for _, err in points]
    xm = mp.fsum(xs) / len(xs)
    ym = mp.fsum(ys) / len(ys)
    sxx = mp.fsum((x - xm) ** 2 for x in xs)
    sxy = mp.fsum((x - xm) * (y - ym) for x, y in zip(xs, ys))
    slope = sxy / sxx
    icept = ym - slope * xm
    rms = mp.sqrt(mp.fsum((y - (icept + slope * x)) ** 2
                          for x, y in zip(xs, ys)) / len(xs))
    return slope, rms


def _study_cell(spec, n, m, digits, norm):
    """One (N, M) run as a picklable unit for the process pool.

    Rebuilds everything from the problem spec string; errors travel back
    as decimal strings because worker precision state does not.
    """
    from .arith import make_context
    from .problems import catalog_lookup
    from .solver import SolverConfig, integrate
    from .tableau import build_tableau

    ctx = make_context(digits)
    entry = catalog_lookup(spec)
    tab = build_tableau(n, "gauss-legendre", ctx)
    traj = integrate(tab, entry.problem, m, SolverConfig(), ctx)
    rep = compute_errors(traj, entry.problem.exact, ctx, norm=norm)
    nd = digits + 20
    return (n, m, mp.nstr(rep.dt, nd),
            {k: mp.nstr(v, nd) for k, v in rep.errors.items()})


def convergence_study(entry, n_values, m_values, ctx, *, config=None,
                      norm="max", keep_trajectories=False,
                      oracle_kwargs=None, progress=None,
                      jobs=1, problem_spec=None):
    """Run the (N, M) sweep for a catalog entry and fit all 14 orders.

    With jobs > 1 the cells run in a process pool; that path needs a
    problem_spec string, an exact reference, default solver settings, and
    keep_trajectories off, else the sweep falls back to sequential.
    """
    from .solver import SolverConfig, integrate
    from .tableau import build_tableau

    if any(m < 1 for m in m_values):
        raise AnalysisError("all interval counts must be >= 1")
    if (jobs > 1 and problem_spec is not None and config is None
            and not keep_trajectories and entry.problem.exact is not None):
        return _parallel_study(problem_spec, n_values, m_values, ctx,
                               norm=norm, jobs=jobs, progress=progress)
    if entry.problem.exact is not None:
        reference = entry.problem.exact
    elif entry.reference_kind == "high-order-oracle":
        from .problems import build_oracle_reference
        reference = build_oracle_reference(
            entry, max(n_values), max(m_values), ctx, **(oracle_kwargs or {}))
    else:
        raise AnalysisError(f"problem {entry.name!r} has no reference")
    if config is None:
        config = SolverConfig()

    reports = {}
    trajectories = {} if keep_trajectories else None
    orders = {}
    residuals = {}
    for n in n_values:
        tab = build_tableau(n, "gauss-legendre", ctx)
        cells = []
        for m in m_values:
            traj = integrate(tab, entry.problem, m, config, ctx)
            rep = compute_errors(traj, reference, ctx, norm=norm)
            reports[(n, m)] = rep
            cells.append(rep)
            if keep_trajectories:
                trajectories[(n, m)] = traj
            if progress:
                progress(n, m)
        row = {}
        rrow = {}
        floor = 10 ** 6 * ctx.unit_roundoff
        for name in ERROR_FIELDS:
            p, rms = fit_order([(rep.dt, rep[name]) for rep in cells], floor)
            row[name], rrow[name] = p, rms
        row["p_G"] = 2 * n + 1
        row["p_L"] = n + 1
        orders[n] = row
        residuals[n] = rrow
    return ConvergenceTable(n_values=tuple(n_values), m_values=tuple(m_values),
                            orders=orders, fit_residuals=residuals,
                            reports=reports, trajectories=trajectories)


def _parallel_study(spec, n_values, m_values, ctx, *, norm, jobs, progress):
    import concurrent.futures

    reports = {}
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        futs = [pool.submit(_study_cell, spec, n, m, ctx.decimal_digits, norm)
                for n in n_values for m in m_values]
        for fut in concurrent.futures.as_completed(futs):
            n, m, dt_s, err_s = fut.result()
            with ctx.workdps(20):
                reports[(n, m)] = ErrorReport(
                    n=n, m=m, dt=mp.mpf(dt_s),
                    errors={k: mp.mpf(v) for k, v in err_s.items()})
            if progress:
                progress(n, m)
    orders = {}
    residuals = {}
    for n in n_values:
        cells = [reports[(n, m)] for m in m_values]
        row, rrow = {}, {}
        floor = 10 ** 6 * ctx.unit_roundoff
        for name in ERROR_FIELDS:
            p, rms = fit_order([(rep.dt, rep[name]) for rep in cells], floor)
            row[name], rrow[name] = p, rms
        row["p_G"] = 2 * n + 1
        row["p_L"] = n + 1
        orders[n] = row
        residuals[n] = rrow
    return ConvergenceTable(n_values=tuple(n_values), m_values=tuple(m_values),
                            orders=orders, fit_residuals=residuals,
                            reports=reports, trajectories=None)


def interface_identity_residual(traj, ctx):
    """Max over intervals of |local solution at the interval end - u_{n+1}|."""
    with ctx.workdps(10):
        res = mp.mpf(0)
        for i, loc in enumerate(traj.locals):
            v = eval_local(loc, traj.tableau.basis, loc.t_n + loc.dt_n)
            res = max(res, max(abs(a - b)
                               for a, b in zip(v, traj.values[i + 1])))
        return res


def format_order_table(table, fmt="table"):
    """Render the order table; columns follow ORDER_COLUMNS."""
    header = ["N"] + list(ORDER_COLUMNS)
    rows = []
    for n in table.n_values:
        row = [str(n)]
        for col in ORDER_COLUMNS:
            v = table.orders[n][col]
            row.append(str(v) if isinstance(v, int) else mp.nstr(v, 4))
        rows.append(row)
    if fmt == "csv":
        return "\n".join(",".join(r) for r in [header] + rows)
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(h.rjust(w) for h, w in zip(r, widths))
             for r in [header] + rows]
    return "\n".join(lines)


def format_raw_errors(table, fmt="table"):
    """Dump (N, M, dt, 14 errors) rows for plotting."""
    header = ["N", "M", "dt"] + list(ERROR_FIELDS)
    rows = []
    for (n, m) in sorted(table.reports):
        rep = table.reports[(n, m)]
        rows.append([str(n), str(m), mp.nstr(rep.dt, 8)]
                    + [mp.nstr(rep[f], 8) for f in ERROR_FIELDS])
    sep = "," if fmt == "csv" else "  "
    return "\n".join(sep.join(r) for r in [header] + rows)
