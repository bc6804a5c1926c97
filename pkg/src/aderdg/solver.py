"""Time integration with the implicit DG-predictor method.

A step solves the stage system k_p = F(u_n + dt sum_q a_pq k_q, t_n +
tau_p dt) for the stage derivatives, reconstructs the predictor
coefficients qhat from them, and advances the node value with the
quadrature weights.  The predictor polynomial doubles as the dense
output between grid nodes.
"""

import bisect
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import mpmath as mp

from . import linalg
from .basis import eval_basis


class SolverError(ValueError):
    pass


class StageSolveError(SolverError):
    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


@dataclass(frozen=True)
class OdeProblem:
    dim: int
    rhs: Callable                      # (u, t) -> vector
    t0: mp.mpf
    tf: mp.mpf
    u0: tuple
    jacobian: Optional[Callable] = None   # (u, t) -> matrix
    exact: Optional[Callable] = None      # t -> vector

    def __post_init__(self):
        if not self.t0 < self.tf:
            raise SolverError("t0 must be less than tf")


@dataclass(frozen=True)
class SolverConfig:
    stage_tol: Optional[mp.mpf] = None  # None: 10^(-digits+20) from ctx
    max_newton: int = 60
    jacobian_mode: str = "auto"         # analytic | finite-difference | picard
    fd_step: Optional[mp.mpf] = None    # None: 10^(-digits/3)
    lipschitz: Optional[mp.mpf] = None  # picard-mode contraction estimate

    def resolved_stage_tol(self, ctx):
        if self.stage_tol is not None:
            return self.stage_tol
        return mp.mpf(10) ** (-ctx.decimal_digits + 20)

    def resolved_fd_step(self, ctx):
        if self.fd_step is not None:
            return self.fd_step
        return mp.mpf(10) ** (-(ctx.decimal_digits // 3))


@dataclass(frozen=True)
class LocalSolution:
    t_n: mp.mpf
    dt_n: mp.mpf
    qhat: tuple       # (N+1) rows of D predictor coefficients
    u_next: tuple


@dataclass(frozen=True)
class Trajectory:
    tableau: object
    times: tuple      # grid nodes t_0 .. t_M
    values: tuple     # node values u_0 .. u_M
    locals: tuple     # per-interval LocalSolution


def _fd_jacobian(problem, u, t, h):
    d = problem.dim
    cols = []
    for j in range(d):
        hj = h * (1 + abs(u[j]))
        up = list(u); up[j] += hj
        um = list(u); um[j] -= hj
        fp = problem.rhs(up, t)
        fm = problem.rhs(um, t)
        cols.append([(fp[i] - fm[i]) / (2 * hj) for i in range(d)])
    return [[cols[j][i] for j in range(d)] for i in range(d)]


def _stage_jacobian(problem, config, ctx, u, t):
    if problem.jacobian is not None and config.jacobian_mode in ("auto", "analytic"):
        return [list(r) for r in problem.jacobian(u, t)]
    return _fd_jacobian(problem, u, t, config.resolved_fd_step(ctx))


def _newton_matrix(tab, jacs, dt):
    """Stacked (s*D)^2 matrix with blocks delta_pq I - dt a_pq J_p."""
    s = tab.stages
    d = len(jacs[0])
    n = s * d
    mat = [[mp.mpf(0)] * n for _ in range(n)]
    for p in range(s):
        jp = jacs[p]
        for q in range(s):
            c = dt * tab.a[p][q]
            for i in range(d):
                for j in range(d):
                    mat[p * d + i][q * d + j] = (1 if (p == q and i == j) else 0) - c * jp[i][j]
    return mat


def solve_stages(tab, problem, u_n, t_n, dt, config, ctx):
    """Stage derivatives k of one step, solved to the stage tolerance.

    Newton works on the stacked residual k_p - F(state_p, t_p) with the
    Jacobian frozen at (u_n, t_n); it is refreshed at the current stage
    states every 5 iterations or when the residual contraction stalls.
    """
    if not dt > 0:
        raise SolverError("dt must be positive")
    s, d = tab.stages, problem.dim
    tol = config.resolved_stage_tol(ctx)
    with ctx.workdps(10):
        t_p = [t_n + tab.basis.tau[p] * dt for p in range(s)]

        def states(k):
            return [[u_n[i] + dt * mp.fsum(tab.a[p][q] * k[q][i] for q in range(s))
                     for i in range(d)] for p in range(s)]

        k = [list(problem.rhs(u_n, t_p[p])) for p in range(s)]
        if config.jacobian_mode == "picard":
            for _ in range(config.max_newton):
                q = states(k)
                k_new = [list(problem.rhs(q[p], t_p[p])) for p in range(s)]
                res = max(abs(k_new[p][i] - k[p][i])
                          for p in range(s) for i in range(d))
                k = k_new
                if res <= tol:
                    return [tuple(row) for row in k]
            raise StageSolveError(
                f"picard iteration not converged in {config.max_newton} sweeps")

        j0 = _stage_jacobian(problem, config, ctx, u_n, t_n)
        try:
            fact = linalg.lu_factor(_newton_matrix(tab, [j0] * s, dt))
        except linalg.SingularMatrixError as exc:
            raise StageSolveError("singular Newton matrix") from exc
        prev = None
        for it in range(config.max_newton):
            q = states(k)
            f = [problem.rhs(q[p], t_p[p]) for p in range(s)]
            r = [k[p][i] - f[p][i] for p in range(s) for i in range(d)]
            rn = max(abs(x) for x in r)
            if rn <= tol:
                return [tuple(row) for row in k]
            if it > 0 and (rn > prev / 2 or it % 5 == 0):
                jacs = [_stage_jacobian(problem, config, ctx, q[p], t_p[p])
                        for p in range(s)]
                try:
                    fact = linalg.lu_factor(_newton_matrix(tab, jacs, dt))
                except linalg.SingularMatrixError as exc:
                    raise StageSolveError("singular Newton matrix") from exc
            delta = linalg.lu_solve(fact, [-x for x in r])
            for p in range(s):
                for i in range(d):
                    k[p][i] += delta[p * d + i]
            prev = rn
        raise StageSolveError(
            f"Newton not converged in {config.max_newton} iterations "
            f"(residual {mp.nstr(rn, 5)})")


def stages_to_qhat(tab, u_n, k, dt):
    """Predictor coefficients qhat_p = u_n + dt sum_q a_pq k_q."""
    s = tab.stages
    d = len(u_n)
    with mp.workdps(tab.basis.work_dps):
        return tuple(
            tuple(u_n[i] + dt * mp.fsum(tab.a[p][q] * k[q][i] for q in range(s))
                  for i in range(d))
            for p in range(s))


def step(tab, problem, u_n, t_n, dt, config, ctx):
    """One integration step; returns the interval's LocalSolution."""
    k = solve_stages(tab, problem, u_n, t_n, dt, config, ctx)
    with ctx.workdps(10):
        u_next = tuple(
            u_n[i] + dt * mp.fsum(tab.basis.w[p] * k[p][i]
                                  for p in range(tab.stages))
            for i in range(problem.dim))
    qhat = stages_to_qhat(tab, u_n, k, dt)
    return LocalSolution(t_n=t_n, dt_n=dt, qhat=qhat, u_next=u_next)


def eval_local(local, basis, t):
    """Dense evaluation of the predictor polynomial at t in the interval.

    A t that lands on a stored quadrature node (to rounding) returns the
    stored coefficient row verbatim, so nodal values never re-round.
    """
    eps = mp.eps * 16  # snap radius at the caller's precision, not the basis's
    with mp.workdps(basis.work_dps):
        tau = (mp.mpf(t) - local.t_n) / local.dt_n
        if tau < -eps or tau > 1 + eps:
            raise SolverError(f"t={mp.nstr(mp.mpf(t), 10)} outside interval")
        for p, tp in enumerate(basis.tau):
            if abs(tau - tp) <= eps * (1 + abs(tp)):
                return tuple(local.qhat[p])
        vals = eval_basis(basis, tau)
        d = len(local.qhat[0])
        return tuple(mp.fsum(vals[p] * local.qhat[p][i]
                             for p in range(len(vals)))
                     for i in range(d))


def trajectory_eval(traj, t):
    """Evaluate the piecewise local solution; interior grid nodes resolve
    to the left interval (where the local solution matches the node value)."""
    times = traj.times
    if t < times[0] or t > times[-1]:
        raise SolverError(f"t outside trajectory domain")
    n = bisect.bisect_left(list(times), t) - 1
    n = min(max(n, 0), len(traj.locals) - 1)
    return eval_local(traj.locals[n], traj.tableau.basis, t)


def _picard_bound_check(tab, problem, config, ctx, dt):
    c = config.lipschitz
    if c is None:
        with ctx.workdps(10):
            j = _stage_jacobian(problem, SolverConfig(fd_step=config.fd_step),
                                ctx, list(problem.u0), problem.t0)
            c = linalg.max_row_sum(j)
    amax = linalg.max_row_sum([list(r) for r in tab.a])
    if not dt * c * amax < 1:
        raise SolverError(
            f"picard contraction bound violated: dt*C*max_row_sum(a) = "
            f"{mp.nstr(dt * c * amax, 5)} >= 1")


def integrate(tab, problem, grid, config=None, ctx=None):
    """Integrate over [t0, tf]; grid is a step count or explicit node list."""
    if config is None:
        config = SolverConfig()
    with ctx.workdps(10):
        if isinstance(grid, int):
            if grid < 1:
                raise SolverError("step count must be >= 1")
            h = (problem.tf - problem.t0) / grid
            times = [problem.t0 + i * h for i in range(grid)] + [problem.tf]
        else:
            times = [mp.mpf(t) for t in grid]
            if len(times) < 2 or any(a >= b for a, b in zip(times, times[1:])):
                raise SolverError("node list must be strictly increasing")
            if times[0] != mp.mpf(problem.t0) or times[-1] != mp.mpf(problem.tf):
                raise SolverError("node list must span [t0, tf]")
        dts = [times[i + 1] - times[i] for i in range(len(times) - 1)]
        if config.jacobian_mode == "picard":
            _picard_bound_check(tab, problem, config, ctx, max(dts))
    u = tuple(problem.u0)
    values = [u]
    locals_ = []
    for i in range(len(times) - 1):
        try:
            loc = step(tab, problem, u, times[i], dts[i], config, ctx)
        except StageSolveError as exc:
            raise StageSolveError(f"interval {i}: {exc}", interval=i) from exc
        locals_.append(loc)
        u = loc.u_next
        values.append(u)
    return Trajectory(tableau=tab, times=tuple(times),
                      values=tuple(values), locals=tuple(locals_))
