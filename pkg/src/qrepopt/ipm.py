"""Homogeneous self-dual path-following interior-point solver.

Works over products of the cone oracles in `cones`. Newton systems are
reduced by block elimination to a Schur complement A H^{-1} A^T that is
assembled column-wise from the cones' inverse-Hessian solves and Cholesky
factored once per iteration.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import InteriorityError, MemoryGuardError, SingularityError


@dataclass
class Settings:
    gap_tol: float = 1.5e-8
    feas_tol: float = 1.5e-8
    max_iter: int = 500
    verbose: bool = False
    step_fraction: float = 0.99   # fraction-to-boundary
    eta: float = 0.5              # central-path proximity radius
    eta_predictor: float = 0.90   # wide neighborhood the predictor may enter
    refine_rounds: int = 2


@dataclass
class IterationRecord:
    iteration: int
    mu: float
    gap: float
    pres: float
    dres: float
    step: float
    time_ms: float

    def format(self) -> str:
        return (f"{self.iteration} {self.mu:.6e} {self.gap:.6e} "
                f"{self.pres:.6e} {self.dres:.6e} {self.step:.4f} "
                f"{self.time_ms:.2f}")


@dataclass
class SolveResult:
    status: str                   # optimal | primal-infeasible | dual-infeasible
                                  # | iteration-limit | numerical-failure
    primal_objective: float
    dual_objective: float
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    tau: float
    kappa: float
    iterations: int
    trace: list = field(default_factory=list)
    solve_time: float = 0.0
    objective: float = float("nan")   # application-facing value
    peak_system_dim: int = 0

    @property
    def time_per_iteration(self) -> float:
        return self.solve_time / max(self.iterations, 1)


class ConicProblem:
    """min <c, x> s.t. A x = b, x in K1 x ... x Km (svec coordinates).

    `offset` is added and `flip_sign` applied when reporting the
    application-facing objective (used by builders that negate
    maximization problems).
    """

    def __init__(self, c, A, b, cones, offset: float = 0.0,
                 flip_sign: bool = False, name: str = ""):
        self.c = np.asarray(c, dtype=float)
        self.A = np.asarray(A, dtype=float).reshape(len(b), self.c.size)
        self.b = np.asarray(b, dtype=float)
        self.cones = list(cones)
        self.offset = float(offset)
        self.flip_sign = bool(flip_sign)
        self.name = name
        n = sum(K.dim for K in self.cones)
        if n != self.c.size:
            raise ValueError(f"cone dims sum to {n}, c has length {self.c.size}")
        self.offsets = np.concatenate([[0], np.cumsum([K.dim for K in self.cones])])

    @property
    def total_nu(self) -> float:
        return float(sum(K.nu for K in self.cones))

    def report_objective(self, solver_value: float) -> float:
        v = -solver_value if self.flip_sign else solver_value
        return v + self.offset


def _preprocess_rows(A: np.ndarray, b: np.ndarray):
    """Drop linearly dependent rows of A (verifying b stays consistent)."""
    p = A.shape[0]
    if p == 0:
        return A, b, True
    scale = np.linalg.norm(A)
    _, R, piv = sla.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = 1e-10 * max(scale, 1.0)
    rank = int(np.count_nonzero(diag > tol))
    if rank == p:
        return A, b, True
    keep = np.sort(piv[:rank])
    drop = np.sort(piv[rank:])
    Ak, bk = A[keep], b[keep]
    # consistency of the dropped rows: A_drop = C A_keep must carry b along
    C, *_ = np.linalg.lstsq(Ak.T, A[drop].T, rcond=None)
    resid = np.abs(C.T @ bk - b[drop])
    consistent = bool(np.all(resid <= 1e-9 * (1.0 + np.abs(b).max(initial=0.0))))
    return Ak, bk, consistent


class _NewtonSystem:
    """Factorizations for one interior point, reused across direction solves."""

    def __init__(self, problem, x, mu):
        self.problem = problem
        self.mu = mu
        for K, a, bnd in self._blocks(x):
            K.freeze()
        A = problem.A
        p = A.shape[0]
        W = np.empty((x.size, p))
        for k in range(p):
            W[:, k] = self.hinv(A[k])
        S = A @ W
        S = (S + S.T) / 2
        self.peak_dim = p
        try:
            self.S_cho = sla.cho_factor(S)
        except np.linalg.LinAlgError:
            S = S + (1e-12 * max(np.trace(S) / max(p, 1), 1.0)) * np.eye(p)
            self.S_cho = sla.cho_factor(S)   # second failure propagates

    def _blocks(self, x):
        pr = self.problem
        for K, a, b in zip(pr.cones, pr.offsets[:-1], pr.offsets[1:]):
            yield K, a, b

    def hinv(self, v):
        """(grad^2 F)^{-1} v across the cone product."""
        pr = self.problem
        out = np.empty_like(v)
        for K, a, b in zip(pr.cones, pr.offsets[:-1], pr.offsets[1:]):
            out[a:b] = K.inv_hess_solve(v[a:b])
        return out

    def hmul(self, v):
        pr = self.problem
        out = np.empty_like(v)
        for K, a, b in zip(pr.cones, pr.offsets[:-1], pr.offsets[1:]):
            out[a:b] = K.hess_apply(v[a:b])
        return out


def _barrier_grad(problem, x):
    out = np.empty_like(x)
    for K, a, b in zip(problem.cones, problem.offsets[:-1], problem.offsets[1:]):
        out[a:b] = K.grad()
    return out


def _set_cone_point(problem, x) -> bool:
    ok = True
    for K, a, b in zip(problem.cones, problem.offsets[:-1], problem.offsets[1:]):
        if not K.set_point(x[a:b]):
            ok = False
    return ok


class _State:
    def __init__(self, x, y, z, tau, kappa):
        self.x, self.y, self.z = x, y, z
        self.tau, self.kappa = tau, kappa

    def mu(self, nu_plus_1):
        return (self.x @ self.z + self.tau * self.kappa) / nu_plus_1


def solve(problem: ConicProblem, settings: Settings | None = None) -> SolveResult:
    settings = settings or Settings()
    t_start = time.perf_counter()

    A, b, consistent = _preprocess_rows(problem.A, problem.b)
    if not consistent:
        return SolveResult("primal-infeasible", np.nan, np.nan,
                           np.zeros(problem.c.size), np.zeros(b.size),
                           np.zeros(problem.c.size), 0.0, 1.0, 0, [],
                           time.perf_counter() - t_start)
    problem = ConicProblem(problem.c, A, b, problem.cones, problem.offset,
                           problem.flip_sign, problem.name)
    c, A, b = problem.c, problem.A, problem.b

    n, p = c.size, b.size
    nu1 = problem.total_nu + 1.0

    # perfectly centered start
    x = np.concatenate([K.init_point() for K in problem.cones])
    if not _set_cone_point(problem, x):
        raise RuntimeError("cone initial points rejected")
    z = -_barrier_grad(problem, x)
    y = np.zeros(p)
    state = _State(x, y, z, 1.0, 1.0)
    mu = state.mu(nu1)

    norm_b = 1.0 + np.linalg.norm(b)
    norm_c = 1.0 + np.linalg.norm(c)
    trace: list[IterationRecord] = []
    status = "iteration-limit"
    tiny_steps = 0
    peak_dim = max((K.dim for K in problem.cones), default=0)
    it = 0

    def residuals(s):
        r_d = s.z - A.T @ s.y - c * s.tau          # dual feasibility
        r_p = A @ s.x - b * s.tau                  # primal feasibility
        r_g = c @ s.x + b @ s.y + s.kappa          # gap row
        return r_d, r_p, r_g

    def prox(s, mu_val):
        """Central-path proximity in the local inverse-Hessian norm."""
        val = 0.0
        for K, a, bnd in zip(problem.cones, problem.offsets[:-1], problem.offsets[1:]):
            r = s.z[a:bnd] + mu_val * K.grad()
            val += float(r @ K.inv_hess_solve(r))
        val += (s.tau * (s.kappa - mu_val / s.tau)) ** 2
        return np.sqrt(max(val, 0.0)) / mu_val

    def solve_direction(ns, d1, d2, d3, d4, d5, s):
        """Newton step for the 5-block HSDE system (see module docstring)."""
        mu_, tau, kappa = ns.mu, s.tau, s.kappa
        u = d4 - d1
        Hi_u = ns.hinv(u)
        Hi_c = ns.hinv(c)
        y1 = sla.cho_solve(ns.S_cho, A @ Hi_u - mu_ * d2)
        y2 = sla.cho_solve(ns.S_cho, -(A @ Hi_c + mu_ * b))
        x1 = ns.hinv(u - A.T @ y1) / mu_
        x2 = ns.hinv(-A.T @ y2 - c) / mu_
        denom = c @ x2 + b @ y2 - kappa / tau
        dtau = (d3 - d5 / tau - c @ x1 - b @ y1) / denom
        dx = x1 + dtau * x2
        dy = y1 + dtau * y2
        dz = d1 + A.T @ dy + c * dtau
        dkappa = (d5 - kappa * dtau) / tau
        return dx, dy, dz, dtau, dkappa

    def refine(ns, rhs, s, direction):
        """Residual-correct the direction against the full system."""
        d1, d2, d3, d4, d5 = rhs
        for _ in range(settings.refine_rounds):
            dx, dy, dz, dtau, dkappa = direction
            e1 = d1 - (dz - A.T @ dy - c * dtau)
            e2 = d2 - (A @ dx - b * dtau)
            e3 = d3 - (c @ dx + b @ dy + dkappa)
            e4 = d4 - (ns.mu * ns.hmul(dx) + dz)
            e5 = d5 - (s.kappa * dtau + s.tau * dkappa)
            norm = max(np.linalg.norm(np.concatenate([e1, e2, [e3], e4, [e5]])), 0.0)
            scale = max(1.0, np.linalg.norm(np.concatenate(
                [d1, d2, [d3], d4, [d5]])))
            if norm <= 1e-7 * scale:
                break
            corr = solve_direction(ns, e1, e2, e3, e4, e5, s)
            direction = tuple(d + cc for d, cc in zip(direction, corr))
        return direction

    def max_boundary_step(s, d):
        """Fraction-to-boundary cap from tau and kappa alone."""
        dx, dy, dz, dtau, dkappa = d
        alpha = 1.0 / settings.step_fraction
        if dtau < 0:
            alpha = min(alpha, -s.tau / dtau)
        if dkappa < 0:
            alpha = min(alpha, -s.kappa / dkappa)
        return settings.step_fraction * alpha

    def try_step(s, d, alpha, eta_limit):
        """Candidate state if x stays interior and proximity holds, else None."""
        dx, dy, dz, dtau, dkappa = d
        cand = _State(s.x + alpha * dx, s.y + alpha * dy, s.z + alpha * dz,
                      s.tau + alpha * dtau, s.kappa + alpha * dkappa)
        if cand.tau <= 0 or cand.kappa <= 0:
            return None, None
        if not _set_cone_point(problem, cand.x):
            return None, None
        mu_c = cand.mu(nu1)
        if mu_c <= 0:
            return None, None
        try:
            q = prox(cand, mu_c)
        except (InteriorityError, SingularityError, np.linalg.LinAlgError):
            return None, None
        if q > eta_limit:
            return None, None
        return cand, mu_c

    while it < settings.max_iter:
        it += 1
        t_it = time.perf_counter()
        if not _set_cone_point(problem, state.x):
            status = "numerical-failure"
            break
        r_d, r_p, r_g = residuals(state)

        # convergence bookkeeping (unscaled by tau)
        tau = state.tau
        pobj = c @ state.x / tau
        dobj = -(b @ state.y) / tau
        pres = np.linalg.norm(r_p) / (tau * norm_b)
        dres = np.linalg.norm(r_d) / (tau * norm_c)
        gap = abs(pobj - dobj) / max(1.0, abs(pobj), abs(dobj))
        if pres <= settings.feas_tol and dres <= settings.feas_tol \
                and gap <= settings.gap_tol:
            status = "optimal"
            trace.append(IterationRecord(it, mu, gap, pres, dres, 0.0,
                                         (time.perf_counter() - t_it) * 1e3))
            if settings.verbose:
                print(trace[-1].format())
            break

        # infeasibility certificates through the embedding
        if tau <= 1e-12 * max(1.0, state.kappa) or \
                (mu <= 1e-14 and tau <= 1e-8 * max(1.0, state.kappa)):
            by = b @ state.y
            cx = c @ state.x
            if by < 0 and np.linalg.norm(state.z - A.T @ state.y) <= 1e-7 * abs(by) * norm_c:
                status = "primal-infeasible"
            elif cx < 0 and np.linalg.norm(A @ state.x) <= 1e-7 * abs(cx) * norm_b:
                status = "dual-infeasible"
            else:
                status = "numerical-failure"
            break

        try:
            q_now = prox(state, mu)
            ns = _NewtonSystem(problem, state.x, mu)
        except MemoryGuardError:
            raise
        except (np.linalg.LinAlgError, InteriorityError, SingularityError):
            status = "numerical-failure"
            break
        peak_dim = max(peak_dim, ns.peak_dim)

        step_taken = 0.0
        if q_now <= settings.eta:
            # predictor toward the optimality system, into the wide neighborhood
            rhs = (-r_d, -r_p, -r_g, -state.z, -state.tau * state.kappa)
            d = solve_direction(ns, *rhs, state)
            d = refine(ns, rhs, state, d)
            alpha = min(max_boundary_step(state, d), settings.step_fraction)
            accepted = None
            while alpha > 1e-10:
                cand, mu_c = try_step(state, d, alpha, settings.eta_predictor)
                if cand is not None:
                    accepted = (cand, mu_c)
                    break
                alpha *= 0.8
            if accepted is not None:
                state, mu = accepted
                step_taken = alpha
        else:
            # centering step at the current mu
            rhs = (np.zeros(n), np.zeros(p), 0.0,
                   -(state.z + mu * _barrier_grad(problem, state.x)),
                   mu - state.tau * state.kappa)
            d = solve_direction(ns, *rhs, state)
            d = refine(ns, rhs, state, d)
            alpha = min(max_boundary_step(state, d), 1.0)
            accepted = None
            while alpha > 1e-10:
                cand, mu_c = try_step(state, d, alpha,
                                      max(q_now * 0.9995, settings.eta))
                if cand is not None:
                    accepted = (cand, mu_c)
                    break
                alpha *= 0.5
            if accepted is not None:
                state, mu = accepted
                step_taken = alpha

        if step_taken < 1e-10:
            tiny_steps += 1
            if tiny_steps >= 3:
                status = "numerical-failure"
                break
        else:
            tiny_steps = 0

        trace.append(IterationRecord(it, mu, gap, pres, dres, step_taken,
                                     (time.perf_counter() - t_it) * 1e3))
        if settings.verbose:
            print(trace[-1].format())

    _set_cone_point(problem, state.x)
    tau = state.tau if state.tau > 0 else 1.0
    pobj = c @ state.x / tau
    dobj = -(b @ state.y) / tau
    result = SolveResult(
        status=status,
        primal_objective=float(pobj),
        dual_objective=float(dobj),
        x=state.x / tau,
        y=state.y / tau,
        z=state.z / tau,
        tau=float(state.tau),
        kappa=float(state.kappa),
        iterations=it,
        trace=trace,
        solve_time=time.perf_counter() - t_start,
        peak_system_dim=peak_dim,
    )
    result.objective = problem.report_objective(result.primal_objective)
    return result


def assemble_schur(A: np.ndarray, cones, offsets=None) -> np.ndarray:
    """A (blockdiag grad^2F^{-1}) A^T, built column-wise from inverse-Hessian
    solves on the rows of A. Cones must already hold a feasible point."""
    A = np.asarray(A, dtype=float)
    if offsets is None:
        offsets = np.concatenate([[0], np.cumsum([K.dim for K in cones])])
    p = A.shape[0]
    W = np.empty((A.shape[1], p))
    for k in range(p):
        for K, a, b in zip(cones, offsets[:-1], offsets[1:]):
            W[a:b, k] = K.inv_hess_solve(A[k, a:b])
    S = A @ W
    return (S + S.T) / 2


def newton_solve(problem: ConicProblem, x: np.ndarray, mu: float,
                 r_x: np.ndarray, r_y: np.ndarray, r_z: np.ndarray):
    """Solve the plain (non-embedded) Newton system

        [0 -A^T I; A 0 0; mu H 0 I] [dx; dy; dz] = [r_x; r_y; r_z]

    by Schur-complement elimination; used directly by tests and diagnostics.
    """
    if not _set_cone_point(problem, x):
        raise InteriorityError("x is not strictly feasible")
    A = problem.A
    S = assemble_schur(A, problem.cones, problem.offsets)
    try:
        cho = sla.cho_factor(S)
    except np.linalg.LinAlgError:
        S = S + (1e-12 * max(np.trace(S) / max(S.shape[0], 1), 1.0)) * np.eye(S.shape[0])
        cho = sla.cho_factor(S)

    def hinv(v):
        out = np.empty_like(v)
        for K, a, b in zip(problem.cones, problem.offsets[:-1], problem.offsets[1:]):
            out[a:b] = K.inv_hess_solve(v[a:b])
        return out

    rhs_y = A @ hinv(r_z - r_x) - mu * r_y
    dy = sla.cho_solve(cho, rhs_y)
    dx = hinv(r_z - r_x - A.T @ dy) / mu
    dz = A.T @ dy + r_x
    return dx, dy, dz
