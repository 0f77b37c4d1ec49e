"""Feasible-start log-barrier interior-point solver for smooth convex programs.

minimize f(z)  s.t.  g_i(z) <= 0 (i = 1..m),  A z = b

Phase-I finds a strictly feasible point by minimizing an auxiliary slack;
the main loop follows the central path of

    phi_t(z) = f(z) + (1/t) * sum_i -log(-g_i(z))

with equality-constrained Newton steps, growing t until t >= m / tol_kkt.
Working with f + (1/t)*barrier instead of t*f + barrier keeps the merit
function at the objective's scale for large t, and makes the reported
multipliers come out directly as lambda_i = 1/(t * (-g_i(z))), mu = nu.

Constraints are supplied either as scalar SmoothOracles (optionally paired
with an index array selecting the variables they touch) or as vector-valued
"blocks" such as LinearBlock; blocks exist so that stage-structured programs
can evaluate whole constraint families in a few vectorized operations.
Stage-structured programs may also carry a BandLayout, in which case the
Newton KKT system is assembled in a stage-interleaved order and solved with
a banded LU factorization instead of a dense one.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .oracles import AFFINE, CONCAVE, SmoothOracle, AffineOracle

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
MAXITER = "MaxIter"
DOMAIN_ESCAPE = "DomainEscape"


class SolverError(RuntimeError):
    pass


class InfeasibleError(SolverError):
    def __init__(self, msg, slack=None):
        super().__init__(msg)
        self.slack = slack


@dataclass(frozen=True)
class SolverConfig:
    tol_kkt: float = 1e-8
    barrier_mult: float = 10.0
    t0: float = 1.0
    max_newton: int = 50
    ls_alpha: float = 0.1
    ls_beta: float = 0.5
    ftb: float = 0.99
    reg: float = 1e-10
    tol_inner: float = 1e-12
    tol_center: float = None
    max_backtracks: int = 60
    store_trace: bool = False

    def __post_init__(self):
        if not (self.tol_kkt > 0 and self.barrier_mult > 1 and self.t0 > 0):
            raise ValueError("tol_kkt, t0 must be positive and barrier_mult > 1")
        if not (0 < self.ls_alpha < 0.5 and 0 < self.ls_beta < 1 and 0 < self.ftb < 1):
            raise ValueError("need 0 < ls_alpha < 0.5, 0 < ls_beta < 1, 0 < ftb < 1")


@dataclass
class KktSolution:
    z: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    value: float
    r_stat: float
    r_feas: float
    r_comp: float
    iters: int
    status: str
    t_final: float = 0.0
    g: np.ndarray = None
    trace: list = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# constraint / objective blocks

class _ScalarBlock:
    """Adapter presenting one scalar oracle as a size-1 constraint block."""

    def __init__(self, oracle, idx):
        self.oracle = oracle
        self.idx = np.asarray(idx, dtype=int)
        self.m = 1
        self.affine = oracle.curvature == AFFINE
        self._row = None

    def row(self):
        # constant gradient of an affine oracle, cached for step caps
        if self._row is None:
            self._row = self.oracle.grad(np.zeros(self.oracle.dim))[None, :]
        return self._row

    def values(self, zloc):
        return np.array([self.oracle.value(zloc)])

    def jac(self, zloc):
        if self.affine:
            return self.row()
        return self.oracle.grad(zloc)[None, :]

    def barrier(self, zloc):
        v = self.oracle.value(zloc)
        grad = self.row()[0] if self.affine else self.oracle.grad(zloc)
        s = 1.0 / (-v)
        bH = np.outer(grad, grad) * (s * s)
        if not self.affine:
            bH = bH + self.oracle.hess(zloc) * s
        return np.array([v]), grad * s, bH

    def in_domain(self, zloc):
        return self.oracle.in_domain(zloc)


class LinearBlock:
    """Vector affine constraint family rows @ z + offs <= 0."""

    def __init__(self, rows, offs, idx):
        self.rows = np.asarray(rows, dtype=float)
        self.offs = np.asarray(offs, dtype=float)
        self.idx = np.asarray(idx, dtype=int)
        self.m = self.rows.shape[0]
        self.affine = True

    def row(self):
        return self.rows

    def values(self, zloc):
        return self.rows @ zloc + self.offs

    def jac(self, zloc):
        return self.rows

    def barrier(self, zloc):
        g = self.rows @ zloc + self.offs
        inv = 1.0 / (-g)
        bg = self.rows.T @ inv
        scaled = self.rows * inv[:, None]
        return g, bg, scaled.T @ scaled

    def in_domain(self, zloc):
        return True


class _ScalarObjTerm:
    """One scalar oracle contributing f(z[idx]) to the objective."""

    def __init__(self, oracle, idx):
        self.oracle = oracle
        self.idx = np.asarray(idx, dtype=int)
        if oracle.curvature == CONCAVE:
            raise ValueError("objective oracle must be convex or affine (negate rewards first)")

    def value(self, zloc):
        return self.oracle.value(zloc)

    def eval(self, zloc):
        return self.oracle.value(zloc), self.oracle.grad(zloc), self.oracle.hess(zloc)

    def in_domain(self, zloc):
        return self.oracle.in_domain(zloc)


@dataclass
class BandLayout:
    """Stage-interleaved ordering of (variables, equality rows) for banded KKT solves."""

    var_pos: np.ndarray
    eq_pos: np.ndarray
    half_bandwidth: int


def _as_ineq_block(entry, n):
    if isinstance(entry, tuple):
        oracle, idx = entry
        return _ScalarBlock(oracle, idx)
    if isinstance(entry, SmoothOracle):
        return _ScalarBlock(entry, np.arange(n))
    if hasattr(entry, "barrier"):
        return entry
    raise TypeError("cannot interpret inequality entry %r" % (entry,))


def _as_obj_term(entry, n):
    if isinstance(entry, tuple):
        oracle, idx = entry
        return _ScalarObjTerm(oracle, idx)
    if isinstance(entry, SmoothOracle):
        return _ScalarObjTerm(entry, np.arange(n))
    if hasattr(entry, "eval"):
        return entry
    raise TypeError("cannot interpret objective entry %r" % (entry,))


class ConvexProgram:
    """Minimization program assembled from oracle blocks.

    objective: a SmoothOracle over R^n, an (oracle, idx) pair, an object with
    an eval(zloc) -> (f, grad, hess) method, or a list of any of those (summed).
    inequalities: list of scalar oracles, (oracle, idx) pairs, or vector blocks.
    """

    def __init__(self, n, objective, inequalities=(), eqA=None, eqb=None,
                 start=None, domain_guess=None, band=None, ineq_meta=None):
        self.n = int(n)
        if not isinstance(objective, (list, tuple)) or (
                isinstance(objective, tuple) and len(objective) == 2
                and isinstance(objective[0], SmoothOracle)):
            objective = [objective]
        self.objective = [_as_obj_term(ob, self.n) for ob in objective]
        self.inequalities = [_as_ineq_block(iq, self.n) for iq in inequalities]
        self.eqA = None if eqA is None else np.asarray(eqA, dtype=float)
        self.eqb = None if eqb is None else np.asarray(eqb, dtype=float)
        if (self.eqA is None) != (self.eqb is None):
            raise ValueError("eqA and eqb must be given together")
        if self.eqA is not None and self.eqA.shape != (self.eqb.size, self.n):
            raise ValueError("eqA shape %s inconsistent with n=%d, eqb len %d"
                             % (self.eqA.shape, self.n, self.eqb.size))
        self.start = None if start is None else np.asarray(start, dtype=float)
        self.domain_guess = None if domain_guess is None else np.asarray(domain_guess, dtype=float)
        self.band = band
        self.ineq_meta = ineq_meta

    @property
    def m(self):
        return sum(blk.m for blk in self.inequalities)

    @property
    def p(self):
        return 0 if self.eqA is None else self.eqb.size

    def obj_value(self, z):
        return sum(ob.value(z[ob.idx]) for ob in self.objective)

    def obj_grad(self, z):
        grad = np.zeros(self.n)
        for ob in self.objective:
            _, g, _ = ob.eval(z[ob.idx])
            grad[ob.idx] += g
        return grad

    def g_values(self, z):
        if not self.inequalities:
            return np.zeros(0)
        return np.concatenate([blk.values(z[blk.idx]) for blk in self.inequalities])

    def ineq_jacobian(self, z):
        J = np.zeros((self.m, self.n))
        r = 0
        for blk in self.inequalities:
            J[r:r + blk.m, blk.idx] = blk.jac(z[blk.idx])
            r += blk.m
        return J

    def in_domain(self, z):
        for ob in self.objective:
            if not ob.in_domain(z[ob.idx]):
                return False
        for blk in self.inequalities:
            if not blk.in_domain(z[blk.idx]):
                return False
        return True

    def strictly_feasible(self, z, margin=0.0):
        if not self.in_domain(z):
            return False
        if self.m and np.max(self.g_values(z)) >= -margin:
            return False
        if self.p and np.max(np.abs(self.eqA @ z - self.eqb)) > 1e-8:
            return False
        return True


# ---------------------------------------------------------------------------
# Newton workspace

class _Workspace:
    def __init__(self, program):
        self.prog = program
        n, p = program.n, program.p
        band = program.band
        # short windows gain nothing from band storage (and BLAS band
        # routines require the matrix to be wider than the band)
        if band is not None and n + p >= 2 * band.half_bandwidth + 1:
            self.var_pos = np.asarray(band.var_pos, dtype=int)
            self.eq_pos = np.asarray(band.eq_pos, dtype=int)
            self.hb = int(band.half_bandwidth)
            self.banded = True
        else:
            self.var_pos = np.arange(n)
            self.eq_pos = n + np.arange(p)
            self.hb = 0
            self.banded = False
        self.N = n + p
        hb = self.hb
        # banded programs assemble the KKT matrix directly in LAPACK general
        # band storage (entry (i, j) at AB[2*hb + i - j, j]); dense programs
        # assemble the full matrix
        self.K = np.zeros((3 * hb + 1, self.N) if self.banded
                          else (self.N, self.N))

        def flat_of(ii, jj):
            if self.banded:
                if np.max(np.abs(ii - jj)) > hb:
                    raise ValueError("band layout too narrow for a KKT entry")
                return ((2 * hb + ii - jj) * self.N + jj).ravel()
            return (ii * self.N + jj).ravel()

        # per-block scatter positions; tiled blocks contribute one dense tile
        # per stage slice instead of one dense block over all their variables
        for blk in program.inequalities + program.objective:
            bpos = self.var_pos[blk.idx]
            blk._bpos = bpos
            shape = getattr(blk, "tile_shape", None)
            if shape is None:
                blk._flat = flat_of(bpos[:, None], bpos[None, :])
            else:
                pos2 = bpos.reshape(shape)
                blk._flat = flat_of(pos2[:, :, None], pos2[:, None, :])
        if p:
            rr, cc = np.nonzero(program.eqA)
            self.eq_vals = program.eqA[rr, cc]
            er, vc = self.eq_pos[rr], self.var_pos[cc]
            self.eq_flat = flat_of(er, vc)
            self.eq_flat_t = flat_of(vc, er)
        self.diag_flat = flat_of(self.var_pos, self.var_pos)

    def phi(self, z, t):
        """Barrier merit; +inf outside domains or the strictly feasible region.

        Blocks and terms may expose check_values/check_value fusing the
        domain test with evaluation so shared intermediates are computed once.
        """
        prog = self.prog
        f = 0.0
        for ob in prog.objective:
            zloc = z[ob.idx]
            cv = getattr(ob, "check_value", None)
            if cv is not None:
                ok, fv = cv(zloc)
                if not ok:
                    return np.inf, np.nan
            else:
                if not ob.in_domain(zloc):
                    return np.inf, np.nan
                fv = ob.value(zloc)
            f += fv
        bar = 0.0
        for blk in prog.inequalities:
            zloc = z[blk.idx]
            cv = getattr(blk, "check_values", None)
            if cv is not None:
                ok, g = cv(zloc)
                if not ok:
                    return np.inf, np.nan
            else:
                if not blk.in_domain(zloc):
                    return np.inf, np.nan
                g = blk.values(zloc)
            if g.max() >= 0:
                return np.inf, np.nan
            bar -= np.log(-g).sum()
        if not np.isfinite(f) or not np.isfinite(bar):
            return np.inf, np.nan
        return f + bar / t if t is not None else f + bar, f

    def grad_phi(self, z, t):
        """Gradient of the barrier merit at a strictly feasible z."""
        prog = self.prog
        grad = np.zeros(prog.n)
        for ob in prog.objective:
            _, gv, _ = ob.eval(z[ob.idx])
            grad[ob.idx] += gv
        inv_t = 1.0 / t
        for blk in prog.inequalities:
            _, bg, _ = blk.barrier(z[blk.idx])
            grad[blk.idx] += bg * inv_t
        return grad


def _newton_system(ws, z, t, reg):
    """Assemble and solve the KKT system at z.

    Returns (dz, nu, grad_phi, f, g_all); g_all stacks the inequality
    values already computed by the barrier pass so the caller can feed the
    step cap without re-evaluating the constraints.
    """
    prog = ws.prog
    K = ws.K
    K.fill(0.0)
    grad = np.zeros(prog.n)
    f = 0.0
    for ob in prog.objective:
        fv, gv, Hv = ob.eval(z[ob.idx])
        f += fv
        grad[ob.idx] += gv
        K.flat[ob._flat] += Hv.ravel()
    inv_t = 1.0 / t
    g_all = np.empty(prog.m)
    r = 0
    for blk in prog.inequalities:
        g, bg, bH = blk.barrier(z[blk.idx])
        g_all[r:r + blk.m] = g
        r += blk.m
        grad[blk.idx] += bg * inv_t
        K.flat[blk._flat] += bH.ravel() * inv_t
    rhs = np.zeros(ws.N)
    rhs[ws.var_pos] = -grad
    if prog.p:
        K.flat[ws.eq_flat] += ws.eq_vals
        K.flat[ws.eq_flat_t] += ws.eq_vals
        rhs[ws.eq_pos] = prog.eqb - prog.eqA @ z

    attempt = reg
    for _ in range(4):
        try:
            solve_with, apply_k = _factor_kkt(ws, K)
            sol = solve_with(rhs)
            if np.all(np.isfinite(sol)):
                # one iterative-refinement pass; the barrier makes K badly
                # conditioned near the end of the path and the raw direction
                # can lose most of its accuracy
                corr = solve_with(rhs - apply_k(sol))
                if np.all(np.isfinite(corr)):
                    sol = sol + corr
                break
        except (scipy.linalg.LinAlgError, ValueError):
            pass
        K.flat[ws.diag_flat] += attempt
        attempt *= 100.0
    else:
        raise SolverError("KKT factorization failed despite regularization")
    return sol[ws.var_pos], sol[ws.eq_pos], grad, f, g_all


def _factor_kkt(ws, K):
    """Factor K once; returns (back-solve, matvec) closures."""
    if not ws.banded:
        fac = scipy.linalg.lu_factor(K, check_finite=False)
        return (lambda b: scipy.linalg.lu_solve(fac, b, check_finite=False),
                lambda v: K @ v)
    hb = ws.hb
    N = ws.N
    # K is already in LAPACK general-band storage with kl fill rows on top
    lu, ipiv, info = scipy.linalg.lapack.dgbtrf(K, hb, hb)
    if info != 0:
        raise scipy.linalg.LinAlgError("band LU failed (info=%d)" % info)
    band = K[hb:, :]

    def back_solve(b):
        x, inf2 = scipy.linalg.lapack.dgbtrs(lu, hb, hb, b, ipiv)
        if inf2 != 0:
            raise scipy.linalg.LinAlgError("band back-solve failed (info=%d)" % inf2)
        return x

    def apply_k(v):
        return scipy.linalg.blas.dgbmv(N, N, hb, hb, 1.0, band, v)

    return back_solve, apply_k


def _affine_step_cap(prog, z, dz, g_cache, ftb):
    """Largest step keeping affine inequalities strictly feasible, times ftb."""
    s = 1.0
    r = 0
    for blk in prog.inequalities:
        g = g_cache[r:r + blk.m]
        r += blk.m
        if not getattr(blk, "affine", False):
            continue
        shape = getattr(blk, "tile_shape", None)
        if shape is None:
            d = blk.row() @ dz[blk.idx]
        else:
            # stage-tiled affine blocks: per-tile matmul instead of the
            # materialized block-diagonal jacobian
            d = (dz[blk.idx].reshape(shape) @ blk.rows.T).ravel()
        pos = d > 0
        if pos.any():
            s = min(s, float((-g[pos] / d[pos]).min()) * ftb)
    return s


def solve(program, config=None, t0=None):
    """Path-following solve; returns a KktSolution.

    A strictly feasible start is taken from program.start or found by
    phase_one.  `t0` overrides config.t0 (used for warm starts whose
    duality gap is already small).
    """
    config = config or SolverConfig()
    prog = program
    z = prog.start
    if z is None:
        z = phase_one(prog, config)
    z = np.asarray(z, dtype=float).copy()
    if z.size != prog.n:
        raise ValueError("start has length %d, expected %d" % (z.size, prog.n))
    ws = _Workspace(prog)
    m = prog.m
    if m and not prog.strictly_feasible(z, margin=0.0):
        raise SolverError("start point is not strictly feasible")

    t = float(t0 if t0 is not None else config.t0)
    t_req = m / config.tol_kkt if m else t
    t = min(t, t_req)
    iters = 0
    status = OPTIMAL
    nu = np.zeros(prog.p)
    trace = [] if config.store_trace else None
    stage_trace = None

    while True:
        # centering at barrier weight t
        if config.store_trace:
            stage_trace = []
            trace.append(stage_trace)
        phi, _ = ws.phi(z, t if m else None)
        at_final = (not m) or t >= t_req
        t_eff = t if m else 1.0
        # intermediate centerings may stop on a loose absolute decrement:
        # their only job is to hand the next centering a point in its
        # Newton basin
        stop_abs = None if at_final else config.tol_center
        for _ in range(config.max_newton):
            dz, nu, grad, f, g_cache = _newton_system(ws, z, t_eff, config.reg)
            dec = -float(grad @ dz)
            if dec / 2 <= config.tol_inner * (1.0 + abs(f)):
                break
            if stop_abs is not None and dec / 2 <= stop_abs:
                break
            iters += 1
            s = _affine_step_cap(prog, z, dz, g_cache, config.ftb) if m else 1.0
            accepted = False
            for _bt in range(config.max_backtracks):
                z_trial = z + s * dz
                phi_new, _ = ws.phi(z_trial, t if m else None)
                if phi_new <= phi - config.ls_alpha * s * dec:
                    accepted = True
                    break
                s *= config.ls_beta
            if not accepted or s < 1e-14:
                # cannot make progress: fp-limited (the final polish below
                # has its own stop) unless trapped outside the domain
                if not np.isfinite(phi_new):
                    status = DOMAIN_ESCAPE
                break
            z = z + s * dz
            phi = phi_new
            if config.store_trace:
                stage_trace.append(phi)
        else:
            if not at_final:
                status = MAXITER

        # the decrement only certifies phi suboptimality; the last centering
        # follows up with damped Newton on the KKT residual itself
        if at_final and m and status == OPTIMAL:
            for _ in range(config.max_newton):
                dz, nu, grad, f, g_cache = _newton_system(ws, z, t_eff, config.reg)
                r_now = grad + prog.eqA.T @ nu if prog.p else grad
                r_now = float(np.linalg.norm(r_now))
                if r_now <= 0.7 * config.tol_kkt:
                    break
                iters += 1
                s = _affine_step_cap(prog, z, dz, g_cache, config.ftb)
                accepted = False
                for _bt in range(config.max_backtracks):
                    z_trial = z + s * dz
                    phi_new, _ = ws.phi(z_trial, t)
                    # residual Armijo plus a no-increase guard on phi so the
                    # centering merit stays monotone up to rounding
                    if np.isfinite(phi_new):
                        r_vec = ws.grad_phi(z_trial, t_eff)
                        if prog.p:
                            r_vec = r_vec + prog.eqA.T @ nu
                        r_trial = float(np.linalg.norm(r_vec))
                        if (r_trial <= (1.0 - 0.3 * s) * r_now
                                and phi_new <= phi + 1e-9 * (1.0 + abs(phi))):
                            accepted = True
                            break
                    s *= config.ls_beta
                if not accepted or s < 1e-14:
                    break
                z = z + s * dz
                phi = phi_new
                if config.store_trace:
                    stage_trace.append(phi)
            else:
                status = MAXITER

        if status in (MAXITER, DOMAIN_ESCAPE):
            break
        if not m or t >= t_req:
            break
        t = min(t * config.barrier_mult, t_req)

    g = prog.g_values(z)
    lam = 1.0 / (t * (-g)) if m else np.zeros(0)
    value = prog.obj_value(z)
    r_stat, r_feas, r_comp = kkt_residual(prog, z, lam, nu)
    if status == OPTIMAL:
        ok = (r_stat <= config.tol_kkt and r_feas <= config.tol_kkt
              and r_comp <= config.tol_kkt and (not m or np.max(g) <= config.tol_kkt))
        if not ok:
            status = MAXITER
    return KktSolution(z=z, lam=lam, mu=nu, value=value, r_stat=r_stat,
                       r_feas=r_feas, r_comp=r_comp, iters=iters, status=status,
                       t_final=t, g=g, trace=trace)


def kkt_residual(program, z, lam, mu):
    """(stationarity, feasibility, complementarity) residual norms at (z, lam, mu)."""
    z = np.asarray(z, dtype=float)
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if lam.size != program.m:
        raise ValueError("lambda has length %d, expected %d" % (lam.size, program.m))
    if np.any(lam < 0):
        raise ValueError("inequality multipliers must be nonnegative")
    grad = program.obj_grad(z)
    if program.m:
        g = program.g_values(z)
        grad = grad + program.ineq_jacobian(z).T @ lam
        r_comp = float(np.linalg.norm(lam * g))
        viol = np.maximum(g, 0.0)
    else:
        r_comp = 0.0
        viol = np.zeros(0)
    if program.p:
        if mu.size != program.p:
            raise ValueError("mu has length %d, expected %d" % (mu.size, program.p))
        grad = grad + program.eqA.T @ mu
        eq_res = program.eqA @ z - program.eqb
    else:
        eq_res = np.zeros(0)
    r_stat = float(np.linalg.norm(grad))
    r_feas = float(np.linalg.norm(np.concatenate([eq_res, viol])))
    return r_stat, r_feas, r_comp


# ---------------------------------------------------------------------------
# phase-I

class _SlackShifted(SmoothOracle):
    """g(z) - s over the extended vector (z_local, s)."""

    def __init__(self, base):
        self.base = base
        self.dim = base.dim + 1
        self.curvature = base.curvature if base.curvature != AFFINE else AFFINE

    def value(self, z):
        return self.base.value(z[:-1]) - z[-1]

    def grad(self, z):
        return np.concatenate([self.base.grad(z[:-1]), [-1.0]])

    def hess(self, z):
        H = np.zeros((self.dim, self.dim))
        H[:-1, :-1] = self.base.hess(z[:-1])
        return H

    def in_domain(self, z):
        return self.base.in_domain(z[:-1])


def phase_one(program, config=None):
    """Strictly feasible point of `program`, or raise InfeasibleError.

    Minimizes s subject to g_i(z) <= s (and the original equalities) from a
    point inside all oracle domains (program.domain_guess, default 0).  Only
    scalar-oracle inequality blocks are supported; stacked stage programs
    construct their starts directly instead.
    """
    config = config or SolverConfig()
    prog = program
    n = prog.n
    if not prog.inequalities:
        z = np.zeros(n) if prog.domain_guess is None else prog.domain_guess.copy()
        if prog.p:
            z = _project_to_equalities(z, prog.eqA, prog.eqb)
        return z
    z0 = prog.domain_guess if prog.domain_guess is not None else prog.start
    z0 = np.zeros(n) if z0 is None else np.asarray(z0, dtype=float).copy()
    if prog.p:
        z0 = _project_to_equalities(z0, prog.eqA, prog.eqb)
    if not prog.in_domain(z0):
        raise InfeasibleError("phase-I starting point lies outside an oracle domain")
    g0 = prog.g_values(z0)
    if not np.all(np.isfinite(g0)):
        raise InfeasibleError("constraint oracle returned a non-finite value at the phase-I start")
    s0 = float(np.max(g0)) + 1.0
    cap = abs(s0) + 10.0

    aux_ineq = []
    for blk in prog.inequalities:
        if not isinstance(blk, _ScalarBlock):
            raise TypeError("phase_one requires scalar-oracle constraints")
        aux_ineq.append((_SlackShifted(blk.oracle), np.concatenate([blk.idx, [n]])))
    aux_ineq.append((AffineOracle([-1.0], -cap), np.array([n])))

    eqA = None if prog.eqA is None else np.hstack([prog.eqA, np.zeros((prog.p, 1))])
    aux = ConvexProgram(
        n + 1,
        (AffineOracle(np.concatenate([np.zeros(n), [1.0]])), np.arange(n + 1)),
        inequalities=aux_ineq,
        eqA=eqA, eqb=prog.eqb,
        start=np.concatenate([z0, [s0]]),
    )
    p1cfg = SolverConfig(tol_kkt=max(1e-6, config.tol_kkt),
                         max_newton=config.max_newton,
                         ls_alpha=config.ls_alpha, ls_beta=config.ls_beta,
                         ftb=config.ftb, reg=config.reg)
    sol = solve(aux, p1cfg)
    slack = float(sol.z[n])
    z = sol.z[:n]
    if slack >= -1e-9 or not prog.strictly_feasible(z):
        raise InfeasibleError("no strictly feasible point (minimized slack %.3e)" % slack,
                              slack=slack)
    return z


def _project_to_equalities(z, A, b):
    r = b - A @ z
    if np.linalg.norm(r) <= 1e-12:
        return z
    dz, *_ = np.linalg.lstsq(A, r, rcond=None)
    return z + dz
