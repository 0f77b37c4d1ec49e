"""Regularity diagnostics of relaxed solutions and experiment drivers.

Diagnostics classify active constraints, test LICQ (numerical rank of the
active-gradient matrix) and strict complementarity on a solved program, and
probe smoothness of the stage projection map.  Drivers sweep the noise
scale or the hybrid threshold with common random numbers and fit
through-origin linear/quadratic models to the optimality-gap curve.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from .policies import HybridPolicy, project_onto_stage
from .relaxation import solve_nominal
from .simulator import evaluate
from .solver import OPTIMAL

TOL_ACT = 1e-6
TOL_LAMBDA = 1e-6


def _require_optimal(kkt):
    if kkt.status != OPTIMAL:
        raise ValueError("diagnostics need an Optimal solution, got %s" % kkt.status)


@dataclass
class ActiveSetEntry:
    index: int
    stage: int
    name: str
    g: float
    lam: float


@dataclass
class ActiveSetReport:
    entries: list
    inactive_margin: float
    tol_act: float

    @property
    def indices(self):
        return [e.index for e in self.entries]

    def for_stage(self, t):
        return [e for e in self.entries if e.stage == t]


def _row_meta(program):
    if program.ineq_meta is not None:
        return list(program.ineq_meta)
    return [(None, "g[%d]" % i) for i in range(program.m)]


def active_set(program, kkt, tol_act=TOL_ACT):
    """Classify constraints by |g_i| <= tol_act at the solved point."""
    _require_optimal(kkt)
    meta = _row_meta(program)
    entries = []
    margins = []
    for i, (gv, lv) in enumerate(zip(kkt.g, kkt.lam)):
        if abs(gv) <= tol_act:
            t, name = meta[i]
            entries.append(ActiveSetEntry(index=i, stage=t, name=name,
                                          g=float(gv), lam=float(lv)))
        else:
            margins.append(-gv)
    margin = float(min(margins)) if margins else np.inf
    return ActiveSetReport(entries=entries, inactive_margin=margin, tol_act=tol_act)


@dataclass
class LicqVerdict:
    ok: bool
    rank: int
    n_rows: int
    min_sv: float


def _numerical_rank(rows):
    if rows.shape[0] == 0:
        return 0, np.inf
    sv = np.linalg.svd(rows, compute_uv=False)
    cutoff = 1e-8 * sv[0] if sv[0] > 0 else 0.0
    return int(np.sum(sv > cutoff)), float(sv[-1])


def check_licq(program, kkt, tol_act=TOL_ACT):
    """LICQ: active inequality gradients plus all equality rows are independent."""
    _require_optimal(kkt)
    act = [i for i, gv in enumerate(kkt.g) if abs(gv) <= tol_act]
    rows = []
    if act:
        rows.append(program.ineq_jacobian(kkt.z)[act])
    if program.p:
        rows.append(program.eqA)
    stacked = np.vstack(rows) if rows else np.zeros((0, program.n))
    rank, min_sv = _numerical_rank(stacked)
    return LicqVerdict(ok=rank == stacked.shape[0], rank=rank,
                       n_rows=stacked.shape[0], min_sv=min_sv)


@dataclass
class StrictCompVerdict:
    ok: bool
    n_active: int
    min_active_lambda: float


def check_strict_complementarity(kkt, tol_act=TOL_ACT, tol_lambda=TOL_LAMBDA):
    """True iff every active constraint carries a multiplier above tol_lambda."""
    _require_optimal(kkt)
    lams = [lv for gv, lv in zip(kkt.g, kkt.lam) if abs(gv) <= tol_act]
    if not lams:
        return StrictCompVerdict(ok=True, n_active=0, min_active_lambda=np.inf)
    return StrictCompVerdict(ok=min(lams) > tol_lambda, n_active=len(lams),
                             min_active_lambda=float(min(lams)))


@dataclass
class StageRegularity:
    t: int
    active: list
    licq: LicqVerdict
    strict_comp: StrictCompVerdict

    @property
    def nondegenerate(self):
        return self.licq.ok and self.strict_comp.ok


@dataclass
class RegularityReport:
    value: float
    stages: list
    global_licq: LicqVerdict
    strict_comp: StrictCompVerdict
    tol_act: float
    tol_lambda: float

    @property
    def nondegenerate(self):
        return (self.global_licq.ok and self.strict_comp.ok
                and all(s.nondegenerate for s in self.stages))

    def to_dict(self):
        return {
            "value": self.value,
            "nondegenerate": bool(self.nondegenerate),
            "global_licq": {"ok": self.global_licq.ok, "rank": self.global_licq.rank,
                            "rows": self.global_licq.n_rows},
            "strict_complementarity": {"ok": self.strict_comp.ok,
                                       "min_active_lambda": self.strict_comp.min_active_lambda},
            "stages": [{
                "t": s.t,
                "active": [{"name": e.name, "g": e.g, "lambda": e.lam}
                           for e in s.active],
                "licq": s.licq.ok,
                "strict_comp": s.strict_comp.ok,
                "nondegenerate": s.nondegenerate,
            } for s in self.stages],
        }


def diagnose_regularity(instance, config=None, tol_act=TOL_ACT, tol_lambda=TOL_LAMBDA):
    """Solve the nominal relaxation and report per-stage regularity."""
    plan = solve_nominal(instance, config)
    prog, kkt = plan.program, plan.solution
    report = active_set(prog, kkt, tol_act)
    stages = []
    for t in range(1, instance.dims.T + 1):
        act_t = [e for e in report.entries if e.stage == t]
        act_idx = [e.index for e in act_t]
        if act_idx:
            jac = prog.ineq_jacobian(kkt.z)[act_idx]
            rank, min_sv = _numerical_rank(jac)
            licq = LicqVerdict(ok=rank == len(act_idx), rank=rank,
                               n_rows=len(act_idx), min_sv=min_sv)
        else:
            licq = LicqVerdict(ok=True, rank=0, n_rows=0, min_sv=np.inf)
        lams = [e.lam for e in act_t]
        sc = StrictCompVerdict(ok=(min(lams) > tol_lambda) if lams else True,
                               n_active=len(lams),
                               min_active_lambda=float(min(lams)) if lams else np.inf)
        stages.append(StageRegularity(t=t, active=act_t, licq=licq, strict_comp=sc))
    return RegularityReport(
        value=plan.value, stages=stages,
        global_licq=check_licq(prog, kkt, tol_act),
        strict_comp=check_strict_complementarity(kkt, tol_act, tol_lambda),
        tol_act=tol_act, tol_lambda=tol_lambda)


@dataclass
class DegeneracyVerdict:
    degenerate: bool
    distance: float
    active: list
    min_active_lambda: float
    detail: str

    def to_dict(self):
        return {"degenerate": bool(self.degenerate), "distance": self.distance,
                "active": self.active, "min_active_lambda": self.min_active_lambda,
                "detail": self.detail}


def check_projection_degeneracy(instance, t, x, w, u_target, config=None,
                                tol_act=TOL_ACT, tol_lambda=TOL_LAMBDA,
                                tol_identity=1e-6):
    """Probe smoothness of the stage-t projection at u_target.

    When the projection returns u_target itself (target feasible), the true
    multipliers are all zero, so the map is degenerate exactly when some
    constraint is active there.  Otherwise the verdict is strict
    complementarity of the projection's KKT point.
    """
    u_target = np.asarray(u_target, dtype=float)
    u, sol, prog = project_onto_stage(instance, t, x, w, u_target, config)
    dist = float(np.linalg.norm(u - u_target))
    rep = active_set(prog, sol, tol_act)
    names = [e.name for e in rep.entries]
    min_lam = min([e.lam for e in rep.entries], default=np.inf)
    if dist <= tol_identity * max(1.0, float(np.linalg.norm(u_target))):
        degenerate = bool(rep.entries)
        detail = ("projection is the identity with active constraints (zero multipliers)"
                  if degenerate else "target strictly interior")
    else:
        sc = check_strict_complementarity(sol, tol_act, tol_lambda)
        degenerate = not sc.ok
        detail = ("active constraint with vanishing multiplier at the projected point"
                  if degenerate else "projected point strictly complementary")
    return DegeneracyVerdict(degenerate=degenerate, distance=dist, active=names,
                             min_active_lambda=float(min_lam), detail=detail)


# ---------------------------------------------------------------------------
# experiment drivers

CSV_COLUMNS = ("policy", "sigma", "theta", "mean", "stderr", "gap", "resolves")


@dataclass
class SweepTable:
    rows: list
    reports: list = field(default_factory=list, repr=False)

    def column(self, key):
        return [r[key] for r in self.rows]

    def to_csv(self):
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for r in self.rows:
            cells = []
            for key in CSV_COLUMNS:
                v = r.get(key)
                cells.append("" if v is None else repr(v) if isinstance(v, float) else str(v))
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()


def _report_row(report):
    return {
        "policy": report.policy,
        "sigma": report.sigma,
        "theta": report.theta,
        "mean": report.mean,
        "stderr": report.stderr,
        "gap": report.gap_bound,
        "resolves": report.mean_resolves,
    }


def sweep_sigma(make_instance, sigma_grid, policy, M, seed, config=None, n_jobs=1):
    """Evaluate `policy` across noise scales with common random numbers.

    make_instance maps sigma to a ProblemInstance; the nominal value used
    for every gap is computed once (it does not depend on sigma).
    """
    sigma_grid = list(sigma_grid)
    if not sigma_grid:
        raise ValueError("sigma grid is empty")
    v_ref = None
    rows, reports = [], []
    for sigma in sigma_grid:
        instance = make_instance(sigma)
        if v_ref is None:
            v_ref = solve_nominal(instance, config).value
        rep = evaluate(instance, policy, M, config=config, seed=seed,
                       n_jobs=n_jobs, v_ref=v_ref)
        rows.append(_report_row(rep))
        reports.append(rep)
    return SweepTable(rows=rows, reports=reports)


def sweep_theta(instance, theta_grid, sigma=None, M=400, seed=0, config=None, n_jobs=1):
    """Evaluate the hybrid policy across thresholds at a fixed instance.

    All rows share the seed, so differences across theta come only from the
    policy branch, not the noise.
    """
    theta_grid = list(theta_grid)
    if not theta_grid:
        raise ValueError("theta grid is empty")
    if sigma is not None and float(sigma) != float(instance.exo.sigma):
        raise ValueError("instance was built at sigma=%g; rebuild it for sigma=%g"
                         % (instance.exo.sigma, sigma))
    v_ref = solve_nominal(instance, config).value
    rows, reports = [], []
    for theta in theta_grid:
        rep = evaluate(instance, HybridPolicy(theta), M, config=config, seed=seed,
                       n_jobs=n_jobs, v_ref=v_ref)
        rows.append(_report_row(rep))
        reports.append(rep)
    return SweepTable(rows=rows, reports=reports)


@dataclass
class FitReport:
    sigmas: np.ndarray
    gaps: np.ndarray
    stderrs: np.ndarray
    coef_linear: float
    rmse_linear: float
    coef_quadratic: float
    rmse_quadratic: float
    preferred: str

    def to_dict(self):
        return {
            "sigmas": [float(s) for s in self.sigmas],
            "gaps": [float(g) for g in self.gaps],
            "stderrs": [float(s) for s in self.stderrs],
            "linear": {"coef": self.coef_linear, "rmse": self.rmse_linear},
            "quadratic": {"coef": self.coef_quadratic, "rmse": self.rmse_quadratic},
            "preferred": self.preferred,
        }


def fit_rates(gap_table):
    """Through-origin least-squares fits gap ~ a*sigma and gap ~ b*sigma^2.

    Rows with sigma = 0 are excluded (both models vanish there); at least
    three positive-sigma points are required.
    """
    rows = gap_table.rows if hasattr(gap_table, "rows") else list(gap_table)
    pts = [(float(r["sigma"]), float(r["gap"]), float(r.get("stderr") or 0.0))
           for r in rows if float(r["sigma"]) > 0]
    if len(pts) < 3:
        raise ValueError("need at least three positive-sigma grid points")
    s = np.array([p[0] for p in pts])
    g = np.array([p[1] for p in pts])
    se = np.array([p[2] for p in pts])
    a = float(np.sum(g * s) / np.sum(s ** 2))
    b = float(np.sum(g * s ** 2) / np.sum(s ** 4))
    rmse_l = float(np.sqrt(np.mean((g - a * s) ** 2)))
    rmse_q = float(np.sqrt(np.mean((g - b * s ** 2) ** 2)))
    preferred = "quadratic" if rmse_q < rmse_l else "linear"
    return FitReport(sigmas=s, gaps=g, stderrs=se,
                     coef_linear=a, rmse_linear=rmse_l,
                     coef_quadratic=b, rmse_quadratic=rmse_q,
                     preferred=preferred)
