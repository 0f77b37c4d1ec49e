"""Multi-stage convex stochastic control problem data model.

A problem instance is: maximize E[sum_t R_t(X(t), W(t), U(t))] subject to
per-stage smooth convex constraints holding almost surely, with affine
dynamics X(t+1) = (X(t), W(t), U(t)) . C + D + eps(t), bounded i.i.d.
exogenous noise W(t) and bounded zero-mean endogenous noise eps(t).

All stage oracles use one slot convention: the concatenated vector
(x, w, u) of length n_x + n_w + n_u.
"""

from dataclasses import dataclass, field

import numpy as np

from . import oracles as orc
from .oracles import AFFINE, CONCAVE, CONVEX, RestrictedOracle
from .sampling import sample_truncated_normal


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Dims:
    n_x: int
    n_u: int
    n_w: int
    T: int

    def __post_init__(self):
        for name in ("n_x", "n_u", "n_w", "T"):
            if getattr(self, name) < 1:
                raise ValueError("%s must be a positive integer" % name)

    @property
    def n_slot(self):
        return self.n_x + self.n_w + self.n_u


class AffineDynamics:
    """x_next = (x, w, u) . C + D, optionally one (C, D) pair per stage."""

    def __init__(self, C, D, per_stage=None):
        self.C = np.asarray(C, dtype=float)
        self.D = np.asarray(D, dtype=float)
        self.per_stage = None
        if per_stage is not None:
            self.per_stage = [(np.asarray(c, dtype=float), np.asarray(d, dtype=float))
                              for c, d in per_stage]

    def at(self, t):
        if self.per_stage is not None:
            return self.per_stage[t - 1]
        return self.C, self.D

    def phi(self, x, w, u, t=1):
        C, D = self.at(t)
        return np.concatenate([x, w, u]) @ C + D

    def check_shapes(self, dims):
        pairs = self.per_stage if self.per_stage is not None else [(self.C, self.D)]
        if self.per_stage is not None and len(pairs) != dims.T:
            raise ValidationError("dynamics: per-stage list has %d entries, horizon is %d"
                                  % (len(pairs), dims.T))
        for C, D in pairs:
            if C.shape != (dims.n_slot, dims.n_x):
                raise ValidationError("dynamics: C has shape %s, expected %s"
                                      % (C.shape, (dims.n_slot, dims.n_x)))
            if D.shape != (dims.n_x,):
                raise ValidationError("dynamics: D has shape %s, expected (%d,)"
                                      % (D.shape, dims.n_x))


@dataclass(eq=False)
class ExogenousNoise:
    """Bounded i.i.d. arrivals: mean + TN(0, sigma^2) truncated to +-halfwidth."""

    mean: np.ndarray
    sigma: float
    halfwidth: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.halfwidth = np.asarray(self.halfwidth, dtype=float)
        if self.sigma < 0:
            raise ValidationError("exogenous noise: sigma must be >= 0")
        if self.halfwidth.shape != self.mean.shape or np.any(self.halfwidth < 0):
            raise ValidationError("exogenous noise: halfwidth must be nonnegative, same shape as mean")

    def sample(self, rng):
        if self.sigma == 0:
            return self.mean.copy()
        return self.mean + sample_truncated_normal(rng, self.sigma, -self.halfwidth, self.halfwidth)

    def support(self):
        return self.mean - self.halfwidth, self.mean + self.halfwidth


@dataclass(eq=False)
class EndogenousNoise:
    """Zero-mean disturbance TN(0, sigma^2) truncated to +-bound(x, w, u).

    `bound` must be a picklable callable returning a nonnegative length-n_x
    vector; it defines the support of the conditional law.
    """

    sigma: float
    bound: object

    def sample(self, x, w, u, rng):
        b = np.asarray(self.bound(x, w, u), dtype=float)
        if self.sigma == 0:
            return np.zeros_like(b)
        return sample_truncated_normal(rng, self.sigma, -b, b)


@dataclass(eq=False)
class StageSpec:
    """Reward plus constraint oracle lists for one stage (slot layout (x, w, u)).

    `families` and `reward_family` are optional vectorization hints consumed
    by the stacked-program builder; the scalar oracle lists remain the source
    of truth for counts, names and restriction.
    """

    reward: object
    inequalities: list
    equalities: list = field(default_factory=list)
    ineq_names: list = None
    families: list = None
    reward_family: object = None

    def __post_init__(self):
        if self.reward.curvature != CONCAVE:
            raise ValidationError("stage reward must be tagged concave")
        for i, g in enumerate(self.inequalities):
            if g.curvature not in (CONVEX, AFFINE):
                raise ValidationError("inequality %d must be tagged convex or affine" % i)
        for j, h in enumerate(self.equalities):
            if h.curvature != AFFINE:
                raise ValidationError("equality %d must be tagged affine" % j)
        if self.ineq_names is None:
            self.ineq_names = ["g[%d]" % i for i in range(len(self.inequalities))]


@dataclass(eq=False)
class ProblemInstance:
    dims: Dims
    x1: np.ndarray
    stages: list
    dynamics: AffineDynamics
    exo: ExogenousNoise
    endo: EndogenousNoise
    name: str = ""
    interior_hint: object = None  # optional callable (t, x, w) -> strictly feasible u, or None

    def __post_init__(self):
        self.x1 = np.asarray(self.x1, dtype=float)
        if self.x1.shape != (self.dims.n_x,):
            raise ValidationError("x1 has shape %s, expected (%d,)" % (self.x1.shape, self.dims.n_x))
        if len(self.stages) != self.dims.T:
            raise ValidationError("got %d stage specs for horizon T=%d" % (len(self.stages), self.dims.T))
        if self.exo.mean.shape != (self.dims.n_w,):
            raise ValidationError("exogenous mean has shape %s, expected (%d,)"
                                  % (self.exo.mean.shape, self.dims.n_w))
        self.dynamics.check_shapes(self.dims)

    def stage(self, t):
        return self.stages[t - 1]

    def slot_point(self, x, w, u):
        return np.concatenate([x, w, u])

    def u_slots(self):
        d = self.dims
        return np.arange(d.n_x + d.n_w, d.n_slot)

    def xu_slots(self):
        d = self.dims
        return np.concatenate([np.arange(d.n_x), np.arange(d.n_x + d.n_w, d.n_slot)])


def step_dynamics(instance, t, x, w, u, rng=None):
    """phi(x, w, u) at stage t, plus one endogenous draw when rng is given."""
    d = instance.dims
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (d.n_x,) or w.shape != (d.n_w,) or u.shape != (d.n_u,):
        raise ValidationError("step_dynamics: vector shapes %s/%s/%s do not match dims"
                              % (x.shape, w.shape, u.shape))
    nxt = instance.dynamics.phi(x, w, u, t)
    if rng is not None:
        nxt = nxt + instance.endo.sample(x, w, u, rng)
    return nxt


@dataclass(eq=False)
class ConstraintBundle:
    """Stage constraints restricted to u with (x, w) frozen."""

    t: int
    x: np.ndarray
    w: np.ndarray
    inequalities: list
    equalities: list
    names: list
    spec: object = None
    frozen: np.ndarray = None
    free: np.ndarray = None

    def _family_blocks(self):
        # vectorized family blocks, or None when the spec carries no hints
        cached = getattr(self, "_fam_cache", False)
        if cached is not False:
            return cached
        spec = self.spec
        blocks = None
        if spec is not None and spec.families is not None and self.free is not None:
            gidx = np.arange(self.free.size)
            built = [fam.make_block(self.free, self.frozen, gidx)
                     for fam in spec.families]
            if sum(b.m for b in built) == len(self.inequalities):
                blocks = built
        self._fam_cache = blocks
        return blocks

    def ineq_blocks(self):
        """Inequalities as solver entries, family-vectorized when hinted.

        Row order matches `names` either way; callers that need phase-I
        (scalar-only) should keep using `inequalities` directly.
        """
        blocks = self._family_blocks()
        if blocks is not None:
            return blocks
        n_u = self.inequalities[0].dim if self.inequalities else 0
        return [(g, np.arange(n_u)) for g in self.inequalities]

    def residual(self, u):
        r = sum(max(g.value(u), 0.0) for g in self.inequalities)
        r += sum(abs(h.value(u)) for h in self.equalities)
        return float(r)

    def strictly_feasible(self, u, margin=0.0):
        blocks = self._family_blocks()
        if blocks is not None:
            for blk in blocks:
                if not blk.in_domain(u) or np.max(blk.values(u)) >= -margin:
                    return False
        else:
            for g in self.inequalities:
                if not g.in_domain(u) or g.value(u) >= -margin:
                    return False
        for h in self.equalities:
            if abs(h.value(u)) > 1e-9:
                return False
        return True


def feasible_set(instance, t, x, w):
    """Stage-t constraint oracles as functions of u alone ((x, w) frozen)."""
    if not 1 <= t <= instance.dims.T:
        raise ValueError("stage %d outside horizon [1, %d]" % (t, instance.dims.T))
    spec = instance.stage(t)
    frozen = instance.slot_point(np.asarray(x, float), np.asarray(w, float),
                                 np.zeros(instance.dims.n_u))
    free = instance.u_slots()
    ineqs = [RestrictedOracle(g, free, frozen) for g in spec.inequalities]
    eqs = [RestrictedOracle(h, free, frozen) for h in spec.equalities]
    return ConstraintBundle(t=t, x=np.asarray(x, float), w=np.asarray(w, float),
                            inequalities=ineqs, equalities=eqs, names=list(spec.ineq_names),
                            spec=spec, frozen=frozen, free=free)


# ---------------------------------------------------------------------------
# validation

@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list

    @property
    def ok(self):
        return all(c.ok for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.ok]

    def summary(self):
        lines = ["%s %s%s" % ("PASS" if c.ok else "FAIL", c.name,
                              " (%s)" % c.detail if c.detail else "")
                 for c in self.checks]
        return "\n".join(lines)


def _dedupe_oracles(instance):
    """Unique oracles by identity; stationary models reuse objects across stages."""
    seen = {}
    for t in range(1, instance.dims.T + 1):
        spec = instance.stage(t)
        for role, oracle in ([("reward", spec.reward)]
                             + [("ineq", g) for g in spec.inequalities]
                             + [("eq", h) for h in spec.equalities]):
            seen.setdefault(id(oracle), (role, oracle, t))
    return list(seen.values())


def _nominal_trajectory(instance, config):
    """Strictly feasible controls at mean noise, found stage by stage by phase-I."""
    from .relaxation import stage_interior_control

    xs, us = [instance.x1.copy()], []
    x = instance.x1.copy()
    wbar = instance.exo.mean
    for t in range(1, instance.dims.T + 1):
        u = stage_interior_control(instance, t, x, wbar, config)
        us.append(u)
        x = step_dynamics(instance, t, x, wbar, u)
        xs.append(x)
    return xs, us


def validate_instance(instance, seed, config=None, strict=True, n_mean=10_000):
    """Run the model sanity suite; returns a ValidationReport.

    Checks: finite-difference gradient/Hessian agreement and curvature of
    every distinct oracle at jittered nominal points, affinity of the
    dynamics, noise support and zero-mean statistics, and stage-wise strict
    feasibility (Slater) along the nominal trajectory.  With strict=True a
    failed report raises ValidationError.
    """
    from .solver import SolverConfig

    config = config or SolverConfig(tol_kkt=1e-6)
    rng = np.random.default_rng(seed)
    checks = []
    d = instance.dims

    try:
        xs, us = _nominal_trajectory(instance, config)
        slater_ok = True
        detail = ""
    except Exception as e:  # surfaced per stage below
        xs, us = [instance.x1.copy()], [np.zeros(d.n_u)]
        slater_ok = False
        detail = str(e)
    checks.append(Check("slater: strictly feasible control at every stage (mean noise)",
                        slater_ok, detail))

    anchors = [instance.slot_point(xs[min(t, len(us) - 1)], instance.exo.mean,
                                   us[min(t, len(us) - 1)])
               for t in range(min(3, len(us)))]

    def interior_points(oracle, count=20):
        pts = []
        tries = 0
        while len(pts) < count and tries < 50 * count:
            tries += 1
            base = anchors[rng.integers(len(anchors))]
            z = base + 0.05 * rng.standard_normal(base.size) * (1 + np.abs(base))
            if oracle.in_domain(z) and np.isfinite(oracle.value(z)):
                pts.append(z)
        return pts

    for role, oracle, t in _dedupe_oracles(instance):
        tag = "%s oracle (stage %d)" % (role, t)
        pts = interior_points(oracle)
        if not pts:
            checks.append(Check("%s: interior sample points" % tag, False,
                                "could not find domain points near the nominal trajectory"))
            continue
        gerr = max(orc.gradient_error(oracle, z) for z in pts)
        checks.append(Check("%s: gradient matches finite differences" % tag,
                            gerr <= 1e-4, "max rel err %.2e" % gerr))
        herr = max(orc.hessian_error(oracle, z) for z in pts)
        checks.append(Check("%s: Hessian matches finite differences" % tag,
                            herr <= 1e-4, "max rel err %.2e" % herr))
        sym = max(float(np.max(np.abs(oracle.hess(z) - oracle.hess(z).T))) for z in pts)
        checks.append(Check("%s: Hessian symmetric" % tag, sym <= 1e-10))
        curv_ok, cdetail = True, ""
        for z in pts:
            H = oracle.hess(z)
            scale = 1.0 + float(np.max(np.abs(H)))
            if not np.all(np.isfinite(H)):
                curv_ok, cdetail = False, "non-finite Hessian"
                break
            if oracle.curvature == AFFINE:
                if np.max(np.abs(H)) > 1e-10:
                    curv_ok, cdetail = False, "affine tag but nonzero Hessian"
                    break
            else:
                ev = np.linalg.eigvalsh(H)
                if oracle.curvature == CONVEX and ev[0] < -1e-7 * scale:
                    curv_ok, cdetail = False, "min eigenvalue %.2e" % ev[0]
                    break
                if oracle.curvature == CONCAVE and ev[-1] > 1e-7 * scale:
                    curv_ok, cdetail = False, "max eigenvalue %.2e" % ev[-1]
                    break
        checks.append(Check("%s: curvature tag (%s) consistent" % (tag, oracle.curvature),
                            curv_ok, cdetail))
        vals = [oracle.value(z) for z in pts]
        checks.append(Check("%s: finite values" % tag, all(np.isfinite(v) for v in vals)))

    # dynamics affinity
    aff_ok = True
    for _ in range(20):
        a = rng.standard_normal(d.n_slot)
        b = rng.standard_normal(d.n_slot)
        s = rng.random()
        t = int(rng.integers(1, d.T + 1))
        C, D = instance.dynamics.at(t)
        lhs = (s * a + (1 - s) * b) @ C + D
        rhs = s * (a @ C + D) + (1 - s) * (b @ C + D)
        if np.max(np.abs(lhs - rhs)) > 1e-9 * (1 + np.max(np.abs(lhs))):
            aff_ok = False
            break
    checks.append(Check("dynamics: evaluation is affine in (x, w, u)", aff_ok))

    # exogenous support
    lo, hi = instance.exo.support()
    draws = np.array([instance.exo.sample(rng) for _ in range(2000)])
    in_support = bool(np.all(draws >= lo - 1e-12) and np.all(draws <= hi + 1e-12))
    checks.append(Check("exogenous noise: draws inside declared support", in_support))
    if instance.exo.sigma == 0:
        exact = bool(np.all(draws == instance.exo.mean))
        checks.append(Check("exogenous noise: sigma=0 draws equal the mean exactly", exact))

    # endogenous zero mean at the nominal start
    x0, w0, u0 = xs[0], instance.exo.mean, us[0]
    b = np.asarray(instance.endo.bound(x0, w0, u0), dtype=float)
    if instance.endo.sigma == 0:
        checks.append(Check("endogenous noise: sigma=0 draws are exactly zero",
                            bool(np.all(instance.endo.sample(x0, w0, u0, rng) == 0))))
    else:
        eps = np.array([instance.endo.sample(x0, w0, u0, rng) for _ in range(n_mean)])
        mean_ok = bool(np.all(np.abs(eps.mean(axis=0)) <= 4 * np.maximum(b, 1e-12) / np.sqrt(n_mean)))
        bound_ok = bool(np.all(np.abs(eps) <= b + 1e-12))
        checks.append(Check("endogenous noise: sample mean within 4 bound/sqrt(N) of zero", mean_ok))
        checks.append(Check("endogenous noise: draws inside declared bound", bound_ok))

    report = ValidationReport(checks)
    if strict and not report.ok:
        raise ValidationError("instance validation failed:\n" +
                              "\n".join("  " + c.name + (": " + c.detail if c.detail else "")
                                        for c in report.failures()))
    return report
