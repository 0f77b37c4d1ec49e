"""Per-stage control policies built on the certainty-equivalent relaxations.

Four policies share one interface: `prepare` builds per-episode state before
stage 1, `act` maps the observed (t, x, w) to a control.

- update: re-solves the observed-first-stage relaxation every stage and
  applies its first control.
- projection: solves the nominal relaxation once, then per stage applies
  the Euclidean projection of the planned control onto the realized
  feasible set.
- hybrid(theta_max): projects while the deviation theta between the cached
  deterministic plan and the realized (x, w, projected u) stays below
  theta_max, re-solving and refreshing the plan otherwise.
- myopic: ignores the relaxation; maximizes a random linear objective over
  the stage feasible set.

Plan-carrying policies count relaxation solves in resolve_count, including
the initial nominal solve, so at horizon T the update policy reports T + 1,
projection reports 1 and myopic 0.
"""

from dataclasses import dataclass

import numpy as np

from .oracles import AffineOracle, QuadraticOracle
from .problem import feasible_set
from .relaxation import (_bundle_equalities, default_config, solve_nominal,
                         solve_observed, stage_interior_control)
from .solver import OPTIMAL, ConvexProgram, SolverError, solve

# stage subproblems start from an interior anchor, so the barrier path can
# begin at a moderate weight instead of crawling up from t0 = 1
STAGE_T0 = 3e2


@dataclass
class PolicyState:
    """Episode-local policy memory: the cached plan and solve accounting."""

    cached_plan: object = None
    resolve_count: int = 0
    last_theta: float = None


@dataclass
class ActionRecord:
    t: int
    u: np.ndarray
    theta: float = None
    resolved: bool = False


def prepare_plan(instance, config=None):
    """PolicyState holding the solved nominal plan (counts as one solve)."""
    plan = solve_nominal(instance, config)
    return PolicyState(cached_plan=plan, resolve_count=1)


def _warm_controls(plan, t):
    if plan is None:
        return None
    k = t - plan.t_start
    if not 0 <= k < plan.horizon:
        return None
    return plan.controls[k:]


def update_act(instance, t, x, w, config, state):
    """Re-solve the window [t, T] at the observed (x, w); apply its first control."""
    plan = solve_observed(instance, t, x, w, config,
                          warm=_warm_controls(state.cached_plan, t))
    state.cached_plan = plan
    state.resolve_count += 1
    state.last_theta = None
    return ActionRecord(t=t, u=plan.controls[0], resolved=True)


def project_onto_stage(instance, t, x, w, target, config=None):
    """Euclidean projection of `target` onto the stage-t feasible set.

    Returns (u, KktSolution, ConvexProgram); the program carries per-row
    (stage, name) metadata for diagnostics.
    """
    config = config or default_config()
    target = np.asarray(target, dtype=float)
    n_u = instance.dims.n_u
    bundle = feasible_set(instance, t, x, w)
    eqA, eqb = _bundle_equalities(bundle, n_u)
    start = stage_interior_control(instance, t, x, w, config)
    obj = QuadraticOracle(np.eye(n_u), -target, 0.5 * float(target @ target))
    prog = ConvexProgram(
        n_u, (obj, np.arange(n_u)),
        inequalities=bundle.ineq_blocks(),
        eqA=eqA, eqb=eqb, start=start,
        ineq_meta=[(t, name) for name in bundle.names])
    sol = solve(prog, config, t0=STAGE_T0)
    if sol.status != OPTIMAL:
        raise SolverError("stage %d projection did not converge (%s)" % (t, sol.status))
    return sol.z, sol, prog


def projection_act(instance, t, x, w, config, state):
    """Project the cached plan's stage-t control onto the realized feasible set."""
    target = state.cached_plan.control(t)
    u, _, _ = project_onto_stage(instance, t, x, w, target, config)
    state.last_theta = None
    return ActionRecord(t=t, u=u, resolved=False)


def hybrid_act(instance, t, x, w, theta_max, config, state):
    """Project when the plan deviation is below theta_max, else re-solve.

    theta concatenates the planned-vs-realized state, mean-vs-realized
    arrivals, and planned-vs-projected control; a tie theta == theta_max
    re-solves.
    """
    plan = state.cached_plan
    u_star = plan.control(t)
    x_star = plan.state(t)
    u_pi, _, _ = project_onto_stage(instance, t, x, w, u_star, config)
    dev = np.concatenate([x_star - np.asarray(x, float),
                          instance.exo.mean - np.asarray(w, float),
                          u_star - u_pi])
    theta = float(np.linalg.norm(dev))
    state.last_theta = theta
    if theta < theta_max:
        return ActionRecord(t=t, u=u_pi, theta=theta, resolved=False)
    new_plan = solve_observed(instance, t, x, w, config,
                              warm=_warm_controls(plan, t))
    state.cached_plan = new_plan
    state.resolve_count += 1
    return ActionRecord(t=t, u=new_plan.controls[0], theta=theta, resolved=True)


def myopic_act(instance, t, x, w, rng, config):
    """Maximize a uniformly random linear objective over the stage feasible set."""
    config = config or default_config()
    n_u = instance.dims.n_u
    c = rng.standard_normal(n_u)
    nrm = float(np.linalg.norm(c))
    while nrm < 1e-12:
        c = rng.standard_normal(n_u)
        nrm = float(np.linalg.norm(c))
    c /= nrm
    bundle = feasible_set(instance, t, x, w)
    eqA, eqb = _bundle_equalities(bundle, n_u)
    start = stage_interior_control(instance, t, x, w, config)
    prog = ConvexProgram(
        n_u, (AffineOracle(-c, 0.0), np.arange(n_u)),
        inequalities=bundle.ineq_blocks(),
        eqA=eqA, eqb=eqb, start=start)
    sol = solve(prog, config, t0=STAGE_T0)
    if sol.status != OPTIMAL:
        raise SolverError("stage %d myopic subproblem did not converge (%s)"
                          % (t, sol.status))
    return ActionRecord(t=t, u=sol.z, resolved=False)


def residual_deviation(instance, t, x, w, u):
    """Constraint residual sum(max(g, 0)) + sum(|h|) at the stage point."""
    return feasible_set(instance, t, x, w).residual(np.asarray(u, dtype=float))


# ---------------------------------------------------------------------------
# policy objects used by the simulator

class UpdatePolicy:
    name = "update"
    theta = None

    def prepare(self, instance, config):
        return prepare_plan(instance, config)

    def act(self, instance, t, x, w, state, rng, config):
        return update_act(instance, t, x, w, config, state)


class ProjectionPolicy:
    name = "projection"
    theta = None

    def prepare(self, instance, config):
        return prepare_plan(instance, config)

    def act(self, instance, t, x, w, state, rng, config):
        return projection_act(instance, t, x, w, config, state)


class HybridPolicy:
    name = "hybrid"

    def __init__(self, theta):
        if not theta >= 0:
            raise ValueError("hybrid threshold must be nonnegative")
        self.theta = float(theta)

    def prepare(self, instance, config):
        return prepare_plan(instance, config)

    def act(self, instance, t, x, w, state, rng, config):
        return hybrid_act(instance, t, x, w, self.theta, config, state)


class MyopicPolicy:
    name = "myopic"
    theta = None

    def prepare(self, instance, config):
        return PolicyState()

    def act(self, instance, t, x, w, state, rng, config):
        return myopic_act(instance, t, x, w, rng, config)


POLICY_NAMES = ("update", "projection", "hybrid", "myopic")


def make_policy(name, theta=None):
    name = name.lower()
    if name == "update":
        return UpdatePolicy()
    if name == "projection":
        return ProjectionPolicy()
    if name == "hybrid":
        if theta is None:
            raise ValueError("hybrid policy needs a threshold theta")
        return HybridPolicy(theta)
    if name == "myopic":
        return MyopicPolicy()
    raise ValueError("unknown policy %r" % name)
