"""Seeded Monte Carlo evaluation of policies on the true stochastic system.

Episodes draw arrivals and dynamics noise from per-(replication, stage,
purpose) substreams, so different policies evaluated at the same seed see
identical noise (common random numbers) and replication-level parallelism
reproduces the serial result exactly.  The optimality-gap bound of a policy
is the nominal relaxation value minus its Monte Carlo mean.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .policies import PolicyState
from .relaxation import default_config, solve_nominal
from .sampling import ENDO, EXO, POLICY, RngStream
from .solver import SolverConfig, SolverError


@dataclass
class TrajectoryRecord:
    """One simulated episode: per-stage realizations and the accrued value."""

    states: np.ndarray      # (T, n_x), states[t-1] = x(t)
    arrivals: np.ndarray    # (T, n_w)
    controls: np.ndarray    # (T, n_u)
    rewards: np.ndarray     # (T,)
    eps: np.ndarray         # (T-1, n_x) endogenous draws
    thetas: list
    resolved: list
    value: float
    resolve_count: int


@dataclass
class EvaluationReport:
    policy: str
    theta: float
    sigma: float
    M: int
    seed: int
    mean: float
    stderr: float
    v_rel: float
    gap_bound: float
    mean_resolves: float
    max_resolves: int
    values: np.ndarray = field(repr=False)
    resolves: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "policy": self.policy,
            "theta": self.theta,
            "sigma": self.sigma,
            "M": self.M,
            "seed": self.seed,
            "mean": self.mean,
            "stderr": self.stderr,
            "v_rel": self.v_rel,
            "gap_bound": self.gap_bound,
            "mean_resolves": self.mean_resolves,
            "max_resolves": int(self.max_resolves),
            "values": [float(v) for v in self.values],
            "resolves": [int(r) for r in self.resolves],
        }


def run_episode(instance, policy, config, rng, state=None):
    """Simulate one episode of the true system under `policy`.

    `rng` is an episode stream with get(stage, purpose); `state` lets the
    caller share a prepared plan across episodes (it is not mutated).
    """
    config = config or default_config()
    if state is None:
        state = policy.prepare(instance, config)
    state = PolicyState(cached_plan=state.cached_plan,
                        resolve_count=state.resolve_count)
    T = instance.dims.T
    x = instance.x1.copy()
    states, arrivals, controls, rewards, eps_list = [], [], [], [], []
    thetas, resolved = [], []
    for t in range(1, T + 1):
        w = instance.exo.sample(rng.get(t, EXO))
        try:
            rec = policy.act(instance, t, x, w, state, rng.get(t, POLICY), config)
        except SolverError as exc:
            raise SolverError("stage %d: %s" % (t, exc)) from exc
        u = np.asarray(rec.u, dtype=float)
        r = instance.stage(t).reward.value(instance.slot_point(x, w, u))
        states.append(x.copy())
        arrivals.append(w)
        controls.append(u)
        rewards.append(r)
        thetas.append(rec.theta)
        resolved.append(rec.resolved)
        if t < T:
            eps = instance.endo.sample(x, w, u, rng.get(t, ENDO))
            x = instance.dynamics.phi(x, w, u, t) + eps
            eps_list.append(eps)
    rewards = np.array(rewards)
    return TrajectoryRecord(
        states=np.array(states), arrivals=np.array(arrivals),
        controls=np.array(controls), rewards=rewards,
        eps=np.array(eps_list).reshape(T - 1, instance.dims.n_x),
        thetas=thetas, resolved=resolved,
        value=float(rewards.sum()), resolve_count=state.resolve_count)


def _run_chunk(instance, policy, config, seed, lo, hi):
    stream = RngStream(seed)
    proto = policy.prepare(instance, config)
    out = []
    for rep in range(lo, hi):
        try:
            traj = run_episode(instance, policy, config, stream.episode(rep), state=proto)
        except SolverError as exc:
            raise SolverError("replication %d, %s" % (rep, exc)) from exc
        out.append((rep, traj.value, traj.resolve_count))
    return out


def evaluate(instance, policy, M, config=None, seed=0, n_jobs=1, v_ref=None):
    """Monte Carlo mean, stderr and optimality-gap bound over M episodes.

    v_ref overrides the nominal relaxation value used for the gap bound
    (sweeps compute it once).  With n_jobs > 1, replications are split
    across processes; the report is identical to the serial one.
    """
    if M < 1:
        raise ValueError("need at least one replication")
    config = config or default_config()
    if n_jobs is None or n_jobs < 1:
        n_jobs = 1
    n_jobs = min(n_jobs, M)
    if n_jobs == 1:
        results = _run_chunk(instance, policy, config, seed, 0, M)
    else:
        bounds = np.linspace(0, M, n_jobs + 1).astype(int)
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [pool.submit(_run_chunk, instance, policy, config, seed,
                                   int(bounds[j]), int(bounds[j + 1]))
                       for j in range(n_jobs)]
            results = [item for f in futures for item in f.result()]
    results.sort(key=lambda item: item[0])
    values = np.array([v for _, v, _ in results])
    resolves = np.array([r for _, _, r in results], dtype=int)

    if v_ref is None:
        v_ref = solve_nominal(instance, config).value
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / np.sqrt(M)) if M > 1 else 0.0
    return EvaluationReport(
        policy=policy.name, theta=getattr(policy, "theta", None),
        sigma=float(instance.exo.sigma), M=M, seed=seed,
        mean=mean, stderr=stderr, v_rel=float(v_ref),
        gap_bound=float(v_ref) - mean,
        mean_resolves=float(resolves.mean()), max_resolves=int(resolves.max()),
        values=values, resolves=resolves)
