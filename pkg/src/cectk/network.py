"""Bandwidth-allocation model on a small routing network.

Paths carry bandwidth across shared links.  The state x is the bandwidth
occupation per path, arrivals w are new demand per path, and the control u
is the amount of demand admitted.  Stage constraints: admissions are
bounded by arrivals, link loads by capacities, and the summed M/M/1-style
degradation along each path by a per-path budget.  The reward is the
alpha-fairness utility of the carried bandwidth, and occupied bandwidth
decays geometrically with a bounded zero-mean disturbance.

`build_instance` assembles a ProblemInstance whose stage oracles follow the
slot convention (x, w, u); the bundled topology is the three-path,
five-link diamond.
"""

from dataclasses import dataclass, replace

import numpy as np

from .oracles import AFFINE, CONCAVE, CONVEX, AffineOracle, SmoothOracle
from .problem import (AffineDynamics, Dims, EndogenousNoise, ExogenousNoise,
                      ProblemInstance, StageSpec)
from .solver import LinearBlock


@dataclass(frozen=True)
class NetworkTopology:
    """incidence[p, l] = 1 when path p traverses link l."""

    incidence: tuple

    @property
    def A(self):
        return np.asarray(self.incidence, dtype=float)

    @property
    def n_paths(self):
        return len(self.incidence)

    @property
    def n_links(self):
        return len(self.incidence[0])


DIAMOND = NetworkTopology(incidence=(
    (1, 0, 0, 1, 0),   # path 1: links 1, 4
    (1, 0, 1, 0, 1),   # path 2: links 1, 3, 5
    (0, 1, 0, 0, 1),   # path 3: links 2, 5
))


@dataclass(frozen=True)
class NetworkParams:
    x1: tuple = (1.0, 1.0, 1.0)
    w_mean: tuple = (2.0, 2.0, 2.0)
    q: tuple = (0.6, 0.7, 0.5)
    alpha: float = 0.5
    delay_budget: tuple = (100.0, 100.0, 100.0)
    capacity: tuple = (6.0, 4.0, 3.0, 4.0, 6.0)
    sigma: float = 1.0
    T: int = 30
    topology: NetworkTopology = DIAMOND

    def with_(self, **kw):
        return replace(self, **kw)


def default_params():
    return NetworkParams()


def link_loads(topology, x, u):
    """Per-link occupied bandwidth y = (x + u) . A."""
    return (np.asarray(x, float) + np.asarray(u, float)) @ topology.A


def degradation(y, c):
    """M/M/1 waiting time 1/(c - y) - 1/c for load y on a capacity-c link."""
    return 1.0 / (c - y) - 1.0 / c


# ---------------------------------------------------------------------------
# scalar stage oracles over the slot vector (x, w, u)

def _load_rows(topology, n_slot):
    """(n_links, n_slot) matrix L with y = L . (x, w, u); touches x and u slots."""
    P, L = topology.n_paths, topology.n_links
    A = topology.A
    rows = np.zeros((L, n_slot))
    rows[:, :P] = A.T
    rows[:, 2 * P:3 * P] = A.T
    return rows


class PathDelayOracle(SmoothOracle):
    """Summed link degradation along one path minus its budget, convex in (x, w, u).

    Domain: every load on the path's links stays strictly below capacity.
    """

    curvature = CONVEX

    def __init__(self, topology, path, capacity, budget, n_slot):
        links = np.flatnonzero(topology.A[path])
        self.rows = _load_rows(topology, n_slot)[links]
        self.caps = np.asarray(capacity, float)[links]
        self.budget = float(budget)
        self.dim = n_slot

    def _y(self, z):
        return self.rows @ z

    def value(self, z):
        return float(np.sum(degradation(self._y(z), self.caps))) - self.budget

    def grad(self, z):
        slack = self.caps - self._y(z)
        return self.rows.T @ (1.0 / slack ** 2)

    def hess(self, z):
        slack = self.caps - self._y(z)
        return self.rows.T @ (self.rows * (2.0 / slack ** 3)[:, None])

    def in_domain(self, z):
        return bool(np.all(self._y(z) < self.caps))


class FairnessReward(SmoothOracle):
    """alpha-fairness utility of carried bandwidth, sum_p util(x_p + u_p).

    util(v) = v^(1-alpha)/(1-alpha) for alpha != 1 and log(v) for alpha = 1;
    concave on v > 0.
    """

    curvature = CONCAVE

    def __init__(self, n_paths, alpha, n_slot):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.alpha = float(alpha)
        P = n_paths
        S = np.zeros((P, n_slot))
        S[np.arange(P), np.arange(P)] = 1.0
        S[np.arange(P), 2 * P + np.arange(P)] = 1.0
        self.S = S
        self.dim = n_slot

    def _util(self, v):
        if self.alpha == 1.0:
            return np.log(v)
        return v ** (1.0 - self.alpha) / (1.0 - self.alpha)

    def value(self, z):
        return float(np.sum(self._util(self.S @ z)))

    def grad(self, z):
        v = self.S @ z
        return self.S.T @ v ** (-self.alpha) if self.alpha != 1.0 else self.S.T @ (1.0 / v)

    def hess(self, z):
        v = self.S @ z
        d2 = -self.alpha * v ** (-self.alpha - 1.0)
        return self.S.T @ (self.S * d2[:, None])

    def in_domain(self, z):
        return bool(np.all(self.S @ z > 0))


def _affine_stage_rows(params):
    """Frozen-order affine inequalities [u_lo, u_hi, capacity] as (rows, offs, names)."""
    topo = params.topology
    P, L = topo.n_paths, topo.n_links
    n_slot = 3 * P
    rows, offs, names = [], [], []
    for p in range(P):
        r = np.zeros(n_slot)
        r[2 * P + p] = -1.0
        rows.append(r)
        offs.append(0.0)
        names.append("u_lo[%d]" % (p + 1))
    for p in range(P):
        r = np.zeros(n_slot)
        r[2 * P + p] = 1.0
        r[P + p] = -1.0
        rows.append(r)
        offs.append(0.0)
        names.append("u_hi[%d]" % (p + 1))
    load = _load_rows(topo, n_slot)
    for l in range(L):
        rows.append(load[l])
        offs.append(-params.capacity[l])
        names.append("cap[%d]" % (l + 1))
    return np.array(rows), np.array(offs), names


# ---------------------------------------------------------------------------
# vectorized stage families for the stacked-program builder

def _split_cached(cache, mat, free_slots):
    """(mat columns at free_slots, columns elsewhere, other index), memoized."""
    free_slots = np.asarray(free_slots)
    key = free_slots.tobytes()
    hit = cache.get(key)
    if hit is None:
        other = np.setdiff1d(np.arange(mat.shape[1]), free_slots)
        hit = (mat[:, free_slots], mat[:, other], other)
        cache[key] = hit
    return hit


class LinearFamilyHint:
    """All affine stage inequalities merged into one LinearBlock."""

    def __init__(self, rows, offs):
        self.rows = np.asarray(rows, float)
        self.offs = np.asarray(offs, float)
        self.count = self.rows.shape[0]
        self._splits = {}

    def _restrict(self, free_slots, frozen):
        # frozen: one slot vector, or a (tiles, n_slot) matrix of per-tile data
        rows_f, rows_o, other = _split_cached(self._splits, self.rows, free_slots)
        eff = self.offs + np.asarray(frozen, float)[..., other] @ rows_o.T
        return rows_f, eff

    def make_block(self, free_slots, frozen, gidx):
        rows, eff = self._restrict(free_slots, frozen)
        return LinearBlock(rows, eff, gidx)

    def make_stacked(self, free_slots, frozen, idx, tile_shape):
        rows, eff = self._restrict(free_slots, frozen)
        return StackedLinearBlock(rows, eff, idx, tile_shape)


class DelayBlock:
    """All per-path degradation-budget constraints of one stage, evaluated jointly.

    loads y = rows . z_free + offs; constraint p is
    sum_l B[p, l] * degradation(y_l, caps_l) - budget_p <= 0.
    """

    def __init__(self, rows, offs, caps, B, budgets, idx):
        self.rows = rows
        self.offs = offs
        self.caps = caps
        self.B = B
        self.budgets = budgets
        self.idx = np.asarray(idx, dtype=int)
        self.m = B.shape[0]
        self.affine = False

    def _y(self, zloc):
        return self.rows @ zloc + self.offs

    def values(self, zloc):
        return self.B @ degradation(self._y(zloc), self.caps) - self.budgets

    def jac(self, zloc):
        slack = self.caps - self._y(zloc)
        return (self.B / slack[None, :] ** 2) @ self.rows

    def barrier(self, zloc):
        y = self._y(zloc)
        slack = self.caps - y
        g = self.B @ degradation(y, self.caps) - self.budgets
        J = (self.B / slack[None, :] ** 2) @ self.rows
        inv = 1.0 / (-g)
        scaled = J * inv[:, None]
        coef = (self.B.T @ inv) * (2.0 / slack ** 3)
        bH = scaled.T @ scaled + self.rows.T @ (self.rows * coef[:, None])
        return g, J.T @ inv, bH

    def in_domain(self, zloc):
        return bool(np.all(self._y(zloc) < self.caps))

    def check_values(self, zloc):
        y = self._y(zloc)
        if not (y < self.caps).all():
            return False, None
        return True, self.B @ degradation(y, self.caps) - self.budgets


class DelayFamilyHint:
    def __init__(self, params):
        topo = params.topology
        self.load = _load_rows(topo, 3 * topo.n_paths)
        self.caps = np.asarray(params.capacity, float)
        self.B = topo.A
        self.budgets = np.asarray(params.delay_budget, float)
        self.count = topo.n_paths
        self._splits = {}

    def _restrict(self, free_slots, frozen):
        load_f, load_o, other = _split_cached(self._splits, self.load, free_slots)
        offs = np.asarray(frozen, float)[..., other] @ load_o.T
        return load_f, offs

    def make_block(self, free_slots, frozen, gidx):
        load, offs = self._restrict(free_slots, frozen)
        return DelayBlock(load, offs, self.caps, self.B, self.budgets, gidx)

    def make_stacked(self, free_slots, frozen, idx, tile_shape):
        load, offs = self._restrict(free_slots, frozen)
        return StackedDelayBlock(load, offs, self.caps, self.B, self.budgets,
                                 idx, tile_shape)


class NegUtilityTerm:
    """Objective term -sum_p util(v_p) with v = rows . z_free + offs (convex)."""

    def __init__(self, rows, offs, alpha, idx):
        self.rows = rows
        self.offs = offs
        self.alpha = float(alpha)
        self.idx = np.asarray(idx, dtype=int)

    def _v(self, zloc):
        return self.rows @ zloc + self.offs

    def value(self, zloc):
        v = self._v(zloc)
        if self.alpha == 1.0:
            return -float(np.sum(np.log(v)))
        return -float(np.sum(v ** (1.0 - self.alpha))) / (1.0 - self.alpha)

    def eval(self, zloc):
        v = self._v(zloc)
        a = self.alpha
        if a == 1.0:
            f = -float(np.sum(np.log(v)))
            d1, d2 = -1.0 / v, 1.0 / v ** 2
        else:
            f = -float(np.sum(v ** (1.0 - a))) / (1.0 - a)
            d1 = -v ** (-a)
            d2 = a * v ** (-a - 1.0)
        grad = self.rows.T @ d1
        hess = self.rows.T @ (self.rows * d2[:, None])
        return f, grad, hess

    def in_domain(self, zloc):
        return bool(np.all(self._v(zloc) > 0))

    def check_value(self, zloc):
        v = self._v(zloc)
        if not (v > 0.0).all():
            return False, 0.0
        if self.alpha == 1.0:
            return True, -float(np.log(v).sum())
        return True, -float(np.sum(v ** (1.0 - self.alpha))) / (1.0 - self.alpha)


class RewardFamilyHint:
    """Vectorized stacked-objective builder for the fairness reward."""

    def __init__(self, params):
        P = params.topology.n_paths
        S = np.zeros((P, 3 * P))
        S[np.arange(P), np.arange(P)] = 1.0
        S[np.arange(P), 2 * P + np.arange(P)] = 1.0
        self.S = S
        self.alpha = params.alpha
        self._splits = {}

    def _restrict(self, free_slots, frozen):
        rows_f, rows_o, other = _split_cached(self._splits, self.S, free_slots)
        offs = np.asarray(frozen, float)[..., other] @ rows_o.T
        return rows_f, offs

    def make_term(self, free_slots, frozen, gidx):
        rows, offs = self._restrict(free_slots, frozen)
        return NegUtilityTerm(rows, offs, self.alpha, gidx)

    def make_stacked(self, free_slots, frozen, idx, tile_shape):
        rows, offs = self._restrict(free_slots, frozen)
        return StackedUtilityTerm(rows, offs, self.alpha, idx, tile_shape)


# ---------------------------------------------------------------------------
# stage-tiled blocks: one object covering the same constraint family at many
# stages of a stacked program, evaluated with batched array operations

class StackedLinearBlock:
    """Affine family rows @ z_s + offs <= 0 replicated over S stage tiles."""

    affine = True

    def __init__(self, rows, offs, idx, tile_shape):
        self.rows = np.asarray(rows, float)
        self.offs = np.asarray(offs, float)
        self.idx = np.asarray(idx, dtype=int)
        self.tile_shape = tuple(tile_shape)
        self.m = self.tile_shape[0] * self.rows.shape[0]
        # rank-one row outer products, flattened so the barrier Hessian is a
        # single matmul over stage tiles
        k = self.rows.shape[1]
        self._outer = (self.rows[:, :, None] * self.rows[:, None, :]).reshape(-1, k * k)
        self._row = None

    def row(self):
        if self._row is None:
            S, k = self.tile_shape
            R = self.rows.shape[0]
            M = np.zeros((S * R, S * k))
            for s in range(S):
                M[s * R:(s + 1) * R, s * k:(s + 1) * k] = self.rows
            self._row = M
        return self._row

    def _g(self, zloc):
        return zloc.reshape(self.tile_shape) @ self.rows.T + self.offs

    def values(self, zloc):
        return self._g(zloc).ravel()

    def jac(self, zloc):
        return self.row()

    def barrier(self, zloc):
        g = self._g(zloc)
        k = self.tile_shape[1]
        inv = 1.0 / (-g)
        bg = inv @ self.rows
        bH = ((inv * inv) @ self._outer).reshape(-1, k, k)
        return g.ravel(), bg.ravel(), bH

    def in_domain(self, zloc):
        return True

    def stage_ok(self, zloc, margin):
        """Per-tile feasibility flags at the given slack margin."""
        return (self._g(zloc) < -margin).all(axis=1)


class StackedDelayBlock:
    """Per-path degradation budgets replicated over S stage tiles.

    Tile s sees loads y_s = load @ z_s + offs; constraint (s, p) is
    sum_l B[p, l] * degradation(y_sl, caps_l) - budget_p <= 0.
    """

    affine = False

    def __init__(self, load, offs, caps, B, budgets, idx, tile_shape):
        self.load = load
        self.offs = offs
        self.caps = caps
        self.B = B
        self.budgets = budgets
        self.idx = np.asarray(idx, dtype=int)
        self.tile_shape = tuple(tile_shape)
        self.m = self.tile_shape[0] * B.shape[0]
        k = load.shape[1]
        self._louter = (load[:, :, None] * load[:, None, :]).reshape(-1, k * k)

    def _y(self, zloc):
        return zloc.reshape(self.tile_shape) @ self.load.T + self.offs

    def values(self, zloc):
        d = degradation(self._y(zloc), self.caps)
        return (d @ self.B.T - self.budgets).ravel()

    def jac(self, zloc):
        W = 1.0 / (self.caps - self._y(zloc)) ** 2
        S, k = self.tile_shape
        P = self.B.shape[0]
        J = np.zeros((S * P, S * k))
        for s in range(S):
            J[s * P:(s + 1) * P, s * k:(s + 1) * k] = (self.B * W[s]) @ self.load
        return J

    def barrier(self, zloc):
        y = self._y(zloc)
        k = self.tile_shape[1]
        slack = self.caps - y
        g = (1.0 / slack - 1.0 / self.caps) @ self.B.T - self.budgets
        W = 1.0 / slack ** 2
        J = np.matmul(self.B, W[:, :, None] * self.load)
        inv = 1.0 / (-g)
        bg = np.matmul(inv[:, None, :], J)[:, 0, :]
        coef = (inv @ self.B) * (2.0 / slack ** 3)
        Jw = J * inv[:, :, None]
        bH = (np.matmul(Jw.transpose(0, 2, 1), Jw)
              + (coef @ self._louter).reshape(-1, k, k))
        return g.ravel(), bg.ravel(), bH

    def in_domain(self, zloc):
        return bool(np.all(self._y(zloc) < self.caps))

    def check_values(self, zloc):
        y = self._y(zloc)
        if not (y < self.caps).all():
            return False, None
        return True, (degradation(y, self.caps) @ self.B.T - self.budgets).ravel()

    def stage_ok(self, zloc, margin):
        """Per-tile feasibility flags (domain and slack margin together)."""
        y = self._y(zloc)
        dom = (y < self.caps).all(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = degradation(y, self.caps) @ self.B.T - self.budgets
        # comparisons on out-of-domain tiles are garbage; dom masks them
        return dom & (g < -margin).all(axis=1)


class StackedUtilityTerm:
    """Objective term summing -util(rows @ z_s + offs) over S stage tiles."""

    def __init__(self, rows, offs, alpha, idx, tile_shape):
        self.rows = rows
        self.offs = offs
        self.alpha = float(alpha)
        self.idx = np.asarray(idx, dtype=int)
        self.tile_shape = tuple(tile_shape)
        k = rows.shape[1]
        self._outer = (rows[:, :, None] * rows[:, None, :]).reshape(-1, k * k)

    def _v(self, zloc):
        return zloc.reshape(self.tile_shape) @ self.rows.T + self.offs

    def value(self, zloc):
        v = self._v(zloc)
        if self.alpha == 1.0:
            return -float(np.sum(np.log(v)))
        return -float(np.sum(v ** (1.0 - self.alpha))) / (1.0 - self.alpha)

    def eval(self, zloc):
        v = self._v(zloc)
        a = self.alpha
        if a == 1.0:
            f = -float(np.sum(np.log(v)))
            d1, d2 = -1.0 / v, 1.0 / v ** 2
        else:
            f = -float(np.sum(v ** (1.0 - a))) / (1.0 - a)
            d1 = -v ** (-a)
            d2 = a * v ** (-a - 1.0)
        k = self.tile_shape[1]
        H = (d2 @ self._outer).reshape(-1, k, k)
        return f, (d1 @ self.rows).ravel(), H

    def in_domain(self, zloc):
        return bool(np.all(self._v(zloc) > 0))

    def check_value(self, zloc):
        v = self._v(zloc)
        if not (v > 0.0).all():
            return False, 0.0
        if self.alpha == 1.0:
            return True, -float(np.log(v).sum())
        return True, -float(np.sum(v ** (1.0 - self.alpha))) / (1.0 - self.alpha)

    def stage_ok(self, zloc, margin):
        """Per-tile domain flags (positive consumption on every path)."""
        return (self._v(zloc) > 0.0).all(axis=1)


# ---------------------------------------------------------------------------
# noise and starts

class GeometricReleaseBound:
    """Endogenous truncation halfwidth (x + u) * min(q, 1 - q), floored at 0."""

    def __init__(self, q):
        self.q = np.asarray(q, float)
        self.halfq = np.minimum(self.q, 1.0 - self.q)

    def __call__(self, x, w, u):
        return np.maximum(np.asarray(x, float) + np.asarray(u, float), 0.0) * self.halfq


class AdmitFractionHint:
    """Interior control guess: admit a small fraction of the arrivals.

    Scans decreasing fractions and returns the first strictly feasible
    control, or None so the caller falls back to a phase-I solve.
    """

    def __init__(self, params):
        self.params = params

    def __call__(self, instance, t, x, w):
        from .problem import feasible_set

        bundle = feasible_set(instance, t, x, w)
        for frac in (0.25, 0.1, 0.03, 0.01, 1e-3, 1e-4):
            u = frac * np.asarray(w, float)
            if np.all(u > 0) and bundle.strictly_feasible(u):
                return u
        return None


def _validate_params(params):
    topo = params.topology
    P, L = topo.n_paths, topo.n_links
    for name, vec, size in (("x1", params.x1, P), ("w_mean", params.w_mean, P),
                            ("q", params.q, P), ("delay_budget", params.delay_budget, P),
                            ("capacity", params.capacity, L)):
        if len(vec) != size:
            raise ValueError("%s must have length %d, got %d" % (name, size, len(vec)))
    q = np.asarray(params.q, float)
    if np.any(q <= 0) or np.any(q >= 1):
        raise ValueError("retention rates q must lie strictly in (0, 1)")
    if not 0.0 < params.alpha < 1.0:
        raise ValueError("fairness exponent alpha must lie strictly in (0, 1)")
    x1 = np.asarray(params.x1, float)
    wbar = np.asarray(params.w_mean, float)
    c = np.asarray(params.capacity, float)
    D = np.asarray(params.delay_budget, float)
    if np.any(x1 <= 0):
        raise ValueError("initial occupations x1 must be positive (reward domain)")
    if np.any(wbar <= 0):
        raise ValueError("mean arrivals must be positive")
    if np.any(c <= 0):
        raise ValueError("link capacities must be positive")
    if np.any(D <= 0):
        raise ValueError("delay budgets must be positive")
    if params.sigma < 0:
        raise ValueError("noise scale sigma must be nonnegative")
    if params.T < 1:
        raise ValueError("horizon T must be at least 1")
    # standing assumption: the null control keeps the initial state strictly
    # inside the capacity and delay constraints
    y0 = link_loads(topo, x1, np.zeros(P))
    if np.any(y0 >= c):
        raise ValueError("x1 alone saturates a link capacity; null control infeasible")
    delays0 = degradation(y0, c) @ topo.A.T
    if np.any(delays0 >= D):
        raise ValueError("x1 alone exceeds a path delay budget; null control infeasible")


def build_instance(params=None, sigma=None, T=None):
    """ProblemInstance for the network model (stationary stage structure)."""
    params = params or default_params()
    if sigma is not None:
        params = params.with_(sigma=float(sigma))
    if T is not None:
        params = params.with_(T=int(T))
    _validate_params(params)
    topo = params.topology
    P = topo.n_paths
    n_slot = 3 * P
    dims = Dims(n_x=P, n_u=P, n_w=P, T=params.T)

    rows, offs, names = _affine_stage_rows(params)
    ineqs = [AffineOracle(rows[i], offs[i]) for i in range(rows.shape[0])]
    delays = [PathDelayOracle(topo, p, params.capacity, params.delay_budget[p], n_slot)
              for p in range(P)]
    names = names + ["delay[%d]" % (p + 1) for p in range(P)]
    reward = FairnessReward(P, params.alpha, n_slot)

    spec = StageSpec(
        reward=reward,
        inequalities=ineqs + delays,
        ineq_names=names,
        families=[LinearFamilyHint(rows, offs), DelayFamilyHint(params)],
        reward_family=RewardFamilyHint(params),
    )

    q = np.asarray(params.q, float)
    C = np.zeros((n_slot, P))
    C[np.arange(P), np.arange(P)] = q
    C[2 * P + np.arange(P), np.arange(P)] = q
    dynamics = AffineDynamics(C, np.zeros(P))

    wbar = np.asarray(params.w_mean, float)
    exo = ExogenousNoise(mean=wbar, sigma=params.sigma, halfwidth=wbar.copy())
    endo = EndogenousNoise(sigma=params.sigma, bound=GeometricReleaseBound(q))

    inst = ProblemInstance(
        dims=dims, x1=np.asarray(params.x1, float), stages=[spec] * params.T,
        dynamics=dynamics, exo=exo, endo=endo,
        name="network-T%d-sigma%g" % (params.T, params.sigma),
        interior_hint=AdmitFractionHint(params),
    )
    inst.params = params
    return inst
