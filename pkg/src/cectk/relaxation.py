"""Certainty-equivalent relaxations solved as stacked convex programs.

The nominal relaxation replaces every future noise by its mean: states
become explicit decision variables tied to controls through the affine
dynamics, and the per-stage constraints are imposed at the mean arrivals.
The observed variant conditions the first stage of the window on a realized
arrival vector w; at w equal to the mean the two programs coincide.

Stacked variables follow the math order z = [u(t1), x(t1+1), u(t1+1), ...,
x(T), u(T)] for a window [t1, T].  Per (instance, window-start) structure
is cached in a template: shared constraint blocks for stages after the
first, the dynamics equality matrix, and a stage-interleaved band layout
that keeps the Newton KKT matrix banded with half-bandwidth 2*n_x + n_u.
Only first-stage offsets and the first equality rows depend on (x, w), so
re-solving along a trajectory reuses the template.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .oracles import AffineOracle, NegatedOracle, RestrictedOracle
from .problem import feasible_set, step_dynamics
from .solver import (OPTIMAL, BandLayout, ConvexProgram, KktSolution, SolverConfig,
                     SolverError, _ScalarBlock, _ScalarObjTerm, phase_one, solve)

# barrier weight used when a solve is warm-started from a repaired previous plan
WARM_T0 = 1e2

# warm-start controls are pulled at least this far inside the constraints;
# roughly the central-path boundary distance at the warm barrier weight, so
# the first centering starts well scaled instead of pinned to the boundary
WARM_MARGIN = 1e-3

# KKT tolerance for relaxation and simulation solves; loose enough to stay
# clear of the float64 stationarity floor set by the barrier Hessian scale,
# and sized so the absolute gap bound m/t stays orders of magnitude inside
# every statistical tolerance used downstream
DEFAULT_TOL = 1e-5

# aggressive continuation schedule: fewer outer stages, and the per-stage
# Newton counts stay small because every centering ends near the path
DEFAULT_MULT = 100.0

# warm-start repair geometry: clamp depth for box rows, and how far past
# the minimal feasible blend to push a repaired stage control; both sized
# so repaired slacks land near the central path at WARM_T0
REPAIR_CLAMP = 1e-2
REPAIR_OVERSHOOT = 6.0


def default_config():
    return SolverConfig(tol_kkt=DEFAULT_TOL, barrier_mult=DEFAULT_MULT)


@dataclass
class Plan:
    """Solution of one relaxation window [t_start, t_start + horizon - 1]."""

    t_start: int
    horizon: int
    controls: np.ndarray
    states: np.ndarray
    value: float
    solution: KktSolution
    program: ConvexProgram
    w_first: np.ndarray

    def control(self, t):
        return self.controls[t - self.t_start]

    def state(self, t):
        return self.states[t - self.t_start]

    def to_dict(self):
        return {
            "t_start": self.t_start,
            "horizon": self.horizon,
            "value": self.value,
            "status": self.solution.status,
            "iters": self.solution.iters,
            "controls": self.controls.tolist(),
            "states": self.states.tolist(),
        }


def _stage_domains_ok(instance, t, x, w, u):
    s = instance.slot_point(np.asarray(x, float), np.asarray(w, float),
                            np.asarray(u, float))
    spec = instance.stage(t)
    if not spec.reward.in_domain(s) or not np.isfinite(spec.reward.value(s)):
        return False
    return all(g.in_domain(s) for g in spec.inequalities)


def _bundle_equalities(bundle, n_u):
    if not bundle.equalities:
        return None, None
    z0 = np.zeros(n_u)
    rows = np.array([h.grad(z0) for h in bundle.equalities])
    offs = np.array([h.value(z0) for h in bundle.equalities])
    return rows, -offs


def stage_interior_control(instance, t, x, w, config=None):
    """Strictly feasible control for stage t at (x, w).

    Tries the instance's interior hint first, then falls back to a phase-I
    solve over the stage feasible set.
    """
    config = config or default_config()
    x = np.asarray(x, float)
    w = np.asarray(w, float)
    bundle = feasible_set(instance, t, x, w)
    if instance.interior_hint is not None:
        u = instance.interior_hint(instance, t, x, w)
        if u is not None:
            u = np.asarray(u, float)
            if bundle.strictly_feasible(u) and _stage_domains_ok(instance, t, x, w, u):
                return u
    n_u = instance.dims.n_u
    eqA, eqb = _bundle_equalities(bundle, n_u)
    prog = ConvexProgram(
        n_u, (AffineOracle(np.zeros(n_u), 0.0), np.arange(n_u)),
        inequalities=[(g, np.arange(n_u)) for g in bundle.inequalities],
        eqA=eqA, eqb=eqb, domain_guess=np.zeros(n_u))
    u = phase_one(prog, config)
    if not _stage_domains_ok(instance, t, x, w, u):
        raise SolverError("stage %d interior control violates the reward domain" % t)
    return u


class _WindowTemplate:
    """Shared structure of the stacked program for a window [t_start, T]."""

    def __init__(self, instance, t_start, use_hints):
        d = instance.dims
        self.instance = instance
        self.t_start = t_start
        self.S = S = d.T + 1 - t_start
        n_x, n_u = d.n_x, d.n_u
        self.n = n_u * S + n_x * (S - 1)

        self.u_idx = [np.arange(n_u)]
        self.x_idx = [None]
        pos = n_u
        for _ in range(1, S):
            self.x_idx.append(np.arange(pos, pos + n_x))
            pos += n_x
            self.u_idx.append(np.arange(pos, pos + n_u))
            pos += n_u

        self.u_slots = instance.u_slots()
        self.xu_slots = instance.xu_slots()
        wbar = instance.exo.mean
        self.wbar = wbar
        self.frozen_mid = np.zeros(d.n_slot)
        self.frozen_mid[n_x:n_x + d.n_w] = wbar

        # dynamics equalities: x_k - x_{k-1} C_x - u_{k-1} C_u = w C_w + D
        self.extra_eq = any(instance.stage(t_start + k).equalities for k in range(S))
        p_extra = sum(len(instance.stage(t_start + k).equalities) for k in range(S))
        self.p = n_x * (S - 1) + p_extra
        eqA = np.zeros((self.p, self.n))
        eqb = np.zeros(self.p)
        for k in range(1, S):
            r = slice((k - 1) * n_x, k * n_x)
            C, D = instance.dynamics.at(t_start + k - 1)
            Cx, Cw, Cu = C[:n_x], C[n_x:n_x + d.n_w], C[n_x + d.n_w:]
            eqA[r, self.x_idx[k][0]:self.x_idx[k][-1] + 1] = np.eye(n_x)
            eqA[r, self.u_idx[k - 1][0]:self.u_idx[k - 1][-1] + 1] = -Cu.T
            if k >= 2:
                eqA[r, self.x_idx[k - 1][0]:self.x_idx[k - 1][-1] + 1] = -Cx.T
                eqb[r] = wbar @ Cw + D
        C1, D1 = instance.dynamics.at(t_start)
        self._C1_split = (C1[:n_x], C1[n_x:n_x + d.n_w], D1)

        # stage equality rows (affine over free slots, offsets from frozen data)
        row = n_x * (S - 1)
        self._extra_first = []  # (row, oracle) pairs whose offset depends on (x, w)
        for k in range(S):
            spec = instance.stage(t_start + k)
            free = self.u_slots if k == 0 else self.xu_slots
            gidx = self._gidx(k)
            for h in spec.equalities:
                rest = RestrictedOracle(h, free, self.frozen_mid)
                z0 = np.zeros(free.size)
                eqA[row, gidx] = rest.grad(z0)
                if k == 0:
                    self._extra_first.append((row, h))
                else:
                    eqb[row] = -rest.value(z0)
                row += 1
        self.eqA = eqA
        self.eqb_const = eqb

        # shared blocks and objective terms for stages 1..S-1; when all mid
        # stages share one hinted spec, each family becomes a single block
        # tiled over the stages instead of S-1 per-stage objects
        self.shared_blocks = []
        self.shared_terms = []
        self.shared_meta = []
        if S >= 2 and self._stackable(use_hints):
            self._build_stacked()
        else:
            for k in range(1, S):
                blocks, term, meta = self._stage_pieces(k, self.frozen_mid, use_hints)
                self.shared_blocks.extend(blocks)
                self.shared_terms.append(term)
                self.shared_meta.extend(meta)
        self.use_hints = use_hints
        self.band = self._band_layout() if (S >= 2 and not self.extra_eq) else None

        # single-spec hinted windows admit a vectorized warm-start check
        spec0 = instance.stage(t_start)
        self._path_spec = None
        if (use_hints and spec0.families is not None
                and spec0.reward_family is not None
                and not spec0.equalities
                and all(hasattr(f, "make_stacked") for f in spec0.families)
                and hasattr(spec0.reward_family, "make_stacked")
                and all(instance.stage(t_start + k) is spec0 for k in range(1, S))):
            self._path_spec = spec0
        self._u_box = self._build_u_box() if self._path_spec is not None else None

    def _stackable(self, use_hints):
        if not use_hints:
            return False
        spec = self.instance.stage(self.t_start + 1)
        if spec.families is None or spec.reward_family is None:
            return False
        if not all(hasattr(f, "make_stacked") for f in spec.families):
            return False
        if not hasattr(spec.reward_family, "make_stacked"):
            return False
        return all(self.instance.stage(self.t_start + k) is spec
                   for k in range(2, self.S))

    def _build_stacked(self):
        instance = self.instance
        S = self.S
        spec = instance.stage(self.t_start + 1)
        free = self.xu_slots
        tile = (S - 1, free.size)
        idx = np.concatenate([self._gidx(k) for k in range(1, S)])
        blocks = [fam.make_stacked(free, self.frozen_mid, idx, tile)
                  for fam in spec.families]
        if sum(b.m for b in blocks) != (S - 1) * len(spec.inequalities):
            raise ValueError("stage family hints cover %d constraints, expected %d"
                             % (sum(b.m for b in blocks),
                                (S - 1) * len(spec.inequalities)))
        self.shared_blocks = blocks
        self.shared_terms = [spec.reward_family.make_stacked(
            free, self.frozen_mid, idx, tile)]
        # row order is family-major, stage-minor: each block covers its
        # family's rows at stage 1, then stage 2, ...
        meta = []
        r = 0
        for fam in spec.families:
            names = spec.ineq_names[r:r + fam.count]
            r += fam.count
            meta.extend((self.t_start + k, nm) for k in range(1, S) for nm in names)
        self.shared_meta = meta

    def _gidx(self, k):
        if k == 0:
            return self.u_idx[0]
        return np.concatenate([self.x_idx[k], self.u_idx[k]])

    def _stage_pieces(self, k, frozen, use_hints):
        instance = self.instance
        t = self.t_start + k
        spec = instance.stage(t)
        free = self.u_slots if k == 0 else self.xu_slots
        gidx = self._gidx(k)
        meta = [(t, name) for name in spec.ineq_names]
        if use_hints and spec.families is not None and spec.reward_family is not None:
            blocks = [fam.make_block(free, frozen, gidx) for fam in spec.families]
            if sum(b.m for b in blocks) != len(spec.inequalities):
                raise ValueError("stage %d family hints cover %d constraints, expected %d"
                                 % (t, sum(b.m for b in blocks), len(spec.inequalities)))
            term = spec.reward_family.make_term(free, frozen, gidx)
        else:
            blocks = [_ScalarBlock(RestrictedOracle(g, free, frozen), gidx)
                      for g in spec.inequalities]
            term = _ScalarObjTerm(
                RestrictedOracle(NegatedOracle(spec.reward), free, frozen), gidx)
        return blocks, term, meta

    def _band_layout(self):
        n_x = self.instance.dims.n_x
        n_u = self.instance.dims.n_u
        var_pos = np.empty(self.n, dtype=int)
        eq_pos = np.empty(self.p, dtype=int)
        var_pos[self.u_idx[0]] = np.arange(n_u)
        b = n_u
        for k in range(1, self.S):
            eq_pos[(k - 1) * n_x:k * n_x] = np.arange(b, b + n_x)
            b += n_x
            var_pos[self.x_idx[k]] = np.arange(b, b + n_x)
            b += n_x
            var_pos[self.u_idx[k]] = np.arange(b, b + n_u)
            b += n_u
        return BandLayout(var_pos, eq_pos, 2 * n_x + n_u)

    # ------------------------------------------------------------------
    # per-call assembly

    def _first_frozen(self, x0, w_first):
        d = self.instance.dims
        frozen = np.zeros(d.n_slot)
        frozen[:d.n_x] = x0
        frozen[d.n_x:d.n_x + d.n_w] = w_first
        return frozen

    def instantiate(self, x0, w_first, start=None):
        frozen = self._first_frozen(x0, w_first)
        blocks0, term0, meta0 = self._stage_pieces(0, frozen, self.use_hints)
        eqb = self.eqb_const.copy()
        n_x = self.instance.dims.n_x
        if self.S >= 2:
            Cx1, Cw1, D1 = self._C1_split
            eqb[:n_x * 1] = x0 @ Cx1 + w_first @ Cw1 + D1
        for row, h in self._extra_first:
            rest = RestrictedOracle(h, self.u_slots, frozen)
            eqb[row] = -rest.value(np.zeros(self.u_slots.size))
        eqA = self.eqA if self.p else None
        return ConvexProgram(
            self.n, [term0] + self.shared_terms, blocks0 + self.shared_blocks,
            eqA=eqA, eqb=eqb if self.p else None, start=start,
            band=self.band, ineq_meta=meta0 + self.shared_meta)

    def pack(self, x0, w_first, controls):
        """Stack controls into z, filling states by the mean-noise dynamics."""
        z = np.empty(self.n)
        x = np.asarray(x0, float)
        states = [x]
        for k in range(self.S):
            t = self.t_start + k
            w_t = w_first if k == 0 else self.wbar
            z[self.u_idx[k]] = controls[k]
            if k >= 1:
                z[self.x_idx[k]] = x
            if k < self.S - 1:
                x = step_dynamics(self.instance, t, x, w_t, controls[k])
                states.append(x)
        return z, np.array(states)

    def unpack(self, z, x0):
        controls = np.array([z[self.u_idx[k]] for k in range(self.S)])
        states = np.array([x0] + [z[self.x_idx[k]] for k in range(1, self.S)])
        return controls, states

    def cold_start(self, x0, w_first, config):
        controls = []
        x = np.asarray(x0, float)
        for k in range(self.S):
            t = self.t_start + k
            w_t = w_first if k == 0 else self.wbar
            u = stage_interior_control(self.instance, t, x, w_t, config)
            controls.append(u)
            x = step_dynamics(self.instance, t, x, w_t, u)
        z, _ = self.pack(x0, w_first, controls)
        return z

    def _build_u_box(self):
        """Per-coordinate control bounds implied by state-free affine rows.

        Probes each hinted family once; affine rows with a single control
        coefficient and no state coupling become closed-form clamp bounds,
        expressed as (coordinate, coefficient, offset, w-sensitivity) so the
        bound at any stage is an affine function of that stage's arrivals.
        """
        d = self.instance.dims
        gidx = np.arange(d.n_u)
        u0 = np.zeros(d.n_u)
        lo_rows, hi_rows = [], []
        for fam in self._path_spec.families:
            probe = fam.make_block(self.u_slots, np.zeros(d.n_slot), gidx)
            if not getattr(probe, "affine", False):
                continue
            rows = probe.row()
            offs0 = probe.values(u0)
            sens = np.empty((d.n_slot, rows.shape[0]))
            for i in range(d.n_slot):
                e = np.zeros(d.n_slot)
                e[i] = 1.0
                sens[i] = fam.make_block(self.u_slots, e, gidx).values(u0) - offs0
            x_free = np.all(sens[:d.n_x] == 0.0, axis=0)
            w_sens = sens[d.n_x:d.n_x + d.n_w]
            nonzero = np.abs(rows) > 0.0
            single = nonzero.sum(axis=1) == 1
            for r in np.flatnonzero(single & x_free):
                p = int(np.flatnonzero(nonzero[r])[0])
                coef = float(rows[r, p])
                item = (p, coef, float(offs0[r]), w_sens[:, r].copy())
                (hi_rows if coef > 0 else lo_rows).append(item)
        return lo_rows, hi_rows

    def _roll_states(self, x0, w_first, U):
        d = self.instance.dims
        X = np.empty((self.S, d.n_x))
        x = np.asarray(x0, float)
        for k in range(self.S):
            X[k] = x
            if k < self.S - 1:
                w_t = w_first if k == 0 else self.wbar
                x = self.instance.dynamics.phi(x, w_t, U[k], self.t_start + k)
        return X

    def _stage_flags(self, X, w_first, U):
        """Per-stage margin-feasibility flags in one batched pass, or None
        when a family lacks the per-tile API."""
        spec = self._path_spec
        d = self.instance.dims
        frozen = np.zeros((self.S, d.n_slot))
        frozen[:, :d.n_x] = X
        frozen[0, d.n_x:d.n_x + d.n_w] = w_first
        frozen[1:, d.n_x:d.n_x + d.n_w] = self.wbar
        tile = (self.S, d.n_u)
        idx = np.arange(self.S * d.n_u)
        uflat = U.ravel()
        flags = np.ones(self.S, dtype=bool)
        for fam in spec.families + [spec.reward_family]:
            blk = fam.make_stacked(self.u_slots, frozen, idx, tile)
            so = getattr(blk, "stage_ok", None)
            if so is None:
                return None
            flags &= so(uflat, WARM_MARGIN)
        return flags

    def _pack_z(self, U, X):
        z = np.empty(self.n)
        for k in range(self.S):
            z[self.u_idx[k]] = U[k]
            if k >= 1:
                z[self.x_idx[k]] = X[k]
        return z

    def _blend_stage(self, t, x, w_t, u, config):
        """One stage's control made strictly margin-feasible, or None.

        Cheap block evaluation first; on violation, bisect toward an
        interior anchor (keeping the feasible endpoint) so the start moves
        as little as possible.
        """
        inst = self.instance
        d = inst.dims
        gidx = np.arange(d.n_u)
        frozen = np.zeros(d.n_slot)
        frozen[:d.n_x] = x
        frozen[d.n_x:d.n_x + d.n_w] = w_t
        spec = self._path_spec
        blocks = [fam.make_block(self.u_slots, frozen, gidx)
                  for fam in spec.families]
        term = spec.reward_family.make_term(self.u_slots, frozen, gidx)

        def ok(v):
            for blk in blocks:
                if not blk.in_domain(v) or np.max(blk.values(v)) >= -WARM_MARGIN:
                    return False
            return term.in_domain(v)

        if ok(u):
            return u
        try:
            anchor = stage_interior_control(inst, t, x, w_t, config)
        except SolverError:
            return None
        if not ok(anchor):
            return None
        lo, hi = 0.0, 1.0
        for _ in range(12):
            mid = 0.5 * (lo + hi)
            if ok((1.0 - mid) * u + mid * anchor):
                hi = mid
            else:
                lo = mid
        # overshoot past the minimal blend: a start hugging the boundary
        # costs more Newton steps than one a little further interior
        over = min(1.0, REPAIR_OVERSHOOT * hi)
        cand = (1.0 - over) * u + over * anchor
        if ok(cand):
            return cand
        return (1.0 - hi) * u + hi * anchor

    def _repair_hinted(self, x0, w_first, controls, config):
        d = self.instance.dims
        U = np.asarray(controls, float)
        if U.shape != (self.S, d.n_u):
            return None
        W = np.empty((self.S, d.n_w))
        W[0] = w_first
        W[1:] = self.wbar
        lo_rows, hi_rows = self._u_box
        # clamp a hair past the margin so the strict feasibility checks pass
        m = max(REPAIR_CLAMP, WARM_MARGIN + 1e-6)
        lo = np.full((self.S, d.n_u), -np.inf)
        hi = np.full((self.S, d.n_u), np.inf)
        for p, coef, off0, w_sens in hi_rows:
            hi[:, p] = np.minimum(hi[:, p], (-m - off0 - W @ w_sens) / coef)
        for p, coef, off0, w_sens in lo_rows:
            lo[:, p] = np.maximum(lo[:, p], (-m - off0 - W @ w_sens) / coef)
        if np.any(lo > hi):
            # no control clears the margin on some coordinate; cold-start
            return None
        U = np.clip(U, lo, hi)
        X = self._roll_states(x0, w_first, U)
        flags = self._stage_flags(X, w_first, U)
        if flags is not None and flags.all():
            return self._pack_z(U, X)
        # blending a stage shifts every later state, so the walk re-checks
        # each stage against the state actually reached
        x = np.asarray(x0, float)
        for k in range(self.S):
            t = self.t_start + k
            X[k] = x
            u = self._blend_stage(t, x, W[k], U[k], config)
            if u is None:
                return None
            U[k] = u
            if k < self.S - 1:
                x = self.instance.dynamics.phi(x, W[k], u, t)
        return self._pack_z(U, X)

    def repair(self, x0, w_first, controls, config):
        """Blend infeasible warm-start controls toward a stage interior point.

        Returns a packed strictly feasible z, or None when repair fails and
        the caller should cold-start.
        """
        if len(controls) != self.S:
            return None
        if self._path_spec is not None:
            return self._repair_hinted(x0, w_first, controls, config)
        instance = self.instance
        x = np.asarray(x0, float)
        out = []
        for k in range(self.S):
            t = self.t_start + k
            w_t = w_first if k == 0 else self.wbar
            u = np.asarray(controls[k], float)
            bundle = feasible_set(instance, t, x, w_t)
            if not (bundle.strictly_feasible(u, margin=WARM_MARGIN)
                    and _stage_domains_ok(instance, t, x, w_t, u)):
                try:
                    anchor = stage_interior_control(instance, t, x, w_t, config)
                except SolverError:
                    return None
                for gamma in (0.002, 0.01, 0.05, 0.2, 0.5, 1.0):
                    cand = (1.0 - gamma) * u + gamma * anchor
                    if (bundle.strictly_feasible(cand, margin=WARM_MARGIN)
                            and _stage_domains_ok(instance, t, x, w_t, cand)):
                        u = cand
                        break
                else:
                    return None
            out.append(u)
            x = step_dynamics(instance, t, x, w_t, u)
        z, _ = self.pack(x0, w_first, out)
        return z


@lru_cache(maxsize=None)
def _template(instance, t_start, use_hints):
    if not 1 <= t_start <= instance.dims.T:
        raise ValueError("window start %d outside horizon [1, %d]" % (t_start, instance.dims.T))
    return _WindowTemplate(instance, t_start, use_hints)


def clear_template_cache():
    _template.cache_clear()


def _solve_window(instance, t_start, x0, w_first, config, warm, use_hints):
    config = config or default_config()
    tpl = _template(instance, t_start, use_hints)
    x0 = np.asarray(x0, dtype=float)
    w_first = np.asarray(w_first, dtype=float)
    start = None
    warm_used = False
    if warm is not None:
        start = tpl.repair(x0, w_first, warm, config)
        warm_used = start is not None
    if start is None:
        start = tpl.cold_start(x0, w_first, config)
    prog = tpl.instantiate(x0, w_first, start=start)
    sol = solve(prog, config, t0=WARM_T0 if warm_used else None)
    if sol.status != OPTIMAL and warm_used:
        # a repaired warm start can sit badly off-center; retry cold
        start = tpl.cold_start(x0, w_first, config)
        prog = tpl.instantiate(x0, w_first, start=start)
        sol = solve(prog, config)
    if sol.status != OPTIMAL:
        raise SolverError("window solve at t=%d finished %s (residuals %.2e/%.2e/%.2e)"
                          % (t_start, sol.status, sol.r_stat, sol.r_feas, sol.r_comp))
    controls, states = tpl.unpack(sol.z, x0)
    return Plan(t_start=t_start, horizon=tpl.S, controls=controls, states=states,
                value=-sol.value, solution=sol, program=prog, w_first=w_first)


def build_nominal(instance, t_start=1, x_start=None, config=None, use_hints=True,
                  with_start=True):
    """Stacked program of the mean-noise relaxation over [t_start, T]."""
    x0 = instance.x1 if x_start is None else np.asarray(x_start, float)
    tpl = _template(instance, t_start, use_hints)
    start = tpl.cold_start(x0, tpl.wbar, config or default_config()) if with_start else None
    return tpl.instantiate(x0, tpl.wbar, start=start)


def solve_nominal(instance, config=None, t_start=1, x_start=None, warm=None,
                  use_hints=True):
    """Solve the mean-noise relaxation; Plan.value is the maximized utility."""
    x0 = instance.x1 if x_start is None else x_start
    wbar = instance.exo.mean
    return _solve_window(instance, t_start, x0, wbar, config, warm, use_hints)


def build_observed(instance, t, x, w, config=None, use_hints=True, with_start=True):
    """Stacked program over [t, T] whose first stage sees the realized w."""
    tpl = _template(instance, t, use_hints)
    x = np.asarray(x, float)
    w = np.asarray(w, float)
    start = tpl.cold_start(x, w, config or default_config()) if with_start else None
    return tpl.instantiate(x, w, start=start)


def solve_observed(instance, t, x, w, config=None, warm=None, use_hints=True):
    """Solve the observed-first-stage relaxation for the window [t, T].

    At w equal to the mean arrivals this coincides with solve_nominal
    started at (t, x).
    """
    return _solve_window(instance, t, x, w, config, warm, use_hints)
