"""Smooth function oracles: value / gradient / Hessian triples with curvature tags.

Every model quantity (rewards, constraints) enters the toolkit as a
SmoothOracle over some slot layout, usually the concatenated (x, w, u)
vector of a single stage.  Oracles may declare an open-domain predicate;
the solver never evaluates outside it.
"""

import numpy as np

CONVEX = "convex"
CONCAVE = "concave"
AFFINE = "affine"
_CURVATURES = (CONVEX, CONCAVE, AFFINE)


class SmoothOracle:
    """Base class. Subclasses set `dim`, `curvature` and the three evaluators."""

    dim = None
    curvature = CONVEX

    def value(self, z):
        raise NotImplementedError

    def grad(self, z):
        raise NotImplementedError

    def hess(self, z):
        raise NotImplementedError

    def in_domain(self, z):
        return True


class AffineOracle(SmoothOracle):
    """c . z + d"""

    curvature = AFFINE

    def __init__(self, c, d=0.0):
        self.c = np.asarray(c, dtype=float)
        self.d = float(d)
        self.dim = self.c.size

    def value(self, z):
        return float(self.c @ z + self.d)

    def grad(self, z):
        return self.c.copy()

    def hess(self, z):
        return np.zeros((self.dim, self.dim))


class QuadraticOracle(SmoothOracle):
    """0.5 z'Qz + c.z + d with symmetric Q."""

    def __init__(self, Q, c, d=0.0, curvature=CONVEX):
        self.Q = np.asarray(Q, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.d = float(d)
        self.dim = self.c.size
        self.curvature = curvature
        if self.Q.shape != (self.dim, self.dim):
            raise ValueError("Q shape %s does not match c length %d" % (self.Q.shape, self.dim))

    def value(self, z):
        return float(0.5 * z @ self.Q @ z + self.c @ z + self.d)

    def grad(self, z):
        return self.Q @ z + self.c

    def hess(self, z):
        return self.Q.copy()


_FLIP = {CONVEX: CONCAVE, CONCAVE: CONVEX, AFFINE: AFFINE}


class NegatedOracle(SmoothOracle):
    """-f; used to enter maximization rewards into the minimizing solver."""

    def __init__(self, base):
        self.base = base
        self.dim = base.dim
        self.curvature = _FLIP[base.curvature]

    def value(self, z):
        return -self.base.value(z)

    def grad(self, z):
        return -self.base.grad(z)

    def hess(self, z):
        return -self.base.hess(z)

    def in_domain(self, z):
        return self.base.in_domain(z)


class RestrictedOracle(SmoothOracle):
    """An oracle with some input slots frozen to constants.

    `free` lists the base-oracle slots that remain variable, in order;
    `frozen` is a full-length vector whose entries at non-free slots are
    the frozen values.  Restriction to an affine slice preserves the
    curvature tag.
    """

    def __init__(self, base, free, frozen):
        self.base = base
        self.free = np.asarray(free, dtype=int)
        self.frozen = np.asarray(frozen, dtype=float).copy()
        if self.frozen.size != base.dim:
            raise ValueError("frozen vector length %d != oracle dim %d" % (self.frozen.size, base.dim))
        self.dim = self.free.size
        self.curvature = base.curvature

    def embed(self, z):
        p = self.frozen.copy()
        p[self.free] = z
        return p

    def value(self, z):
        return self.base.value(self.embed(z))

    def grad(self, z):
        return self.base.grad(self.embed(z))[self.free]

    def hess(self, z):
        return self.base.hess(self.embed(z))[np.ix_(self.free, self.free)]

    def in_domain(self, z):
        return self.base.in_domain(self.embed(z))


def fd_gradient(oracle, z, h=1e-6):
    """Central finite-difference gradient of oracle.value at z."""
    z = np.asarray(z, dtype=float)
    g = np.zeros_like(z)
    for i in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (oracle.value(zp) - oracle.value(zm)) / (2 * h)
    return g


def fd_hessian(oracle, z, h=1e-6):
    """Central finite differences of oracle.grad; returns the symmetrized matrix."""
    z = np.asarray(z, dtype=float)
    n = z.size
    H = np.zeros((n, n))
    for i in range(n):
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        H[:, i] = (oracle.grad(zp) - oracle.grad(zm)) / (2 * h)
    return 0.5 * (H + H.T)


def gradient_error(oracle, z, h=1e-6):
    """Relative disagreement between analytic and finite-difference gradients."""
    g = oracle.grad(np.asarray(z, dtype=float))
    gfd = fd_gradient(oracle, z, h)
    return float(np.linalg.norm(g - gfd) / max(1.0, np.linalg.norm(g)))


def hessian_error(oracle, z, h=1e-6):
    H = oracle.hess(np.asarray(z, dtype=float))
    Hfd = fd_hessian(oracle, z, h)
    return float(np.linalg.norm(H - Hfd) / max(1.0, np.linalg.norm(H)))
