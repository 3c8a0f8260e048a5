"""Exact joint-measurability test for lossy, noisy binary qubit measurements.

The parent POVM is indexed by deterministic labels lam in {+, -, nc}^N.  A
qubit operator 1/2 (t I + r.sigma) is PSD iff t >= ||r||, so the question is
whether an affine subspace (marginal constraints) meets a product of
second-order cones.  Dykstra's alternating projections settle it: either the
cone iterate satisfies the marginals to ``tol`` (feasible, with an explicit
parent), or the limiting displacement yields a separating functional that
proves infeasibility.
"""
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .qop import PAULIS, bloch_op

MAX_N = 6
FEAS_TOL = 1e-9
SEP_TOL = 1e-11
MAX_ITER = 200_000
CHECK_EVERY = 50


class IndeterminateError(RuntimeError):
    """Raised when the projection scheme neither converges nor separates."""

    def __init__(self, msg, lo=None, hi=None):
        super().__init__(msg)
        self.lo = lo
        self.hi = hi


@dataclass(frozen=True)
class JmProblem:
    """Binary qubit measurements 1/2((1 +- g_y) I +- m_y.sigma) seen through loss and noise.

    ``directions`` may be sub-normalised; ``biases`` defaults to zeros.
    """

    directions: np.ndarray
    vis: float
    biases: Optional[np.ndarray] = None
    digits: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if m.shape[1] != 3:
            raise ValueError("directions must be 3-vectors")
        n = m.shape[0]
        if not 1 <= n <= MAX_N:
            raise ValueError(f"need 1 <= N <= {MAX_N}, got {n}")
        if np.any(np.linalg.norm(m, axis=1) > 1 + 1e-12):
            raise ValueError("direction norms must be <= 1")
        if not 0 <= self.vis <= 1:
            raise ValueError("vis must lie in [0, 1]")
        g = np.zeros(n) if self.biases is None else np.asarray(self.biases, dtype=float).reshape(n)
        if np.any(np.linalg.norm(m, axis=1) > 1 - np.abs(g) + 1e-12):
            raise ValueError("positivity needs ||m|| <= 1 - |bias|")
        object.__setattr__(self, "directions", m)
        object.__setattr__(self, "biases", g)
        object.__setattr__(self, "digits", np.array(list(itertools.product(range(3), repeat=n)), dtype=np.int64))

    @classmethod
    def from_measurements(cls, ms, vis):
        return cls(np.array([m.vector for m in ms]), vis, np.array([m.bias for m in ms]))

    @property
    def n(self):
        return self.directions.shape[0]

    def targets(self, eta):
        """Bloch rows (t, r) of the effective POVM elements, shape (N, 3, 4)."""
        T = np.zeros((self.n, 3, 4))
        for y in range(self.n):
            g, m = self.biases[y], self.directions[y]
            T[y, 0, 0] = eta * (1 + g)
            T[y, 0, 1:] = eta * self.vis * m
            T[y, 1, 0] = eta * (1 - g)
            T[y, 1, 1:] = -eta * self.vis * m
            T[y, 2, 0] = 2 * (1 - eta)
        return T


@dataclass(frozen=True)
class FeasibilityCertificate:
    parent: np.ndarray
    digits: np.ndarray
    residual: float
    eta: float

    def elements(self):
        return [bloch_op(row[0], row[1:]) for row in self.parent]

    def labels(self):
        sym = "+-0"
        return ["".join(sym[d] for d in lab) for lab in self.digits]


@dataclass(frozen=True)
class FeasibilityResult:
    status: str
    eta: float
    iterations: int
    residual: float
    certificate: Optional[FeasibilityCertificate] = None
    separation: Optional[float] = None
    infeasible_above: Optional[float] = None

    @property
    def feasible(self):
        if self.status == "indeterminate":
            raise IndeterminateError(f"no decision at eta={self.eta} after {self.iterations} iterations")
        return self.status == "feasible"

    def __bool__(self):
        return self.feasible


def _separator(x, z, p):
    """Turn the Dykstra displacement into a cone-dual functional on range(C^T)."""
    w = z - x
    w = w - _kernels.project_affine(w, p.digits, np.zeros((p.n, 3, 4)))
    slack = np.sqrt((w[:, 1:] ** 2).sum(axis=1)) - w[:, 0]
    s = max(0.0, float(slack.max()))
    w[:, 0] += s
    nw = np.linalg.norm(w)
    if nw == 0:
        return None
    return w / nw


def _affine_point(p, eta):
    return _kernels.project_affine(np.zeros((3 ** p.n, 4)), p.digits, p.targets(eta))


def jm_feasible(p, eta, tol=FEAS_TOL, max_iter=MAX_ITER, check_every=CHECK_EVERY):
    """Decide whether the effective POVMs at efficiency ``eta`` are jointly measurable.

    Returns a ``FeasibilityResult`` whose status is "feasible" (with a parent
    certificate), "infeasible" (with the value of a normalised separating
    functional and the efficiency above which the same functional rules out
    every eta), or "indeterminate" when ``max_iter`` sweeps did neither.
    """
    if not 0 <= eta <= 1:
        raise ValueError("eta must lie in [0, 1]")
    T = p.targets(eta)
    x = _affine_point(p, eta)
    q = np.zeros_like(x)
    it = 0
    res = math.inf
    while it < max_iter:
        k = min(check_every, max_iter - it)
        x, q, z = _kernels.dykstra_sweeps(x, q, p.digits, T, k)
        it += k
        res = float(np.abs(_kernels.marginals(z, p.digits) - T).max())
        if res < tol:
            cert = FeasibilityCertificate(z.copy(), p.digits, res, eta)
            return FeasibilityResult("feasible", eta, it, res, certificate=cert)
        w = _separator(x, z, p)
        if w is None:
            continue
        val = float((w * x).sum())
        if val < -SEP_TOL:
            v0 = float((w * _affine_point(p, 0.0)).sum())
            v1 = float((w * _affine_point(p, 1.0)).sum())
            above = eta
            if v1 < v0:
                above = min(eta, max(0.0, v0 / (v0 - v1)))
            return FeasibilityResult("infeasible", eta, it, res, separation=val, infeasible_above=above)
    return FeasibilityResult("indeterminate", eta, it, res)


def jm_threshold_bracket(p, tol=1e-5, max_bisections=40, **kw):
    """Bracket [lo, hi] of the efficiency threshold.

    ``lo`` is certified feasible and every eta > hi is certified infeasible.
    A midpoint the solver cannot decide (typically one very close to the
    threshold) is skipped: the search keeps track of the undecided interval and
    probes the gaps on either side of it instead.  IndeterminateError is raised
    only when the final bracket is still wider than ``tol``.
    """
    if p.n == 1:
        return 1.0, 1.0
    top = jm_feasible(p, 1.0, **kw)
    if top.status == "feasible":
        return 1.0, 1.0
    lo, hi = 0.0, 1.0
    if top.status == "infeasible":
        hi = top.infeasible_above
    und = None
    for n_eval in range(2 * max_bisections):
        if hi - lo <= 1e-12 or (und is None and n_eval >= max_bisections):
            break
        if und is None:
            x = 0.5 * (lo + hi)
        else:
            gaps = ((und[0] - lo, lo), (hi - und[1], und[1]))
            width, start = max(gaps)
            if width <= tol / 4:
                break
            x = start + 0.5 * width
        r = jm_feasible(p, x, **kw)
        if r.status == "feasible":
            lo = x
        elif r.status == "infeasible":
            hi = min(x, r.infeasible_above)
        else:
            und = (x, x) if und is None else (min(und[0], x), max(und[1], x))
        if und is not None:
            und = (max(und[0], lo), min(und[1], hi))
            if und[0] > und[1]:
                und = None
    if und is not None and hi - lo > tol:
        raise IndeterminateError(
            f"undecided on [{und[0]:.9f}, {und[1]:.9f}] leaving bracket [{lo:.9f}, {hi:.9f}] wider than tol", lo, hi)
    return lo, hi


def jm_threshold_eta(p, tol=1e-5, **kw):
    """Largest efficiency certified jointly measurable, accurate to ``tol``."""
    return jm_threshold_bracket(p, tol, **kw)[0]


def verify_certificate(cert, p):
    """Max violation of PSD, normalisation and marginal constraints.

    PSD is checked both as t >= ||r|| and through matrix eigenvalues.
    """
    x = np.asarray(cert.parent, dtype=float)
    T = p.targets(cert.eta)
    marg = np.abs(_kernels.marginals_np(x, p.digits) - T).max()
    cone = max(0.0, float((np.sqrt((x[:, 1:] ** 2).sum(axis=1)) - x[:, 0]).max()))
    eig = max(0.0, -min(np.linalg.eigvalsh(bloch_op(r[0], r[1:])).min() for r in x))
    total = x.sum(axis=0)
    norm = np.abs(bloch_op(total[0], total[1:]) - np.eye(2)).max()
    return float(max(marg, cone, eig, norm))


def certificate_from_parent(pc, digits=None):
    """Embed a signed-sum parent (stochastic response) as a deterministic-label parent.

    The result has zero weight on every label with a no-click entry and is a
    certificate at eta = 1.
    """
    resp = pc.response
    n = resp.shape[1]
    if digits is None:
        digits = np.array(list(itertools.product(range(3), repeat=n)), dtype=np.int64)
    rows = np.array([[np.trace(e).real] + [np.trace(e @ s).real for s in PAULIS] for e in pc.parent.elements])
    x = np.zeros((digits.shape[0], 4))
    for i, lab in enumerate(digits):
        if np.any(lab == 2):
            continue
        wgt = np.ones(rows.shape[0])
        for y in range(n):
            wgt = wgt * resp[:, y, lab[y]]
        x[i] = wgt @ rows
    return FeasibilityCertificate(x, digits, 0.0, 1.0)

