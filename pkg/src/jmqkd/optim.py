"""Small numerical kernels shared by the threshold and key-rate code."""
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    tol: float
    f_lo: float
    f_hi: float

    @classmethod
    def make(cls, f, lo, hi, tol=1e-10):
        """Evaluate ``f`` at both ends and check for a sign change."""
        if not hi > lo:
            raise ValueError(f"empty bracket [{lo}, {hi}]")
        if tol <= 0:
            raise ValueError("tol must be positive")
        f_lo, f_hi = float(f(lo)), float(f(hi))
        if f_lo * f_hi > 0:
            raise ValueError(f"no sign change on [{lo}, {hi}]: f(lo)={f_lo:.3g}, f(hi)={f_hi:.3g}")
        return cls(float(lo), float(hi), float(tol), f_lo, f_hi)


def bisect(f, bracket):
    """Plain bisection.

    Runs exactly ceil(log2((hi - lo) / tol)) halvings so the work is fixed by
    the bracket alone, then returns the midpoint of the final interval.
    """
    lo, hi = bracket.lo, bracket.hi
    if bracket.f_lo == 0:
        return lo
    if bracket.f_hi == 0:
        return hi
    lo_sign = math.copysign(1.0, bracket.f_lo)
    n = max(0, math.ceil(math.log2((hi - lo) / bracket.tol)))
    for _ in range(n):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if math.copysign(1.0, fm) == lo_sign:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bisect_predicate(pred, lo, hi, tol):
    """Locate the switch point of a monotone predicate.

    ``pred(lo)`` must be False and ``pred(hi)`` True.  Returns (lo, hi) with
    hi - lo <= tol.
    """
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def weiszfeld(points, tol=1e-12, max_iter=100_000):
    """Geometric median of a point cloud (minimiser of sum_k ||p_k - t||).

    Two distinct points give the midpoint of the segment by convention.  A data
    point is returned directly when it satisfies the subgradient optimality
    test, which is the case the plain iteration handles poorly.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] < 2:
        raise ValueError("need at least two points")
    uniq, counts = np.unique(np.round(pts, 15), axis=0, return_counts=True)
    if uniq.shape[0] == 1:
        return pts[0].copy()
    if pts.shape[0] == 2:
        return 0.5 * (pts[0] + pts[1])

    for j in range(pts.shape[0]):
        diff = pts - pts[j]
        dist = np.sqrt((diff * diff).sum(axis=1))
        same = dist < 1e-15
        pull = (diff[~same] / dist[~same, None]).sum(axis=0)
        if np.sqrt(pull @ pull) <= same.sum():
            return pts[j].copy()

    start = pts.mean(axis=0)
    t, _, _, status = _kernels.weiszfeld_loop(pts, start, tol, max_iter, 1e-12)
    if status == 1:
        raise ConvergenceError("Weiszfeld objective increased")
    if status == 2:
        raise ConvergenceError(f"Weiszfeld did not converge in {max_iter} iterations")
    return np.asarray(t)


def geometric_median_objective(points, t):
    pts = np.asarray(points, dtype=float)
    return float(np.sqrt(((pts - t) ** 2).sum(axis=1)).sum())


@dataclass
class SimplexState:
    vertices: np.ndarray
    values: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        n, dim = self.vertices.shape
        if n != dim + 1:
            raise ValueError(f"simplex in dimension {dim} needs {dim + 1} vertices, got {n}")

    def order(self):
        idx = np.argsort(self.values, kind="stable")
        self.vertices = self.vertices[idx]
        self.values = self.values[idx]

    def diameter(self):
        d = self.vertices[1:] - self.vertices[0]
        return float(np.sqrt((d * d).sum(axis=1)).max())


@dataclass
class NelderMeadResult:
    x: np.ndarray
    fun: float
    nit: int
    state: SimplexState = field(repr=False)


def initial_simplex(seed, rel_step=0.05, zero_step=0.00025):
    seed = np.atleast_1d(np.asarray(seed, dtype=float))
    dim = seed.size
    verts = np.tile(seed, (dim + 1, 1))
    for i in range(dim):
        verts[i + 1, i] = seed[i] * (1 + rel_step) if seed[i] != 0 else zero_step
    return verts


def nelder_mead(f, seed, tol=1e-8, max_iter=10_000, alpha=1.0, gamma=2.0, rho=0.5, sigma=0.5):
    """Minimise ``f`` with the Nelder-Mead simplex method.

    Standard reflection / expansion / contraction / shrink moves with
    coefficients (1, 2, 1/2, 1/2).  Stops when every vertex lies within ``tol``
    of the best one, or after ``max_iter`` iterations.

    Returns
    -------
    NelderMeadResult
        ``x`` and ``fun`` of the best vertex.  ``fun`` is never larger than
        ``f(seed)`` since the seed is a vertex of the starting simplex.
    """
    verts = initial_simplex(seed)
    vals = np.array([f(v) for v in verts], dtype=float)
    st = SimplexState(verts, vals)
    st.order()
    while st.iteration < max_iter and st.diameter() >= tol:
        st.iteration += 1
        v, fv = st.vertices, st.values
        centroid = v[:-1].mean(axis=0)
        xr = centroid + alpha * (centroid - v[-1])
        fr = f(xr)
        if fr < fv[0]:
            xe = centroid + gamma * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                v[-1], fv[-1] = xe, fe
            else:
                v[-1], fv[-1] = xr, fr
        elif fr < fv[-2]:
            v[-1], fv[-1] = xr, fr
        else:
            if fr < fv[-1]:
                xc = centroid + rho * (xr - centroid)
                fc = f(xc)
                accept = fc <= fr
            else:
                xc = centroid + rho * (v[-1] - centroid)
                fc = f(xc)
                accept = fc < fv[-1]
            if accept:
                v[-1], fv[-1] = xc, fc
            else:
                for i in range(1, len(v)):
                    v[i] = v[0] + sigma * (v[i] - v[0])
                    fv[i] = f(v[i])
        st.order()
    return NelderMeadResult(st.vertices[0].copy(), float(st.values[0]), st.iteration, st)


def golden_max(f, a, b, c):
    """Refine a bracketed maximum a < b < c with golden-section search.

    Falls back to the bracket midpoint value when the bracket is flat, which
    the scipy routine rejects.
    """
    from scipy.optimize import minimize_scalar

    fb = f(b)
    try:
        res = minimize_scalar(lambda x: -f(x), bracket=(a, b, c), method="golden",
                              options={"xtol": 1e-10})
    except ValueError:
        return b, fb
    if -res.fun > fb and a <= res.x <= c:
        return float(res.x), float(-res.fun)
    return b, fb
