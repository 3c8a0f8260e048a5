"""Hot loops with a numba implementation and a pure-numpy fallback.

Set ``JMQKD_DISABLE_NUMBA=1`` to force the numpy versions.  The numpy path is
also used when numba cannot be imported.
"""
import os

import numpy as np

_DISABLED = os.environ.get("JMQKD_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("numba disabled by environment")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# Second-order-cone / affine alternating projections
#
# A parent POVM on a qubit is stored as an (L, 4) array of Bloch rows
# (t, r_x, r_y, r_z), each standing for 1/2 (t I + r.sigma).  Labels are
# base-3 strings lam in {0, 1, 2}^N (0 -> "+", 1 -> "-", 2 -> no-click),
# given by the integer table ``digits`` of shape (L, N).


def marginals_np(x, digits):
    n = digits.shape[1]
    out = np.zeros((n, 3, 4))
    for y in range(n):
        for b in range(3):
            out[y, b] = x[digits[:, y] == b].sum(axis=0)
    return out


def project_affine_np(x, digits, targets):
    """Euclidean projection onto {x : marginals(x) == targets}.

    Closed form through main effects; the constraint matrix is the design of a
    full factorial with N three-level factors.
    """
    L, n = digits.shape
    dev = marginals_np(x, digits) - targets
    c = dev[0].sum(axis=0) / L
    shift = np.tile(c, (L, 1))
    scale = 3.0 ** (n - 1)
    for y in range(n):
        g = dev[y] / scale - c
        shift += g[digits[:, y]]
    return x - shift


def project_cone_np(x):
    t = x[:, 0]
    r = x[:, 1:]
    nr = np.sqrt((r * r).sum(axis=1))
    out = x.copy()
    dead = nr <= -t
    out[dead] = 0.0
    mid = nr > np.abs(t)
    a = 0.5 * (t[mid] + nr[mid])
    out[mid, 0] = a
    out[mid, 1:] = r[mid] * (a / nr[mid])[:, None]
    return out


def dykstra_sweeps_np(x, q, digits, targets, n_sweeps):
    z = x
    for _ in range(n_sweeps):
        z = project_cone_np(x + q)
        q = x + q - z
        x = project_affine_np(z, digits, targets)
    return x, q, z


if HAVE_NUMBA:

    @njit(cache=True)
    def _marginals_nb(x, digits, out):
        L, n = digits.shape
        out[:] = 0.0
        for i in range(L):
            for y in range(n):
                b = digits[i, y]
                for k in range(4):
                    out[y, b, k] += x[i, k]

    @njit(cache=True)
    def _project_affine_nb(x, digits, targets, dev, out):
        L, n = digits.shape
        _marginals_nb(x, digits, dev)
        for y in range(n):
            for b in range(3):
                for k in range(4):
                    dev[y, b, k] -= targets[y, b, k]
        c = np.zeros(4)
        for b in range(3):
            for k in range(4):
                c[k] += dev[0, b, k]
        for k in range(4):
            c[k] /= L
        scale = 3.0 ** (n - 1)
        for i in range(L):
            for k in range(4):
                s = c[k]
                for y in range(n):
                    s += dev[y, digits[i, y], k] / scale - c[k]
                out[i, k] = x[i, k] - s

    @njit(cache=True)
    def _project_cone_row_nb(t, rx, ry, rz, out, i):
        nr = np.sqrt(rx * rx + ry * ry + rz * rz)
        if nr <= t:
            out[i, 0] = t
            out[i, 1] = rx
            out[i, 2] = ry
            out[i, 3] = rz
        elif nr <= -t:
            out[i, 0] = 0.0
            out[i, 1] = 0.0
            out[i, 2] = 0.0
            out[i, 3] = 0.0
        else:
            a = 0.5 * (t + nr)
            f = a / nr
            out[i, 0] = a
            out[i, 1] = rx * f
            out[i, 2] = ry * f
            out[i, 3] = rz * f

    @njit(cache=True)
    def _dykstra_sweeps_nb(x, q, digits, targets, n_sweeps):
        L = x.shape[0]
        n = digits.shape[1]
        z = np.empty_like(x)
        w = np.empty_like(x)
        dev = np.empty((n, 3, 4))
        for _ in range(n_sweeps):
            for i in range(L):
                _project_cone_row_nb(x[i, 0] + q[i, 0], x[i, 1] + q[i, 1],
                                     x[i, 2] + q[i, 2], x[i, 3] + q[i, 3], z, i)
            for i in range(L):
                for k in range(4):
                    q[i, k] = x[i, k] + q[i, k] - z[i, k]
            _project_affine_nb(z, digits, targets, dev, w)
            for i in range(L):
                for k in range(4):
                    x[i, k] = w[i, k]
        return x, q, z

    def dykstra_sweeps(x, q, digits, targets, n_sweeps):
        return _dykstra_sweeps_nb(x.copy(), q.copy(), digits, targets, n_sweeps)

    def marginals(x, digits):
        out = np.zeros((digits.shape[1], 3, 4))
        _marginals_nb(x, digits, out)
        return out

    def project_affine(x, digits, targets):
        out = np.empty_like(x)
        dev = np.empty((digits.shape[1], 3, 4))
        _project_affine_nb(x, digits, targets, dev, out)
        return out

else:
    dykstra_sweeps = dykstra_sweeps_np
    marginals = marginals_np
    project_affine = project_affine_np

project_cone = project_cone_np


# ---------------------------------------------------------------------------
# Signed sums over all 2^N sign patterns: sum_a || sum_k (-1)^{a_k} m_k ||


def sign_table(n):
    a = np.arange(2 ** n)[:, None]
    bits = (a >> np.arange(n)[None, :]) & 1
    return 1.0 - 2.0 * bits


def signed_norms_np(ms):
    ms = np.asarray(ms, dtype=float)
    w = sign_table(ms.shape[0]) @ ms
    return np.sqrt((w * w).sum(axis=1))


if HAVE_NUMBA:

    @njit(cache=True)
    def _signed_norms_nb(ms):
        n, dim = ms.shape
        total = 1 << n
        out = np.empty(total)
        acc = np.empty(dim)
        for a in range(total):
            acc[:] = 0.0
            for k in range(n):
                if (a >> k) & 1:
                    for j in range(dim):
                        acc[j] -= ms[k, j]
                else:
                    for j in range(dim):
                        acc[j] += ms[k, j]
            s = 0.0
            for j in range(dim):
                s += acc[j] * acc[j]
            out[a] = np.sqrt(s)
        return out

    def signed_norms(ms):
        return _signed_norms_nb(np.ascontiguousarray(ms, dtype=np.float64))

else:
    signed_norms = signed_norms_np


# ---------------------------------------------------------------------------
# Weiszfeld iteration for the geometric median.  Status codes: 0 converged,
# 1 objective increased (numerical trouble), 2 iteration cap reached.


def weiszfeld_np(points, start, tol, max_iter, floor):
    t = start.copy()
    obj = np.sqrt(((points - t) ** 2).sum(axis=1)).sum()
    for it in range(max_iter):
        d = np.maximum(np.sqrt(((points - t) ** 2).sum(axis=1)), floor)
        w = 1.0 / d
        t_new = (points * w[:, None]).sum(axis=0) / w.sum()
        new_obj = np.sqrt(((points - t_new) ** 2).sum(axis=1)).sum()
        if new_obj > obj * (1.0 + 1e-14) + 1e-300:
            return t, obj, it, 1
        step = np.sqrt(((t_new - t) ** 2).sum())
        t, obj = t_new, new_obj
        if step <= tol * max(1.0, np.sqrt((t * t).sum())):
            return t, obj, it + 1, 0
    return t, obj, max_iter, 2


if HAVE_NUMBA:

    @njit(cache=True)
    def _weiszfeld_nb(points, start, tol, max_iter, floor):
        m, dim = points.shape
        t = start.copy()
        t_new = np.empty(dim)
        obj = 0.0
        for i in range(m):
            s = 0.0
            for j in range(dim):
                s += (points[i, j] - t[j]) ** 2
            obj += np.sqrt(s)
        for it in range(max_iter):
            t_new[:] = 0.0
            wsum = 0.0
            for i in range(m):
                s = 0.0
                for j in range(dim):
                    s += (points[i, j] - t[j]) ** 2
                d = max(np.sqrt(s), floor)
                wsum += 1.0 / d
                for j in range(dim):
                    t_new[j] += points[i, j] / d
            for j in range(dim):
                t_new[j] /= wsum
            new_obj = 0.0
            for i in range(m):
                s = 0.0
                for j in range(dim):
                    s += (points[i, j] - t_new[j]) ** 2
                new_obj += np.sqrt(s)
            if new_obj > obj * (1.0 + 1e-14) + 1e-300:
                return t, obj, it, 1
            step = 0.0
            nt = 0.0
            for j in range(dim):
                step += (t_new[j] - t[j]) ** 2
                nt += t_new[j] ** 2
                t[j] = t_new[j]
            obj = new_obj
            if np.sqrt(step) <= tol * max(1.0, np.sqrt(nt)):
                return t, obj, it + 1, 0
        return t, obj, max_iter, 2

    def weiszfeld_loop(points, start, tol, max_iter, floor):
        return _weiszfeld_nb(np.ascontiguousarray(points, dtype=np.float64),
                             np.ascontiguousarray(start, dtype=np.float64),
                             tol, max_iter, floor)

else:
    weiszfeld_loop = weiszfeld_np
