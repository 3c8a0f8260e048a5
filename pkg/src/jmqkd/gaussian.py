"""Single-mode Gaussian channels in the (X, Y, delta) representation.

A channel acts on covariance matrices as V -> X V X^T + Y and on means as
mu -> X mu + delta.  Quadratures are X = (a + a^dag)/sqrt(2), so the vacuum
has variance 1/2 (covariance matrix 1 in the units of V used here).
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import _bound

OMEGA = np.array([[0.0, 1.0], [-1.0, 0.0]])
SYM_TOL = 1e-12


@dataclass(frozen=True)
class GaussianChannelXY:
    X: np.ndarray
    Y: np.ndarray
    delta: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float).reshape(2, 2)
        Y = np.asarray(self.Y, dtype=float).reshape(2, 2)
        if np.abs(Y - Y.T).max() > SYM_TOL:
            raise ValueError("Y must be symmetric")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", 0.5 * (Y + Y.T))
        object.__setattr__(self, "delta", np.asarray(self.delta, dtype=float).reshape(2))

    @property
    def physical(self):
        """Complete positivity: Y + i Omega - i X Omega X^T >= 0."""
        m = self.Y + 1j * OMEGA - 1j * self.X @ OMEGA @ self.X.T
        return bool(np.linalg.eigvalsh(m).min() >= -1e-12)

    def apply(self, V, mu=None):
        mu = np.zeros(2) if mu is None else np.asarray(mu, dtype=float)
        return self.X @ V @ self.X.T + self.Y, self.X @ mu + self.delta


IDENTITY = GaussianChannelXY(np.eye(2), np.zeros((2, 2)))


@dataclass(frozen=True)
class ThermalParams:
    """Beam splitter of transmittance eta mixing in a thermal state; excess noise eps."""

    eta: float
    eps: float = 0.0

    def __post_init__(self):
        if not 0 <= self.eta <= 1:
            raise ValueError("eta must lie in [0, 1]")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")

    @property
    def nu(self):
        """Mean photon number of the thermal state.

        Undefined (nan) at eta = 1, where (X, Y) is the additive-noise limit.
        """
        if self.eta == 1:
            return float("nan")
        return self.eta * self.eps / (2 * (1 - self.eta))


def thermal_xy(p, eps=None):
    """Thermal-noise channel; accepts ``ThermalParams`` or ``(eta, eps)``."""
    if not isinstance(p, ThermalParams):
        p = ThermalParams(float(p), 0.0 if eps is None else float(eps))
    e = np.eye(2)
    return GaussianChannelXY(math.sqrt(p.eta) * e, (1 - p.eta + p.eps * p.eta) * e)


def amp_xy(G):
    if G < 1:
        raise ValueError("amplifier gain must be >= 1")
    e = np.eye(2)
    return GaussianChannelXY(math.sqrt(G) * e, (G - 1) * e)


def bs_trace_xy(N):
    """One output of a balanced 1 -> N splitter with vacuum in the other ports."""
    if N < 1:
        raise ValueError("N must be >= 1")
    e = np.eye(2)
    return GaussianChannelXY(math.sqrt(1.0 / N) * e, (N - 1) / N * e)


def compose(first, second):
    """Channel ``second`` applied after ``first``."""
    Xa, Ya, da = first.X, first.Y, first.delta
    Xb, Yb, db = second.X, second.Y, second.delta
    return GaussianChannelXY(Xb @ Xa, Xb @ Ya @ Xb.T + Yb, Xb @ da + db)


def n_extendable_gaussian(ch, N, tol=1e-12):
    """sqrt(det Y) >= 1 - 1/N + |det X - 1/N| (boundary counts as extendable)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    dY = max(np.linalg.det(ch.Y), 0.0)
    lhs = math.sqrt(dY)
    rhs = 1 - 1.0 / N + abs(np.linalg.det(ch.X) - 1.0 / N)
    return bool(lhs >= rhs - tol)


def ub_thermal(N, eps):
    """Efficiency below which a thermal-noise device is N-extendable."""
    if N < 1 or eps < 0:
        raise ValueError("need N >= 1 and eps >= 0")
    s = 1 - eps / 2
    if s <= 0:
        return _bound(math.inf, "thermal-extendibility")
    return _bound(1.0 / (N * s), "thermal-extendibility")


def ub_gaussian_meas(eps):
    """Efficiency below which all homodyne/Gaussian readouts are jointly measurable."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if eps >= 2:
        return _bound(math.inf, "thermal-gaussian-measurement")
    return _bound(1.0 / (2 - eps), "thermal-gaussian-measurement")


def homodyne_sim_params(eta, eps):
    """Gain and added Gaussian variance for simulating homodyne data from heterodyne.

    Raises ValueError when the required variance 1/2 (1 - 2 eta + eps eta) is
    negative, i.e. when eta > 1/(2 - eps).
    """
    s2 = 0.5 * (1 - 2 * eta + eps * eta)
    if s2 < -1e-15:
        raise ValueError(f"needs 1 - 2*eta + eps*eta >= 0, got {2 * s2:.6g} (eta={eta}, eps={eps})")
    return math.sqrt(2 * eta), max(s2, 0.0)


def double_factorial(n):
    """(n)!! for n >= -1, with (-1)!! = 1."""
    if n < -1:
        raise ValueError("double factorial needs n >= -1")
    if n > 40:
        raise OverflowError("double factorial argument too large")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def gaussian_moments(mean, var, n_max):
    """Raw moments E[X^n], n = 0..n_max, of a normal variable."""
    out = np.zeros(n_max + 1)
    for n in range(n_max + 1):
        out[n] = sum(math.comb(n, 2 * j) * mean ** (n - 2 * j) * double_factorial(2 * j - 1) * var ** j
                     for j in range(n // 2 + 1))
    return out


def coherent_quadrature_moments(alpha, thetas, n_max):
    """Moments of X(theta) = cos(theta) X + sin(theta) P for a coherent state |alpha>."""
    rows = []
    for th in thetas:
        mean = math.sqrt(2) * (complex(alpha) * complex(math.cos(th), -math.sin(th))).real
        rows.append(gaussian_moments(mean, 0.5, n_max))
    return np.array(rows)


def thermal_output_moments(eta, eps, m_in):
    """Target moments of sqrt(eta) X_in + sqrt(1 - eta) X_thermal."""
    n_max = len(m_in) - 1
    s = 0.5 * (1 - eta + eps * eta)
    out = np.zeros(n_max + 1)
    for n in range(n_max + 1):
        out[n] = sum(math.comb(n, 2 * k) * math.sqrt(eta) ** (n - 2 * k) * m_in[n - 2 * k]
                     * double_factorial(2 * k - 1) * s ** k for k in range(n // 2 + 1))
    return out


def heterodyne_sim_moments(G, sigma2, m_in):
    """Moments of G (cos X_1 + sin P_2) + Delta, summed term by term over vacuum and Delta."""
    n_max = len(m_in) - 1
    g = G / math.sqrt(2)
    out = np.zeros(n_max + 1)
    for n in range(n_max + 1):
        acc = 0.0
        for k in range(n // 2 + 1):
            noise = 0.0
            for l in range(k + 1):
                noise += (math.comb(2 * k, 2 * l) * g ** (2 * (k - l)) * 0.5 ** (k - l) * sigma2 ** l
                          * double_factorial(2 * (k - l) - 1) * double_factorial(2 * l - 1))
            acc += math.comb(n, 2 * k) * g ** (n - 2 * k) * m_in[n - 2 * k] * noise
        out[n] = acc
    return out


def homodyne_moment_check(eta, eps, input_moments, n_max, thetas):
    """Max |target - simulated| moment over orders 0..n_max and all angles.

    ``input_moments[i][n]`` is <X_in(thetas[i])^n>.
    """
    if n_max > 10:
        raise ValueError("n_max is limited to 10")
    m = np.asarray(input_moments, dtype=float)
    if m.shape[0] != len(thetas) or m.shape[1] < n_max + 1:
        raise ValueError("need one row of n_max + 1 moments per angle")
    G, s2 = homodyne_sim_params(eta, eps)
    dev = 0.0
    for row in m:
        row = row[: n_max + 1]
        dev = max(dev, float(np.abs(thermal_output_moments(eta, eps, row)
                                    - heterodyne_sim_moments(G, s2, row)).max()))
    return dev


def gauss_decomp_necessary(candidate, eta, eps, tol=1e-10):
    """Necessary condition for a Gaussian piece of a convex split of the thermal channel.

    X must be sqrt(eta) I and Y <= (1 - eta + eta eps) I.
    """
    if np.abs(candidate.X - math.sqrt(eta) * np.eye(2)).max() > tol:
        return False
    return bool(np.linalg.eigvalsh(candidate.Y).max() <= 1 - eta + eta * eps + tol)


def no_gauss_cc_attack(eta, eps, N):
    """True when the thermal channel admits no convex split with an N-extendable Gaussian part."""
    th = thermal_xy(ThermalParams(eta, eps))
    if n_extendable_gaussian(th, N):
        return False
    # Any admissible Gaussian piece has det X = eta and sqrt(det Y) <= 1 - eta + eta eps,
    # so the extendibility inequality is best served by the largest allowed Y.
    best = 1 - eta + eta * eps
    return bool(best < 1 - 1.0 / N + abs(eta - 1.0 / N) - 1e-12)
