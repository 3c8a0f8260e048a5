"""Convex-combination attacks and the resulting one-way key-rate upper bounds.

Eve replaces the measurement device, with probability p, by one that is
(partially) jointly measurable and otherwise lets the ideal device run.  She
picks the replacement (eta*, v*) so that the observed loss and noise are
reproduced on average:

    p (1 - eta* v*) = 1 - eta v,    p (1 - eta*) = 1 - eta.

Counts of measurements may be ``math.inf``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .optim import bisect_predicate, golden_max, nelder_mead

INF = math.inf
THETA_SEEDS = (math.pi / 8, math.pi / 4, 3 * math.pi / 8)


def binary_entropy(x):
    """h(x) in bits, with h(0) = h(1) = 0."""
    if x < 0 or x > 1:
        if -1e-15 < x < 0 or 1 < x < 1 + 1e-15:
            x = min(max(x, 0.0), 1.0)
        else:
            raise ValueError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0 or x == 1:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


h = binary_entropy


def parse_count(s):
    """'inf' or a positive integer."""
    if isinstance(s, (int, float)):
        return INF if s == INF else int(s)
    s = str(s).strip().lower()
    if s in ("inf", "infinity", "oo"):
        return INF
    n = int(s)
    if n < 1:
        raise ValueError("counts must be >= 1")
    return n


@dataclass(frozen=True)
class AttackParams:
    p: float
    raw: float
    eta_star: float
    v_star: float
    source: str

    def residual(self, eta, v):
        """Max violation of the loss/noise matching system (meaningful when unclamped)."""
        p, es, vs = self.p, self.eta_star, self.v_star
        return max(abs(p * (1 - es * vs) - (1 - eta * v)), abs(p * (1 - es) - (1 - eta)))


def _attack(raw, eta, v, source):
    p = min(max(raw, 0.0), 1.0)
    if p == 0:
        return AttackParams(0.0, raw, float("nan"), float("nan"), source)
    es = 1 - (1 - eta) / p
    vs = (1 - (1 - eta * v) / p) / es if es != 0 else float("nan")
    return AttackParams(p, raw, es, vs, source)


def p_prime(K, N, d, eta, v):
    """Attack from the loss-plus-white-noise bound, arbitrary measurements in dimension d."""
    if K > N:
        raise ValueError("K must not exceed N")
    if K == INF and N == INF:
        return _attack(1 - eta * (v * (d + 1) - 1) / d, eta, v, "dim-d-limit")
    factors = []
    if K != INF:
        factors.append((K + 1) / K)
    if N != INF:
        factors.append(N / (N - 1) if N > 1 else INF)
    base = (eta * (1 - v) + d * (1 - eta * v)) / d
    return _attack(base * max(factors), eta, v, "dim-d")


def p_dprime(N, eta, v):
    """Attack from the binary-qubit signed-sum bound for N measurements."""
    if N == INF or N < 2:
        raise ValueError("needs a finite N >= 2")
    raw = (N * (1 - eta * v) + eta * math.sqrt(N) * (1 - v)) / (N - 1)
    return _attack(raw, eta, v, "binary-qubit-few")


def p_tprime(eta, v):
    """Attack from the all-qubit-PVM bound."""
    raw = 1 - eta * v + math.sqrt(max(eta * (1 - v) * (2 - eta * (1 + v)), 0.0))
    return _attack(raw, eta, v, "binary-qubit-all")


def table1_cell(K, N):
    """Formulas named by the optimal-attack table for binary qubit measurements."""
    if K > N or K < 1 or N < 2:
        raise ValueError(f"invalid cell K={K}, N={N}")
    if N == 2:
        return ("binary-qubit-few",)
    if N == 3:
        return ("dim-d",) if K == 1 else ("binary-qubit-few",)
    if K == INF:
        return ("binary-qubit-all",)
    if K <= 2:
        return ("dim-d",)
    return ("dim-d", "binary-qubit-all")


def attack_candidates(K, N, eta, v):
    """Every valid attack for K key settings among N binary qubit measurements."""
    out = [p_prime(K, N, 2, eta, v), p_tprime(eta, v)]
    if N != INF:
        out.append(p_dprime(N, eta, v))
    return out


def best_attack_p(K, N, eta, v):
    """Largest attack probability among the formulas of the table cell (K, N)."""
    names = table1_cell(K, N)
    cands = []
    for name in names:
        if name == "binary-qubit-few":
            cands.append(p_dprime(N, eta, v))
        elif name == "binary-qubit-all":
            cands.append(p_tprime(eta, v))
        else:
            cands.append(p_prime(K, N, 2, eta, v))
    return max(cands, key=lambda a: a.raw)


@dataclass(frozen=True)
class KeyRateBound:
    value: float
    components: dict = field(default_factory=dict, compare=False)

    @property
    def zero_key(self):
        return self.value <= 0


def keyrate_ub_oneway(p, H_key, H_cond):
    return KeyRateBound((1 - p) * H_key - H_cond, {"1-p": 1 - p, "H_key": H_key, "H_cond": H_cond})


def _zero_crossing(value, lo=0.0, hi=1.0, tol=1e-10):
    """Smallest x in [lo, hi] from which value(x) > 0; None if never positive."""
    if not value(hi) > 0:
        return None
    if value(lo) > 0:
        return lo
    a, b = bisect_predicate(lambda x: value(x) > 0, lo, hi, tol)
    return 0.5 * (a + b)


# -- prepare-and-measure BB84 / CHSH-type -----------------------------------

def bb84_bound(eta, v, binning=False):
    """One-way bound with one key setting among infinitely many for Bob (qubit)."""
    a = p_prime(1, INF, 2, eta, v)
    if binning:
        H = 0.5 * (h(eta * (1 + v) / 2) + h(eta * (1 - v) / 2))
    else:
        H = eta * h((1 + v) / 2) + h(eta)
    b = keyrate_ub_oneway(a.p, 1.0, H)
    b.components["attack"] = a
    return b


def bb84_threshold(v, binning=False, tol=1e-10):
    """Efficiency below which the bound forbids a key."""
    return _zero_crossing(lambda e: bb84_bound(e, v, binning).value, 1e-9, 1.0, tol)


# -- receiver-device-independent protocol -----------------------------------

def rdi_bound(eta, v, theta, N=INF):
    """Key-rate bound for the N-state receiver-device-independent protocol.

    For N = inf both sides are multiplied by N before taking the limit.
    """
    if not 0 <= theta <= math.pi / 2 + 1e-15:
        raise ValueError("theta must lie in [0, pi/2]")
    if N != INF and N < 2:
        raise ValueError("N must be >= 2")
    p = p_tprime(eta, v).p
    s2 = math.sin(theta) ** 2
    den = 1 - v * math.cos(theta) ** 2
    Hab = h((1 - v) / (2 * den)) if den > 0 else 0.0
    if N == INF:
        gain = s2 / 2
        succ = eta * v * s2 / 2 + eta * (1 - v)
    else:
        gain = s2 / (2 * (N - 1))
        succ = eta * v * s2 / (2 * (N - 1)) + eta * (1 - v) / N
    val = (1 - p) * gain - succ * Hab
    return KeyRateBound(val, {"1-p": 1 - p, "H_key": gain, "H_cond": succ * Hab})


def rdi_max_theta(eta, v, N=INF, n_grid=200):
    """Maximise the RDI bound over theta: grid scan, then golden-section refinement."""
    grid = np.linspace(0.0, math.pi / 2, n_grid)
    vals = np.array([rdi_bound(eta, v, t, N).value for t in grid])
    i = int(np.argmax(vals))
    if 0 < i < n_grid - 1:
        return golden_max(lambda t: rdi_bound(eta, v, min(max(t, 0.0), math.pi / 2), N).value,
                          grid[i - 1], grid[i], grid[i + 1])
    return float(grid[i]), float(vals[i])


def rdi_threshold(eta, N=INF, tol=1e-10):
    """Visibility below which the theta-maximised RDI bound is non-positive."""
    return _zero_crossing(lambda v: rdi_max_theta(eta, v, N)[1], 0.0, 1.0, tol)


def rdi_full_jm_visibility(eta):
    """Visibility at which the all-PVM attack needs no ideal rounds (p = 1)."""
    return 1 - eta / 2


# -- fully device-independent protocols ---------------------------------------

@dataclass(frozen=True)
class KeyRateScenario:
    kind: str = "DIQKD"
    N_A: float = 2
    N_B: float = 2
    K_B: float = 1
    binning: bool = False
    theta: float = math.pi / 4
    measurement_class: str = "binary-qubit-few"
    d: int = 2

    def __post_init__(self):
        if self.kind not in ("BB84CHSH", "RDI", "DIQKD"):
            raise ValueError(f"unknown protocol kind {self.kind!r}")
        if self.measurement_class not in ("arbitrary-d", "binary-qubit-few", "binary-qubit-all"):
            raise ValueError(f"unknown measurement class {self.measurement_class!r}")
        for name in ("N_A", "N_B", "K_B"):
            object.__setattr__(self, name, parse_count(getattr(self, name)))
        if self.K_B > self.N_B:
            raise ValueError("K_B must not exceed N_B")
        if not 0 <= self.theta <= math.pi / 2:
            raise ValueError("theta must lie in [0, pi/2]")

    @property
    def label(self):
        f = lambda n: "inf" if n == INF else str(int(n))
        return f"({f(self.N_A)},{f(self.N_B)},{f(self.K_B)})"


def _side_attack(sc, K, N, eta, v):
    if sc.measurement_class == "arbitrary-d":
        return p_prime(K, N, sc.d, eta, v)
    if sc.measurement_class == "binary-qubit-all":
        return p_tprime(eta, v)
    return best_attack_p(K, N, eta, v)


def diqkd_attack_split(sc, eta, v):
    """Weights (p_A, p_B, q, t) of Eve's four-way decomposition.

    Alice's side must be fully jointly measurable (K = N_A - 1 convention, which
    is full JM), Bob's only on the K_B key settings.
    """
    ka = INF if sc.N_A == INF else sc.N_A - 1
    pa = eta * v * _side_attack(sc, ka, sc.N_A, eta, v).p
    pb = eta * v * _side_attack(sc, sc.K_B, sc.N_B, eta, v).p
    q = (1 - eta * v) ** 2
    t = 2 * eta * v - (eta * v) ** 2 - pa - pb
    return pa, pb, q, t


def h_cond_nobin(eta, v):
    return eta * (1 - eta) + h(eta) + eta ** 2 * h((1 + v * v) / 2)


def h_cond_bin(eta, v, theta):
    c = v * math.cos(2 * theta)
    out = (1 - eta) * h(eta / 2 * (1 - c))
    # terms with a vanishing prefactor are dropped (their h-argument is 0/0)
    if 1 - c > 0:
        out += eta / 2 * (1 - c) * h(eta * (1 - (1 - v * v) / (2 * (1 - c))))
    if 1 + c > 0:
        out += eta / 2 * (1 + c) * h(eta * (1 - v * v) / (2 * (1 + c)))
    return out


def diqkd_bound(sc, eta, v, theta=None):
    """r <= h(cos^2 theta) t - H(B|A).

    Without binning theta is pi/4.  With binning theta defaults to
    ``sc.theta`` and may be overridden.
    """
    pa, pb, q, t = diqkd_attack_split(sc, eta, v)
    if sc.binning:
        th = sc.theta if theta is None else theta
        Hc = h_cond_bin(eta, v, th)
    else:
        th = math.pi / 4
        Hc = h_cond_nobin(eta, v)
    Hk = h(math.cos(th) ** 2)
    return KeyRateBound(t * Hk - Hc, {"t": t, "H_key": Hk, "H_cond": Hc, "p_A": pa, "p_B": pb, "q": q})


def diqkd_max_theta(sc, eta, v, seeds=THETA_SEEDS, tol=1e-8):
    """Nelder-Mead over theta from each seed, best result kept.

    theta is clipped to [0, pi/2] inside the objective.
    """
    def neg(x):
        th = min(max(float(x[0]), 0.0), math.pi / 2)
        return -diqkd_bound(sc, eta, v, th).value

    best = None
    for s in seeds:
        r = nelder_mead(neg, [s], tol=tol)
        if best is None or r.fun < best.fun:
            best = r
    return min(max(float(best.x[0]), 0.0), math.pi / 2), -best.fun


def diqkd_threshold(sc, axis="eta-at-v1", theta_opt=False, tol=1e-10, at=1.0):
    """Zero-crossing of the bound along eta (v fixed to ``at``) or v (eta fixed to ``at``).

    Returns None when the bound never becomes positive on [0, 1].
    """
    if axis not in ("eta-at-v1", "v-at-eta1"):
        raise ValueError(f"unknown axis {axis!r}")

    def value(x):
        eta, v = (x, at) if axis == "eta-at-v1" else (at, x)
        if theta_opt and sc.binning:
            return diqkd_max_theta(sc, eta, v)[1]
        return diqkd_bound(sc, eta, v).value

    return _zero_crossing(value, 0.0, 1.0, tol)
