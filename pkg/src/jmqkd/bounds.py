"""Closed-form sufficient conditions for (partial) joint measurability.

Every threshold is returned as a ``BoundResult``: ``value`` is clamped to
[0, 1], ``raw`` keeps the unclamped formula value.  Thresholds on eta mean
"the device is jointly measurable for all eta <= value".
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .optim import weiszfeld
from .qop import Povm, bloch_op

MAX_SIGNED_N = 20
MAX_PARENT_N = 12


@dataclass(frozen=True)
class BoundResult:
    value: float
    raw: float
    formula: str
    valid: bool = True
    extras: dict = field(default_factory=dict, compare=False)

    def __float__(self):
        return self.value


def _bound(raw, formula, valid=True, **extras):
    value = min(max(raw, 0.0), 1.0) if not math.isnan(raw) else float("nan")
    return BoundResult(value, raw, formula, valid, extras)


def _unit(ms):
    ms = np.atleast_2d(np.asarray(ms, dtype=float))
    n = np.linalg.norm(ms, axis=1)
    if np.any(n == 0):
        raise ValueError("zero vector where a direction was expected")
    return ms / n[:, None]


def ub_loss_any(N):
    """Pure loss: any N measurements become jointly measurable at eta <= 1/N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return _bound(1.0 / N, "loss-extendibility")


def lemma4_concat(q_star, v_star, v):
    """Efficiency threshold obtained by splitting white noise v into v_star and loss.

    A channel that is extendable after a replacement with probability q_star
    at visibility v_star gives, at visibility v >= v_star,
    eta <= (1 - v_star) / ((1 - v) + (v - v_star) / q_star).
    """
    if not (0 <= v_star <= v <= 1):
        raise ValueError("need 0 <= v_star <= v <= 1")
    if not 0 < q_star <= 1:
        raise ValueError("need 0 < q_star <= 1")
    den = (1 - v) + (v - v_star) / q_star
    if den == 0:
        # v = v_star = 1: no noise to trade, only the loss part remains
        return _bound(q_star, "loss-noise-concatenation")
    return _bound((1 - v_star) / den, "loss-noise-concatenation")


def ub_whitenoise(N, d, v):
    """Loss plus white noise, arbitrary measurements in dimension d."""
    if N < 1 or d < 2:
        raise ValueError("need N >= 1 and d >= 2")
    floor = 1.0 / (N * v) if v > 0 else math.inf
    s = v * (d + 1) - 1
    if s <= 0:
        return _bound(math.inf, "whitenoise-extendibility", floor=floor)
    return _bound(d / (N * s), "whitenoise-extendibility", floor=floor)


def v_star_2(m1, m2):
    m1, m2 = _unit([m1, m2])
    return 2.0 / (np.linalg.norm(m1 + m2) + np.linalg.norm(m1 - m2))


def fermat_torricelli_points(m1, m2, m3):
    """The four vectors t_0 = m1+m2+m3 and t_k = 2 m_k - t_0."""
    m = _unit([m1, m2, m3])
    t0 = m.sum(axis=0)
    return np.vstack([t0, 2 * m - t0])


def v_star_3(m1, m2, m3):
    """Exact visibility threshold for three unbiased qubit measurements.

    4 / sum_k ||t_k - t_FT||, with t_FT the Fermat-Torricelli point of the four
    vectors t_0..t_3 (see the decision ledger for why the point set is the
    t_k and not the m_k).
    """
    t = fermat_torricelli_points(m1, m2, m3)
    tft = weiszfeld(t)
    return 4.0 / np.sqrt(((t - tft) ** 2).sum(axis=1)).sum()


def signed_sum(ms):
    """sum over bitstrings a of ||sum_k (-1)^{a_k} m_k||."""
    ms = np.atleast_2d(np.asarray(ms, dtype=float))
    if ms.shape[0] > MAX_SIGNED_N:
        raise ValueError(f"2^N enumeration capped at N={MAX_SIGNED_N}")
    return float(_kernels.signed_norms(ms).sum())


def v_star_N(ms):
    """Sufficient visibility for N unbiased qubit measurements along ``ms``."""
    m = _unit(ms)
    return 2.0 ** m.shape[0] / signed_sum(m)


@dataclass(frozen=True)
class Lemma6Check:
    jm: bool
    relaxed: bool
    total: float
    bound: float


def lemma6_jm_check(ms):
    """Test sum_a ||w_a|| <= 2^N for smeared directions ``ms`` (||m|| <= 1).

    ``relaxed`` reports the cheaper sufficient test sum_k ||m_k||^2 <= 1.
    """
    m = np.atleast_2d(np.asarray(ms, dtype=float))
    if np.any(np.linalg.norm(m, axis=1) > 1 + 1e-12):
        raise ValueError("vectors must have norm <= 1")
    total = signed_sum(m)
    bound = 2.0 ** m.shape[0]
    return Lemma6Check(bool(total <= bound * (1 + 1e-12)), bool((m * m).sum() <= 1 + 1e-12), total, bound)


def ub_binary_qubit(N, v):
    """Loss plus white noise, N binary qubit measurements."""
    if N < 2:
        raise ValueError("N must be >= 2")
    rn = math.sqrt(N)
    s = (rn + 1) * v - 1
    if s <= 0:
        return _bound(math.inf, "binary-qubit-signed-sum")
    return _bound(1.0 / (rn * s), "binary-qubit-signed-sum")


def ub_all_qubit_pvms(v):
    if not 0 <= v <= 1:
        raise ValueError("v must lie in [0, 1]")
    return _bound(2 * (1 - v), "all-qubit-pvms")


def ub_all_povms(v, d):
    if not 0 <= v <= 1:
        raise ValueError("v must lie in [0, 1]")
    return _bound((1 - v) ** (d - 1), "all-povms")


@dataclass(frozen=True)
class ParentPovmCertificate:
    parent: Povm
    response: np.ndarray
    residual: float
    mixing: float

    def simulate(self):
        """Return the simulated (M_+|y, M_-|y) pairs."""
        out = []
        for y in range(self.response.shape[1]):
            plus = sum(self.response[l, y, 0] * e for l, e in enumerate(self.parent.elements))
            minus = sum(self.response[l, y, 1] * e for l, e in enumerate(self.parent.elements))
            out.append((plus, minus))
        return out


def parent_povm_construct(ms):
    """Build the signed-sum parent POVM for smeared unbiased qubit measurements.

    Parent elements are E_{s,a} = 1/2 (p(a) I + s w_a.sigma / S) with
    w_a = sum_k (-1)^{a_k} m_k and S = sum_a ||w_a||.  Outcome b of setting y
    is b = s (-1)^{a_y}, then with probability 1 - S/2^N the outcome is
    replaced by a fair coin flip to match the target smearing.

    Raises ValueError if the construction does not reproduce the targets to
    1e-10.
    """
    m = np.atleast_2d(np.asarray(ms, dtype=float))
    n = m.shape[0]
    if n > MAX_PARENT_N:
        raise ValueError(f"parent construction capped at N={MAX_PARENT_N}")
    signs = _kernels.sign_table(n)
    w = signs @ m
    norms = np.sqrt((w * w).sum(axis=1))
    S = norms.sum()
    if S > 0:
        p = norms / S
        mu = S / 2.0 ** n
        wn = w / S
    else:
        p = np.full(2 ** n, 2.0 ** -n)
        mu = 0.0
        wn = np.zeros_like(w)
    if mu > 1 + 1e-12:
        raise ValueError("signed-sum condition fails; no parent of this form")
    mu = min(mu, 1.0)

    elements, labels = [], []
    response = np.zeros((2 ** (n + 1), n, 2))
    for a in range(2 ** n):
        for si, s in enumerate((1, -1)):
            elements.append(bloch_op(p[a], s * wn[a]))
            labels.append(("+" if s > 0 else "-", a))
            row = 2 * a + si
            for y in range(n):
                b = s * signs[a, y]
                response[row, y, 0 if b > 0 else 1] += mu
                response[row, y, :] += 0.5 * (1 - mu)
    parent = Povm(tuple(elements), tuple(labels))
    cert = ParentPovmCertificate(parent, response, 0.0, mu)
    resid = 0.0
    for y, (plus, minus) in enumerate(cert.simulate()):
        resid = max(resid,
                    np.abs(plus - bloch_op(1, m[y])).max(),
                    np.abs(minus - bloch_op(1, -m[y])).max())
    if resid >= 1e-10:
        raise ValueError(f"parent construction residual {resid:.3g}")
    return ParentPovmCertificate(parent, response, float(resid), mu)


def kjm_halving(eta):
    if not 0 <= eta <= 1:
        raise ValueError("eta must lie in [0, 1]")
    return eta / (1 + eta)


def kjm_binary_qubit(K, v):
    """Partial JM of K binary qubit settings out of any number of qubit PVMs."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if v <= 0:
        return _bound(math.inf, "partial-jm-binary-qubit")
    return _bound(1.0 / (v * (K + math.sqrt(K))), "partial-jm-binary-qubit")


def kjm_whitenoise(K, d, v):
    if K < 1 or d < 2:
        raise ValueError("need K >= 1 and d >= 2")
    s = v * (d + 1) - 1
    if s <= 0:
        return _bound(math.inf, "partial-jm-whitenoise")
    return _bound(d / ((K + 1) * s), "partial-jm-whitenoise")


def kjm_thermal(K, eps):
    if K < 1 or eps < 0:
        raise ValueError("need K >= 1 and eps >= 0")
    s = 1 - eps / 2
    if s <= 0:
        return _bound(math.inf, "partial-jm-thermal")
    return _bound(1.0 / ((K + 1) * s), "partial-jm-thermal")
