"""Qubit/qudit operators, POVMs and the effective no-click measurements.

Hermitian operators are plain complex numpy arrays; ``as_hermitian`` is the
single validation point.
"""
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

HERM_TOL = 1e-12
PSD_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SX, SY, SZ)

AXES = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0]),
}


def as_hermitian(a, tol=HERM_TOL):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if np.abs(a - a.conj().T).max() > tol:
        raise ValueError("matrix is not Hermitian")
    return 0.5 * (a + a.conj().T)


def bloch_op(t, r):
    """1/2 (t I + r.sigma) as a 2x2 matrix."""
    r = np.asarray(r, dtype=float)
    return 0.5 * (t * I2 + r[0] * SX + r[1] * SY + r[2] * SZ)


def bloch_coords(a):
    """Inverse of ``bloch_op``: (t, r) with a = 1/2 (t I + r.sigma)."""
    a = as_hermitian(a)
    if a.shape != (2, 2):
        raise ValueError("Bloch coordinates need a 2x2 operator")
    t = np.trace(a).real
    r = np.array([np.trace(a @ s).real for s in PAULIS])
    return t, r


@dataclass(frozen=True)
class Povm:
    elements: tuple
    labels: tuple = ()

    def __post_init__(self):
        els = tuple(as_hermitian(e) for e in self.elements)
        if not els:
            raise ValueError("a POVM needs at least one element")
        d = els[0].shape[0]
        if any(e.shape != (d, d) for e in els):
            raise ValueError("POVM elements must share one dimension")
        for k, e in enumerate(els):
            if np.linalg.eigvalsh(e).min() < -PSD_TOL:
                raise ValueError(f"element {k} is not positive semidefinite")
        if np.abs(sum(els) - np.eye(d)).max() > PSD_TOL:
            raise ValueError("elements do not sum to the identity")
        labels = tuple(self.labels) if self.labels else tuple(range(len(els)))
        if len(labels) != len(els):
            raise ValueError("one label per element required")
        object.__setattr__(self, "elements", els)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self):
        return self.elements[0].shape[0]

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, label):
        return self.elements[self.labels.index(label)]


@dataclass(frozen=True)
class BlochMeasurement:
    """Binary qubit measurement 1/2 ((1 +- bias) I +- norm * direction.sigma)."""

    direction: np.ndarray
    bias: float = 0.0
    norm: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float).reshape(3)
        nd = np.linalg.norm(d)
        if nd == 0:
            if self.norm != 0:
                raise ValueError("zero direction needs norm 0")
        else:
            d = d / nd
        if not (0 <= self.norm <= 1 - abs(self.bias) + 1e-12):
            raise ValueError(f"positivity needs 0 <= norm <= 1-|bias| (bias={self.bias}, norm={self.norm})")
        object.__setattr__(self, "direction", d)

    @classmethod
    def from_vector(cls, m, bias=0.0):
        m = np.asarray(m, dtype=float).reshape(3)
        return cls(m, bias, float(np.linalg.norm(m)))

    @property
    def vector(self):
        return self.norm * self.direction


@dataclass(frozen=True)
class NoClickCmu:
    measurements: Sequence
    eta: float
    vis: float
    dim: int = 2
    povms: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.eta <= 1:
            raise ValueError("eta must lie in [0, 1]")
        if not 0 <= self.vis <= 1:
            raise ValueError("vis must lie in [0, 1]")
        if len(self.measurements) < 1:
            raise ValueError("need at least one measurement")
        povms = []
        for m in self.measurements:
            p = bloch_to_povm(m) if isinstance(m, BlochMeasurement) else m
            if p.dim != self.dim:
                raise ValueError(f"measurement dimension {p.dim} != {self.dim}")
            povms.append(p)
        object.__setattr__(self, "povms", tuple(povms))


def bloch_to_povm(m):
    r = m.vector
    return Povm((bloch_op(1 + m.bias, r), bloch_op(1 - m.bias, -r)), ("+", "-"))


def effective_noclick_povms(cmu):
    """Effective three-outcome POVMs of a lossy, noisy measurement unit.

    Click outcome b of setting y gets eta*v*M_b + eta*(1-v)*Tr(M_b)/d * I and
    the no-click outcome gets (1 - eta) * I.
    """
    eta, v, d = cmu.eta, cmu.vis, cmu.dim
    eye = np.eye(d)
    out = []
    for p in cmu.povms:
        els = [eta * v * e + eta * (1 - v) * (np.trace(e).real / d) * eye for e in p.elements]
        els.append((1 - eta) * eye.astype(complex))
        out.append(Povm(tuple(els), tuple(p.labels) + ("nc",)))
    return out


def unbias_reduce(ms):
    """Drop biases and smearing from binary qubit measurements.

    Returns ``(directions, dropped)`` where ``dropped`` lists the indices of
    zero-norm (trivial) measurements, which any parent can simulate.
    """
    dirs, dropped = [], []
    for k, m in enumerate(ms):
        if m.norm == 0:
            dropped.append(k)
        else:
            dirs.append(m.direction.copy())
    return dirs, dropped


def parse_direction(token):
    """Parse 'x', '-z' or a comma/colon-free triple like '1:1:0' into a unit vector."""
    tok = token.strip().lower()
    sign = 1.0
    if tok.startswith("-") and tok[1:] in AXES:
        sign, tok = -1.0, tok[1:]
    if tok in AXES:
        return sign * AXES[tok]
    parts = tok.split(":")
    if len(parts) != 3:
        raise ValueError(f"cannot parse direction {token!r}")
    v = np.array([float(p) for p in parts])
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError(f"zero direction {token!r}")
    return v / n
