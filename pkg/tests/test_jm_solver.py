import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jmqkd import _kernels
from jmqkd.bounds import parent_povm_construct, ub_binary_qubit, ub_whitenoise, v_star_N
from jmqkd.jm_solver import (FeasibilityCertificate, IndeterminateError, JmProblem, certificate_from_parent,
                             jm_feasible, jm_threshold_bracket, jm_threshold_eta, verify_certificate)

X, Y, Z = np.eye(3)


def constraint_matrix(digits):
    """Dense marginal map (N*3*4, L*4) built label by label."""
    L, n = digits.shape
    C = np.zeros((n * 3 * 4, L * 4))
    for i, lab in enumerate(digits):
        for y in range(n):
            for k in range(4):
                C[(y * 3 + lab[y]) * 4 + k, i * 4 + k] = 1
    return C


@pytest.fixture(scope="module")
def mub3():
    return JmProblem(np.eye(3), 1.0)


class TestProjections:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_affine_matches_pinv(self, n):
        rng = np.random.default_rng(n)
        p = JmProblem(0.85 * random_dirs(rng, n), 0.8, rng.uniform(-0.1, 0.1, n))
        T = p.targets(0.6)
        x = rng.normal(size=(3 ** n, 4))
        C = constraint_matrix(p.digits)
        ref = x.ravel() - np.linalg.pinv(C) @ (C @ x.ravel() - T.ravel())
        got = _kernels.project_affine_np(x, p.digits, T)
        assert np.abs(got.ravel() - ref).max() < 1e-12
        assert np.abs(_kernels.marginals_np(got, p.digits) - T).max() < 1e-12

    @settings(max_examples=50)
    @given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
    def test_cone_projection(self, row):
        x = np.array([row])
        y = _kernels.project_cone_np(x)
        assert np.linalg.norm(y[0, 1:]) <= y[0, 0] + 1e-12
        assert np.allclose(_kernels.project_cone_np(y), y)
        rng = np.random.default_rng(0)
        for _ in range(20):
            r = rng.normal(size=3)
            k = np.concatenate([[np.linalg.norm(r) + rng.uniform(0, 1)], r])
            assert np.linalg.norm(x - y) <= np.linalg.norm(x[0] - k) + 1e-12


def random_dirs(rng, n):
    m = rng.normal(size=(n, 3))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


class TestFeasibility:
    def test_single(self):
        assert jm_feasible(JmProblem([Z], 0.3), 1.0).feasible

    def test_pair(self):
        p = JmProblem([Z, X], 1.0)
        assert jm_feasible(p, 0.49).feasible
        r = jm_feasible(p, 0.51)
        assert not r.feasible and r.infeasible_above >= 0.5 - 1e-6

    def test_mub_transition(self, mub3):
        assert jm_feasible(mub3, 1 / 3 - 0.01).feasible
        assert not jm_feasible(mub3, 1 / 3 + 0.01).feasible

    def test_indeterminate(self):
        r = jm_feasible(JmProblem([Z, X], 1.0), 0.5, max_iter=50)
        assert r.status == "indeterminate"
        with pytest.raises(IndeterminateError):
            bool(r)

    def test_bad_eta(self):
        with pytest.raises(ValueError):
            jm_feasible(JmProblem([Z], 1.0), 1.2)

    def test_problem_validation(self):
        with pytest.raises(ValueError):
            JmProblem(np.ones((7, 3)) / math.sqrt(3), 1.0)
        with pytest.raises(ValueError):
            JmProblem([Z], 1.0, [0.3])


class TestThreshold:
    def test_pair(self):
        assert jm_threshold_eta(JmProblem([Z, X], 1.0)) == pytest.approx(0.5, abs=1e-4)

    def test_single(self):
        assert jm_threshold_eta(JmProblem([Z], 0.7)) == 1.0

    # thresholds from an independent interior-point SOCP solve of the same feasibility problem
    SOCP_REF = [
        (lambda: JmProblem([Z, (X + Z) / math.sqrt(2)], 0.9), 0.7019138),
        (lambda: JmProblem(np.array([0.8 * Z, 0.9 * X]), 0.9, np.array([0.2, -0.1])), 0.7830048),
        (lambda: JmProblem([Z, X], 0.9), 0.6029259),
    ]

    @pytest.mark.parametrize("make,ref", SOCP_REF)
    def test_bracket_contains_reference(self, make, ref):
        p = make()
        try:
            lo, hi = jm_threshold_bracket(p)
        except IndeterminateError as e:
            # near-tangent instances: the undecided zone is reported, never a guess
            lo, hi = e.lo, e.hi
            assert hi - lo < 5e-3
        assert lo - 1e-7 <= ref <= hi + 1e-7
        assert jm_feasible(p, lo).feasible

    def test_monotone_in_v(self):
        ts = [jm_threshold_eta(JmProblem([Z, X], v)) for v in (0.75, 0.85, 1.0)]
        assert ts[0] >= ts[1] >= ts[2]

    def test_biased_at_least_as_compatible(self):
        # a biased measurement is a mixture of its unbiased PVM with a trivial one
        unbiased = jm_threshold_eta(JmProblem([Z, X], 0.9))
        try:
            biased = jm_threshold_eta(JmProblem(np.array([Z * 0.8, X * 0.9]), 0.9, np.array([0.2, -0.1])))
        except IndeterminateError as e:
            biased = e.lo
        assert biased >= unbiased - 1e-5

    def test_monotone_in_eta(self):
        p = JmProblem([Z, (X + Z) / math.sqrt(2)], 0.9)
        for eta in (0.2, 0.5, 0.69):
            assert jm_feasible(p, eta).feasible
        for eta in (0.71, 0.8, 1.0):
            assert not jm_feasible(p, eta).feasible

    def test_sufficient_bounds_below_solver(self):
        for v in (0.8, 0.9, 1.0):
            t = jm_threshold_eta(JmProblem([Z, X], v))
            assert ub_binary_qubit(2, v).value <= t + 1e-6
            assert ub_whitenoise(2, 2, v).value <= t + 1e-6


class TestCertificates:
    def test_self_consistent(self, mub3):
        r = jm_feasible(mub3, 0.3)
        assert verify_certificate(r.certificate, mub3) < 1e-8
        assert len(r.certificate.labels()) == 27

    def test_uniform_parent(self):
        p = JmProblem(np.eye(2, 3), 0.0)
        for eta in (0.3, 2 / 3, 0.9):
            parent = np.zeros((9, 4))
            parent[:, 0] = 2 / 9
            cert = FeasibilityCertificate(parent, p.digits, 0.0, eta)
            expect = max(abs(2 / 3 - eta), abs(2 / 3 - 2 * (1 - eta)))
            assert verify_certificate(cert, p) == pytest.approx(expect, abs=1e-12)

    def test_from_signed_sum_parent(self):
        rng = np.random.default_rng(6)
        for n in (2, 3, 4):
            m = random_dirs(rng, n)
            v = v_star_N(m)
            pc = parent_povm_construct(v * m)
            p = JmProblem(m, v)
            cert = certificate_from_parent(pc, p.digits)
            assert verify_certificate(cert, p) < 1e-10
            els = cert.elements()
            assert all(np.linalg.eigvalsh(e).min() > -1e-12 for e in els)
