import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from subcurv.cdconst import (
    adaptive_gk,
    brute_force_extrema,
    carnot_cd_constants,
    carnot_params,
    diameter_closed_form,
    diameter_via_quadrature,
    entropy_phi,
    entropy_phi_prime,
    entropy_phi_second,
    gamma_arrays,
    geometric_constants,
    kernel_global_bound,
    symmetric_eigen,
)
from subcurv.errors import InvalidParameter, NegativeInput, NonPositiveTime, NotCarnot, NotSymmetric
from subcurv.forms import CDParams
from subcurv.structures import catalog_model

from support import random_carnot

P_DIAM = CDParams(1, Fraction(1, 2), 1, 2)


def test_eigen_small():
    w, v = symmetric_eigen([[2.0, 1.0], [1.0, 2.0]])
    assert np.allclose(w, [1.0, 3.0], atol=1e-14)
    assert np.allclose(v.T @ v, np.eye(2), atol=1e-14)


def test_eigen_tiny_off_diagonal():
    w, _ = symmetric_eigen([[1.0, 1e-300], [1e-300, 2.0]])
    assert np.array_equal(w, [1.0, 2.0])


def test_eigen_rejects_nonsymmetric():
    with pytest.raises(NotSymmetric):
        symmetric_eigen([[1.0, 2.0], [0.0, 1.0]])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_eigen_against_lapack(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    a = a + a.T
    w, v = symmetric_eigen(a)
    assert np.allclose(w, np.linalg.eigvalsh(a), atol=1e-10 * max(1.0, np.abs(a).max()))
    assert np.allclose(v @ np.diag(w) @ v.T, a, atol=1e-10 * max(1.0, np.abs(a).max()))
    assert np.all(np.diff(w) >= -1e-12)


@pytest.mark.parametrize(
    "name,args,expected",
    [
        ("heisenberg", (1,), (0.5, 1.0, True)),
        ("quaternionic_heisenberg", (), (1.0, 3.0, True)),
        ("heisenberg", (3,), (1.5, 1.0, True)),
    ],
)
def test_carnot_constants(name, args, expected):
    sc = catalog_model(name, *args)
    c = carnot_cd_constants(sc)
    assert c.rho2 == pytest.approx(expected[0], abs=1e-10)
    assert c.kappa == pytest.approx(expected[1], abs=1e-10)
    assert c.is_htype is expected[2]
    lo, hi = brute_force_extrema(sc, 20000, 1)
    # sphere sampling approaches the extrema from inside
    assert lo >= c.rho2 - 1e-12 and hi <= c.kappa + 1e-12


def test_carnot_constants_reject_non_carnot():
    with pytest.raises(NotCarnot):
        carnot_cd_constants(catalog_model("su2"))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_carnot_constants_against_lapack(seed):
    sc = random_carnot(random.Random(seed))
    J = gamma_arrays(sc)
    M = np.einsum("mij,nij->mn", J, J)
    K = np.einsum("mij,mkj->ik", J, J)
    c = carnot_cd_constants(sc)
    assert c.rho2 == pytest.approx(np.linalg.eigvalsh(M)[0] / 4, abs=1e-10)
    assert c.kappa == pytest.approx(np.linalg.eigvalsh(K)[-1], abs=1e-10)


def test_carnot_params_rationalized():
    assert carnot_params(catalog_model("heisenberg", 1)) == CDParams(0, Fraction(1, 2), 1, 2)


def test_geometric_constants_reference_values():
    g = geometric_constants(P_DIAM)
    assert g.D == 8
    assert g.alpha == pytest.approx(2 / 9, rel=1e-15)
    assert g.diameter_bound == pytest.approx(12 * math.sqrt(2) * math.pi, abs=1e-9)
    assert geometric_constants(CDParams(0, Fraction(1, 2), 1, 2)).diameter_bound is None


def test_diameter_quadrature():
    assert diameter_via_quadrature(P_DIAM) == pytest.approx(12 * math.sqrt(2) * math.pi, abs=1e-6)
    with pytest.raises(InvalidParameter):
        diameter_via_quadrature(CDParams(0, 1, 1, 2))


@settings(max_examples=20, deadline=None)
@given(
    st.floats(0.05, 10),
    st.floats(0.05, 10),
    st.floats(0, 10),
    st.floats(1, 20),
)
def test_diameter_paths_agree(rho1, rho2, kappa, d):
    p = CDParams(rho1, rho2, kappa, d)
    assert diameter_via_quadrature(p) == pytest.approx(geometric_constants(p).diameter_bound, rel=1e-9)
    assert diameter_closed_form(p) == pytest.approx(geometric_constants(p).diameter_bound, rel=1e-12)


def test_entropy_function():
    g = geometric_constants(P_DIAM)
    assert entropy_phi(0.0, P_DIAM) == 0.0
    assert entropy_phi(g.alpha * g.D / 2, P_DIAM) == pytest.approx(16 * math.log(2), rel=1e-14)
    with pytest.raises(NegativeInput):
        entropy_phi(-1.0, P_DIAM)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 50))
def test_entropy_derivatives_by_finite_differences(x):
    h = 1e-5 * x
    fd1 = (entropy_phi(x + h, P_DIAM) - entropy_phi(x - h, P_DIAM)) / (2 * h)
    fd2 = (entropy_phi_prime(x + h, P_DIAM) - entropy_phi_prime(x - h, P_DIAM)) / (2 * h)
    assert fd1 == pytest.approx(entropy_phi_prime(x, P_DIAM), rel=1e-6)
    assert fd2 == pytest.approx(entropy_phi_second(x, P_DIAM), rel=1e-6)


@pytest.mark.parametrize(
    "f,a,b",
    [(math.sin, 0.0, math.pi), (lambda x: math.exp(-x * x), -5.0, 5.0), (lambda x: math.sqrt(x), 0.0, 1.0)],
)
def test_adaptive_gk_against_quadpack(f, a, b):
    value, err = adaptive_gk(f, a, b, 1e-12)
    assert value == pytest.approx(quad(f, a, b, epsabs=1e-13)[0], abs=1e-11)
    assert err <= 1e-12


def test_kernel_global_bound():
    assert kernel_global_bound(4.5 * math.log(2), P_DIAM) == pytest.approx(16.0, rel=1e-12)
    with pytest.raises(NonPositiveTime):
        kernel_global_bound(0.0, P_DIAM)
