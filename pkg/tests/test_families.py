import math
from fractions import Fraction

import numpy as np
import pytest
from conftest import DESK, FINITE, desk_system
from hypothesis import given, settings
from hypothesis import strategies as st

from qmarkov import (
    FAMILIES,
    Charlier,
    Hahn,
    Krawtchouk,
    Meixner,
    QHahn,
    eigendecompose,
    family_from_dict,
    hamiltonian,
)
from qmarkov.families import (
    charlier_measure,
    hahn_measure,
    krawtchouk_measure,
    krawtchouk_poly,
    meixner_measure,
    meixner_poly,
    qhahn_measure,
)


def test_krawtchouk_measure_example():
    pi = [krawtchouk_measure(x, 2, 0.5) for x in range(3)]
    np.testing.assert_allclose(pi, [0.25, 0.5, 0.25], rtol=1e-15)


def test_charlier_measure_at_zero():
    assert charlier_measure(0, 0.7) == pytest.approx(math.exp(-0.7), rel=1e-15)


def test_hahn_measure_at_N():
    N, a, b, c = 6, 1.5, 0.7, 2.0
    A, B = a + b, b + c
    expected = math.prod(A + k for k in range(N)) / math.prod(a + 2 * b + c + k for k in range(N))
    assert hahn_measure(N, N, A, B) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize(
    "measure",
    [
        lambda x: qhahn_measure(x, 9, 0.4, 0.3, 0.6),
        lambda x: hahn_measure(x, 9, 0.8, 2.5),
        lambda x: krawtchouk_measure(x, 9, 0.35),
    ],
    ids=["qHahn", "Hahn", "Krawtchouk"],
)
def test_finite_measures_normalised(measure):
    values = [measure(x) for x in range(10)]
    assert min(values) > 0
    assert math.fsum(values) == pytest.approx(1.0, abs=1e-12)


def test_infinite_measures_normalised():
    assert math.fsum(charlier_measure(x, 2.5) for x in range(80)) == pytest.approx(1, abs=1e-12)
    assert math.fsum(meixner_measure(x, 2.0, 0.4) for x in range(200)) == pytest.approx(1, abs=1e-12)


def test_measure_domain_errors():
    with pytest.raises(ValueError):
        krawtchouk_measure(3, 2, 0.5)
    with pytest.raises(ValueError):
        charlier_measure(-1, 0.5)
    with pytest.raises(ValueError):
        qhahn_measure(0, 3, 1.2, 0.3, 0.5)


def test_krawtchouk_two_state_hand_kernel():
    # a = b = 1/2, N = 1; z-sum evaluated by hand
    K = Krawtchouk(1, 0.5, 0.5).kernel_matrix()
    np.testing.assert_allclose(K, [[0.75, 0.5], [0.25, 0.5]], rtol=1e-15)
    np.testing.assert_allclose(Krawtchouk(1, 0.5, 0.5).stationary_vector(), [2 / 3, 1 / 3])


def test_krawtchouk_small_values():
    assert krawtchouk_poly(1, 1, 2, 1 / 3) == pytest.approx(-0.5, abs=1e-15)
    f = Krawtchouk(2, 0.5, 0.5)
    assert f.eigenvalue(1) == 0.25
    # p = 1/3 for a = b = 1/2
    assert f.p == pytest.approx(1 / 3)
    assert f.norm_const_sq(1) == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("tag", ["Krawtchouk", "Charlier", "Meixner"])
def test_norm_const_at_zero(tag):
    assert DESK[tag]().norm_const_sq(0) == 1.0


def test_hahn_kappa_one_vanishes():
    a = b = c = Fraction(1)
    # single-term oracle: 3F2(-1, a+2b+c, b; a+b, b+c | 1)
    oracle = 1 - (a + 2 * b + c) * b / ((a + b) * (b + c))
    assert oracle == 0
    assert abs(Hahn(6, 1.0, 1.0, 1.0).eigenvalue(1)) <= 1e-12


@pytest.mark.parametrize("tag", list(DESK))
def test_eigenvalue_at_zero_and_bounded(tag):
    f = DESK[tag]()
    assert f.eigenvalue(0) == 1.0
    kappa = [f.eigenvalue(n) for n in range(12 if f.truncated else f.N + 1)]
    assert all(abs(k) <= 1 for k in kappa)


@pytest.mark.parametrize("tag", list(DESK))
def test_polynomial_at_origin_is_one(tag):
    f = DESK[tag]()
    for n in range(min(f.window().size, 20)):
        assert f.polynomial(n, 0) == 1.0


@pytest.mark.parametrize("tag", FINITE)
def test_values_at_N(tag):
    f = DESK[tag]()
    for n in range(f.N + 1):
        series = f.polynomial(n, f.N)
        closed = f.polynomial_at_N(n)
        assert abs(series - closed) <= 1e-10 * max(1.0, abs(closed))
    ends = f.stationary_at_ends()
    assert f.stationary(0) == pytest.approx(ends[0], rel=1e-12)
    assert f.stationary(f.N) == pytest.approx(ends[1], rel=1e-12)


@pytest.mark.parametrize("tag", FINITE + ["Charlier"])
def test_orthogonality(tag):
    system = desk_system(tag)
    f = system.family
    # on a truncated window only the low levels keep their tail weight negligible
    M = 12 if f.truncated else system.size
    pi = system.chain.pi
    P = np.array([[f.polynomial(n, x) for n in range(M)] for x in range(system.size)])
    d2 = np.array([f.norm_const_sq(n) for n in range(M)])
    G = (P.T * pi) @ P * np.sqrt(np.outer(d2, d2))
    assert np.max(np.abs(G - np.eye(M))) <= 1e-10


@pytest.mark.parametrize("tag", list(DESK))
def test_kernel_positive_and_reversible(tag):
    chain = desk_system(tag).chain
    assert np.all(chain.K > 0)
    flux = chain.K * chain.pi
    assert np.max(np.abs(flux - flux.T)) <= 1e-12


@pytest.mark.parametrize("tag", FINITE)
def test_left_eigenvectors(tag):
    assert desk_system(tag).left_eigen_residuals().max() <= 1e-9


@pytest.mark.parametrize("tag", ["Krawtchouk", "Hahn"])
def test_numerical_oracle(tag):
    system = desk_system(tag)
    numeric = eigendecompose(hamiltonian(system.chain))
    np.testing.assert_allclose(np.sort(numeric.kappa), np.sort(system.spectral.kappa), atol=1e-10)


def test_charlier_window():
    system = desk_system("Charlier")
    w = system.chain.window
    assert w.kind == "truncated" and w.tail < 1e-12
    assert system.chain.column_defect <= w.budget
    assert system.residuals().max() <= 1e-11


def test_meixner_low_levels():
    # the window edge leaks; the error grows with n but the lowest levels survive
    system = desk_system("Meixner")
    numeric = np.sort(eigendecompose(hamiltonian(system.chain)).kappa)[::-1]
    errors = np.abs(numeric - system.spectral.kappa)
    assert errors[:2].max() <= 1e-9
    assert np.all(np.diff(errors[:8]) > 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 12), st.integers(0, 12), st.floats(0.3, 3.0), st.floats(0.1, 0.9))
def test_meixner_self_duality(n, x, a, b):
    assert meixner_poly(n, x, a, b) == pytest.approx(meixner_poly(x, n, a, b), rel=1e-12, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), st.data(), st.floats(0.05, 0.95))
def test_krawtchouk_self_duality_family(N, data, p):
    n = data.draw(st.integers(0, N))
    x = data.draw(st.integers(0, N))
    assert krawtchouk_poly(n, x, N, p) == pytest.approx(krawtchouk_poly(x, n, N, p), rel=1e-12, abs=1e-14)


@pytest.mark.parametrize(
    "make,match",
    [
        (lambda: QHahn(6, 0.3, 0.4, 0.2, 1.5), "0 < q < 1"),
        (lambda: QHahn(6, 1.3, 0.4, 0.2, 0.5), "0 < a < 1"),
        (lambda: QHahn(6, 0.9, 0.9, 0.9, 0.5), "abc < q"),
        (lambda: Hahn(6, -1.0, 0.7, 2.0), "a > 0"),
        (lambda: Hahn(0, 1.0, 0.7, 2.0), "N"),
        (lambda: Krawtchouk(8, 0.3, 1.6), "0 < b < 1"),
        (lambda: Charlier(1.2, 0.5), "0 < a < 1"),
        (lambda: Charlier(0.4, -0.5), "b > 0"),
        (lambda: Meixner(1.2, 0.8, 1.4), "0 < c < 1"),
        (lambda: Charlier(0.4, 0.5, eps_tail=0.0), "eps_tail"),
    ],
)
def test_invalid_parameters(make, match):
    with pytest.raises(ValueError, match=match):
        make()


def test_family_from_dict():
    f = family_from_dict({"family": "Krawtchouk", "N": 8, "a": 0.3, "b": 0.6})
    assert f == Krawtchouk(8, 0.3, 0.6)
    assert family_from_dict(f.to_dict()) == f
    with pytest.raises(ValueError, match="unknown family"):
        family_from_dict({"family": "Jacobi"})
    with pytest.raises(ValueError, match="missing"):
        family_from_dict({"family": "Hahn", "N": 3, "a": 1.0})
    with pytest.raises(ValueError, match="unknown parameters"):
        family_from_dict({"family": "Charlier", "a": 0.4, "b": 0.5, "q": 0.1})
    with pytest.raises(ValueError, match="integer"):
        family_from_dict({"family": "Krawtchouk", "N": 8.0, "a": 0.3, "b": 0.6})
    assert set(FAMILIES) == {"qHahn", "Hahn", "Krawtchouk", "Charlier", "Meixner"}
