import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmarkov.specfun import (
    binom,
    hyp_terminating,
    poch,
    qbinom,
    qhyp_terminating,
    qpoch,
    qtermination_index,
    termination_index,
)

reals = st.floats(-20, 20, allow_nan=False)


def test_poch_examples():
    assert poch(7.3, 0) == 1.0
    assert poch(3, 2) == 12.0
    assert poch(1, 5) == 120.0


def test_qpoch_examples():
    assert qpoch(0.7, 0.3, 0) == 1.0
    assert qpoch(0.7, 0.3, 1) == pytest.approx(0.3)
    assert qpoch(2, 0.5, 2) == 0.0


def test_binomials():
    assert binom(4, 2) == 6.0
    assert qbinom(2, 1, 0.5) == pytest.approx(1.5, rel=1e-15)
    assert qbinom(9, 0, 0.3) == 1.0
    with pytest.raises(ValueError):
        binom(3, 4)
    with pytest.raises(ValueError):
        qbinom(3, -1, 0.5)


def test_negative_count_rejected():
    with pytest.raises(ValueError):
        poch(1.0, -1)
    with pytest.raises(ValueError):
        qpoch(0.5, 0.5, 1.5)


@given(reals, st.integers(0, 60))
def test_poch_recurrence(a, n):
    assert poch(a, n + 1) == pytest.approx(poch(a, n) * (a + n), rel=1e-12, abs=1e-300)


@given(st.floats(-3, 3), st.floats(0.01, 0.99), st.integers(0, 60))
def test_qpoch_recurrence(a, q, n):
    lhs = qpoch(a, q, n + 1)
    rhs = qpoch(a, q, n) * (1 - a * q**n)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("N", [1, 4, 9, 15])
def test_qbinom_classical_limit(N):
    q = 1 - 1e-6
    for x in range(N + 1):
        assert qbinom(N, x, q) == pytest.approx(binom(N, x), rel=1e-4)


def test_hyp_examples():
    assert hyp_terminating([-1, -1], [-2], 3) == pytest.approx(-0.5, abs=1e-15)
    assert hyp_terminating([-4, 2.5], [1.5], 0) == 1.0
    assert hyp_terminating([0, 3.1, 2.2], [1.7, 0.4], 5.0) == 1.0


def test_hyp_matches_direct_sum():
    a, b, c, z = -5, 2.25, 0.75, -1.3
    direct = sum(poch(a, k) * poch(b, k) / poch(c, k) * z**k / math.factorial(k) for k in range(6))
    assert hyp_terminating([a, b], [c], z) == pytest.approx(direct, rel=1e-13)


def test_hyp_errors():
    with pytest.raises(ValueError, match="not terminating"):
        hyp_terminating([0.5, 1.5], [2.0], 0.3)
    with pytest.raises(ValueError, match="vanishes"):
        hyp_terminating([-4, 1.0], [-2], 1.0)


def test_termination_index():
    assert termination_index([1.5, -3, -7]) == 3
    assert termination_index([-2 + 1e-12]) == 2
    assert qtermination_index([0.5**-4, 7.0], 0.5) == 4


def test_qhyp_examples():
    q = 0.5
    assert qhyp_terminating([q**-3, 0.2], [0.4], q, 0.0) == 1.0
    assert qhyp_terminating([1.0, 0.3, 0.7], [0.2, q**-4], q, q) == 1.0


def test_qhyp_two_term_sum():
    # 3phi2(q^-1, ab, q^-1; a, q^-N | q; q): only k = 0, 1 survive
    a, b, q, N = 0.3, 0.4, 0.5, 3
    num = [1 / q, a * b, 1 / q]
    den = [a, q**-N]
    k1 = (1 - 1 / q) * (1 - a * b) * (1 - 1 / q) / ((1 - a) * (1 - q**-N)) * q / (1 - q)
    assert qhyp_terminating(num, den, q, q) == pytest.approx(1 + k1, rel=1e-14)


def test_qhyp_extra_factor():
    # r = 1, s = 1: shift 1 brings (-1)^k q^{k(k-1)/2}
    q, z, b = 0.6, 0.8, 0.25
    a = q**-3
    direct = sum(
        qpoch(a, q, k) / qpoch(b, q, k) / qpoch(q, q, k) * (-1) ** k * q ** (k * (k - 1) / 2) * z**k
        for k in range(4)
    )
    assert qhyp_terminating([a], [b], q, z) == pytest.approx(direct, rel=1e-13)


def test_qhyp_errors():
    with pytest.raises(ValueError):
        qhyp_terminating([0.3], [0.2], 1.2, 0.5)
    with pytest.raises(ValueError, match="vanishes"):
        qhyp_terminating([0.5**-3], [0.5**-1], 0.5, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10), st.floats(0.05, 0.95), st.data())
def test_krawtchouk_self_duality(N, p, data):
    n = data.draw(st.integers(0, N))
    x = data.draw(st.integers(0, N))
    lhs = hyp_terminating([-n, -x], [-N], 1 / p)
    rhs = hyp_terminating([-x, -n], [-N], 1 / p)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)
