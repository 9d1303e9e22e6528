"""Shifted factorials, binomials and terminating (q-)hypergeometric sums.

Products of a handful of factors are evaluated in plain floats. The
terminating series are summed in decimal arithmetic, starting at
:data:`WORKING_DIGITS` significant digits and widening when the observed
cancellation eats into the margin, then rounded once. The alternating sums
behind the finite-lattice polynomials lose tens to hundreds of digits at
sizes up to N of about 64.
"""

import decimal
import math
from decimal import Decimal
from fractions import Fraction
from numbers import Real
from typing import Sequence

__all__ = [
    "poch",
    "qpoch",
    "binom",
    "qbinom",
    "termination_index",
    "qtermination_index",
    "hyp_terminating",
    "qhyp_terminating",
]

_INT_TOL = 1e-9
WORKING_DIGITS = 100
_SAFETY_DIGITS = 25
_MAX_DIGITS = 1600
_NOISE_DIGITS = 8


def _dec(v) -> Decimal:
    # exact for int/float; Fractions are divided at the working precision
    if isinstance(v, Fraction):
        return Decimal(v.numerator) / Decimal(v.denominator)
    return Decimal(v)


def poch(a: float, n: int) -> float:
    """Shifted factorial ``(a)_n = a (a+1) ... (a+n-1)``.

    >>> poch(3, 2)
    12.0
    """
    _check_count(n)
    out = 1.0
    for k in range(n):
        out *= a + k
    return out


def qpoch(a: float, q: float, n: int) -> float:
    """q-shifted factorial ``(a; q)_n = (1-a)(1-aq)...(1-aq^(n-1))``."""
    _check_count(n)
    out = 1.0
    qk = 1.0
    for _ in range(n):
        out *= 1.0 - a * qk
        qk *= q
    return out


def binom(N: int, x: int) -> float:
    """Binomial coefficient as an (exact, integer valued) float."""
    _check_range(N, x)
    return float(math.comb(N, x))


def qbinom(N: int, x: int, q: float) -> float:
    """Gaussian binomial ``(q;q)_N / ((q;q)_x (q;q)_{N-x})``."""
    _check_range(N, x)
    return qpoch(q, q, N) / (qpoch(q, q, x) * qpoch(q, q, N - x))


def termination_index(numerator: Sequence[float]) -> int:
    """Index of the last nonzero term of a terminating ``rFs`` series.

    The series stops at ``m`` when some numerator parameter equals ``-m``
    for a nonnegative integer ``m``; the smallest such ``m`` wins.
    """
    best = None
    for a in numerator:
        m = round(-a)
        if m >= 0 and abs(a + m) <= _INT_TOL:
            best = m if best is None else min(best, m)
    if best is None:
        raise ValueError(
            f"series is not terminating: no nonpositive integer among {list(numerator)}"
        )
    return best


def qtermination_index(numerator: Sequence[float], q: float) -> int:
    """Termination index of a ``r phi s`` series (a parameter equal to ``q^-m``)."""
    _check_base(q)
    best = None
    logq = math.log(q)
    for a in numerator:
        if a <= 0.0:
            continue
        m = round(-math.log(a) / logq)
        if m < 0:
            continue
        target = q ** (-m)
        if abs(a - target) <= _INT_TOL * target:
            best = m if best is None else min(best, m)
    if best is None:
        raise ValueError(
            f"q-series is not terminating: no parameter of the form q^-m among {list(numerator)}"
        )
    return best


def hyp_terminating(
    numerator: Sequence[Real], denominator: Sequence[Real], z: Real
) -> float:
    r"""Evaluate a terminating generalised hypergeometric series.

    .. math::
        {}_rF_s(a_1..a_r; b_1..b_s | z) = \sum_{n=0}^{n_{max}}
        \frac{(a_1)_n \cdots (a_r)_n}{(b_1)_n \cdots (b_s)_n} \frac{z^n}{n!}

    Parameters
    ----------
    numerator : sequence of real
        Upper parameters; at least one must be a nonpositive integer.
        ``Fraction`` inputs are accepted, so parameters built from other
        parameters (``n + a + b - 1``) can be passed without float rounding.
    denominator : sequence of real
        Lower parameters.
    z : real
        Argument.

    Returns
    -------
    float

    Raises
    ------
    ValueError
        If the series does not terminate, or a lower parameter makes a
        term divide by zero before the series ends.
    """
    n_max = termination_index(numerator)
    for b in denominator:
        m = round(-b)
        if m >= 0 and abs(b + m) <= _INT_TOL and m < n_max:
            raise ValueError(
                f"lower parameter {b} vanishes at term {m + 1} before termination at {n_max}"
            )

    def terms():
        num_d = [_dec(a) for a in numerator]
        den_d = [_dec(b) for b in denominator]
        zd = _dec(z)
        term = Decimal(1)
        yield term
        for k in range(n_max):
            for a in num_d:
                term *= a + k
            for b in den_d:
                term /= b + k
            term = term * zd / (k + 1)
            yield term

    return _adaptive_sum(terms)


def qhyp_terminating(
    numerator: Sequence[Real], denominator: Sequence[Real], q: Real, z: Real
) -> float:
    r"""Evaluate a terminating basic hypergeometric series ``r phi s``.

    Uses the convention with the extra factor
    :math:`(-1)^{(1+s-r)n} q^{(1+s-r)n(n-1)/2}` in the ``n``-th term and the
    ``(q; q)_n`` denominator.

    Raises
    ------
    ValueError
        If no upper parameter has the form ``q^-m``, or a lower q-factor
        (or ``(q;q)_n``) vanishes before termination.
    """
    n_max = qtermination_index(numerator, q)
    r, s = len(numerator), len(denominator)
    shift = 1 + s - r

    def terms():
        qd = _dec(q)
        num_d = [_dec(a) for a in numerator]
        den_d = [_dec(b) for b in denominator]
        zd = _dec(z)
        tol = Decimal(_INT_TOL)
        term = Decimal(1)
        qk = Decimal(1)
        yield term
        for k in range(n_max):
            for b in den_d:
                f = 1 - b * qk
                if abs(f) <= tol * max(Decimal(1), abs(b * qk)):
                    raise ValueError(
                        f"lower q-factor (1 - {float(b)} q^{k}) vanishes before termination at {n_max}"
                    )
                term /= f
            for a in num_d:
                term *= 1 - a * qk
            term = term * zd / (1 - qk * qd)
            if shift:
                term *= (-1) ** shift * qk**shift
            yield term
            qk *= qd

    return _adaptive_sum(terms)


def _adaptive_sum(terms) -> float:
    """Sum a finite series in decimal arithmetic, widening precision on cancellation.

    ``terms()`` yields the terms under the current decimal context. The sum
    is accepted once the digits lost to cancellation (largest term over the
    result) leave at least ``_SAFETY_DIGITS`` to spare. A sum that stays at
    rounding-noise level across two successive precisions is a true zero.
    """
    digits = WORKING_DIGITS
    was_noise = False
    while True:
        with decimal.localcontext() as ctx:
            ctx.prec = digits
            total = Decimal(0)
            biggest = Decimal(0)
            for t in terms():
                total += t
                biggest = max(biggest, abs(t))
            is_noise = abs(total) <= biggest * Decimal(10) ** (_NOISE_DIGITS - digits)
            if is_noise and was_noise:
                return 0.0
            if not is_noise and biggest / abs(total) < Decimal(10) ** (digits - _SAFETY_DIGITS):
                return float(total)
        if digits >= _MAX_DIGITS:
            raise ArithmeticError(f"series cancels beyond {_MAX_DIGITS} digits")
        was_noise = is_noise
        digits = min(2 * digits, _MAX_DIGITS)


def _check_count(n: int) -> None:
    if n < 0 or int(n) != n:
        raise ValueError(f"n must be a nonnegative integer, got {n}")


def _check_range(N: int, x: int) -> None:
    if not 0 <= x <= N:
        raise ValueError(f"x={x} outside 0..{N}")


def _check_base(q: float) -> None:
    if not 0.0 < q < 1.0:
        raise ValueError(f"base q must lie in (0, 1), got {q}")
