"""Exactly solvable reversible chains built from Askey-scheme measures.

Each family is a frozen dataclass holding its parameters. The transition
kernel is a finite convolution of two orthogonality measures, and its
eigen-data (eigenvalues plus polynomial eigenvectors) is known in closed
form. :meth:`SolvableFamily.build` assembles the dense chain and
its analytic spectral data.

Two families (Charlier, Meixner) live on the semi-infinite lattice and are
represented on the smallest window whose discarded reversible mass is below
``eps_tail``.

Adding a family means subclassing :class:`SolvableFamily`, implementing the
abstract methods and registering the tag in :data:`FAMILIES`.
"""

import abc
import functools
import math
from fractions import Fraction
from dataclasses import MISSING, asdict, dataclass, fields
from typing import ClassVar, Dict, Optional, Type

import numpy as np

from .chain import EigenSystem, MarkovChain, SpectralData, VertexWindow
from .specfun import binom, hyp_terminating, poch, qbinom, qhyp_terminating, qpoch

__all__ = [
    "qhahn_measure",
    "hahn_measure",
    "krawtchouk_measure",
    "charlier_measure",
    "meixner_measure",
    "qhahn_poly",
    "hahn_poly",
    "krawtchouk_poly",
    "charlier_poly",
    "meixner_poly",
    "AnalyticEigenSystem",
    "SolvableFamily",
    "QHahn",
    "Hahn",
    "Krawtchouk",
    "Charlier",
    "Meixner",
    "FAMILIES",
    "family_from_dict",
    "MAX_WINDOW",
]

MAX_WINDOW = 4096


# --- orthogonality measures (log space) --------------------------------------


def _log_qpoch(a: float, q: float, n: int) -> float:
    out = 0.0
    qk = 1.0
    for _ in range(n):
        f = 1.0 - a * qk
        if f <= 0.0:
            raise ValueError(f"q-shifted factorial ({a}; {q})_{n} has a nonpositive factor")
        out += math.log(f)
        qk *= q
    return out


def _log_lpoch(a: float, n: int) -> float:
    # a > 0 assumed by callers
    return math.lgamma(a + n) - math.lgamma(a)


def _log_comb(N: int, x: int) -> float:
    return math.lgamma(N + 1) - math.lgamma(x + 1) - math.lgamma(N - x + 1)


def _check_vertex(x: int, N: Optional[int] = None) -> None:
    if x < 0 or (N is not None and x > N):
        upper = "inf" if N is None else N
        raise ValueError(f"vertex {x} outside 0..{upper}")


def qhahn_measure(x: int, N: int, a: float, b: float, q: float) -> float:
    """Normalised q-Hahn orthogonality measure on ``0..N``."""
    _check_vertex(x, N)
    if not 0.0 < a < 1.0:
        raise ValueError(f"q-Hahn measure needs 0 < a < 1, got a={a}")
    log = (
        _log_qpoch(q, q, N)
        - _log_qpoch(q, q, x)
        - _log_qpoch(q, q, N - x)
        + _log_qpoch(a, q, x)
        + _log_qpoch(b, q, N - x)
        + (N - x) * math.log(a)
        - _log_qpoch(a * b, q, N)
    )
    return math.exp(log)


def hahn_measure(x: int, N: int, a: float, b: float) -> float:
    """Normalised Hahn measure ``C(N,x) (a)_x (b)_{N-x} / (a+b)_N``."""
    _check_vertex(x, N)
    if not (a > 0.0 and b > 0.0):
        raise ValueError(f"Hahn measure needs a, b > 0, got a={a}, b={b}")
    log = (
        _log_comb(N, x)
        + _log_lpoch(a, x)
        + _log_lpoch(b, N - x)
        - _log_lpoch(a + b, N)
    )
    return math.exp(log)


def krawtchouk_measure(x: int, N: int, p: float) -> float:
    """Binomial measure ``C(N,x) p^x (1-p)^(N-x)``."""
    _check_vertex(x, N)
    if not 0.0 < p < 1.0:
        raise ValueError(f"Krawtchouk measure needs 0 < p < 1, got p={p}")
    return math.exp(_log_comb(N, x) + x * math.log(p) + (N - x) * math.log1p(-p))


def charlier_measure(x: int, a: float) -> float:
    """Poisson measure ``a^x e^-a / x!``."""
    _check_vertex(x)
    if not a > 0.0:
        raise ValueError(f"Charlier measure needs a > 0, got a={a}")
    return math.exp(x * math.log(a) - a - math.lgamma(x + 1))


def meixner_measure(x: int, a: float, b: float) -> float:
    """Negative binomial measure ``(a)_x b^x (1-b)^a / x!``."""
    _check_vertex(x)
    if not (a > 0.0 and 0.0 < b < 1.0):
        raise ValueError(f"Meixner measure needs a > 0, 0 < b < 1, got a={a}, b={b}")
    return math.exp(_log_lpoch(a, x) + x * math.log(b) + a * math.log1p(-b) - math.lgamma(x + 1))


# --- polynomials, normalised so that P_n(0) = 1 ---------------------------------


def qhahn_poly(n: int, x: int, N: int, a: float, b: float, q: float) -> float:
    q_ = Fraction(q)
    a_, b_ = Fraction(a), Fraction(b)
    return qhyp_terminating(
        [q_ ** (-n), a_ * b_ * q_ ** (n - 1), q_ ** (-x)], [a_, q_ ** (-N)], q_, q_
    )


def hahn_poly(n: int, x: int, N: int, a: float, b: float) -> float:
    a_, b_ = Fraction(a), Fraction(b)
    return hyp_terminating([-n, n + a_ + b_ - 1, -x], [a_, -N], 1)


def krawtchouk_poly(n: int, x: int, N: int, p: float) -> float:
    return hyp_terminating([-n, -x], [-N], 1 / Fraction(p))


def charlier_poly(n: int, x: int, a: float) -> float:
    return hyp_terminating([-n, -x], [], -1 / Fraction(a))


def meixner_poly(n: int, x: int, a: float, b: float) -> float:
    return hyp_terminating([-n, -x], [a], 1 - 1 / Fraction(b))


# --- assembled systems -----------------------------------------------------------


@dataclass(frozen=True)
class AnalyticEigenSystem(EigenSystem):
    """A solvable chain together with its closed-form spectral data."""

    family: "SolvableFamily" = None

    def left_eigen_residuals(self) -> np.ndarray:
        """``max_x |sum_y K(y,x) P_n(y) - kappa(n) P_n(x)|`` for every ``n``."""
        M = self.chain.size
        P = np.array([[self.family.polynomial(n, x) for n in range(M)] for x in range(M)])
        return np.max(np.abs(self.chain.K.T @ P - P * self.spectral.kappa), axis=0)


class SolvableFamily(abc.ABC):
    """Parameter record of one exactly solvable chain."""

    tag: ClassVar[str]
    truncated: ClassVar[bool] = False

    def validate(self) -> None:
        """Raise ``ValueError`` naming the violated range; called on construction."""

    @abc.abstractmethod
    def stationary(self, x: int) -> float:
        """Reversible distribution (base measure at the composed parameters)."""

    @abc.abstractmethod
    def kernel(self, x: int, y: int) -> float:
        """Transition probability ``y -> x``."""

    @abc.abstractmethod
    def eigenvalue(self, n: int) -> float:
        ...

    @abc.abstractmethod
    def polynomial(self, n: int, x: int) -> float:
        """Eigenpolynomial at the composed parameters, ``P_n(0) = 1``."""

    @abc.abstractmethod
    def norm_const_sq(self, n: int) -> float:
        """``d_n^2``: inverse squared norm of ``P_n`` under the reversible measure."""

    def norm_const(self, n: int) -> float:
        return math.sqrt(self.norm_const_sq(n))

    def polynomial_at_N(self, n: int) -> float:
        """Closed form of ``P_n(N)`` where the family provides one."""
        raise NotImplementedError(f"{self.tag} has no closed form at x = N")

    def window(self) -> VertexWindow:
        return VertexWindow.finite(self.N)

    def __post_init__(self):
        self.validate()

    def to_dict(self) -> Dict[str, object]:
        return {"family": self.tag, **asdict(self)}

    def stationary_vector(self) -> np.ndarray:
        return np.array([self.stationary(x) for x in range(self.window().size)])

    def kernel_matrix(self) -> np.ndarray:
        M = self.window().size
        return np.array([[self.kernel(x, y) for y in range(M)] for x in range(M)])

    def chain(self) -> MarkovChain:
        window = self.window()
        K = self.kernel_matrix()
        defect = float(np.max(np.abs(K.sum(axis=0) - 1.0)))
        return MarkovChain(
            K, self.stationary_vector(), window, column_defect=defect, label=self.tag
        )

    def spectral(self, window: Optional[VertexWindow] = None) -> SpectralData:
        M = (window or self.window()).size
        pi = np.array([self.stationary(x) for x in range(M)])
        kappa = np.array([self.eigenvalue(n) for n in range(M)])
        d = np.array([self.norm_const(n) for n in range(M)])
        P = np.array([[self.polynomial(n, x) for n in range(M)] for x in range(M)])
        vecs = np.sqrt(pi)[:, np.newaxis] * P * d[np.newaxis, :]
        return SpectralData(kappa=kappa, eigenvectors=vecs, norm_consts=d, source="analytic")

    def build(self) -> AnalyticEigenSystem:
        chain = self.chain()
        return AnalyticEigenSystem(chain, self.spectral(chain.window), family=self)


class _TruncatedFamily(SolvableFamily):
    truncated = True

    def window(self) -> VertexWindow:
        return _truncation_window(self)

    # window may grow to this multiple of the tail-mass window to bound the edge leak
    leak_growth: ClassVar[int] = 4

    def _scan_window(self) -> VertexWindow:
        # reverse cumulative sum adds the smallest terms first
        vals = np.array([self.stationary(x) for x in range(MAX_WINDOW + 64)])
        tails = np.append(np.cumsum(vals[::-1])[::-1], 0.0)
        below = np.flatnonzero(tails[1 : MAX_WINDOW + 1] < self.eps_tail)
        if below.size == 0:
            raise ValueError(f"tail mass above eps_tail={self.eps_tail} even at {MAX_WINDOW} vertices")
        m_tail = int(below[0]) + 1
        M = m_tail
        limit = min(MAX_WINDOW, self.leak_growth * m_tail)
        if self.edge_leak(m_tail) > self.eps_tail and self.edge_leak(limit) <= self.eps_tail:
            # leak shrinks with the window; bisect for the smallest admissible size
            lo, M = m_tail, limit
            while M - lo > 1:
                mid = (lo + M) // 2
                if self.edge_leak(mid) <= self.eps_tail:
                    M = mid
                else:
                    lo = mid
        # otherwise the leak never reaches the budget and a wider window buys nothing
        return VertexWindow(M, kind="truncated", eps_tail=self.eps_tail, tail=float(tails[M]))

    def edge_leak(self, M: int) -> float:
        """Probability of leaving the window ``0..M-1`` from its last vertex."""
        return abs(1.0 - math.fsum(self.kernel(x, M - 1) for x in range(M)))

    def _check_eps(self):
        if not 0.0 < self.eps_tail < 1.0:
            raise ValueError(f"eps_tail must lie in (0, 1), got {self.eps_tail}")


@dataclass(frozen=True)
class QHahn(SolvableFamily):
    """Type (i) convolution of q-Hahn measures.

    Reversible distribution is the q-Hahn measure at parameters ``(ab, c)``.
    """

    N: int
    a: float
    b: float
    c: float
    q: float
    tag: ClassVar[str] = "qHahn"

    def validate(self):
        N, a, b, c, q = self.N, self.a, self.b, self.c, self.q
        if N < 1:
            raise ValueError(f"qHahn: N must be a positive integer, got {N}")
        if not 0.0 < q < 1.0:
            raise ValueError(f"qHahn: need 0 < q < 1, got q={q}")
        if not 0.0 < a < 1.0:
            raise ValueError(f"qHahn: need 0 < a < 1, got a={a}")
        if not 0.0 < b < 1.0:
            raise ValueError(f"qHahn: need 0 < b < 1 (b is a measure base), got b={b}")
        if not c < 1.0:
            raise ValueError(f"qHahn: need c < 1, got c={c}")
        if not a * b * c < q:
            raise ValueError("qHahn: need abc < q for positive normalisation constants")
        # every q-factor entering measures, eigenvalues and norms must be positive
        try:
            for base, count in (
                (a, N), (b, N), (c, N), (a * b, N), (b * c, N), (a * b * c, N),
                (a * b * c / q, N), (a * b * c * q**N, N),
            ):
                _log_qpoch(base, q, count)
        except ValueError as exc:
            raise ValueError(f"qHahn: parameters outside the admissible region: {exc}") from None

    def stationary(self, x):
        return qhahn_measure(x, self.N, self.a * self.b, self.c, self.q)

    def kernel(self, x, y):
        _check_vertex(x, self.N)
        _check_vertex(y, self.N)
        N, a, b, c, q = self.N, self.a, self.b, self.c, self.q
        return math.fsum(
            qhahn_measure(x - z, N - z, b, c, q) * qhahn_measure(z, y, a, b, q)
            for z in range(min(x, y) + 1)
        )

    def eigenvalue(self, n):
        a, b, c, q = self.a, self.b, self.c, self.q
        return b**n * qpoch(a, q, n) * qpoch(c, q, n) / (qpoch(a * b, q, n) * qpoch(b * c, q, n))

    def polynomial(self, n, x):
        return qhahn_poly(n, x, self.N, self.a * self.b, self.c, self.q)

    def norm_const_sq(self, n):
        N, q = self.N, self.q
        A, B = self.a * self.b, self.c
        AB = A * B
        num = qpoch(A, q, n) * qpoch(AB / q, q, n)
        den = qpoch(AB * q**N, q, n) * qpoch(B, q, n) * A**n
        return qbinom(N, n, q) * num / den * (1.0 - AB * q ** (2 * n - 1)) / (1.0 - AB / q)

    def polynomial_at_N(self, n):
        A, c, q = self.a * self.b, self.c, self.q
        return (-A) ** n * q ** (n * (n - 1) / 2) * qpoch(c, q, n) / qpoch(A, q, n)

    def stationary_at_ends(self):
        N, A, c, q = self.N, self.a * self.b, self.c, self.q
        return (
            qpoch(c, q, N) * A**N / qpoch(A * c, q, N),
            qpoch(A, q, N) / qpoch(A * c, q, N),
        )


@dataclass(frozen=True)
class Hahn(SolvableFamily):
    """Type (ii) convolution of Hahn measures.

    Reversible distribution is the Hahn measure at ``(a+b, b+c)``.
    """

    N: int
    a: float
    b: float
    c: float
    tag: ClassVar[str] = "Hahn"

    def validate(self):
        if self.N < 1:
            raise ValueError(f"Hahn: N must be a positive integer, got {self.N}")
        for name in ("a", "b", "c"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"Hahn: need {name} > 0, got {name}={getattr(self, name)}")

    def stationary(self, x):
        return hahn_measure(x, self.N, self.a + self.b, self.b + self.c)

    def kernel(self, x, y):
        N, a, b, c = self.N, self.a, self.b, self.c
        _check_vertex(x, N)
        _check_vertex(y, N)
        return math.fsum(
            hahn_measure(x - z, N - y, b, c) * hahn_measure(z, y, a, b)
            for z in range(max(0, x + y - N), min(x, y) + 1)
        )

    def eigenvalue(self, n):
        a, b, c = (Fraction(v) for v in (self.a, self.b, self.c))
        return hyp_terminating([-n, n + a + 2 * b + c - 1, b], [a + b, b + c], 1)

    def polynomial(self, n, x):
        return hahn_poly(n, x, self.N, self.a + self.b, self.b + self.c)

    def norm_const_sq(self, n):
        N = self.N
        A, B = self.a + self.b, self.b + self.c
        s = A + B
        # (n+s-1)_{N+1} = (n+s-1) (n+s)_N; the n = 0 ratio is exactly 1
        ratio = 1.0 if n == 0 else (2 * n + s - 1) / (n + s - 1)
        return binom(N, n) * poch(A, n) / poch(B, n) * ratio * poch(s, N) / poch(n + s, N)

    def polynomial_at_N(self, n):
        A, B = self.a + self.b, self.b + self.c
        return (-1) ** n * poch(B, n) / poch(A, n)

    def stationary_at_ends(self):
        N, a, b, c = self.N, self.a, self.b, self.c
        return (
            poch(b + c, N) / poch(a + 2 * b + c, N),
            poch(a + b, N) / poch(a + 2 * b + c, N),
        )


@dataclass(frozen=True)
class Krawtchouk(SolvableFamily):
    """Type (iii) convolution of binomial measures.

    Reversible distribution is binomial with ``p = ab / (1 - b + ab)``.
    """

    N: int
    a: float
    b: float
    tag: ClassVar[str] = "Krawtchouk"

    def validate(self):
        if self.N < 1:
            raise ValueError(f"Krawtchouk: N must be a positive integer, got {self.N}")
        for name in ("a", "b"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"Krawtchouk: need 0 < {name} < 1, got {name}={getattr(self, name)}")

    @property
    def p(self) -> float:
        return self.a * self.b / (1.0 - self.b + self.a * self.b)

    def stationary(self, x):
        return krawtchouk_measure(x, self.N, self.p)

    def kernel(self, x, y):
        N, a, b = self.N, self.a, self.b
        _check_vertex(x, N)
        _check_vertex(y, N)
        return math.fsum(
            krawtchouk_measure(x, z, b) * krawtchouk_measure(z - y, N - y, a)
            for z in range(max(x, y), N + 1)
        )

    def eigenvalue(self, n):
        return ((1.0 - self.a) * self.b) ** n

    def polynomial(self, n, x):
        return krawtchouk_poly(n, x, self.N, self.p)

    def norm_const_sq(self, n):
        p = self.p
        return binom(self.N, n) * (p / (1.0 - p)) ** n

    def polynomial_at_N(self, n):
        return (-1) ** n * (1.0 / self.p - 1.0) ** n

    def stationary_at_ends(self):
        p = self.p
        return (1.0 - p) ** self.N, p**self.N


@dataclass(frozen=True)
class Charlier(_TruncatedFamily):
    """Poisson arrivals plus binomial thinning (type (i), Charlier).

    Reversible distribution is Poisson with mean ``p = b / (1 - a)``.
    """

    a: float
    b: float
    eps_tail: float = 1e-12
    tag: ClassVar[str] = "Charlier"

    def validate(self):
        if not 0.0 < self.a < 1.0:
            raise ValueError(f"Charlier: need 0 < a < 1 so that kappa(n) = a^n is bounded, got a={self.a}")
        if not self.b > 0.0:
            raise ValueError(f"Charlier: need b > 0, got b={self.b}")
        self._check_eps()

    @property
    def p(self) -> float:
        return self.b / (1.0 - self.a)

    def stationary(self, x):
        return charlier_measure(x, self.p)

    def kernel(self, x, y):
        _check_vertex(x)
        _check_vertex(y)
        return math.fsum(
            charlier_measure(x - z, self.b) * krawtchouk_measure(z, y, self.a)
            for z in range(min(x, y) + 1)
        )

    def eigenvalue(self, n):
        return self.a**n

    def polynomial(self, n, x):
        return charlier_poly(n, x, self.p)

    def norm_const_sq(self, n):
        return math.exp(n * math.log(self.p) - math.lgamma(n + 1))


@dataclass(frozen=True)
class Meixner(_TruncatedFamily):
    """Type (ii) convolution of a Meixner and a Hahn measure.

    Reversible distribution is the Meixner measure at ``(a+b, c)``.
    """

    a: float
    b: float
    c: float
    eps_tail: float = 1e-12
    tag: ClassVar[str] = "Meixner"

    def validate(self):
        if not self.a > 0.0:
            raise ValueError(f"Meixner: need a > 0, got a={self.a}")
        if not self.b > 0.0:
            raise ValueError(f"Meixner: need b > 0, got b={self.b}")
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"Meixner: need 0 < c < 1, got c={self.c}")
        self._check_eps()

    def stationary(self, x):
        return meixner_measure(x, self.a + self.b, self.c)

    def kernel(self, x, y):
        _check_vertex(x)
        _check_vertex(y)
        a, b, c = self.a, self.b, self.c
        return math.fsum(
            meixner_measure(x - z, b, c) * hahn_measure(z, y, a, b)
            for z in range(min(x, y) + 1)
        )

    def eigenvalue(self, n):
        return poch(self.a, n) / poch(self.a + self.b, n)

    def polynomial(self, n, x):
        return meixner_poly(n, x, self.a + self.b, self.c)

    def norm_const_sq(self, n):
        A = self.a + self.b
        return math.exp(_log_lpoch(A, n) + n * math.log(self.c) - math.lgamma(n + 1))


@functools.lru_cache(maxsize=64)
def _truncation_window(family: _TruncatedFamily) -> VertexWindow:
    return family._scan_window()


FAMILIES: Dict[str, Type[SolvableFamily]] = {
    cls.tag: cls for cls in (QHahn, Hahn, Krawtchouk, Charlier, Meixner)
}


def family_from_dict(spec: Dict[str, object]) -> SolvableFamily:
    """Instantiate a family from ``{"family": tag, <parameters>}``."""
    spec = dict(spec)
    tag = spec.pop("family", None)
    if tag not in FAMILIES:
        raise ValueError(f"unknown family {tag!r}; expected one of {sorted(FAMILIES)}")
    cls = FAMILIES[tag]
    names = {f.name for f in fields(cls)}
    unknown = set(spec) - names
    if unknown:
        raise ValueError(f"{tag}: unknown parameters {sorted(unknown)}")
    missing = {f.name for f in fields(cls) if f.default is MISSING and f.name not in spec}
    if missing:
        raise ValueError(f"{tag}: missing parameters {sorted(missing)}")
    kwargs = {}
    for name, value in spec.items():
        if name == "N":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(f"{tag}: N must be an integer, got {value!r}")
            kwargs[name] = value
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError(f"{tag}: parameter {name} must be a number, got {value!r}")
            kwargs[name] = float(value)
    return cls(**kwargs)
