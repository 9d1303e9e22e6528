"""Classical and quantum time evolution in the spectral representation.

All spectral routines take an :class:`~qmarkov.chain.EigenSystem` (a chain
with complete eigen-data for its Hamiltonian). Sums over levels run in
ascending ``n``; sums over vertices in ascending ``z``.

The quantum walk is the discrete-time evolution ``U = exp(-i H)``; phases
``exp(-i E(n) l)`` are formed from ``cos``/``sin`` of the exact product
``E(n) * l`` so that large step counts do not accumulate phase drift.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .chain import EigenSystem, MarkovChain, check_distribution, degenerate_blocks

__all__ = [
    "STATE_TOL",
    "check_state",
    "classical_step",
    "expansion_coefficients",
    "classical_evolve_spectral",
    "transition_matrix_power",
    "transition_matrix",
    "phases",
    "quantum_amplitude",
    "amplitude_matrix",
    "quantum_evolve",
    "measurement_distribution",
    "long_time_average",
    "long_time_average_matrix",
    "empirical_average",
    "total_variation",
    "classical_convergence_bound",
    "EvolutionResult",
    "evolve_classical",
    "evolve_quantum",
]

STATE_TOL = 1e-10


def check_state(psi, size: Optional[int] = None, tol: float = STATE_TOL) -> np.ndarray:
    """Return ``psi`` as a complex vector after checking its unit norm."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("state must be one-dimensional")
    if size is not None and psi.shape[0] != size:
        raise ValueError(f"state has length {psi.shape[0]}, expected {size}")
    norm = float(np.sum(np.abs(psi) ** 2))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state has squared norm {norm:.17g}, not 1")
    return psi


def _int_power(values: np.ndarray, steps: int) -> np.ndarray:
    # binary exponentiation on the scalars
    if steps < 0:
        raise ValueError("number of steps must be nonnegative")
    result = np.ones_like(values)
    base = np.array(values, dtype=float)
    while steps:
        if steps & 1:
            result = result * base
        base = base * base
        steps >>= 1
    return result


def classical_step(chain: MarkovChain, p) -> np.ndarray:
    """One step of the chain: ``p'(x) = sum_y K(x, y) p(y)``."""
    tol = chain.window.tolerance(1e-12)
    p = check_distribution(p, chain.size, tol=max(tol, 1e-10))
    return chain.K @ p


def expansion_coefficients(system: EigenSystem, p0) -> np.ndarray:
    """``c_n = sum_x phi_n(x) p0(x) / phi_0(x)``; ``c_0 = 1`` for a valid ``p0``."""
    pi = system.chain.pi
    p0 = np.asarray(p0, dtype=float)
    if np.any((pi <= 0.0) & (p0 != 0.0)):
        raise ValueError("initial distribution has support where pi vanishes")
    return system.spectral.eigenvectors.T @ (p0 / system.ground)


def classical_evolve_spectral(system: EigenSystem, p0, steps: int) -> np.ndarray:
    """Distribution after ``steps`` steps from the spectral expansion.

    ``P(x; l) = phi_0(x) sum_n c_n kappa(n)^l phi_n(x)``
    """
    p0 = check_distribution(p0, system.size, tol=system.chain.window.tolerance(1e-12))
    c = expansion_coefficients(system, p0)
    weights = c * _int_power(system.spectral.kappa, steps)
    return system.ground * (system.spectral.eigenvectors @ weights)


def transition_matrix(system: EigenSystem, steps: int) -> np.ndarray:
    """The whole ``K^l`` from the spectral representation."""
    V = system.spectral.eigenvectors
    s = system.ground
    T = (V * _int_power(system.spectral.kappa, steps)) @ V.T
    return T * s[:, np.newaxis] / s[np.newaxis, :]


def transition_matrix_power(system: EigenSystem, x: int, y: int, steps: int) -> float:
    """Probability of ``y -> x`` in ``steps`` steps, i.e. ``K^l(x, y)``.

    ``phi_0(x) / phi_0(y) * sum_n kappa(n)^l phi_n(x) phi_n(y)``
    """
    _check_vertices(system, x, y)
    V = system.spectral.eigenvectors
    s = system.ground
    terms = _int_power(system.spectral.kappa, steps) * V[x] * V[y]
    return float(s[x] / s[y] * terms.sum())


def phases(system: EigenSystem, steps: int) -> np.ndarray:
    """``exp(-i E(n) l)`` for every level."""
    if steps < 0:
        raise ValueError("number of steps must be nonnegative")
    theta = system.spectral.energies * steps
    return np.cos(theta) - 1j * np.sin(theta)


def quantum_amplitude(system: EigenSystem, x: int, y: int, steps: int) -> complex:
    """``Psi(x, y; l) = <x| U^l |y> = sum_n exp(-i E(n) l) phi_n(x) phi_n(y)``."""
    _check_vertices(system, x, y)
    V = system.spectral.eigenvectors
    return complex(np.sum(phases(system, steps) * (V[x] * V[y])))


def amplitude_matrix(system: EigenSystem, steps: int) -> np.ndarray:
    """The full propagator ``U^l`` as a complex matrix."""
    V = system.spectral.eigenvectors
    return (V * phases(system, steps)) @ V.T


def quantum_evolve(system: EigenSystem, psi0, steps: int) -> np.ndarray:
    """``U^l psi0`` through the eigenbasis."""
    psi0 = check_state(psi0, system.size)
    V = system.spectral.eigenvectors
    return V @ (phases(system, steps) * (V.T @ psi0))


def measurement_distribution(system: EigenSystem, y: int, steps: int) -> np.ndarray:
    """``|Psi(x, y; l)|^2`` over all ``x`` for a walk started at ``y``."""
    _check_vertices(system, y)
    V = system.spectral.eigenvectors
    psi = V @ (phases(system, steps) * V[y])
    return psi.real**2 + psi.imag**2


def long_time_average_matrix(system: EigenSystem, tol: float = 1e-8) -> np.ndarray:
    """Cesaro limit of ``|Psi(x, y; l)|^2`` for all pairs.

    Levels whose eigenvalues agree within ``tol`` share a phase forever, so
    their contributions are summed coherently before squaring.
    """
    V = system.spectral.eigenvectors
    M = V.shape[0]
    out = np.zeros((M, M))
    for block in degenerate_blocks(system.spectral.kappa, tol):
        if len(block) == 1:
            v = V[:, block[0]]
            P = np.outer(v * v, v * v)
        else:
            B = V[:, block]
            P = (B @ B.T) ** 2
        out += P
    return out


def long_time_average(system: EigenSystem, x: int, y: int, tol: float = 1e-8) -> float:
    """``lim (1/T) sum_l |Psi(x, y; l)|^2``; symmetric in ``x`` and ``y``."""
    _check_vertices(system, x, y)
    V = system.spectral.eigenvectors
    total = 0.0
    for block in degenerate_blocks(system.spectral.kappa, tol):
        total += float(np.dot(V[x, block], V[y, block])) ** 2
    return total


def empirical_average(system: EigenSystem, x: int, y: int, T: int) -> float:
    """``(1/T) sum_{l=0}^{T} |Psi(x, y; l)|^2`` (``T + 1`` terms over ``T``)."""
    if T < 1:
        raise ValueError("T must be a positive integer")
    _check_vertices(system, x, y)
    V = system.spectral.eigenvectors
    w = V[x] * V[y]
    steps = np.arange(T + 1)
    theta = np.outer(steps, system.spectral.energies)
    re = np.cos(theta) @ w
    im = np.sin(theta) @ w
    return float(np.sum(re**2 + im**2) / T)


def total_variation(p, q) -> float:
    """Half the l1 distance."""
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


def classical_convergence_bound(system: EigenSystem, p0, steps: int) -> float:
    """Upper bound on ``||P(.; l) - pi||_1`` from the spectral expansion.

    ``sum_{n>=1} |c_n| |kappa(n)|^l sum_x |phi_0(x) phi_n(x)|``; the ground
    level is the one with ``kappa`` closest to one.
    """
    c = expansion_coefficients(system, p0)
    kappa = system.spectral.kappa
    V = system.spectral.eigenvectors
    ground = int(np.argmax(kappa))
    weights = np.abs(system.ground) @ np.abs(V)
    mask = np.arange(kappa.size) != ground
    return float(np.sum((np.abs(c) * _int_power(np.abs(kappa), steps) * weights)[mask]))


@dataclass
class EvolutionResult:
    """Per-step distributions of a classical or quantum run."""

    mode: str
    steps: List[int]
    values: List[np.ndarray]
    metadata: dict = field(default_factory=dict)

    def as_array(self) -> np.ndarray:
        return np.vstack(self.values)

    def normalisation_defect(self) -> float:
        return float(max(abs(v.sum() - 1.0) for v in self.values))


def evolve_classical(system: EigenSystem, p0, steps: int) -> EvolutionResult:
    """Classical distributions for ``l = 0..steps``."""
    values = [classical_evolve_spectral(system, p0, l) for l in range(steps + 1)]
    return EvolutionResult(
        "classical", list(range(steps + 1)), values, {"spectral_source": system.spectral.source}
    )


def evolve_quantum(system: EigenSystem, psi0, steps: int) -> EvolutionResult:
    """Measurement distributions ``|psi_l(x)|^2`` for ``l = 0..steps``."""
    psi0 = check_state(psi0, system.size)
    values = []
    for l in range(steps + 1):
        psi = quantum_evolve(system, psi0, l)
        values.append(psi.real**2 + psi.imag**2)
    return EvolutionResult(
        "quantum", list(range(steps + 1)), values, {"spectral_source": system.spectral.source}
    )


def _check_vertices(system: EigenSystem, *vertices: int) -> None:
    for v in vertices:
        if not 0 <= v < system.size:
            raise ValueError(f"vertex {v} outside 0..{system.size - 1}")
