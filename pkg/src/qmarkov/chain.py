"""Reversible Markov chains, their symmetrisation and Hamiltonian.

Conventions: ``K[x, y]`` is the probability of the transition ``y -> x``,
so columns of ``K`` sum to one and distributions are column vectors
evolved by ``p_next = K @ p``.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "VertexWindow",
    "Graph",
    "MarkovChain",
    "SpectralData",
    "ValidationReport",
    "check_distribution",
    "validate_chain",
    "simple_random_walk",
    "symmetrize",
    "hamiltonian",
    "eigendecompose",
    "spectral_reconstruct_K",
    "degenerate_blocks",
    "EigenSystem",
    "numerical_system",
]

DEFAULT_TOL = 1e-12
SYMMETRY_TOL = 1e-10
DEGENERACY_TOL = 1e-8


@dataclass(frozen=True)
class VertexWindow:
    """Finite set of vertices ``0..size-1`` actually represented.

    ``tail`` is the reversible mass discarded beyond the window; it is zero
    for genuinely finite chains (``kind == "finite"``, ``size == N + 1``).
    """

    size: int
    kind: str = "finite"
    eps_tail: float = 0.0
    tail: float = 0.0

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("window must contain at least one vertex")
        if self.kind not in ("finite", "truncated"):
            raise ValueError(f"unknown window kind {self.kind!r}")
        if self.kind == "truncated" and not self.tail < self.eps_tail:
            raise ValueError(
                f"discarded tail mass {self.tail:.3e} is not below eps_tail={self.eps_tail:.3e}"
            )

    @classmethod
    def finite(cls, N: int) -> "VertexWindow":
        return cls(size=N + 1)

    @property
    def budget(self) -> float:
        """Extra tolerance granted to a truncated chain (``10 * eps_tail``)."""
        return 10.0 * self.eps_tail if self.kind == "truncated" else 0.0

    def tolerance(self, tol: float) -> float:
        return max(tol, self.budget)


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..n_vertices-1``."""

    n_vertices: int
    edges: Tuple[Tuple[int, int], ...]

    def __init__(self, n_vertices: int, edges: Iterable[Sequence[int]]):
        seen = set()
        norm = []
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n_vertices and 0 <= v < n_vertices):
                raise ValueError(f"edge ({u}, {v}) outside 0..{n_vertices - 1}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            norm.append(key)
        object.__setattr__(self, "n_vertices", int(n_vertices))
        object.__setattr__(self, "edges", tuple(norm))

    @classmethod
    def from_edges(cls, edges: Iterable[Sequence[int]]) -> "Graph":
        edges = [tuple(e) for e in edges]
        if not edges:
            raise ValueError("graph has no edges")
        n = 1 + max(max(u, v) for u, v in edges)
        return cls(n, edges)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def degree(self) -> np.ndarray:
        d = np.zeros(self.n_vertices, dtype=int)
        for u, v in self.edges:
            d[u] += 1
            d[v] += 1
        return d

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n_vertices, self.n_vertices))
        for u, v in self.edges:
            A[u, v] = A[v, u] = 1.0
        return A


@dataclass(frozen=True)
class MarkovChain:
    """Column-stochastic kernel ``K`` with its reversible distribution ``pi``."""

    K: np.ndarray
    pi: np.ndarray
    window: VertexWindow
    column_defect: float = 0.0
    label: str = "chain"

    def __post_init__(self):
        K = np.array(self.K, dtype=float)
        pi = np.array(self.pi, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError(f"K must be square, got shape {K.shape}")
        if pi.shape != (K.shape[0],):
            raise ValueError(f"pi has shape {pi.shape}, expected ({K.shape[0]},)")
        if self.window.size != K.shape[0]:
            raise ValueError("window size does not match K")
        K.setflags(write=False)
        pi.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "pi", pi)

    @classmethod
    def from_matrix(cls, K, pi, label: str = "matrix") -> "MarkovChain":
        K = np.asarray(K, dtype=float)
        defect = float(np.max(np.abs(K.sum(axis=0) - 1.0))) if K.size else 0.0
        return cls(K, pi, VertexWindow(size=K.shape[0]), column_defect=defect, label=label)

    @property
    def size(self) -> int:
        return self.K.shape[0]

    @property
    def tolerance_budget(self) -> float:
        return self.window.budget


@dataclass(frozen=True)
class SpectralData:
    """Eigen-data of a Hamiltonian, ordered by ascending energy.

    Columns of ``eigenvectors`` are the orthonormal vectors; ``norm_consts``
    holds ``d_n`` (all ones for numerical decompositions).
    """

    kappa: np.ndarray
    eigenvectors: np.ndarray
    norm_consts: np.ndarray
    source: str = "numerical"
    energies: np.ndarray = field(init=False)

    def __post_init__(self):
        kappa = np.asarray(self.kappa, dtype=float)
        vecs = np.asarray(self.eigenvectors, dtype=float)
        if vecs.ndim != 2 or vecs.shape[1] != kappa.shape[0]:
            raise ValueError("eigenvectors must have one column per eigenvalue")
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "eigenvectors", vecs)
        object.__setattr__(self, "norm_consts", np.asarray(self.norm_consts, dtype=float))
        object.__setattr__(self, "energies", 1.0 - kappa)

    @property
    def size(self) -> int:
        return self.kappa.shape[0]

    def orthonormality_defect(self) -> float:
        V = self.eigenvectors
        return float(np.max(np.abs(V.T @ V - np.eye(V.shape[1]))))

    def completeness_defect(self) -> float:
        V = self.eigenvectors
        return float(np.max(np.abs(V @ V.T - np.eye(V.shape[0]))))

    def residual(self, H: np.ndarray) -> np.ndarray:
        """Per-level ``max_x |(H phi_n)(x) - E(n) phi_n(x)|``."""
        V = self.eigenvectors
        return np.max(np.abs(H @ V - V * self.energies), axis=0)


@dataclass(frozen=True)
class ValidationReport:
    negativity: float
    column_defect: float
    reversibility_defect: float
    normalisation_defect: float
    min_pi: float
    connected: bool
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.connected
            and self.min_pi > 0.0
            and self.negativity <= self.tol
            and self.column_defect <= self.tol
            and self.reversibility_defect <= self.tol
            and self.normalisation_defect <= self.tol
        )

    def lines(self):
        yield f"negativity            {self.negativity:.3e}"
        yield f"column_sum_defect     {self.column_defect:.3e}"
        yield f"reversibility_defect  {self.reversibility_defect:.3e}"
        yield f"normalisation_defect  {self.normalisation_defect:.3e}"
        yield f"min_pi                {self.min_pi:.3e}"
        yield f"connected             {self.connected}"
        yield f"tolerance             {self.tol:.3e}"
        yield f"result                {'PASS' if self.passed else 'FAIL'}"


def check_distribution(p, size: Optional[int] = None, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Return ``p`` as a float array after checking it is a probability vector."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("distribution must be one-dimensional")
    if size is not None and p.shape[0] != size:
        raise ValueError(f"distribution has length {p.shape[0]}, expected {size}")
    if np.any(p < -tol):
        raise ValueError("distribution has negative entries")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"distribution sums to {p.sum():.17g}, not 1")
    return p


def _connected(support: np.ndarray) -> bool:
    n = support.shape[0]
    if n == 0:
        return False
    # chain is reversible so reachability along the symmetrised support suffices
    adj = support | support.T
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        y = queue.popleft()
        for x in np.flatnonzero(adj[:, y] & ~seen):
            seen[x] = True
            queue.append(x)
    return bool(seen.all())


def validate_chain(K, pi, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Measure how far ``(K, pi)`` is from a connected reversible chain.

    Parameters
    ----------
    K : array_like, shape (M, M)
        Kernel, ``K[x, y]`` = probability of ``y -> x``.
    pi : array_like, shape (M,)
        Candidate reversible distribution.
    tol : float
        Every defect must be at most ``tol`` for the report to pass.

    Returns
    -------
    ValidationReport
    """
    K = np.asarray(K, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"K must be square, got shape {K.shape}")
    if pi.shape != (K.shape[0],):
        raise ValueError(f"pi has shape {pi.shape}, expected ({K.shape[0]},)")
    flux = K * pi[np.newaxis, :]
    return ValidationReport(
        negativity=float(max(0.0, -K.min())),
        column_defect=float(np.max(np.abs(K.sum(axis=0) - 1.0))),
        reversibility_defect=float(np.max(np.abs(flux - flux.T))),
        normalisation_defect=float(abs(pi.sum() - 1.0)),
        min_pi=float(pi.min()),
        connected=_connected(K > 0.0),
        tol=tol,
    )


def simple_random_walk(g: Graph) -> MarkovChain:
    """Simple random walk: hop to a uniformly chosen neighbour.

    ``K[x, y] = 1/d(y)`` on edges and ``pi(x) = d(x) / 2m``.
    """
    d = g.degree
    if g.m == 0 or np.any(d == 0):
        raise ValueError("graph has an isolated vertex")
    A = g.adjacency()
    if not _connected(A > 0):
        raise ValueError("graph is not connected")
    K = A / d[np.newaxis, :]
    pi = d / (2.0 * g.m)
    return MarkovChain(K, pi, VertexWindow(size=g.n_vertices), label="graph")


def symmetrize(chain: MarkovChain) -> np.ndarray:
    """Similarity transform ``T = Phi^-1 K Phi`` with ``Phi = diag(sqrt(pi))``."""
    pi = chain.pi
    if np.any(pi <= 0.0):
        raise ValueError("reversible distribution must be strictly positive")
    s = np.sqrt(pi)
    T = chain.K * s[np.newaxis, :] / s[:, np.newaxis]
    return T


def hamiltonian(chain: MarkovChain) -> np.ndarray:
    """Quantum Hamiltonian ``H = 1 - T``; real symmetric and positive semi-definite."""
    T = symmetrize(chain)
    return np.eye(T.shape[0]) - T


def eigendecompose(H, tol: float = SYMMETRY_TOL) -> SpectralData:
    """Full orthonormal eigen-decomposition of a real symmetric matrix.

    Energies come out ascending (so ``kappa`` descends). Each eigenvector is
    signed so that its largest-magnitude entry (first one on ties) is
    positive.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("H must be square")
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    if np.max(np.abs(H - H.T), initial=0.0) > tol * scale:
        raise ValueError("H is not symmetric")
    energies, vecs = np.linalg.eigh(0.5 * (H + H.T))
    order = np.argsort(energies, kind="stable")
    energies, vecs = energies[order], vecs[:, order]
    mag = np.abs(vecs)
    idx = np.argmax(mag >= mag.max(axis=0) * (1 - 1e-12), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    vecs = vecs * signs
    return SpectralData(
        kappa=1.0 - energies,
        eigenvectors=vecs,
        norm_consts=np.ones_like(energies),
        source="numerical",
    )


def spectral_reconstruct_K(spec: SpectralData, pi) -> np.ndarray:
    """Rebuild ``K`` from its spectral representation.

    ``K(x, y) = sqrt(pi(x)/pi(y)) * sum_n kappa(n) phi_n(x) phi_n(y)``
    """
    pi = np.asarray(pi, dtype=float)
    if np.any(pi <= 0.0):
        raise ValueError("reversible distribution must be strictly positive")
    V = spec.eigenvectors
    s = np.sqrt(pi)
    T = (V * spec.kappa) @ V.T
    return T * s[:, np.newaxis] / s[np.newaxis, :]


def degenerate_blocks(kappa, tol: float = DEGENERACY_TOL, relative: bool = False):
    """Group level indices whose eigenvalues agree within ``tol``.

    With ``relative=True`` two levels tie only when they differ by at most
    ``tol * max(|k1|, |k2|)``, so a geometric tail of tiny eigenvalues is not
    lumped together. ``kappa`` need not be sorted; blocks are returned as
    lists of indices in ascending order of their first member.
    """
    kappa = np.asarray(kappa, dtype=float)
    order = np.argsort(-kappa, kind="stable")
    blocks = []
    current = [int(order[0])] if kappa.size else []
    for i in order[1:]:
        prev = kappa[current[-1]]
        limit = tol * max(abs(prev), abs(kappa[i])) if relative else tol
        if abs(prev - kappa[i]) <= limit if relative else abs(prev - kappa[i]) < limit:
            current.append(int(i))
        else:
            blocks.append(sorted(current))
            current = [int(i)]
    if current:
        blocks.append(sorted(current))
    return sorted(blocks, key=lambda b: b[0])


@dataclass(frozen=True)
class EigenSystem:
    """A chain paired with a complete set of spectral data for its Hamiltonian."""

    chain: MarkovChain
    spectral: SpectralData

    @property
    def size(self) -> int:
        return self.chain.size

    @property
    def ground(self) -> np.ndarray:
        """``sqrt(pi)``, the zero-energy eigenvector."""
        return np.sqrt(self.chain.pi)

    def hamiltonian(self) -> np.ndarray:
        return hamiltonian(self.chain)

    def residuals(self) -> np.ndarray:
        """``max_x |(H phi_n - E(n) phi_n)(x)|`` for every level ``n``."""
        return self.spectral.residual(self.hamiltonian())


def numerical_system(chain: MarkovChain) -> EigenSystem:
    """Pair ``chain`` with the numerical decomposition of its Hamiltonian."""
    return EigenSystem(chain, eigendecompose(hamiltonian(chain)))
