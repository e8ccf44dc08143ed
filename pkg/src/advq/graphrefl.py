"""The weighted bipartite graph G built from a dual solution, and U_x.

Vertex order is F_0 (domain order), then the root 0, then I = [n] x {0,1} x [m]
in lexicographic (j, b, k) order.  All matrices are dense and real.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import jsonio
from .advsdp import DualSolution, _check_domain
from .boolfn import BooleanFunction, partition
from .errors import DegenerateFunctionError, DomainError

DEFAULT_KAPPA = 1.0 / 3.0
KERNEL_TOL = 1e-9


@dataclass(frozen=True)
class VertexIndex:
    F0: tuple[str, ...]
    n: int
    m: int

    @property
    def root(self) -> int:
        return len(self.F0)

    @property
    def size(self) -> int:
        return len(self.F0) + 1 + 2 * self.n * self.m

    @property
    def I_offset(self) -> int:
        return len(self.F0) + 1

    def of_x(self, x: str) -> int:
        return self.F0.index(x)

    def of_I(self, j: int, b: int, k: int) -> int:
        """Position of (j, b, k), with j and k 1-based."""
        return self.I_offset + ((j - 1) * 2 + b) * self.m + (k - 1)

    def I_slice(self, j: int, b: int) -> slice:
        start = self.of_I(j, b, 1)
        return slice(start, start + self.m)

    def labels(self) -> list[str]:
        out = [f"x:{x}" for x in self.F0] + ["0"]
        out += [f"I:{j},{b},{k}" for j in range(1, self.n + 1) for b in (0, 1) for k in range(1, self.m + 1)]
        return out


@dataclass
class AdversaryGraph:
    f: BooleanFunction
    dual: DualSolution
    kappa: float
    index: VertexIndex
    t: np.ndarray
    A: np.ndarray
    B: np.ndarray
    adjacency: np.ndarray
    delta: np.ndarray
    spectrum: np.ndarray
    kernel_tol: float

    @property
    def W(self) -> float:
        return self.dual.W

    @property
    def kernel_dim(self) -> int:
        return int(round(np.trace(self.delta)))

    @property
    def smallest_nonzero(self) -> float:
        """Smallest |rho| above the kernel threshold; the instance's kernel gap."""
        mags = np.abs(self.spectrum)
        nz = mags[mags > self.kernel_tol]
        return float(nz.min()) if nz.size else float("inf")

    def root_vector(self) -> np.ndarray:
        e = np.zeros(self.index.size)
        e[self.index.root] = 1.0
        return e

    def to_dict(self) -> dict:
        rows, cols = np.nonzero(self.B)
        return {
            "labels": self.index.labels(),
            "W": self.W,
            "kappa": self.kappa,
            "kernel_dim": self.kernel_dim,
            "kernel_gap": self.smallest_nonzero,
            "B_G": [
                {"row": int(r), "col": int(len(self.index.F0) + c), "weight": float(self.B[r, c])}
                for r, c in zip(rows, cols)
            ],
        }

    def dumps(self) -> str:
        return jsonio.dumps(self.to_dict())


def build_graph(
    f: BooleanFunction, d: DualSolution, kappa: float = DEFAULT_KAPPA, kernel_tol: float = KERNEL_TOL
) -> AdversaryGraph:
    _check_domain(f, d)
    F0, F1 = partition(f)
    if not F0 or not F1:
        raise DegenerateFunctionError(f"constant function {f.name or 'f'}: F_0 or F_1 is empty")
    W = d.W
    n, m = d.n, d.m
    index = VertexIndex(tuple(F0), n, m)
    t = np.full(len(F0), kappa / np.sqrt(W))
    A = np.zeros((len(F0), 2 * n * m))
    for r, x in enumerate(F0):
        a = f.index(x)
        for j in range(1, n + 1):
            b = 1 - int(x[j - 1])
            s = index.I_slice(j, b)
            A[r, s.start - index.I_offset:s.stop - index.I_offset] = d.vectors[a, j - 1]
    B = np.hstack([t[:, None], A])
    N = index.size
    adjacency = np.zeros((N, N))
    adjacency[:len(F0), len(F0):] = B
    adjacency[len(F0):, :len(F0)] = B.T
    rho, vecs = np.linalg.eigh(adjacency)
    norm = np.abs(rho).max()
    thresh = kernel_tol * norm
    kernel = vecs[:, np.abs(rho) <= thresh]
    delta = kernel @ kernel.T
    return AdversaryGraph(f, d, kappa, index, t, A, B, adjacency, delta, rho, thresh)


@dataclass
class InputOperators:
    graph: AdversaryGraph
    x: str
    pi_diag: np.ndarray

    @property
    def f_x(self) -> int:
        return self.graph.f(self.x)

    @cached_property
    def Pi(self) -> np.ndarray:
        return np.diag(self.pi_diag)

    @cached_property
    def U(self) -> np.ndarray:
        N = self.graph.index.size
        return (2 * self.Pi - np.eye(N)) @ (2 * self.graph.delta - np.eye(N))

    @cached_property
    def PiBar(self) -> np.ndarray:
        """Projector on C^I keeping the vertices (j, complement of x_j, k)."""
        idx = self.graph.index
        diag = np.zeros(2 * idx.n * idx.m)
        for j in range(1, idx.n + 1):
            s = idx.I_slice(j, 1 - int(self.x[j - 1]))
            diag[s.start - idx.I_offset:s.stop - idx.I_offset] = 1.0
        return np.diag(diag)

    @cached_property
    def B_Gx(self) -> np.ndarray:
        """Rows F_0 then a copy I' of I; columns the root then I."""
        g = self.graph
        nI = self.PiBar.shape[0]
        lower = np.hstack([np.zeros((nI, 1)), self.PiBar])
        return np.vstack([g.B, lower])

    @cached_property
    def B_Gpx(self) -> np.ndarray:
        """Rows F_0 then I'; columns I."""
        return np.vstack([self.graph.A, self.PiBar])

    @cached_property
    def adjacency_Gx(self) -> np.ndarray:
        """A_{G(x)} on the vertices of G followed by the copy I'.

        With this order Delta embeds by zero padding and G is the leading
        principal subgraph.
        """
        g = self.graph
        N = g.index.size
        nI = self.PiBar.shape[0]
        out = np.zeros((N + nI, N + nI))
        out[:N, :N] = g.adjacency
        out[N:, g.index.I_offset:N] = self.PiBar
        out[g.index.I_offset:N, N:] = self.PiBar.T
        return out

    @cached_property
    def copy_map(self) -> np.ndarray:
        """Permutation-type embedding sending vertex (j, b, k) of I to its copy in I'."""
        g = self.graph
        N = g.index.size
        nI = self.PiBar.shape[0]
        T = np.zeros((N + nI, N))
        T[N + np.arange(nI), g.index.I_offset + np.arange(nI)] = 1.0
        return T


def build_input_operators(g: AdversaryGraph, x: str, pi_diag: np.ndarray | None = None) -> InputOperators:
    """Pi_x and U_x for input x; ``pi_diag`` overrides Pi_x for test harnesses."""
    if x not in g.f:
        raise DomainError(f"{x!r} is not in the domain of {g.f.name or 'f'}")
    if pi_diag is None:
        idx = g.index
        pi_diag = np.ones(idx.size)
        for j in range(1, idx.n + 1):
            pi_diag[idx.I_slice(j, 1 - int(x[j - 1]))] = 0.0
    return InputOperators(g, x, np.asarray(pi_diag, dtype=float))


def oracle_matrix(x: str) -> np.ndarray:
    """O_x on C^[n] (x) C^2: |j, a> -> |j, a xor x_j>."""
    n = len(x)
    O = np.zeros((2 * n, 2 * n))
    for j in range(n):
        for a in (0, 1):
            O[2 * j + (a ^ int(x[j])), 2 * j + a] = 1.0
    return O


def query_reflection_factors(g: AdversaryGraph, x: str):
    """Input-independent S, S' and the single-query map built from O_x.

    On the I block, (-1)^[b != x_j] = (-1)^b (-1)^(x_j).  The second factor
    is O_x acting on an ancilla held in |->, so the reflection equals
    S . <-|(O_x (x) 1_b (x) 1_m)|-> . S' with S = Z_b (x) 1 and S' = 1.
    Returns (S, query_block, S_prime), all square on C^I.
    """
    n, m = g.index.n, g.index.m
    minus = np.array([1.0, -1.0]) / np.sqrt(2)
    O = oracle_matrix(x).reshape(n, 2, n, 2)
    # compress the ancilla: phase[j, j'] = <-| O |-> block
    phase = np.einsum("a,jakb,b->jk", minus, O, minus)
    query_block = np.kron(np.kron(phase, np.eye(2)), np.eye(m))
    S = np.kron(np.kron(np.eye(n), np.diag([1.0, -1.0])), np.eye(m))
    S_prime = np.eye(2 * n * m)
    return S, query_block, S_prime


def query_oracle_check(g: AdversaryGraph, x: str, pi_diag: np.ndarray | None = None, atol: float = 1e-12) -> bool:
    """True iff 2 Pi_x - 1 factors exactly through one call to O_x."""
    ops = build_input_operators(g, x, pi_diag)
    refl = 2 * ops.pi_diag - 1
    off = g.index.I_offset
    if np.abs(refl[:off] - 1).max(initial=0.0) > atol:
        return False
    S, Q, Sp = query_reflection_factors(g, x)
    return bool(np.abs(S @ Q @ Sp - np.diag(refl[off:])).max(initial=0.0) <= atol)
