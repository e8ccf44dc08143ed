"""Dual general-adversary SDP: solve for witness vectors, check certificates.

The dual is solved over its Gram matrix M, indexed by pairs (x, j) with
row ``a * n + (j - 1)`` for the a-th domain element.  Minimizing
``max_x sum_j M[(x,j),(x,j)]`` is linearized with an epigraph variable W.

After the interior-point solve the vectors are polished in two exact steps:
the F_0 vectors are corrected by least squares so that every F_0 x F_1
constraint holds to rounding error, then all F_0 vectors are scaled by s and
all F_1 vectors by 1/s with s chosen to minimize the objective.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
import scipy.sparse as sp

from .boolfn import BooleanFunction, partition
from .errors import CertificateError, ConvergenceError, PSDViolationError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverTolerances:
    feas: float = 1e-8
    obj: float = 1e-4
    psd: float = 1e-9
    rank: float = 1e-9
    max_iter: int = 200


@dataclass
class DualSolution:
    """Witness vectors |v_xj> stored as an array of shape (|D|, n, m)."""

    domain: tuple[str, ...]
    vectors: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.vectors.shape[1]

    @property
    def m(self) -> int:
        return self.vectors.shape[2]

    @property
    def norms(self) -> np.ndarray:
        """sum_j ||v_xj||^2 for every x, in domain order."""
        return np.einsum("xjk,xjk->x", self.vectors, self.vectors)

    @property
    def W(self) -> float:
        return float(self.norms.max())

    def vector(self, x: str, j: int) -> np.ndarray:
        """|v_xj> with j 1-based."""
        return self.vectors[self.domain.index(x), j - 1]

    def gram(self) -> np.ndarray:
        flat = self.vectors.reshape(-1, self.m)
        return flat @ flat.T

    def to_dict(self) -> dict:
        vecs = {}
        for a, x in enumerate(self.domain):
            for j in range(self.n):
                vecs[f"{x},{j + 1}"] = [float(c) for c in self.vectors[a, j]]
        return {"n": self.n, "m": self.m, "W": self.W, "vectors": vecs}

    @classmethod
    def from_dict(cls, data: dict, f: BooleanFunction) -> "DualSolution":
        n, m = int(data["n"]), int(data["m"])
        if n != f.n:
            raise CertificateError(f"dual has n={n} but the function has n={f.n}")
        vectors = np.zeros((len(f.domain), n, m))
        for a, x in enumerate(f.domain):
            for j in range(n):
                v = data["vectors"][f"{x},{j + 1}"]
                if len(v) != m:
                    raise CertificateError(f"vector {x},{j + 1} has length {len(v)}, expected {m}")
                vectors[a, j] = v
        return cls(tuple(f.domain), vectors)


@dataclass
class PrimalCertificate:
    gamma: np.ndarray
    value: float
    norm: float
    max_filtered_norm: float
    unbounded: bool = False


def _check_domain(f: BooleanFunction, d: DualSolution):
    if tuple(d.domain) != tuple(f.domain) or d.n != f.n:
        raise CertificateError("dual solution and function disagree on the domain")


def constraint_pairs(f: BooleanFunction) -> list[tuple[int, int, list[int]]]:
    """(a, b, js) for every (x, y) in F_0 x F_1, js the 0-based differing bits."""
    F0, F1 = partition(f)
    out = []
    for x in F0:
        for y in F1:
            js = [j for j in range(f.n) if x[j] != y[j]]
            out.append((f.index(x), f.index(y), js))
    return out


def feasibility_residual(f: BooleanFunction, d: DualSolution) -> float:
    """max over F_0 x F_1 of |sum_{j: x_j != y_j} <v_xj|v_yj> - 1|."""
    _check_domain(f, d)
    worst = 0.0
    V = d.vectors
    for a, b, js in constraint_pairs(f):
        s = float(np.einsum("jk,jk->", V[a, js], V[b, js])) if js else 0.0
        worst = max(worst, abs(s - 1.0))
    return worst


def _constraint_matrix(f: BooleanFunction) -> tuple[sp.csr_matrix, sp.csr_matrix, list]:
    N = len(f.domain) * f.n
    pairs = constraint_pairs(f)
    rows, cols = [], []
    for r, (a, b, js) in enumerate(pairs):
        for j in js:
            # symmetric split so the dual multipliers are symmetric too
            rows += [r, r]
            cols += [(a * f.n + j) * N + (b * f.n + j), (b * f.n + j) * N + (a * f.n + j)]
    A = sp.csr_matrix((np.full(len(rows), 0.5), (rows, cols)), shape=(len(pairs), N * N))
    diag_rows, diag_cols = [], []
    for a in range(len(f.domain)):
        for j in range(f.n):
            diag_rows.append(a)
            diag_cols.append((a * f.n + j) * N + (a * f.n + j))
    S = sp.csr_matrix((np.ones(len(diag_rows)), (diag_rows, diag_cols)), shape=(len(f.domain), N * N))
    return A, S, pairs


def solve_dual(f: BooleanFunction, tol: SolverTolerances | None = None) -> DualSolution:
    """Minimize the dual adversary objective; return polished witness vectors."""
    tol = tol or SolverTolerances()
    if f.is_constant:
        raise CertificateError("F_0 or F_1 is empty; the dual SDP has no constraints")
    N = len(f.domain) * f.n
    A, S, pairs = _constraint_matrix(f)
    M = cp.Variable((N, N), PSD=True)
    W = cp.Variable()
    vecM = cp.vec(M, order="C")
    trace_con = S @ vecM <= W
    eq_con = A @ vecM == 1
    problem = cp.Problem(cp.Minimize(W), [trace_con, eq_con])
    opts = dict(tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11, tol_ktratio=1e-9, max_iter=tol.max_iter)
    try:
        problem.solve(solver=cp.CLARABEL, **opts)
    except cp.error.SolverError as exc:
        raise ConvergenceError(f"solver failed: {exc}") from None
    stats = problem.solver_stats
    info = {
        "status": problem.status,
        "iterations": getattr(stats, "num_iters", None),
        "solver": "CLARABEL",
        "sdp_objective": None if W.value is None else float(W.value),
    }
    if M.value is None:
        raise ConvergenceError(f"solver returned no iterate (status {problem.status})", info=info)

    gram = 0.5 * (M.value + M.value.T)
    d = extract_vectors(gram, f, tol)
    d = polish(f, d)
    residual = feasibility_residual(f, d)

    gamma = primal_from_multipliers(f, trace_con.dual_value, eq_con.dual_value, pairs)
    cert = evaluate_primal(f, gamma)
    info.update(
        feasibility_residual=residual,
        certificate_value=cert.value,
        duality_gap=d.W - cert.value,
        rank=d.m,
    )
    d.meta = info
    log.debug("solved %s: W=%.12g cert=%.12g res=%.2e m=%d", f.name, d.W, cert.value, residual, d.m)

    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise ConvergenceError(f"solver status {problem.status}", best=d, info=info)
    if residual > tol.feas:
        raise ConvergenceError(f"feasibility residual {residual:.3e} > {tol.feas:.1e}", best=d, info=info)
    if d.W - cert.value > tol.obj * d.W:
        raise ConvergenceError(
            f"duality gap {d.W - cert.value:.3e} exceeds relative tolerance {tol.obj:.1e}", best=d, info=info
        )
    return d


def extract_vectors(gram: np.ndarray, f: BooleanFunction, tol: SolverTolerances | None = None) -> DualSolution:
    """Factor a PSD Gram matrix into vectors of length m = numerical rank."""
    tol = tol or SolverTolerances()
    gram = np.asarray(gram, dtype=float)
    N = len(f.domain) * f.n
    if gram.shape != (N, N):
        raise PSDViolationError(f"Gram matrix has shape {gram.shape}, expected {(N, N)}")
    if not np.allclose(gram, gram.T, atol=1e-12):
        raise PSDViolationError("Gram matrix is not symmetric")
    evals, evecs = np.linalg.eigh(0.5 * (gram + gram.T))
    if evals[0] < -tol.psd:
        raise PSDViolationError(f"minimum eigenvalue {evals[0]:.3e} < -{tol.psd:.1e}")
    top = max(evals[-1], 0.0)
    keep = evals > tol.rank * top if top > 0 else np.zeros_like(evals, dtype=bool)
    if not keep.any():
        keep[-1] = True
    lam = np.clip(evals[keep], 0.0, None)[::-1]
    basis = evecs[:, keep][:, ::-1]
    factors = basis * np.sqrt(lam)
    # fix the sign of each column so the output does not depend on LAPACK's choice
    signs = np.sign(factors[np.argmax(np.abs(factors), axis=0), np.arange(factors.shape[1])])
    factors = factors * signs
    return DualSolution(tuple(f.domain), factors.reshape(len(f.domain), f.n, -1))


def polish(f: BooleanFunction, d: DualSolution) -> DualSolution:
    """Restore exact feasibility and rebalance F_0 against F_1."""
    V = d.vectors.copy()
    F0, F1 = partition(f)
    n, m = d.n, d.m
    for x in F0:
        a = f.index(x)
        rows = []
        for y in F1:
            b = f.index(y)
            row = np.zeros((n, m))
            for j in range(n):
                if x[j] != y[j]:
                    row[j] = V[b, j]
            rows.append(row.ravel())
        C = np.array(rows)
        r = 1.0 - C @ V[a].ravel()
        delta, *_ = np.linalg.lstsq(C, r, rcond=None)
        V[a] = (V[a].ravel() + delta).reshape(n, m)
    rebalanced = rescale(f, DualSolution(d.domain, V, dict(d.meta)))
    return rebalanced


def rescale(f: BooleanFunction, d: DualSolution, s: float | None = None) -> DualSolution:
    """Multiply F_0 vectors by s and F_1 vectors by 1/s.

    With ``s=None`` the factor minimizing max_x sum_j ||v_xj||^2 is used.
    """
    F0, F1 = partition(f)
    i0 = [f.index(x) for x in F0]
    i1 = [f.index(y) for y in F1]
    norms = d.norms
    if s is None:
        n0, n1 = norms[i0].max(), norms[i1].max()
        s = (n1 / n0) ** 0.25 if n0 > 0 and n1 > 0 else 1.0
    V = d.vectors.copy()
    V[i0] *= s
    V[i1] /= s
    return DualSolution(d.domain, V, dict(d.meta))


def filter_matrix(f: BooleanFunction, j: int) -> np.ndarray:
    """Delta_j = sum over x, y with x_j != y_j of |x><y|, j 1-based."""
    bits = np.array([int(x[j - 1]) for x in f.domain])
    return (bits[:, None] != bits[None, :]).astype(float)


def evaluate_primal(f: BooleanFunction, gamma, atol: float = 1e-12) -> PrimalCertificate:
    """||Gamma|| / max_j ||Gamma o Delta_j|| for an adversary matrix."""
    gamma = np.asarray(gamma, dtype=float)
    size = len(f.domain)
    if gamma.shape != (size, size):
        raise CertificateError(f"Gamma has shape {gamma.shape}, expected {(size, size)}")
    if not np.allclose(gamma, gamma.T, atol=atol):
        raise CertificateError("Gamma is not symmetric")
    vals = np.array(f.values)
    same = vals[:, None] == vals[None, :]
    if np.abs(gamma[same]).max(initial=0.0) > atol:
        raise CertificateError("Gamma has a nonzero entry between inputs with equal f value")
    norm = float(np.linalg.norm(gamma, 2)) if gamma.any() else 0.0
    filtered = max(
        (float(np.linalg.norm(gamma * filter_matrix(f, j), 2)) for j in range(1, f.n + 1)),
        default=0.0,
    )
    if norm == 0.0:
        return PrimalCertificate(gamma, 0.0, 0.0, filtered)
    if filtered == 0.0:
        return PrimalCertificate(gamma, float("inf"), norm, 0.0, unbounded=True)
    return PrimalCertificate(gamma, norm / filtered, norm, filtered)


def duality_gap(f: BooleanFunction, d: DualSolution, p: PrimalCertificate) -> float:
    _check_domain(f, d)
    return d.W - p.value


def primal_from_multipliers(f: BooleanFunction, trace_dual, eq_dual, pairs, floor: float = 1e-12) -> np.ndarray:
    """Adversary matrix read off the SDP multipliers.

    With weights p_x on the trace constraints and u_xy on the equalities,
    Gamma[x, y] = u_xy / sqrt(p_x p_y) satisfies ||Gamma o Delta_j|| <= 1 and
    ||Gamma|| >= sum u_xy at an optimal multiplier pair.
    """
    size = len(f.domain)
    gamma = np.zeros((size, size))
    if trace_dual is None or eq_dual is None:
        return gamma
    p = np.clip(np.asarray(trace_dual, dtype=float).ravel(), 0.0, None)
    u = np.asarray(eq_dual, dtype=float).ravel()
    root = np.sqrt(p)
    for (a, b, _), val in zip(pairs, u):
        if root[a] > floor and root[b] > floor:
            gamma[a, b] = gamma[b, a] = val / (root[a] * root[b])
    return gamma
