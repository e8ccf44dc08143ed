"""Eigen-analysis of two-reflection products and numerical checks of the gap bounds.

The spectrum of U = (2 Pi - 1)(2 Delta - 1) is obtained from the two-projection
(Jordan) decomposition rather than a general eigensolver: inside range(Delta)
the principal vectors of Pi give either fixed lines or 2-D planes on which U
rotates by theta = 2 arccos sqrt(lambda).  The half-angle is computed as
atan2(||(1-Pi) v||, ||Pi v||), which keeps small phases accurate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BoundViolation, ProjectorError
from .graphrefl import AdversaryGraph, InputOperators

PHASE_TOL = 1e-9
WITNESS_TOL = 1e-8
MASS_ATOL = 1e-12


@dataclass
class JordanBlock:
    """kind is one of 'pi+delta+', 'pi-delta+', 'pi+delta-', 'pi-delta-', '2d'.

    '+' means the projector fixes the line, '-' that it annihilates it.  For
    a 2-D block ``v`` is in range(Delta) and ``vperp`` in its complement.
    """

    kind: str
    theta: float
    v: np.ndarray
    vperp: np.ndarray | None = None
    lam: float | None = None


@dataclass
class ReflectionSpectrum:
    """Eigenphases of U and the squared overlaps of a reference state."""

    blocks: list[JordanBlock]
    phases: np.ndarray
    overlaps: np.ndarray | None
    block_of: np.ndarray
    dim: int
    ref: np.ndarray | None = None

    def reconstruct(self) -> np.ndarray:
        U = np.zeros((self.dim, self.dim))
        for blk in self.blocks:
            if blk.kind == "2d":
                c, s = np.cos(blk.theta), np.sin(blk.theta)
                v, w = blk.v, blk.vperp
                U += c * (np.outer(v, v) + np.outer(w, w)) + s * (np.outer(w, v) - np.outer(v, w))
            else:
                U += np.cos(blk.theta) * np.outer(blk.v, blk.v)
        return U

    def window_mass(self, Theta: float, tol: float = PHASE_TOL) -> float:
        """Squared length of the projection of the reference onto |theta| <= Theta."""
        if self.overlaps is None:
            raise ValueError("spectrum was computed without a reference state")
        return float(self.overlaps[np.abs(self.phases) <= Theta + tol].sum())

    def evolve(self, powers) -> np.ndarray:
        """U^T |ref> for each T in ``powers``; rows are states."""
        powers = np.atleast_1d(np.asarray(powers))
        out = np.zeros((powers.size, self.dim))
        for blk in self.blocks:
            a = blk.v @ self.ref
            if blk.kind == "2d":
                b = blk.vperp @ self.ref
                c, s = np.cos(blk.theta * powers), np.sin(blk.theta * powers)
                out += np.outer(a * c - b * s, blk.v) + np.outer(a * s + b * c, blk.vperp)
            else:
                sign = 1.0 if blk.theta == 0.0 else -1.0
                out += np.outer(a * sign ** (powers % 2), blk.v)
        return out


def _check_projector(P: np.ndarray, name: str, atol: float):
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ProjectorError(f"{name} is not square")
    if np.abs(P - P.T).max() > atol or np.abs(P @ P - P).max() > atol:
        raise ProjectorError(f"{name} is not an orthogonal projector to {atol:g}")


def _range_basis(P: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(P)
    return V[:, w > 0.5]


def jordan_decompose(Pi: np.ndarray, Delta: np.ndarray, ref: np.ndarray | None = None, atol: float = 1e-10):
    """Split the space into 1-D and 2-D subspaces invariant under both projectors."""
    Pi = np.asarray(Pi, dtype=float)
    Delta = np.asarray(Delta, dtype=float)
    _check_projector(Pi, "Pi", atol)
    _check_projector(Delta, "Delta", atol)
    N = Pi.shape[0]
    eye = np.eye(N)
    blocks: list[JordanBlock] = []

    D = _range_basis(Delta)
    if D.shape[1]:
        lam, E = np.linalg.eigh(D.T @ Pi @ D)
        for k in range(E.shape[1]):
            v = D @ E[:, k]
            pv = Pi @ v
            c = np.linalg.norm(pv)
            s = np.linalg.norm(v - pv)
            if s <= atol:
                blocks.append(JordanBlock("pi+delta+", 0.0, v))
            elif c <= atol:
                blocks.append(JordanBlock("pi-delta+", np.pi, v))
            else:
                w = pv - Delta @ pv
                w /= np.linalg.norm(w)
                blocks.append(JordanBlock("2d", 2 * np.arctan2(s, c), v, w, float(lam[k])))

    # the rest of range(1 - Delta) splits into lines fixed or killed by Pi
    Q = _range_basis(eye - Delta)
    perps = np.array([b.vperp for b in blocks if b.kind == "2d"]).reshape(-1, N).T
    if Q.shape[1] > perps.shape[1]:
        rest = Q - perps @ (perps.T @ Q)
        u, sv, _ = np.linalg.svd(rest, full_matrices=False)
        R = u[:, : Q.shape[1] - perps.shape[1]]
        mu, E = np.linalg.eigh(R.T @ Pi @ R)
        if np.any((mu > atol ** 0.5) & (mu < 1 - atol ** 0.5)):
            raise ProjectorError("complement of range(Delta) does not split into Pi-invariant lines")
        for k in range(E.shape[1]):
            w = R @ E[:, k]
            if mu[k] > 0.5:
                blocks.append(JordanBlock("pi+delta-", np.pi, w))
            else:
                blocks.append(JordanBlock("pi-delta-", 0.0, w))

    phases, block_of, overlaps = [], [], []
    for i, blk in enumerate(blocks):
        if blk.kind == "2d":
            phases += [blk.theta, -blk.theta]
            block_of += [i, i]
            if ref is not None:
                half = 0.5 * ((blk.v @ ref) ** 2 + (blk.vperp @ ref) ** 2)
                overlaps += [half, half]
        else:
            phases.append(blk.theta)
            block_of.append(i)
            if ref is not None:
                overlaps.append((blk.v @ ref) ** 2)
    return ReflectionSpectrum(
        blocks,
        np.array(phases),
        None if ref is None else np.array(overlaps),
        np.array(block_of, dtype=int),
        N,
        None if ref is None else np.asarray(ref, dtype=float),
    )


def spectrum_of(ops: InputOperators) -> ReflectionSpectrum:
    """Jordan spectrum of U_x with the root |0> as reference (cached on ops)."""
    cached = ops.__dict__.get("_spectrum")
    if cached is None:
        cached = jordan_decompose(ops.Pi, ops.graph.delta, ops.graph.root_vector())
        ops.__dict__["_spectrum"] = cached
    return cached


def block_identities(spec: ReflectionSpectrum, Pi: np.ndarray, Delta: np.ndarray) -> dict:
    """Worst deviations of the per-block identities over all 2-D blocks.

    lambda: | ||Pi v||^2 - cos^2(theta/2) |, and the same against the
    eigenvalue of Delta Pi Delta; rotation: |<v|U|v> - cos theta|;
    pairing: |<0|beta> - e^{-i theta} <0|-beta>| with -beta = (2 Delta - 1) beta,
    which needs Pi |0> = |0>; it is reported as 0 when the reference is not
    fixed by Pi.
    """
    N = spec.dim
    U = (2 * Pi - np.eye(N)) @ (2 * Delta - np.eye(N))
    worst = {"lambda": 0.0, "eigenvalue": 0.0, "rotation": 0.0, "pairing": 0.0}
    pairs = spec.ref is not None and np.abs(Pi @ spec.ref - spec.ref).max() <= 1e-12
    for blk in spec.blocks:
        if blk.kind != "2d":
            continue
        half = np.cos(blk.theta / 2) ** 2
        worst["lambda"] = max(worst["lambda"], float(abs(np.linalg.norm(Pi @ blk.v) ** 2 - half)))
        worst["eigenvalue"] = max(worst["eigenvalue"], float(abs(blk.lam - half)))
        worst["rotation"] = max(worst["rotation"], float(abs(blk.v @ U @ blk.v - np.cos(blk.theta))))
        if pairs:
            beta = (blk.v - 1j * blk.vperp) / np.sqrt(2)
            minus = (2 * Delta - np.eye(N)) @ beta
            lhs = spec.ref @ beta
            rhs = np.exp(-1j * blk.theta) * (spec.ref @ minus)
            worst["pairing"] = max(worst["pairing"], float(abs(lhs - rhs)))
    return worst


@dataclass
class GapReport:
    """One row per grid point; ``direction`` says which way the bound goes."""

    side: str
    parameters: np.ndarray
    measured: np.ndarray
    bound: np.ndarray
    direction: str = "upper"
    atol: float = MASS_ATOL
    extra: dict = field(default_factory=dict)

    @property
    def passes(self) -> np.ndarray:
        if self.direction == "upper":
            return self.measured <= self.bound + self.atol
        return self.measured >= self.bound - self.atol

    @property
    def passed(self) -> bool:
        return bool(np.all(self.passes))

    def rows(self) -> list[dict]:
        return [
            {"parameter": float(p), "measured": float(m), "bound": float(b), "pass": bool(ok)}
            for p, m, b, ok in zip(self.parameters, self.measured, self.bound, self.passes)
        ]


@dataclass
class Witness:
    psi: np.ndarray
    overlap: float
    residual: float


def _require(cond: bool, invariant: str, message: str):
    if not cond:
        raise BoundViolation(invariant, message)


def witness_positive(ops: InputOperators, tol: float = WITNESS_TOL) -> Witness:
    """Zero-eigenvector of B_{G(x)} on the column vertices {0} u I, for f(x) = 1."""
    g, x = ops.graph, ops.x
    if ops.f_x != 1:
        raise ValueError(f"witness_positive needs f(x) = 1, got f({x}) = {ops.f_x}")
    idx = g.index
    psi = np.zeros(1 + 2 * idx.n * idx.m)
    psi[0] = -np.sqrt(g.W) / g.kappa
    for j in range(1, idx.n + 1):
        s = idx.I_slice(j, int(x[j - 1]))
        psi[1 + s.start - idx.I_offset:1 + s.stop - idx.I_offset] = g.dual.vector(x, j)
    residual = float(np.abs(ops.B_Gx @ psi).max())
    overlap = psi[0] ** 2 / (psi @ psi)
    _require(residual <= tol, "witness.positive.kernel", f"|B_G(x) psi| = {residual:.3e} at x={x}")
    bound = 1 / (1 + g.kappa**2)
    _require(overlap >= bound - 1e-9, "witness.positive.overlap", f"overlap {overlap:.12g} < {bound:.12g} at x={x}")
    return Witness(psi, float(overlap), residual)


def witness_negative(ops: InputOperators, tol: float = WITNESS_TOL) -> Witness:
    """Left zero-vector of B_{G'(x)} on the row vertices F_0 u I', for f(x) = 0."""
    g, x = ops.graph, ops.x
    if ops.f_x != 0:
        raise ValueError(f"witness_negative needs f(x) = 0, got f({x}) = {ops.f_x}")
    idx = g.index
    nF0 = len(idx.F0)
    psi = np.zeros(nF0 + 2 * idx.n * idx.m)
    psi[idx.of_x(x)] = -1.0
    for j in range(1, idx.n + 1):
        s = idx.I_slice(j, 1 - int(x[j - 1]))
        psi[nF0 + s.start - idx.I_offset:nF0 + s.stop - idx.I_offset] = g.dual.vector(x, j)
    residual = float(np.abs(ops.B_Gpx.T @ psi).max())
    t_pad = np.concatenate([g.t, np.zeros(2 * idx.n * idx.m)])
    overlap = (t_pad @ psi) ** 2 / (psi @ psi)
    _require(residual <= tol, "witness.negative.kernel", f"|B_G'(x)^T psi| = {residual:.3e} at x={x}")
    bound = g.kappa**2 / (g.W * (g.W + 1))
    _require(overlap >= bound - 1e-9, "witness.negative.overlap", f"overlap {overlap:.12g} < {bound:.12g} at x={x}")
    return Witness(psi, float(overlap), residual)


def _bipartite_adjacency(B: np.ndarray) -> np.ndarray:
    r, c = B.shape
    out = np.zeros((r + c, r + c))
    out[:r, r:] = B
    out[r:, :r] = B.T
    return out


def _window_masses(adjacency: np.ndarray, vertex: int, radii, kernel_tol: float) -> np.ndarray:
    rho, vecs = np.linalg.eigh(adjacency)
    weights = vecs[vertex] ** 2
    slack = kernel_tol * max(np.abs(rho).max(), 1.0)
    mags = np.abs(rho)
    return np.array([weights[mags <= r + slack].sum() for r in radii])


def verify_bipartite_gap(gprime: np.ndarray, t: np.ndarray, psi: np.ndarray, gammas, kernel_tol: float = 1e-9,
                         tol: float = WITNESS_TOL) -> GapReport:
    """Mass of the added vertex on eigenvalues |rho| <= gamma against 8 gamma^2 / delta."""
    gprime = np.asarray(gprime, dtype=float)
    resid = float(np.abs(gprime.T @ psi).max())
    if resid > tol:
        raise BoundViolation("bipartite_gap.precondition", f"|B'^T psi| = {resid:.3e}")
    delta = (t @ psi) ** 2 / (psi @ psi)
    if delta <= 0:
        raise ValueError("delta must be positive")
    B = np.hstack([np.asarray(t, dtype=float)[:, None], gprime])
    gammas = np.asarray(gammas, dtype=float)
    measured = _window_masses(_bipartite_adjacency(B), B.shape[0], gammas, kernel_tol)
    return GapReport("bipartite_gap", gammas, measured, 8 * gammas**2 / delta, extra={"delta": float(delta)})


def verify_bipartite_gap_for_input(ops: InputOperators, gammas) -> GapReport:
    w = witness_negative(ops)
    t_pad = np.concatenate([ops.graph.t, np.zeros(ops.PiBar.shape[0])])
    report = verify_bipartite_gap(ops.B_Gpx, t_pad, w.psi, gammas)
    report.extra["x"] = ops.x
    return report


def verify_effective_gap(ops: InputOperators, cs) -> GapReport:
    """Root mass on |rho(A_{G(x)})| <= c/W against 8 (1 + 1/W) c^2 / kappa^2."""
    if ops.f_x != 0:
        raise ValueError("the effective-gap bound is stated for f(x) = 0")
    g = ops.graph
    cs = np.asarray(cs, dtype=float)
    measured = _window_masses(ops.adjacency_Gx, g.index.root, cs / g.W, 1e-9)
    bound = 8 * (1 + 1 / g.W) * cs**2 / g.kappa**2
    return GapReport("effective_gap", cs, measured, bound, extra={"x": ops.x})


def transfer_identity_error(ops: InputOperators) -> float:
    """max-entry error of A_{G(x)} Delta = T (1 - Pi_x) Delta, Delta zero-padded."""
    g = ops.graph
    N = g.index.size
    pad = np.zeros((ops.adjacency_Gx.shape[0], N))
    pad[:N] = g.delta
    lhs = ops.adjacency_Gx @ pad
    rhs = ops.copy_map @ (np.eye(N) - ops.Pi) @ g.delta
    return float(np.abs(lhs - rhs).max())


def phase_gap_bound(Theta, W: float, kappa: float = 1.0 / 3.0):
    """(2 sqrt((2/kappa) Theta W) + Theta/2)^2; at kappa = 1/3 the constant is 6."""
    Theta = np.asarray(Theta, dtype=float)
    return (2 * np.sqrt((2 / kappa) * Theta * W) + Theta / 2) ** 2


def verify_phase_gap(ops: InputOperators, Thetas=None) -> GapReport:
    """Eigenvalue-one mass (f(x)=1) or the small-phase window mass (f(x)=0) of U_x."""
    g = ops.graph
    spec = spectrum_of(ops)
    if ops.f_x == 1:
        mass = spec.window_mass(0.0)
        w = witness_positive(ops)
        phi = np.zeros(g.index.size)
        phi[g.index.root:] = w.psi
        phi /= np.linalg.norm(phi)
        fixed = float(np.abs(ops.U @ phi - phi).max())
        _require(fixed <= 1e-8, "phase_gap.positive.eigenvector", f"|U phi - phi| = {fixed:.3e} at x={ops.x}")
        bound = 1 / (1 + g.kappa**2)
        return GapReport(
            "phase_gap.positive", np.array([0.0]), np.array([mass]), np.array([bound]), "lower", 1e-9,
            extra={"x": ops.x, "witness_overlap": float(phi[g.index.root] ** 2), "fixed_residual": fixed},
        )
    Thetas = default_log_grid() if Thetas is None else np.asarray(Thetas, dtype=float)
    measured = np.array([spec.window_mass(T) for T in Thetas])
    return GapReport("phase_gap.negative", Thetas, measured, phase_gap_bound(Thetas, g.W, g.kappa), extra={"x": ops.x})


def kernel_root_mass(g: AdversaryGraph) -> float:
    """||Delta |0>||^2."""
    e = g.root_vector()
    return float(e @ g.delta @ e)


def default_log_grid(lo: float = 1e-4, hi: float = 1.0, points: int = 50) -> np.ndarray:
    return np.geomspace(lo, hi, points)


def default_c_grid(points: int = 21) -> np.ndarray:
    return np.linspace(0.0, 1.0, points)
