"""Closed-form adversary matrices and dual points for small standard functions.

These are regression oracles for the solver: each pair (Gamma, vectors)
sandwiches ADV+-(f) because the certificate value equals the dual objective.

  OR_n / AND_n   star around 0^n (1^n); value sqrt(n)
  PARITY_n       hypercube adjacency;   value n
  MAJ_3          weight-1 / weight-2 edges of the cube; value 2
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import boolfn
from .advsdp import DualSolution
from .boolfn import BooleanFunction


@dataclass
class Certificate:
    f: BooleanFunction
    gamma: np.ndarray
    dual: DualSolution
    value: float


def _hamming_one(f: BooleanFunction, keep) -> np.ndarray:
    size = len(f.domain)
    gamma = np.zeros((size, size))
    for a, x in enumerate(f.domain):
        for b, y in enumerate(f.domain):
            if f(x) != f(y) and sum(p != q for p, q in zip(x, y)) == 1 and keep(x, y):
                gamma[a, b] = 1.0
    return gamma


def or_certificate(n: int) -> Certificate:
    f = boolfn.or_n(n)
    zero = "0" * n
    gamma = _hamming_one(f, lambda x, y: zero in (x, y))
    V = np.zeros((len(f.domain), n, 1))
    for a, x in enumerate(f.domain):
        if x == zero:
            V[a, :, 0] = n ** -0.25
        else:
            V[a, x.index("1"), 0] = n ** 0.25
    return Certificate(f, gamma, DualSolution(f.domain, V), math.sqrt(n))


def and_certificate(n: int) -> Certificate:
    f = boolfn.and_n(n)
    one = "1" * n
    gamma = _hamming_one(f, lambda x, y: one in (x, y))
    V = np.zeros((len(f.domain), n, 1))
    for a, x in enumerate(f.domain):
        if x == one:
            V[a, :, 0] = n ** -0.25
        else:
            V[a, x.index("0"), 0] = n ** 0.25
    return Certificate(f, gamma, DualSolution(f.domain, V), math.sqrt(n))


def parity_certificate(n: int) -> Certificate:
    """Dual vectors live in R^{2^(n-1)}, indexed by z over the bits other than j.

    v_xj[z] = sqrt(|z|! (n-1-|z|)! / n!) * (-1)^(z . x_{-j}), so that
    <v_xj|v_yj> = [w even] / (w + 1) with w the distance of x, y off bit j.
    """
    f = boolfn.parity_n(n)
    gamma = _hamming_one(f, lambda x, y: True)
    zs = list(boolfn.all_bitstrings(n - 1))
    weights = np.array(
        [math.sqrt(math.factorial(z.count("1")) * math.factorial(n - 1 - z.count("1")) / math.factorial(n)) for z in zs]
    )
    V = np.zeros((len(f.domain), n, len(zs)))
    for a, x in enumerate(f.domain):
        for j in range(n):
            rest = x[:j] + x[j + 1:]
            signs = np.array([(-1) ** sum(int(p) * int(q) for p, q in zip(z, rest)) for z in zs])
            V[a, j] = weights * signs
    return Certificate(f, gamma, DualSolution(f.domain, V), float(n))


def maj3_certificate() -> Certificate:
    """Sensitive inputs get one of two unit vectors at 60 degrees; 000 and 111 their scaled sum."""
    f = boolfn.maj3()
    gamma = _hamming_one(f, lambda x, y: True)
    a_vec = np.array([1.0, 0.0])
    b_vec = np.array([0.5, math.sqrt(3) / 2])
    u_vec = (a_vec + b_vec) / 3
    V = np.zeros((len(f.domain), 3, 2))
    for idx, x in enumerate(f.domain):
        for j in range(3):
            rest = x[:j] + x[j + 1:]
            if rest == "01":
                V[idx, j] = a_vec
            elif rest == "10":
                V[idx, j] = b_vec
            elif x in ("000", "111"):
                V[idx, j] = u_vec
    return Certificate(f, gamma, DualSolution(f.domain, V), 2.0)


def ident_certificate() -> Certificate:
    f = boolfn.ident()
    return Certificate(f, np.array([[0.0, 1.0], [1.0, 0.0]]), DualSolution(f.domain, np.ones((2, 1, 1))), 1.0)


def certificate(name: str) -> Certificate:
    """Look up by function name, e.g. ``"OR_3"`` or ``"MAJ_3"``."""
    if name == "IDENT_1":
        return ident_certificate()
    if name == "MAJ_3":
        return maj3_certificate()
    family, _, size = name.partition("_")
    builders = {"OR": or_certificate, "AND": and_certificate, "PARITY": parity_certificate}
    if family not in builders or not size.isdigit() or not 1 <= int(size) <= 4:
        raise KeyError(f"no closed-form certificate for {name!r}")
    return builders[family](int(size))


NAMES = ["IDENT_1", "MAJ_3"] + [f"{fam}_{n}" for fam in ("OR", "AND", "PARITY") for n in range(1, 5)]
