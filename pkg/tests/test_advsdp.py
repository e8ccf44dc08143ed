import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advq import boolfn, library
from advq.advsdp import (
    DualSolution,
    SolverTolerances,
    evaluate_primal,
    extract_vectors,
    feasibility_residual,
    filter_matrix,
    rescale,
    solve_dual,
)
from advq.boolfn import BooleanFunction
from advq.errors import CertificateError, PSDViolationError

from conftest import solved

EXPECTED = {
    "IDENT_1": 1.0,
    "OR_2": math.sqrt(2),
    "AND_2": math.sqrt(2),
    "PARITY_2": 2.0,
    "OR_3": math.sqrt(3),
    "MAJ_3": 2.0,
    "PARITY_3": 3.0,
}


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_solver_matches_closed_form(name):
    f, d = solved(name)
    oracle = library.certificate(name)
    assert oracle.value == pytest.approx(EXPECTED[name], rel=1e-12)
    assert d.W == pytest.approx(oracle.value, rel=1e-4)
    assert feasibility_residual(f, d) <= 1e-8
    assert d.meta["status"] == "optimal"
    gap = d.meta["duality_gap"]
    assert -1e-9 <= gap <= 1e-4 * d.W


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_rank_bound(name):
    f, d = solved(name)
    assert 1 <= d.m <= len(f.domain) * f.n


def test_promise_problem():
    # two inputs differing everywhere; Cauchy-Schwarz pins W = 1
    f = BooleanFunction(2, ("00", "11"), (0, 1))
    d = solve_dual(f)
    assert d.W == pytest.approx(1.0, rel=1e-6)
    assert feasibility_residual(f, d) <= 1e-8


def test_domain_permutation_invariance():
    f = boolfn.maj3()
    rng = np.random.default_rng(3)
    order = rng.permutation(len(f.domain))
    g = BooleanFunction(3, tuple(f.domain[i] for i in order), tuple(f.values[i] for i in order))
    assert solve_dual(g).W == pytest.approx(solved("MAJ_3")[1].W, rel=1e-8)


def test_constant_function_rejected():
    with pytest.raises(CertificateError):
        solve_dual(boolfn.constant(2, 0))


def test_extract_vectors_reproduces_gram():
    f = boolfn.or_n(2)
    rng = np.random.default_rng(0)
    X = rng.normal(size=(8, 3))
    G = X @ X.T
    d = extract_vectors(G, f)
    assert d.m == 3
    assert np.allclose(d.gram(), G, atol=1e-10)


def test_extract_vectors_rejects_indefinite():
    f = boolfn.ident()
    with pytest.raises(PSDViolationError):
        extract_vectors(np.diag([1.0, -1e-3]), f)
    with pytest.raises(PSDViolationError):
        extract_vectors(np.eye(3), f)


def test_extract_vectors_clamps_tiny_negative():
    f = boolfn.ident()
    d = extract_vectors(np.diag([1.0, -1e-12]), f, SolverTolerances(psd=1e-9))
    assert d.m == 1


@given(st.floats(0.2, 5.0))
def test_rescale_keeps_constraints(s):
    f, d = solved("OR_2")
    r = rescale(f, d, s)
    assert feasibility_residual(f, r) <= 1e-8


def test_dual_dict_roundtrip():
    f, d = solved("MAJ_3")
    back = DualSolution.from_dict(d.to_dict(), f)
    assert np.array_equal(back.vectors, d.vectors)
    assert d.to_dict()["W"] == d.W


def test_dual_dict_shape_errors():
    f, d = solved("OR_2")
    data = d.to_dict()
    with pytest.raises(CertificateError):
        DualSolution.from_dict(data, boolfn.or_n(3))
    data["vectors"]["00,1"] = data["vectors"]["00,1"] + [0.0]
    with pytest.raises(CertificateError):
        DualSolution.from_dict(data, f)


def test_filter_matrix():
    f = boolfn.or_n(2)
    D1 = filter_matrix(f, 1)
    # domain 00, 01, 10, 11: bit 1 differs between {00, 01} and {10, 11}
    assert D1[0, 2] == 1 and D1[0, 1] == 0 and np.array_equal(D1, D1.T)


@st.composite
def adversary_matrices(draw, name):
    f = boolfn.NAMED[name]()
    vals = np.array(f.values)
    mask = np.triu(vals[:, None] != vals[None, :])
    entries = draw(st.lists(st.floats(-1, 1), min_size=int(mask.sum()), max_size=int(mask.sum())))
    gamma = np.zeros(mask.shape)
    gamma[mask] = entries
    return f, gamma + gamma.T


@settings(max_examples=60, deadline=None)
@given(adversary_matrices("MAJ_3"))
def test_weak_duality_random_gamma(pair):
    # no adversary matrix can beat the solved dual value
    f, gamma = pair
    p = evaluate_primal(f, gamma)
    if not p.unbounded:
        assert p.value <= solved("MAJ_3")[1].W + 1e-8


@settings(max_examples=30, deadline=None)
@given(adversary_matrices("OR_2"), st.floats(0.01, 100))
def test_primal_value_scale_invariant(pair, c):
    f, gamma = pair
    p, q = evaluate_primal(f, gamma), evaluate_primal(f, c * gamma)
    if p.norm > 1e-6 and p.max_filtered_norm > 1e-6:
        assert q.value == pytest.approx(p.value, rel=1e-9)


def test_evaluate_primal_errors():
    f = boolfn.or_n(2)
    with pytest.raises(CertificateError):
        evaluate_primal(f, np.zeros((3, 3)))
    bad = np.zeros((4, 4))
    bad[0, 1] = 1
    with pytest.raises(CertificateError):
        evaluate_primal(f, bad)
    same = np.zeros((4, 4))
    same[1, 2] = same[2, 1] = 1  # 01 and 10 are both in F_1
    with pytest.raises(CertificateError):
        evaluate_primal(f, same)


def test_evaluate_primal_zero_matrix():
    assert evaluate_primal(boolfn.or_n(2), np.zeros((4, 4))).value == 0.0
