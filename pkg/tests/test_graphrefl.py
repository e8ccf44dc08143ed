import json

import numpy as np
import pytest

from advq import boolfn
from advq.advsdp import DualSolution
from advq.errors import CertificateError, DegenerateFunctionError, DomainError
from advq.graphrefl import (
    DEFAULT_KAPPA,
    build_graph,
    build_input_operators,
    oracle_matrix,
    query_oracle_check,
)
from advq.spectral import kernel_root_mass

from conftest import graph, solved


def test_graph_structure(suite_name):
    g = graph(suite_name)
    f, d = solved(suite_name)
    idx = g.index
    assert g.B.shape == (len(f.F0), 1 + 2 * f.n * d.m)
    assert np.allclose(g.t, DEFAULT_KAPPA / np.sqrt(d.W))
    A = g.adjacency
    assert np.array_equal(A, A.T)
    # bipartite: no edges inside F_0 nor inside {0} u I
    assert not A[:idx.root, :idx.root].any() and not A[idx.root:, idx.root:].any()
    for r, x in enumerate(idx.F0):
        for j in range(1, f.n + 1):
            b = 1 - int(x[j - 1])
            cols = np.arange(idx.I_slice(j, b).start, idx.I_slice(j, b).stop)
            assert np.allclose(A[r, cols], d.vector(x, j))
            other = np.arange(idx.I_slice(j, 1 - b).start, idx.I_slice(j, 1 - b).stop)
            assert not A[r, other].any()


def test_delta_is_kernel_projector(suite_name):
    g = graph(suite_name)
    D = g.delta
    assert np.abs(D - D.T).max() <= 1e-12
    assert np.abs(D @ D - D).max() <= 1e-10
    assert np.abs(g.adjacency @ D).max() <= 1e-9
    assert g.kernel_dim == int(np.sum(np.abs(g.spectrum) <= g.kernel_tol))
    assert g.smallest_nonzero > 1e-6


def test_root_mostly_in_kernel(suite_name):
    assert kernel_root_mass(graph(suite_name)) >= 1 / (1 + DEFAULT_KAPPA**2) - 1e-9


def test_input_operators(suite_name):
    g = graph(suite_name)
    f, d = solved(suite_name)
    N = g.index.size
    for x in f.domain:
        ops = build_input_operators(g, x)
        assert np.abs(ops.U @ ops.U.T - np.eye(N)).max() <= 1e-10
        assert ops.pi_diag.sum() == N - f.n * d.m
        for j in range(1, f.n + 1):
            assert not ops.pi_diag[g.index.I_slice(j, 1 - int(x[j - 1]))].any()
            assert ops.pi_diag[g.index.I_slice(j, int(x[j - 1]))].all()


def test_query_oracle(suite_name):
    g = graph(suite_name)
    for x in g.f.domain:
        assert query_oracle_check(g, x)


def test_query_oracle_detects_wrong_projector():
    g = graph("OR_2")
    pi = build_input_operators(g, "01").pi_diag
    assert not query_oracle_check(g, "10", pi_diag=pi)
    bad = build_input_operators(g, "00").pi_diag.copy()
    bad[0] = 0.0
    assert not query_oracle_check(g, "00", pi_diag=bad)


def test_oracle_matrix_is_permutation():
    O = oracle_matrix("101")
    assert np.array_equal(O @ O, np.eye(6))
    assert O[1, 0] == 1 and O[2, 2] == 1


def test_constant_function_rejected():
    f = boolfn.constant(1, 1)
    d = DualSolution(f.domain, np.ones((2, 1, 1)))
    with pytest.raises(DegenerateFunctionError):
        build_graph(f, d)


def test_domain_mismatch():
    f, d = solved("OR_2")
    with pytest.raises(CertificateError):
        build_graph(boolfn.and_n(2), DualSolution(("0", "1"), np.ones((2, 1, 1))))
    with pytest.raises(DomainError):
        build_input_operators(graph("OR_2"), "111")


def test_dump_is_json():
    g = graph("IDENT_1")
    data = json.loads(g.dumps())
    assert data["labels"] == ["x:0", "0", "I:1,0,1", "I:1,1,1"]
    assert {(e["row"], e["col"]) for e in data["B_G"]} == {(0, 1), (0, 3)}
    assert data["kernel_dim"] == g.kernel_dim


def test_transfer_graph_shapes():
    g = graph("MAJ_3")
    ops = build_input_operators(g, "011")
    nI = 2 * g.index.n * g.index.m
    assert ops.B_Gx.shape == (len(g.index.F0) + nI, 1 + nI)
    assert ops.B_Gpx.shape == (len(g.index.F0) + nI, nI)
    assert ops.adjacency_Gx.shape == (g.index.size + nI,) * 2
    assert np.array_equal(ops.copy_map.T @ ops.copy_map, np.diag(np.r_[np.zeros(g.index.I_offset), np.ones(nI)]))
