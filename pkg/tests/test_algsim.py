import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from advq import algsim
from advq.graphrefl import build_input_operators
from advq.spectral import jordan_decompose, spectrum_of

from conftest import graph


@given(st.floats(-20, 20), st.integers(1, 300))
def test_dirichlet_sum_matches_direct(phi, tau):
    direct = sum(math.cos(phi * T) for T in range(1, tau + 1))
    assert float(algsim.dirichlet_cos_sum(phi, tau)) == pytest.approx(direct, abs=1e-8 * tau)


@pytest.mark.parametrize("W", [1.0, math.sqrt(2), 2.0, 7.5])
def test_fejer_meets_phase_estimation_contract(W):
    delta_p, delta_e = 1 / (100 * W), algsim.DELTA_E
    t = algsim.phase_qubits(delta_p, delta_e)
    size = 2**t
    assert algsim.fejer(0.0, size) == 1.0
    theta = np.linspace(delta_p, np.pi, 200001)
    assert algsim.fejer(theta, size).max() <= delta_e
    assert algsim.fejer(-theta, size).max() <= delta_e


def test_query_counts():
    out = algsim.run_alg1(build_input_operators(graph("IDENT_1"), "1"))
    # W = 1: ceil(log2(200 pi)) + ceil(log2(7)) = 10 + 3 phase qubits
    assert out.params["phase_qubits"] == 13 and out.query_count == 2**13 - 1
    assert algsim.query_count(2, 1.5) == 150
    assert algsim.query_count(3, 1.5) == 150000
    with pytest.raises(ValueError):
        algsim.query_count(4, 1.0)


def _brute_alg2(U, root, tau):
    e = np.zeros(U.shape[0])
    e[root] = 1.0
    state, total = e.copy(), 0.0
    for _ in range(tau):
        state = U @ state
        total += 0.25 * np.sum((e + state) ** 2)
    return total / tau


@pytest.mark.parametrize("tau", [1, 2, 17, 137, 1000])
def test_alg3_analytic_equals_bruteforce(suite_name, tau):
    g = graph(suite_name)
    for x in g.f.domain:
        ops = build_input_operators(g, x)
        exact = algsim.run_alg3(ops, tau=tau).p_one
        assert exact == pytest.approx(algsim.run_alg3_bruteforce(ops.U, g.index.root, tau), abs=1e-9)


@pytest.mark.parametrize("tau", [1, 5, 142])
def test_alg2_analytic_equals_bruteforce(tau):
    g = graph("MAJ_3")
    for x in g.f.domain:
        ops = build_input_operators(g, x)
        assert algsim.run_alg2(ops, tau=tau).p_one == pytest.approx(_brute_alg2(ops.U, g.index.root, tau), abs=1e-10)


def test_thresholds_on_suite(suite_name):
    g = graph(suite_name)
    for x in g.f.domain:
        ops = build_input_operators(g, x)
        one = algsim.run_alg1(ops)
        assert one.lower - 1e-12 <= one.p_one <= one.upper + 1e-12
        for alg in (1, 2, 3):
            assert algsim.meets_threshold(algsim.run(ops, alg)), (suite_name, x, alg)


def test_permutation_invariance():
    g = graph("MAJ_3")
    rng = np.random.default_rng(11)
    root = g.index.root
    N = g.index.size
    others = rng.permutation([i for i in range(N) if i != root])
    perm = np.insert(others, root, root)
    P = np.eye(N)[perm]
    for x in ("001", "011"):
        ops = build_input_operators(g, x)
        base = spectrum_of(ops)
        moved = jordan_decompose(P @ ops.Pi @ P.T, P @ g.delta @ P.T, P @ g.root_vector())
        for alg in (1, 2, 3):
            a = algsim.run(base, alg, W=g.W).p_one
            b = algsim.run(moved, alg, W=g.W).p_one
            assert a == pytest.approx(b, abs=1e-10)


def test_bare_spectrum_needs_W():
    ops = build_input_operators(graph("IDENT_1"), "0")
    with pytest.raises(ValueError):
        algsim.run_alg2(spectrum_of(ops))
    with pytest.raises(TypeError):
        algsim.run_alg2(np.eye(2), W=1.0)


def test_soundness_bounds_below_thresholds():
    for W in (1.0, 1.5, 2.0, 10.0, 100.0):
        b = algsim.soundness_bounds(W)
        assert b[1] < 0.4 and b[2] < 0.88 and b[3] <= 0.61


@pytest.mark.parametrize("alg", [1, 2, 3])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_sampling_within_four_sigma(seed, alg):
    g = graph("OR_2")
    ops = build_input_operators(g, "10")
    trials = 20000
    out = algsim.sample(ops, alg, trials, seed)
    p = out.p_one
    sigma = math.sqrt(p * (1 - p) / trials)
    assert abs(out.sampled["successes"] / trials - p) <= 4 * sigma


def test_sampling_is_reproducible():
    ops = build_input_operators(graph("OR_2"), "00")
    a = algsim.sample(ops, 3, 5000, seed=4)
    b = algsim.sample(ops, 3, 5000, seed=4)
    assert a.sampled == b.sampled
    with pytest.raises(ValueError):
        algsim.sample(ops, 3, 0, seed=4)


def test_outcome_dict_keys():
    ops = build_input_operators(graph("IDENT_1"), "1")
    row = algsim.run_alg1(ops).to_dict()
    assert {"alg", "x", "f_x", "p_one", "params", "query_count", "lower", "upper"} <= set(row)
