import functools
import sys

import pytest

from advq import boolfn
from advq.advsdp import solve_dual
from advq.graphrefl import build_graph

SUITE = ["IDENT_1", "OR_2", "AND_2", "PARITY_2", "OR_3", "MAJ_3", "OR_2oOR_2"]


def make(name):
    if name == "OR_2oOR_2":
        f = boolfn.compose(boolfn.or_n(2), boolfn.or_n(2))
        return boolfn.BooleanFunction(f.n, f.domain, f.values, name)
    return boolfn.NAMED[name]()


@functools.lru_cache(maxsize=None)
def solved(name):
    f = make(name)
    return f, solve_dual(f)


@functools.lru_cache(maxsize=None)
def graph(name):
    f, d = solved(name)
    return build_graph(f, d)


@pytest.fixture(params=SUITE)
def suite_name(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
