import numpy as np
import pytest

from advq import library
from advq.advsdp import duality_gap, evaluate_primal, feasibility_residual


@pytest.mark.parametrize("name", library.NAMES)
def test_certificate_is_tight(name):
    c = library.certificate(name)
    assert feasibility_residual(c.f, c.dual) <= 1e-12
    assert c.dual.W == pytest.approx(c.value, rel=1e-12)
    p = evaluate_primal(c.f, c.gamma)
    assert p.value == pytest.approx(c.value, rel=1e-12)
    assert abs(duality_gap(c.f, c.dual, p)) <= 1e-12


def test_parity_inner_products():
    # <v_xj|v_yj> = [w even] / (w + 1), w the distance off bit j
    c = library.certificate("PARITY_4")
    d = c.dual
    for x in ("0000", "0110"):
        for y in ("1000", "1110", "1011"):
            w = sum(p != q for p, q in zip(x[1:], y[1:]))
            expect = (1.0 / (w + 1)) if w % 2 == 0 else 0.0
            assert d.vector(x, 1) @ d.vector(y, 1) == pytest.approx(expect, abs=1e-12)


def test_unknown_certificate():
    with pytest.raises(KeyError):
        library.certificate("XOR_9")


def test_gamma_zero_pattern():
    c = library.certificate("MAJ_3")
    vals = np.array(c.f.values)
    assert not c.gamma[vals[:, None] == vals[None, :]].any()
