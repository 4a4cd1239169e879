import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twophoton.model import SystemParams, eigenfrequencies
from twophoton.propagators import i_kernel, one_photon_kernel
from twophoton.residues import (
    ExpTerm,
    KernelSum,
    ResidueError,
    factor,
    integrate_rational_exp,
    parse_dump,
)

GOLDEN = Path(__file__).parent / "golden"
GOLDEN_PARAMS = SystemParams(g=1.0, kappa=5.0, gamma=0.3, omega_a=0.2)


def one_var(factors, x):
    return integrate_rational_exp(factors, np.array([[1.0]]), (0,))(np.array([[x]]))[0]


@pytest.mark.parametrize("x", [-0.3, -1.0, -4.0])
def test_single_pole_lower_half_plane(x):
    p = 0.4 - 0.7j
    got = one_var([factor([1.0], -p)], x)
    assert got == pytest.approx(-2j * math.pi * np.exp(1j * p * x), rel=1e-13)


@pytest.mark.parametrize("x", [0.3, 2.0])
def test_single_pole_vanishes_on_the_other_side(x):
    assert one_var([factor([1.0], -(0.4 - 0.7j))], x) == 0


def test_two_pole_partial_fractions():
    p1, p2, x = 0.2 - 0.5j, -1.0 - 1.5j, -0.8
    got = one_var([factor([1.0], -p1), factor([1.0], -p2)], x)
    want = -2j * math.pi * (np.exp(1j * p1 * x) - np.exp(1j * p2 * x)) / (p1 - p2)
    assert got == pytest.approx(want, rel=1e-13)


def test_upper_pole_closes_upward():
    p, x = 0.3 + 0.6j, 1.2
    assert one_var([factor([1.0], -p)], x) == pytest.approx(
        2j * math.pi * np.exp(1j * p * x), rel=1e-13
    )


def test_double_pole_gives_polynomial_prefactor():
    p, x = -0.4j, -1.5
    got = one_var([factor([1.0], -p, power=2)], x)
    # d/dk exp(ikx) at k = p, times -2 pi i
    assert got == pytest.approx(-2j * math.pi * 1j * x * np.exp(1j * p * x), rel=1e-13)


def test_insufficient_decay_is_rejected():
    with pytest.raises(ResidueError):
        integrate_rational_exp([factor([1.0], 0.5j, power=-1)], np.array([[1.0]]), (0,))


def test_kernel_sum_is_linear_in_terms():
    es = eigenfrequencies(GOLDEN_PARAMS)
    ker = i_kernel(8, es)
    half = len(ker.terms) // 2
    a = KernelSum(ker.terms[:half], 3)
    b = KernelSum(ker.terms[half:], 3)
    x = np.random.default_rng(3).uniform(-2, 0.5, (50, 3))
    # individual terms are large and cancel; compare against the term magnitude
    scale = sum(abs(t.coeff) for t in ker.terms) * 1e-13
    assert np.allclose((a + b)(x), ker(x), rtol=0, atol=scale)
    assert np.allclose(ker.scaled(2 - 1j)(x), (2 - 1j) * ker(x), rtol=0, atol=3 * scale)


def test_compose_substitutes_coordinates():
    t = ExpTerm(1.5 + 0.5j, (1, 0), (0.3 - 1j, -0.2 - 0.4j), ((1.0, 0.0), (0.0, 1.0)))
    ks = KernelSum([t], 2)
    a = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -2.0]])
    comp = ks.compose(a)
    r = np.random.default_rng(0).uniform(-2, 2, (40, 3))
    assert np.allclose(comp(r), ks(r @ a.T), rtol=1e-13, atol=1e-15)


def test_step_at_boundary_is_half():
    t = ExpTerm(1.0, (0,), (0.0,), ((1.0,),))
    assert t(np.array([0.0])) == 0.5


@pytest.mark.parametrize("which", [4, 6, 8])
def test_every_term_decays_in_its_wedge(which):
    es = eigenfrequencies(GOLDEN_PARAMS)
    assert all(t.is_decaying() for t in i_kernel(which, es).terms)


@pytest.mark.parametrize("which", [4, 6, 8])
def test_term_count_within_pole_product_bound(which):
    es = eigenfrequencies(GOLDEN_PARAMS)
    # at most 3 k-poles x 3 q-poles x (2 + 3) omega-poles per term family,
    # times the polynomial monomials from the double poles
    assert len(i_kernel(which, es).terms) <= 3 * 3 * 5 * 4


# --- golden dumps -----------------------------------------------------------------


def _key(row):
    return (
        tuple(row["powers"]),
        tuple(tuple(c) for c in row["support"]),
        tuple((round(r.real, 8), round(r.imag, 8)) for r in row["rates"]),
    )


@pytest.mark.parametrize("name", ["one_photon", "I4", "I6", "I8"])
def test_dump_matches_golden(name):
    es = eigenfrequencies(GOLDEN_PARAMS)
    ker = one_photon_kernel(es).kernel_sum() if name == "one_photon" else i_kernel(int(name[1]), es)
    got = {_key(r): r["coeff"] for r in parse_dump(ker.dump())}
    want = {_key(r): r["coeff"] for r in parse_dump((GOLDEN / f"{name}.txt").read_text())}
    assert got.keys() == want.keys()
    for k, c in want.items():
        assert got[k] == pytest.approx(c, rel=1e-9, abs=1e-12)


def test_dump_round_trip():
    es = eigenfrequencies(GOLDEN_PARAMS)
    ker = i_kernel(6, es)
    rows = parse_dump(ker.dump())
    rebuilt = KernelSum(
        [ExpTerm(r["coeff"], tuple(r["powers"]), tuple(r["rates"]), tuple(r["support"])) for r in rows],
        3,
    )
    x = np.random.default_rng(5).uniform(-2, 0.5, (30, 3))
    assert np.allclose(rebuilt(x), ker(x), rtol=0, atol=1e-13 * sum(abs(t.coeff) for t in ker.terms))


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-3, 3), st.floats(0.1, 3), st.floats(-3, 3), st.floats(0.1, 3), st.floats(-4, -0.05)
)
def test_two_lower_poles_match_partial_fractions(r1, i1, r2, i2, x):
    p1, p2 = complex(r1, -i1), complex(r2, -i2)
    if abs(p1 - p2) < 1e-3:
        return
    got = one_var([factor([1.0], -p1), factor([1.0], -p2)], x)
    want = -2j * math.pi * (np.exp(1j * p1 * x) - np.exp(1j * p2 * x)) / (p1 - p2)
    assert got == pytest.approx(want, rel=1e-9, abs=1e-12)
