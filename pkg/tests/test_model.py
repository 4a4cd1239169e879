import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twophoton.model import (
    DEGENERACY_NUDGE,
    DegenerateSpectrumError,
    PulseParams,
    SystemParams,
    complex_frequencies,
    eigenfrequencies,
    gaussian_pulse,
    nu_cubic,
    optimum_pulse,
    scale_params,
    two_photon_input,
)

rates = st.floats(0.05, 20.0)
detunings = st.floats(-5.0, 5.0)


@st.composite
def systems(draw):
    return SystemParams(
        g=draw(rates),
        omega_a=draw(detunings),
        omega_c=draw(detunings),
        gamma=draw(st.floats(0.0, 5.0)),
        kappa=draw(rates),
    )


@pytest.mark.parametrize(
    "kw, expected",
    [
        (dict(omega_a=0.0, gamma=0.0), 0.0),
        (dict(omega_a=1.0, gamma=0.2), 1 - 0.1j),
    ],
)
def test_complex_atom_frequency(kw, expected):
    wa, _ = complex_frequencies(SystemParams(g=1.0, **kw))
    assert wa == pytest.approx(expected, abs=1e-15)


def test_complex_cavity_frequency():
    _, wc = complex_frequencies(SystemParams(g=1.0, omega_c=0.0, kappa=5.0))
    assert wc == -2.5j


def test_decoupled_roots_are_bare_frequencies():
    es = eigenfrequencies(SystemParams(g=0.0, kappa=2.0))
    assert sorted([es.omega_1, es.omega_2], key=lambda z: z.imag) == pytest.approx([-1j, 0])


def test_strong_coupling_eigenfrequencies():
    es = eigenfrequencies(SystemParams(g=1.0, kappa=0.5))
    split = math.sqrt(1 - 0.5**2 / 16)
    assert es.omega_1 == pytest.approx(-split - 0.125j, abs=1e-12)
    assert es.omega_2 == pytest.approx(split - 0.125j, abs=1e-12)
    for w in es.omegas:
        resid = (w - es.omega_a_t) * (w - es.omega_c_t) - 1.0
        assert abs(resid) < 1e-12


def test_exceptional_point_is_flagged():
    es = eigenfrequencies(SystemParams(g=1.0, kappa=4.0))
    assert es.degenerate
    assert es.omega_1 == pytest.approx(-1j, abs=1e-7)
    with pytest.raises(DegenerateSpectrumError):
        es.require_nondegenerate()
    nudged = SystemParams(g=1.0, kappa=4.0).nudged()
    assert nudged.kappa == pytest.approx(4.0 * (1 + DEGENERACY_NUDGE))
    assert not eigenfrequencies(nudged).degenerate


def test_root_ordering_by_real_then_imag():
    es = eigenfrequencies(SystemParams(g=1.0, kappa=0.5))
    assert es.omega_1.real < es.omega_2.real
    nus = es.nus
    keys = [(z.real, z.imag) for z in nus]
    assert keys == sorted(keys)


@settings(max_examples=200, deadline=None)
@given(systems())
def test_vieta(p):
    es = eigenfrequencies(p)
    scale = max(abs(es.omega_a_t), abs(es.omega_c_t), p.g, 1.0)
    assert abs(es.omega_1 + es.omega_2 - es.omega_a_t - es.omega_c_t) < 1e-12 * scale
    prod = es.omega_a_t * es.omega_c_t - p.g**2
    assert abs(es.omega_1 * es.omega_2 - prod) < 1e-12 * scale**2


@settings(max_examples=200, deadline=None)
@given(systems())
def test_nu_roots_solve_cubic(p):
    es = eigenfrequencies(p)
    scale = max(abs(es.omega_a_t) + abs(es.omega_c_t), p.g, 1.0) * 2
    for nu in es.nus:
        assert abs(nu_cubic(nu, es)) < 1e-10 * scale**3


@pytest.mark.parametrize(
    "bad",
    [dict(g=-1.0), dict(g=1.0, kappa=0.0), dict(g=1.0, gamma=-0.1), dict(g=float("nan"))],
)
def test_system_params_validation(bad):
    with pytest.raises(ValueError):
        SystemParams(**bad)


def test_pulse_default_position_and_margin():
    p = PulseParams(q=0.0, d=2.0)
    assert p.a == -12.0
    with pytest.raises(ValueError):
        PulseParams(q=0.0, d=2.0, a=-5.0)
    with pytest.raises(ValueError):
        PulseParams(q=0.0, d=0.0)


# --- scaling law ---------------------------------------------------------------


def test_scaling_identity_and_example():
    p, pulse = SystemParams(g=1.0, kappa=5.0), PulseParams(q=0.0, d=3.0)
    assert scale_params(p, pulse, 1.0) == (p, pulse)
    sp, pp = scale_params(p, pulse, 2.0)
    assert (sp.g, sp.kappa, pp.q, pp.d) == (2.0, 10.0, 0.0, 1.5)


@settings(max_examples=100, deadline=None)
@given(systems(), st.floats(0.1, 10), st.floats(0.1, 10))
def test_scaling_is_group_action(p, a1, a2):
    pulse = PulseParams(q=0.3, d=2.0)
    s12 = scale_params(*scale_params(p, pulse, a2), a1)
    s = scale_params(p, pulse, a1 * a2)
    for x, y in zip(
        (s12[0].g, s12[0].kappa, s12[0].gamma, s12[1].q, s12[1].d, s12[1].a),
        (s[0].g, s[0].kappa, s[0].gamma, s[1].q, s[1].d, s[1].a),
    ):
        assert x == pytest.approx(y, rel=1e-13, abs=1e-300)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10))
def test_one_d_atom_rate_scales_linearly(g, kappa, alpha):
    p = SystemParams(g=g, kappa=kappa)
    sp, _ = scale_params(p, PulseParams(q=0, d=1), alpha)
    assert sp.one_d_atom_rate == pytest.approx(alpha * p.one_d_atom_rate, rel=1e-13)


# --- pulses -------------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.2, 10))
def test_gaussian_unit_norm(q, d):
    pulse = PulseParams(q=q, d=d)
    psi = gaussian_pulse(pulse)
    r = np.linspace(pulse.a - 8 * d, pulse.a + 8 * d, 4001)
    assert np.trapezoid(abs(psi(r)) ** 2, r) == pytest.approx(1.0, abs=1e-10)


def test_gaussian_peak_and_spectrum():
    pulse = PulseParams(q=0.7, d=2.0)
    psi = gaussian_pulse(pulse)
    assert abs(psi(pulse.a)) == pytest.approx((2 / (math.pi * 4.0)) ** 0.25)
    # |Fourier transform| centred at q, 1/e half-width 2/d
    peak = abs(psi.fourier(0.7))
    assert abs(psi.fourier(0.7 + 2 / 2.0)) == pytest.approx(peak / math.e, rel=1e-12)
    # Parseval against direct quadrature
    k = np.linspace(-10, 10, 4001)
    assert np.trapezoid(abs(psi.fourier(k)) ** 2, k) == pytest.approx(1.0, abs=1e-10)
    r = np.linspace(pulse.a - 20, pulse.a + 20, 8001)
    direct = np.trapezoid(psi(r) * np.exp(-1j * 1.3 * r), r) / math.sqrt(2 * math.pi)
    assert psi.fourier(1.3) == pytest.approx(direct, abs=1e-12)


def test_two_photon_input_symmetry_norm_support():
    pulse = PulseParams(q=0.4, d=1.5)
    psi = two_photon_input(pulse)
    r = np.linspace(pulse.a - 9, 3.0, 801)
    r1, r2 = np.meshgrid(r, r, indexing="ij")
    vals = psi(r1, r2)
    assert np.array_equal(vals, vals.T)
    h = r[1] - r[0]
    assert np.sum(abs(vals) ** 2) * h * h == pytest.approx(1.0, abs=1e-8)
    peak = abs(vals).max()
    assert abs(vals[r1 > 0]).max() < 1e-10 * peak


def test_optimum_pulse_norm_approaches_one():
    p = SystemParams(g=1.0, kappa=5.0)
    norms = [optimum_pulse(p, t).norm2() for t in (2, 5, 10, 20, 40, 80)]
    assert all(b >= a for a, b in zip(norms, norms[1:]))
    assert norms[-1] == pytest.approx(1.0, abs=1e-6)
    phi = optimum_pulse(p, 10.0)
    r = np.linspace(-10, 0, 20001)
    assert np.trapezoid(abs(phi(r)) ** 2, r) == pytest.approx(phi.norm2(), rel=1e-7)


def test_optimum_pulse_support_and_errors():
    phi = optimum_pulse(SystemParams(g=1.0, kappa=5.0), 5.0)
    assert phi(np.array([-6.0, 0.5])).tolist() == [0, 0]
    with pytest.raises(ValueError):
        optimum_pulse(SystemParams(g=1.0, kappa=5.0), 0.0)
    with pytest.raises(DegenerateSpectrumError):
        optimum_pulse(SystemParams(g=1.0, kappa=4.0), 5.0)


def test_optimum_pulse_weak_coupling_rate():
    # one eigenfrequency approaches -2i g^2/kappa: the slow exponential dominates
    p = SystemParams(g=1.0, kappa=10.0)
    phi = optimum_pulse(p, 40.0)
    r = np.linspace(-35, -5, 301)
    slope = np.polyfit(r, np.log(abs(phi(r))), 1)[0]
    assert -slope == pytest.approx(2 * p.g**2 / p.kappa, rel=0.06)


def test_optimum_pulse_strong_coupling_envelope():
    p = SystemParams(g=1.0, kappa=0.5)
    t = 60.0
    phi = optimum_pulse(p, t)
    r = np.linspace(-t, 0, 60001)
    vals = abs(phi(r))
    # envelope: local maxima decay at kappa/4 toward larger r (later in time-reversed order)
    peaks = np.where((vals[1:-1] > vals[:-2]) & (vals[1:-1] > vals[2:]))[0] + 1
    slope = np.polyfit(r[peaks], np.log(vals[peaks]), 1)[0]
    assert -slope == pytest.approx(p.kappa / 4, rel=0.02)
    # beat: |sin(g s)| has period pi/g
    spacing = np.diff(r[peaks]).mean()
    assert spacing == pytest.approx(math.pi / p.g, rel=0.02)
