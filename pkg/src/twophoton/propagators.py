"""One- and two-photon propagators of the atom-cavity system (moving frame).

The one-photon propagator is ``delta(D) + theta(-D) sum_j A_j exp(i w_j D)``
with ``D = r - r'``.  The two-photon kernel is
``G(r1-r1') G(r2-r2') + G_NL`` where the nonlinear part is assembled from the
triple integrals I4, I6, I8, reduced to pole sums by :mod:`.residues`.

An equivalent time-ordered form of ``G_NL`` (single-excitation propagation,
then the two-excitation block driven by the doubly excited atom amplitude) is
exposed as :class:`ModalData`; the scattering code integrates against it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import EigenSystem
from .residues import ExpTerm, Factor, KernelSum, factor, integrate_rational_exp
from .special import exprel

#: default integration order: k, then q, then omega
DEFAULT_ORDER = (0, 1, 2)


def one_photon_g0(delta, es: EigenSystem):
    """Smooth part ``-kappa theta(-D) exp(i wc D)`` of G0; the delta is implicit."""
    delta = np.asarray(delta, dtype=float)
    d = np.minimum(delta, 0.0)
    return np.where(delta < 0, -es.kappa * np.exp(1j * es.omega_c_t * d), 0.0)


def _g2_coefficients(es: EigenSystem):
    es.require_nondegenerate()
    w1, w2, wc = es.omega_1, es.omega_2, es.omega_c_t
    return (w2 - wc) / (w2 - w1), (w1 - wc) / (w1 - w2)


def one_photon_g2(delta, es: EigenSystem):
    delta = np.asarray(delta, dtype=float)
    c1, c2 = _g2_coefficients(es)
    d = np.minimum(delta, 0.0)
    val = es.kappa * (
        np.exp(1j * es.omega_c_t * d)
        - c1 * np.exp(1j * es.omega_1 * d)
        - c2 * np.exp(1j * es.omega_2 * d)
    )
    return np.where(delta < 0, val, 0.0)


@dataclass(frozen=True)
class OnePhotonKernel:
    """``G(D) = delta(D) + theta(-D) sum_j amps[j] exp(i rates[j] D)``."""

    es: EigenSystem
    amps: tuple[complex, complex]
    rates: tuple[complex, complex]

    def smooth(self, delta):
        delta = np.asarray(delta, dtype=float)
        d = np.minimum(delta, 0.0)
        val = sum(a * np.exp(1j * w * d) for a, w in zip(self.amps, self.rates))
        return np.where(delta < 0, val, 0.0)

    def response(self, omega):
        """Reflection amplitude for a plane wave ``exp(i omega r)``."""
        omega = np.asarray(omega, dtype=float)
        out = np.ones_like(omega, dtype=complex)
        for a, w in zip(self.amps, self.rates):
            if a != 0:  # a decoupled atom leaves a weightless pole on the real axis
                out = out + a * 1j / (omega - w)
        return out

    def kernel_sum(self) -> KernelSum:
        """Smooth part in the coordinates ``(r, r')``; ``has_delta`` marks the identity."""
        terms = [
            ExpTerm(complex(a), (0, 0), (complex(w), complex(-w)), ((1.0, -1.0),))
            for a, w in zip(self.amps, self.rates)
        ]
        return KernelSum(terms, 2, has_delta=True)


def one_photon_kernel(es: EigenSystem) -> OnePhotonKernel:
    c1, c2 = _g2_coefficients(es)
    k = es.kappa
    return OnePhotonKernel(es, (-k * c1, -k * c2), (es.omega_1, es.omega_2))


# --- triple integrals --------------------------------------------------------


def _j_factors(es: EigenSystem) -> list[Factor]:
    wc, w1, w2 = es.omega_c_t, es.omega_1, es.omega_2
    # variables: (k, q, omega)
    return [
        factor([1, 0, 0], -wc),
        factor([-1, 0, 1], -w1),
        factor([-1, 0, 1], -w2),
        factor([0, 1, 0], -wc),
        factor([0, -1, 1], -w1),
        factor([0, -1, 1], -w2),
    ]


def _shared_denominator(es: EigenSystem) -> list[Factor]:
    wc = es.omega_c_t
    return [factor([-1, 0, 1], -wc), factor([0, -1, 1], -wc)] + [
        factor([0, 0, 1], -nu) for nu in es.nus
    ]


def integrand_factors(which: int, es: EigenSystem) -> list[Factor]:
    """Rational part of I4, I6 or I8 as affine factors in ``(k, q, omega)``."""
    es.require_nondegenerate()
    fac = _j_factors(es)
    if which == 4:
        # omega - k - q + i delta
        return fac + [factor([-1, -1, 1], 0.0, dsign=1)]
    fac += _shared_denominator(es)
    if which == 8:
        return fac
    if which == 6:
        wc = es.omega_c_t
        return fac + [
            factor([0, 0, 1], -wc - es.omega_1, power=-1),
            factor([0, 0, 1], -wc - es.omega_2, power=-1),
        ]
    raise ValueError("which must be 4, 6 or 8")


@lru_cache(maxsize=64)
def i_kernel(which: int, es: EigenSystem, order: tuple[int, ...] = DEFAULT_ORDER):
    """Pole-sum normal form of I_which(x, y, z)."""
    return integrate_rational_exp(integrand_factors(which, es), np.eye(3), order)


def _eval_i(which, x, y, z, es, order):
    xyz = np.stack(np.broadcast_arrays(x, y, z), axis=-1).astype(float)
    return i_kernel(which, es, tuple(order))(xyz)


def eval_I4(x, y, z, es: EigenSystem, order=DEFAULT_ORDER):
    return _eval_i(4, x, y, z, es, order)


def eval_I6(x, y, z, es: EigenSystem, order=DEFAULT_ORDER):
    return _eval_i(6, x, y, z, es, order)


def eval_I8(x, y, z, es: EigenSystem, order=DEFAULT_ORDER):
    return _eval_i(8, x, y, z, es, order)


def _prefactor(power: int, es: EigenSystem) -> complex:
    return -1j * es.g**power * es.kappa**2 / (8 * math.pi**3)


# Rows map (r1, r2, r1', r2') onto the (x, y, z) arguments of each I-evaluation.
_ARG_MAPS = {
    4: (
        np.array([[1, -1, 0, 0], [0, 0, 1, -1], [0, 1, -1, 0]], float),
        np.array([[-1, 1, 0, 0], [0, 0, -1, 1], [1, 0, 0, -1]], float),
    ),
    6: (
        np.array([[-1, 1, 0, 0], [0, 0, 1, -1], [1, 0, -1, 0]], float),
        np.array([[1, -1, 0, 0], [0, 0, -1, 1], [0, 1, 0, -1]], float),
    ),
}
_ARG_MAPS[8] = _ARG_MAPS[4]


@dataclass(frozen=True)
class TwoPhotonKernel:
    """Two-photon propagator; ``nonlinear`` is ``-G2 x G2 + G4 + G6 + G8``."""

    es: EigenSystem
    order: tuple[int, ...] = DEFAULT_ORDER

    @property
    def one_photon(self) -> OnePhotonKernel:
        return one_photon_kernel(self.es)

    def g_j(self, which: int, r1, r2, r1p, r2p):
        coords = np.stack(np.broadcast_arrays(r1, r2, r1p, r2p), axis=-1).astype(float)
        ker = i_kernel(which, self.es, self.order)
        m1, m2 = _ARG_MAPS[which]
        return _prefactor(which, self.es) * (ker(coords @ m1.T) + ker(coords @ m2.T))

    def nonlinear(self, r1, r2, r1p, r2p):
        es = self.es
        out = -one_photon_g2(np.subtract(r1, r1p), es) * one_photon_g2(
            np.subtract(r2, r2p), es
        )
        for which in (4, 6, 8):
            out = out + self.g_j(which, r1, r2, r1p, r2p)
        return out

    def linear(self, r1, r2, r1p, r2p):
        """Smooth-times-smooth piece of ``G(r1-r1') G(r2-r2')``."""
        g1 = self.one_photon
        return g1.smooth(np.subtract(r1, r1p)) * g1.smooth(np.subtract(r2, r2p))

    def __call__(self, r1, r2, r1p, r2p):
        """Smooth part of the full kernel; delta cross terms are left to the caller."""
        return self.linear(r1, r2, r1p, r2p) + self.nonlinear(r1, r2, r1p, r2p)

    def kernel_sum(self) -> KernelSum:
        """Pole-sum normal form of ``G_NL`` in ``(r1, r2, r1', r2')``."""
        es = self.es
        total = _g2_product_sum(es)
        for which in (4, 6, 8):
            ker = i_kernel(which, es, self.order).scaled(_prefactor(which, es))
            for m in _ARG_MAPS[which]:
                total = total + ker.compose(m)
        return total


def _g2_product_sum(es: EigenSystem) -> KernelSum:
    c1, c2 = _g2_coefficients(es)
    pieces = [(es.kappa, es.omega_c_t), (-es.kappa * c1, es.omega_1), (-es.kappa * c2, es.omega_2)]
    terms = []
    for a1, w1 in pieces:
        for a2, w2 in pieces:
            terms.append(
                ExpTerm(
                    -complex(a1 * a2),
                    (0, 0, 0, 0),
                    (complex(w1), complex(w2), complex(-w1), complex(-w2)),
                    ((1.0, 0.0, -1.0, 0.0), (0.0, 1.0, 0.0, -1.0)),
                )
            )
    return KernelSum(terms, 4)


def two_photon_kernel(es: EigenSystem, order=DEFAULT_ORDER) -> TwoPhotonKernel:
    es.require_nondegenerate()
    return TwoPhotonKernel(es, tuple(order))


# --- time-ordered modal form ------------------------------------------------


@dataclass(frozen=True)
class ModalData:
    """Eigen-decompositions behind the time-ordered form of the kernels.

    ``h1 = V diag(omega) V^-1`` acts on (atom, cavity) amplitudes and
    ``m2 = U diag(nu) U^-1`` on the two-excitation pair ``(C_e1, sqrt2 C_g2)``.
    Reading the output frame backwards in ``r`` is reading time forwards.
    """

    es: EigenSystem
    omega: np.ndarray
    v: np.ndarray
    vinv: np.ndarray
    nu: np.ndarray
    u: np.ndarray
    uinv: np.ndarray

    @property
    def sqrt_kappa(self) -> float:
        return math.sqrt(self.es.kappa)

    @property
    def load(self) -> np.ndarray:
        """Modal weights of the cavity drive ``-i sqrt(kappa) e_c``."""
        return self.vinv @ np.array([0.0, -1j * self.sqrt_kappa])

    @property
    def pair_drive(self) -> np.ndarray:
        """Modal weights of ``i sqrt2 g e_1``: the doubly-excited-atom source."""
        return 1j * math.sqrt(2.0) * self.es.g * self.uinv[:, 0]

    def atom_response(self, t):
        """Atom amplitude at delay ``t >= 0`` after a photon enters the cavity."""
        t = np.asarray(t, dtype=float)
        val = sum(
            self.v[0, j] * self.load[j] * np.exp(-1j * self.omega[j] * t)
            for j in range(2)
        )
        return np.where(t >= 0, val, 0.0)


@lru_cache(maxsize=256)
def modal_data(es: EigenSystem) -> ModalData:
    es.require_nondegenerate()
    omega = np.array([es.omega_1, es.omega_2])
    v = np.array([[es.g, es.g], [omega[0] - es.omega_a_t, omega[1] - es.omega_a_t]])
    if es.g == 0:
        v = np.eye(2, dtype=complex)
        omega = np.array([es.omega_a_t, es.omega_c_t])
    m2 = np.array(
        [[es.omega_a_t + es.omega_c_t, es.g], [2 * es.g, 2 * es.omega_c_t]]
    )
    nu, u = np.linalg.eig(m2)
    return ModalData(es, omega, v, np.linalg.inv(v), nu, u, np.linalg.inv(u))


def time_ordered_nonlinear(r1, r2, r1p, r2p, es: EigenSystem):
    """Closed-form symmetrised ``G_NL`` from the time-ordered modal picture.

    Equals the average of ``G_NL(r1, r2, r1', r2')`` and
    ``G_NL(r1, r2, r2', r1')``; scalar arguments only.
    """
    md = modal_data(es)
    hi, lo = max(r1, r2), min(r1, r2)
    top = min(r1p, r2p)
    if not hi < top:
        return 0.0j
    span = top - hi
    out_row = md.v[1] * np.exp(-1j * md.omega * (hi - lo))  # row of exp(-i h1 (hi-lo))
    prop_out = out_row @ md.vinv  # [e^{-iH1 dt}]_{c, s}
    atom = md.v[0] * md.load  # atom response weights per mode
    total = 0.0j
    for m in range(2):
        col = md.u[:, m] * md.uinv[m, 0]
        for j in range(2):
            for l in range(2):
                rate = -1j * (md.nu[m] - md.omega[j] - md.omega[l])
                integ = span * exprel(rate * span)
                total += (
                    (prop_out @ col)
                    * atom[j]
                    * atom[l]
                    * np.exp(-1j * md.omega[j] * (r1p - hi) - 1j * md.omega[l] * (r2p - hi))
                    * integ
                )
    return -1j * es.kappa * es.g * total
