"""Special functions: complex exprel and causal Gaussian-exponential integrals."""
from __future__ import annotations

import math

import numpy as np
from scipy.special import erfcx

_SQRT_PI = math.sqrt(math.pi)


def exprel(z):
    """``(exp(z) - 1) / z`` for complex ``z``, exact at ``z = 0``."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-4
    safe = np.where(small, 1.0, z)
    big = np.expm1(safe) / safe
    series = 1 + z / 2 + z * z / 6 + z**3 / 24
    return np.where(small, series, big)


def phi2(z):
    """``int_0^1 u exp(z u) du`` for complex ``z``."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-3
    safe = np.where(small, 1.0, z)
    big = (np.exp(safe) * (safe - 1) + 1) / safe**2
    series = 1 / 2 + z / 3 + z * z / 8 + z**3 / 30 + z**4 / 144
    return np.where(small, series, big)


def gaussian_tail_exp(r, rate, q, d, a):
    """``int_{r' > r} exp(i rate (r - r')) psi(r') dr'`` for the unit Gaussian.

    ``psi(r) = (2/pi d^2)^(1/4) exp(-(r-a)^2/d^2 + i q (r-a))`` and
    ``Im(rate) < 0``.  Evaluated through the scaled complementary error
    function so neither the Gaussian nor the exponential tail overflows.
    """
    r = np.asarray(r, dtype=float)
    amp = (2.0 / (math.pi * d * d)) ** 0.25
    rr = r - a
    mu = rate - q
    z = rr / d + 0.5j * mu * d
    psi = amp * np.exp(-(rr**2) / d**2 + 1j * q * rr)
    half = 0.5 * d * _SQRT_PI
    out = np.empty(np.shape(z), dtype=complex)
    pos = z.real >= 0
    out[pos] = half * psi[pos] * erfcx(z[pos])
    neg = ~pos
    if np.any(neg):
        tail = 2 * amp * np.exp(1j * rate * rr[neg] - mu * mu * d * d / 4)
        out[neg] = half * (tail - psi[neg] * erfcx(-z[neg]))
    return out
