"""Atom-cavity parameters, complex frequencies, input pulses and the scaling law.

Units: hbar = c = 1, so lengths and times share one unit and every rate is an
angular frequency.  Coordinates ``r`` are taken in the frame moving with the
photons; negative ``r`` is the incoming side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

#: relative degeneracy threshold for the two eigenfrequencies
DEGENERACY_EPS = 1e-9
#: relative kappa perturbation callers apply to step off an exceptional point
DEGENERACY_NUDGE = 1e-6


class DegenerateSpectrumError(ValueError):
    """Raised when residue formulas would divide by a vanishing pole separation."""


@dataclass(frozen=True)
class SystemParams:
    g: float
    omega_a: float = 0.0
    omega_c: float = 0.0
    gamma: float = 0.0
    kappa: float = 1.0

    def __post_init__(self):
        vals = (self.g, self.omega_a, self.omega_c, self.gamma, self.kappa)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite system parameter in {self}")
        if self.g < 0:
            raise ValueError("g must be >= 0")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.kappa <= 0:
            raise ValueError("kappa must be > 0")

    @property
    def one_d_atom_rate(self) -> float:
        """Effective decay rate 4 g^2 / kappa of the equivalent one-dimensional atom."""
        return 4.0 * self.g**2 / self.kappa

    def nudged(self) -> SystemParams:
        """Same system with kappa moved by DEGENERACY_NUDGE (relative)."""
        return replace(self, kappa=self.kappa * (1.0 + DEGENERACY_NUDGE))


@dataclass(frozen=True)
class PulseParams:
    q: float
    d: float
    a: float | None = None
    margin: float = 5.0

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.d)) or self.d <= 0:
            raise ValueError("pulse needs finite q and d > 0")
        if self.a is None:
            object.__setattr__(self, "a", -(self.margin + 1.0) * self.d)
        if not self.a + self.margin * self.d < 0:
            raise ValueError(
                f"pulse centre a={self.a} leaves support past r=0 "
                f"(need a + {self.margin} d < 0)"
            )


@dataclass(frozen=True)
class EigenSystem:
    omega_a_t: complex
    omega_c_t: complex
    omega_1: complex
    omega_2: complex
    nu_0: complex
    nu_1: complex
    nu_2: complex
    g: float
    kappa: float
    gamma: float
    degenerate: bool = False

    @property
    def omegas(self) -> tuple[complex, complex]:
        return self.omega_1, self.omega_2

    @property
    def nus(self) -> tuple[complex, complex, complex]:
        return self.nu_0, self.nu_1, self.nu_2

    def require_nondegenerate(self):
        if self.degenerate:
            raise DegenerateSpectrumError(
                "eigenfrequencies coincide within tolerance; perturb kappa "
                "by SystemParams.nudged() before evaluating residues"
            )

    @property
    def h1(self) -> np.ndarray:
        """Non-Hermitian one-excitation Hamiltonian in the (atom, cavity) basis."""
        return np.array([[self.omega_a_t, self.g], [self.g, self.omega_c_t]])

    @property
    def h2(self) -> np.ndarray:
        """Two-excitation block in the (|e,1>, |g,2>) basis; the atom cannot hold two."""
        s = math.sqrt(2.0) * self.g
        return np.array(
            [[self.omega_a_t + self.omega_c_t, s], [s, 2.0 * self.omega_c_t]]
        )

    @property
    def decay_rates(self) -> np.ndarray:
        """Amplitude decay rates -Im of every frequency that shows up in kernels."""
        lam = [-self.omega_c_t.imag, -self.omega_1.imag, -self.omega_2.imag]
        lam += [-self.nu_1.imag, -self.nu_2.imag]
        return np.array(lam)


def _sorted_roots(roots) -> list[complex]:
    return sorted((complex(r) for r in roots), key=lambda z: (z.real, z.imag))


def complex_frequencies(p: SystemParams) -> tuple[complex, complex]:
    return complex(p.omega_a, -p.gamma / 2), complex(p.omega_c, -p.kappa / 2)


def eigenfrequencies(p: SystemParams) -> EigenSystem:
    """Complex eigenfrequencies of the coupled atom-cavity system.

    The one-excitation pair solves
    ``(w - w1)(w - w2) = (w - wa)(w - wc) - g^2``; the two-excitation triple
    solves ``(w - wa - wc)[(w - 2 wc)(w - wa - wc) - 2 g^2] = 0``.  Roots are
    ordered by real part, then imaginary part.
    """
    wa, wc = complex_frequencies(p)
    s, dlt = wa + wc, wa - wc
    disc = np.sqrt(complex(dlt * dlt / 4 + p.g**2))
    w1, w2 = _sorted_roots([s / 2 - disc, s / 2 + disc])
    scale = max(abs(w1), abs(w2), p.kappa)
    degenerate = abs(w1 - w2) < DEGENERACY_EPS * scale

    # (w - 2wc)(w - wa - wc) - 2g^2: centre at (wa + 3 wc)/2
    half = (wa - wc) / 2
    disc2 = np.sqrt(complex(half * half + 2 * p.g**2))
    centre = (wa + 3 * wc) / 2
    nu = _sorted_roots([wa + wc, centre - disc2, centre + disc2])
    return EigenSystem(
        omega_a_t=wa,
        omega_c_t=wc,
        omega_1=w1,
        omega_2=w2,
        nu_0=nu[0],
        nu_1=nu[1],
        nu_2=nu[2],
        g=p.g,
        kappa=p.kappa,
        gamma=p.gamma,
        degenerate=bool(degenerate),
    )


def nu_cubic(w, es: EigenSystem):
    """Left-hand side of the defining cubic of the two-excitation roots."""
    wa, wc = es.omega_a_t, es.omega_c_t
    return (w - wa - wc) * ((w - 2 * wc) * (w - wa - wc) - 2 * es.g**2)


def scale_params(p: SystemParams, pulse: PulseParams, alpha: float):
    """Apply the scaling law: rates times alpha, lengths divided by alpha."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    sp = SystemParams(
        g=alpha * p.g,
        omega_a=alpha * p.omega_a,
        omega_c=alpha * p.omega_c,
        gamma=alpha * p.gamma,
        kappa=alpha * p.kappa,
    )
    pp = PulseParams(
        q=alpha * pulse.q, d=pulse.d / alpha, a=pulse.a / alpha, margin=pulse.margin
    )
    return sp, pp


@dataclass(frozen=True)
class GaussianPulse:
    """Analytic one-photon Gaussian ``psi_in(r - a)`` with unit L2 norm."""

    pulse: PulseParams

    @property
    def amplitude(self) -> float:
        return (2.0 / (math.pi * self.pulse.d**2)) ** 0.25

    def __call__(self, r):
        p = self.pulse
        u = np.asarray(r, dtype=float) - p.a
        return self.amplitude * np.exp(-(u**2) / p.d**2 + 1j * p.q * u)

    def fourier(self, k):
        """``(2 pi)^-1/2 int psi(r) exp(-i k r) dr``."""
        p = self.pulse
        k = np.asarray(k, dtype=float)
        pref = self.amplitude * p.d * math.sqrt(math.pi) / math.sqrt(2 * math.pi)
        return pref * np.exp(-1j * k * p.a - (k - p.q) ** 2 * p.d**2 / 4)

    def support(self) -> tuple[float, float]:
        p = self.pulse
        return p.a - p.margin * p.d, p.a + p.margin * p.d


def gaussian_pulse(pulse: PulseParams) -> GaussianPulse:
    return GaussianPulse(pulse)


@dataclass(frozen=True)
class ProductPulse:
    """Symmetric two-photon input ``psi(r1 - a) psi(r2 - a)``."""

    factor: GaussianPulse

    def __call__(self, r1, r2):
        f1, f2 = self.factor(r1), self.factor(r2)
        # both orders summed: exchange symmetry holds bit for bit despite FMA
        return 0.5 * (f1 * f2 + f2 * f1)

    @property
    def pulse(self) -> PulseParams:
        return self.factor.pulse


def two_photon_input(pulse: PulseParams) -> ProductPulse:
    return ProductPulse(GaussianPulse(pulse))


@dataclass(frozen=True)
class OptimumPulse:
    """Single-photon pulse that the atom absorbs completely at time ``t``."""

    es: EigenSystem
    t: float
    coeff: complex = field(init=False)

    def __post_init__(self):
        es = self.es
        w1c, w2c = np.conj(es.omega_1), np.conj(es.omega_2)
        object.__setattr__(
            self, "coeff", 1j * es.g * math.sqrt(es.kappa) / (w1c - w2c)
        )

    def __call__(self, r):
        es = self.es
        r = np.asarray(r, dtype=float)
        s = r + self.t
        w1c, w2c = np.conj(es.omega_1), np.conj(es.omega_2)
        inside = (r > -self.t) & (r < 0)
        s = np.where(inside, s, 0.0)
        val = self.coeff * (np.exp(1j * w1c * s) - np.exp(1j * w2c * s))
        return np.where(inside, val, 0.0)

    def norm2(self) -> float:
        """Closed-form squared norm of the truncated pulse."""
        es = self.es
        w = np.conj(np.array([es.omega_1, es.omega_2]))
        sgn = np.array([1.0, -1.0])
        total = 0.0 + 0.0j
        for i in range(2):
            for j in range(2):
                rate = 1j * (w[i] - np.conj(w[j]))
                total += sgn[i] * sgn[j] * _expint(rate, self.t)
        return float(abs(self.coeff) ** 2 * total.real)


def _expint(rate: complex, t: float) -> complex:
    """``int_0^t exp(rate s) ds`` without cancellation for small ``rate t``."""
    z = rate * t
    if abs(z) < 1e-8:
        return t * (1 + z / 2)
    return np.expm1(z) / rate


def optimum_pulse(p: SystemParams, t: float) -> OptimumPulse:
    if not t > 0:
        raise ValueError("duration must be positive")
    es = eigenfrequencies(p)
    es.require_nondegenerate()
    return OptimumPulse(es, float(t))
