"""Two-photon scattering off a two-level atom in a lossy one-sided cavity.

Modules
-------
model
    Parameters, complex eigenfrequencies, input pulses, scaling law.
residues
    Iterated residue integration into pole-sum normal form (:class:`KernelSum`).
propagators
    One-photon propagator and the full two-photon kernel.
scattering
    Wavepacket propagation on grids, output norms and the nonlinearity beta.
oracle
    Mode-discretised brute-force evolution used for validation.
cli
    Scans, single points, oracle comparisons and optimum-pulse sweeps.
"""
from .model import (
    DegenerateSpectrumError,
    EigenSystem,
    PulseParams,
    SystemParams,
    complex_frequencies,
    eigenfrequencies,
    gaussian_pulse,
    optimum_pulse,
    scale_params,
    two_photon_input,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateSpectrumError",
    "EigenSystem",
    "PulseParams",
    "SystemParams",
    "complex_frequencies",
    "eigenfrequencies",
    "gaussian_pulse",
    "optimum_pulse",
    "scale_params",
    "two_photon_input",
]
