"""Propagating one- and two-photon wavepackets and measuring the nonlinearity.

Outputs live on a uniform grid in the moving frame.  Reading that grid from
large ``r`` to small ``r`` follows the interaction in time, so every causal
convolution with ``exp(i w (r - r'))``, ``r' > r``, is a right-to-left
recursion.

For a product input the nonlinear part of the two-photon output has the
time-ordered form

    psi_NL(r1, r2) = -(kappa/sqrt2) [exp(-i h1 (r1 - r2)) E(r1)]_cavity,  r1 > r2,

where ``E`` is the two-excitation amplitude left over once the linear
(bosonic) part is subtracted.  ``E`` obeys a two-component linear recursion
driven by the square of the atom amplitude, so the nonlinear output, its norm
and its overlap with the linear output all reduce to O(n) work.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    EigenSystem,
    GaussianPulse,
    ProductPulse,
    PulseParams,
    SystemParams,
    eigenfrequencies,
)
from .propagators import ModalData, OnePhotonKernel, modal_data, one_photon_kernel
from .special import exprel, gaussian_tail_exp, phi2

#: decay lengths of output tail kept beyond the input's leading edge
TAIL_LENGTHS = 20.0
#: grid points per shortest feature (pulse width or ringdown length)
POINTS_PER_FEATURE = 24
#: Gauss-Legendre nodes per grid interval for the analytic source terms
GAUSS_NODES = 8


class WindowError(RuntimeError):
    """Output tail not contained in the grid window."""


@dataclass(frozen=True)
class Grid1D:
    r_min: float
    h: float
    n: int

    def __post_init__(self):
        if not self.h > 0 or self.n < 2:
            raise ValueError("grid needs h > 0 and at least two points")

    @property
    def r(self) -> np.ndarray:
        return self.r_min + self.h * np.arange(self.n)

    @property
    def r_max(self) -> float:
        return self.r_min + self.h * (self.n - 1)

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.n, self.h)
        w[0] = w[-1] = self.h / 2
        return w

    def refined(self) -> Grid1D:
        return Grid1D(self.r_min, self.h / 2, 2 * self.n - 1)

    def extended_left(self, length: float) -> Grid1D:
        extra = int(math.ceil(length / self.h))
        return Grid1D(self.r_min - extra * self.h, self.h, self.n + extra)


def min_decay_rate(es: EigenSystem) -> float:
    """Slowest decay rate among the modes the photon can actually excite."""
    rates = es.decay_rates
    if es.g == 0:
        # the atom is decoupled; only the bare cavity rings down
        rates = rates[:1]
    return float(np.min(rates))


def make_grid(
    es: EigenSystem,
    pulse: PulseParams,
    h: float | None = None,
    tail: float = TAIL_LENGTHS,
    points: int = POINTS_PER_FEATURE,
) -> Grid1D:
    """Window from the input's trailing edge plus ``tail`` decay lengths to its leading edge.

    Anchored on the pulse centre so shifting ``a`` shifts the grid rigidly.
    """
    lam = min_decay_rate(es)
    if h is None:
        h = min(pulse.d, 1.0 / lam) / points
    right = pulse.margin * pulse.d
    left = pulse.margin * pulse.d + tail / lam
    n_right = int(math.ceil(right / h))
    n_left = int(math.ceil(left / h))
    return Grid1D(pulse.a - n_left * h, h, n_left + n_right + 1)


@dataclass
class Wavefunction1D:
    grid: Grid1D
    values: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def norm2(self) -> float:
        return float(np.sum(self.grid.weights * np.abs(self.values) ** 2))

    def to_csv(self) -> str:
        return wavefunction_csv(self)


@dataclass
class Wavefunction2D:
    """Full square of samples; ``values[i, j] = psi(r_i, r_j)``."""

    grid: Grid1D
    values: np.ndarray
    params: dict = field(default_factory=dict)

    def norm2(self) -> float:
        w = self.grid.weights
        return float(np.einsum("i,j,ij->", w, w, np.abs(self.values) ** 2))

    def asymmetry(self) -> float:
        v = self.values
        return float(np.max(np.abs(v - v.T)) / max(np.max(np.abs(v)), 1e-300))

    def to_csv(self) -> str:
        return wavefunction_csv(self)


def sample(psi, grid: Grid1D, params: dict | None = None):
    """Sample an analytic one- or two-photon input on ``grid``."""
    r = grid.r
    if isinstance(psi, ProductPulse):
        f = psi.factor(r)
        return Wavefunction2D(grid, np.outer(f, f), dict(params or {}))
    return Wavefunction1D(grid, np.asarray(psi(r), dtype=complex), dict(params or {}))


# --- CSV ---------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.16e}"


def _header(params: dict) -> str:
    return "# " + ",".join(f"{k}={_fmt(float(v))}" for k, v in sorted(params.items()))


def wavefunction_csv(psi) -> str:
    """Rows ``r[, r2], Re psi, Im psi`` in row-major grid order, LF endings."""
    buf = io.StringIO()
    buf.write(_header(psi.params) + "\n")
    r = psi.grid.r
    if isinstance(psi, Wavefunction2D):
        buf.write("r1,r2,re,im\n")
        for i in range(len(r)):
            for j in range(len(r)):
                v = psi.values[i, j]
                buf.write(f"{_fmt(r[i])},{_fmt(r[j])},{_fmt(v.real)},{_fmt(v.imag)}\n")
    else:
        buf.write("r,re,im\n")
        for x, v in zip(r, psi.values):
            buf.write(f"{_fmt(x)},{_fmt(v.real)},{_fmt(v.imag)}\n")
    return buf.getvalue()


def read_wavefunction_csv(text: str):
    """Parse :func:`wavefunction_csv` output back into a wavefunction."""
    lines = text.splitlines()
    params = {}
    if lines[0].startswith("#"):
        for item in lines[0][1:].strip().split(","):
            if item:
                k, v = item.split("=")
                params[k] = float(v)
    rows = list(csv.reader(lines[2:]))
    data = np.array(rows, dtype=float)
    if lines[1].startswith("r1"):
        r = np.unique(data[:, 0])
        n = len(r)
        vals = (data[:, 2] + 1j * data[:, 3]).reshape(n, n)
        grid = Grid1D(r[0], (r[-1] - r[0]) / (n - 1), n)
        return Wavefunction2D(grid, vals, params)
    r = data[:, 0]
    grid = Grid1D(r[0], (r[-1] - r[0]) / (len(r) - 1), len(r))
    return Wavefunction1D(grid, data[:, 1] + 1j * data[:, 2], params)


# --- sampled causal filters --------------------------------------------------


def causal_filter(values: np.ndarray, rate: complex, h: float, axis: int = -1):
    """``S(r) = int_{r'>r} exp(i rate (r - r')) f(r') dr'`` for linearly interpolated samples."""
    f = np.moveaxis(np.asarray(values, dtype=complex), axis, 0)
    z = -1j * rate * h
    decay = np.exp(z)
    w_near = h * (complex(exprel(z)) - complex(phi2(z)))
    w_far = h * complex(phi2(z))
    out = np.zeros_like(f)
    for k in range(f.shape[0] - 2, -1, -1):
        out[k] = decay * out[k + 1] + w_near * f[k] + w_far * f[k + 1]
    return np.moveaxis(out, 0, axis)


def anticausal_filter(values: np.ndarray, rate: complex, h: float, axis: int = -1):
    """``Q(r) = int_{r'<r} exp(-i rate (r - r')) f(r') dr'`` (left-to-right)."""
    f = np.moveaxis(np.asarray(values, dtype=complex), axis, 0)
    rev = causal_filter(f[::-1], rate, h, axis=0)
    return np.moveaxis(rev[::-1], 0, axis)


def _check_window(values: np.ndarray, tol: float):
    peak = np.max(np.abs(values))
    edge = np.abs(values[0]) if values.ndim == 1 else np.max(np.abs(values[0]))
    if peak > 0 and edge > tol * peak:
        raise WindowError(
            f"output tail reaches the window edge ({edge / peak:.2e} of peak); "
            "enlarge the grid toward negative r"
        )


# --- one photon ---------------------------------------------------------------


def propagate_one(
    psi,
    kernel: OnePhotonKernel,
    grid: Grid1D | None = None,
    window_tol: float = 1e-6,
) -> Wavefunction1D:
    """One-photon output ``psi_out(r) = int G(r - r') psi_in(r') dr'``.

    ``psi`` is either a :class:`GaussianPulse` (closed form via the scaled
    complementary error function) or a sampled :class:`Wavefunction1D`, in
    which case the grid is extended toward negative ``r`` to hold the tail.
    """
    es = kernel.es
    if isinstance(psi, GaussianPulse):
        p = psi.pulse
        grid = grid or make_grid(es, p)
        r = grid.r
        out = psi(r)
        for amp, rate in zip(kernel.amps, kernel.rates):
            out = out + amp * gaussian_tail_exp(r, rate, p.q, p.d, p.a)
        return Wavefunction1D(grid, out)
    if grid is None:
        grid = psi.grid.extended_left(TAIL_LENGTHS / min_decay_rate(es))
    vals = _regrid(psi, grid)
    out = vals.copy()
    for amp, rate in zip(kernel.amps, kernel.rates):
        out = out + amp * causal_filter(vals, rate, grid.h)
    _check_window(out, window_tol)
    return Wavefunction1D(grid, out, dict(psi.params))


def _regrid(psi, grid: Grid1D) -> np.ndarray:
    """Zero-pad samples onto a grid that shares the input's spacing and points."""
    src = psi.grid
    if not math.isclose(src.h, grid.h, rel_tol=1e-12):
        raise ValueError("regridding only supports a common spacing")
    off = int(round((src.r_min - grid.r_min) / grid.h))
    if off < 0 or off + src.n > grid.n:
        raise ValueError("input grid must lie inside the output grid")
    shape = (grid.n,) * psi.values.ndim
    out = np.zeros(shape, dtype=complex)
    sl = tuple(slice(off, off + src.n) for _ in range(psi.values.ndim))
    out[sl] = psi.values
    return out


# --- two photons ----------------------------------------------------------------


def _apply_one_photon_axis(vals, kernel, h, axis):
    out = vals.copy()
    for amp, rate in zip(kernel.amps, kernel.rates):
        out = out + amp * causal_filter(vals, rate, h, axis=axis)
    return out


def propagate_linear(psi, kernel: OnePhotonKernel, grid: Grid1D | None = None):
    """Linear reference output: the one-photon propagator on each coordinate."""
    if isinstance(psi, ProductPulse):
        one = propagate_one(psi.factor, kernel, grid)
        return Wavefunction2D(one.grid, np.outer(one.values, one.values))
    if grid is None:
        grid = psi.grid.extended_left(TAIL_LENGTHS / min_decay_rate(kernel.es))
    vals = _regrid(psi, grid)
    vals = _apply_one_photon_axis(vals, kernel, grid.h, 0)
    vals = _apply_one_photon_axis(vals, kernel, grid.h, 1)
    return Wavefunction2D(grid, vals, dict(psi.params))


def _nonlinear_square(eps: np.ndarray, md: ModalData, r: np.ndarray) -> np.ndarray:
    """Fill ``psi_NL`` on the grid square from the modal amplitudes ``eps[j](r1)``."""
    kappa = md.es.kappa
    diff = r[:, None] - r[None, :]
    lower = diff >= 0
    dpos = np.where(lower, diff, 0.0)
    val = np.zeros(diff.shape, dtype=complex)
    for j in range(2):
        val += md.v[1, j] * eps[j][:, None] * np.exp(-1j * md.omega[j] * dpos)
    val *= -kappa / math.sqrt(2.0)
    val = np.where(lower, val, 0.0)
    return val + val.T - np.diag(np.diag(val))


def _pair_recursion(md: ModalData, h: float, n: int, source_nodes, source_grid=None):
    """Right-to-left recursion for the modal two-excitation amplitudes ``e_m(r_k)``.

    ``source_nodes`` is ``f`` at Gauss nodes, shape (n-1, GAUSS_NODES); when
    ``source_grid`` is given instead, ``f`` is linearly interpolated.
    """
    e = np.zeros((2, n), dtype=complex)
    if source_grid is None:
        x, w = _gauss()
    for m in range(2):
        nu = md.nu[m]
        decay = np.exp(-1j * nu * h)
        if source_grid is None:
            src = source_nodes @ (h * w * np.exp(-1j * nu * h * x))
        else:
            z = -1j * nu * h
            near = h * (complex(exprel(z)) - complex(phi2(z)))
            far = h * complex(phi2(z))
            src = near * source_grid[:-1] + far * source_grid[1:]
        src = md.pair_drive[m] * src
        acc = 0.0j
        col = e[m]
        for k in range(n - 2, -1, -1):
            acc = decay * acc + src[k]
            col[k] = acc
    return e


def _gauss():
    x, w = np.polynomial.legendre.leggauss(GAUSS_NODES)
    return (x + 1) / 2, w / 2


def _eps_from_e(md: ModalData, e: np.ndarray) -> np.ndarray:
    return md.vinv @ (md.u @ e)


def propagate_two(psi, kernel: OnePhotonKernel, grid: Grid1D | None = None):
    """Full two-photon output ``int G(r1, r2; r1', r2') psi_in(r1', r2')``.

    Product Gaussian inputs use closed-form sources at Gauss nodes; sampled
    inputs use linear interpolation throughout (second order in ``h``).
    """
    es = kernel.es
    md = modal_data(es)
    if isinstance(psi, ProductPulse):
        state = GaussianScatter(es, psi.pulse, grid)
        return Wavefunction2D(state.grid, state.output_square())
    lin = propagate_linear(psi, kernel, grid)
    grid = lin.grid
    vals = _regrid(psi, grid)
    atom = md.v[0] * md.load
    filt = [causal_filter(vals, md.omega[j], grid.h, axis=0) for j in range(2)]
    f = np.zeros(grid.n, dtype=complex)
    for j in range(2):
        for l in range(2):
            both = causal_filter(filt[j], md.omega[l], grid.h, axis=1)
            f += atom[j] * atom[l] * np.diagonal(both)
    e = _pair_recursion(md, grid.h, grid.n, None, source_grid=f)
    eps = _eps_from_e(md, e)
    out = lin.values + _nonlinear_square(eps, md, grid.r)
    _check_window(out, 1e-6)
    return Wavefunction2D(grid, out, dict(psi.params))


def norm2(psi) -> float:
    return psi.norm2()


def beta(psi_out: Wavefunction2D, psi_lin: Wavefunction2D) -> complex:
    """Normalised overlap of the true and the linear two-photon outputs."""
    w = psi_out.grid.weights
    ww = np.outer(w, w)
    n_out = float(np.sum(ww * np.abs(psi_out.values) ** 2))
    n_lin = float(np.sum(ww * np.abs(psi_lin.values) ** 2))
    if n_out <= 0 or n_lin <= 0:
        raise ValueError("beta needs two wavefunctions with nonzero norm")
    ov = np.sum(ww * np.conj(psi_lin.values) * psi_out.values)
    return complex(ov / math.sqrt(n_out * n_lin))


# --- analytic-source Gaussian path ----------------------------------------------


@dataclass
class ScatterReport:
    beta: complex
    norm_out: float
    norm_lin: float
    norm_one: float
    beta_err: float = float("nan")
    n_grid: int = 0

    @property
    def nonlinearity(self) -> float:
        return abs(self.beta - 1)


class GaussianScatter:
    """Two-photon scattering of a product Gaussian with O(n) modal recursions."""

    def __init__(self, es: EigenSystem, pulse: PulseParams, grid: Grid1D | None = None):
        self.es = es
        self.pulse = pulse
        self.md = modal_data(es)
        self.kernel = one_photon_kernel(es)
        self.grid = grid or make_grid(es, pulse)
        self._run()

    def _one_and_atom(self, r):
        p = self.pulse
        psi = GaussianPulse(p)(r)
        one = psi.astype(complex)
        for amp, rate in zip(self.kernel.amps, self.kernel.rates):
            one = one + amp * gaussian_tail_exp(r, rate, p.q, p.d, p.a)
        atom = np.zeros_like(one)
        for j in range(2):
            weight = self.md.v[0, j] * self.md.load[j]
            if weight != 0:
                tail = gaussian_tail_exp(r, self.md.omega[j], p.q, p.d, p.a)
                atom = atom + weight * tail
        return one, atom

    def _run(self):
        g = self.grid
        r = g.r
        x, _ = _gauss()
        nodes = (r[:-1, None] + g.h * x[None, :]).ravel()
        self.one, _ = self._one_and_atom(r)
        one_n, atom_n = self._one_and_atom(nodes)
        shape = (g.n - 1, GAUSS_NODES)
        e = _pair_recursion(self.md, g.h, g.n, (atom_n**2).reshape(shape))
        self.eps = _eps_from_e(self.md, e)
        self._one_nodes = one_n.reshape(shape)

    def output_square(self) -> np.ndarray:
        lin = np.outer(self.one, self.one)
        return lin + _nonlinear_square(self.eps, self.md, self.grid.r)

    def linear_square(self) -> np.ndarray:
        return np.outer(self.one, self.one)

    def report(self) -> ScatterReport:
        md, g = self.md, self.grid
        w = g.weights
        kappa = self.es.kappa
        n_one = float(np.sum(w * np.abs(self.one) ** 2))
        x, gw = _gauss()
        # Q_j(r) = int_{r'<r} conj(psi1(r')) exp(-i w_j (r - r')) dr'
        overlap = 0.0j
        for j in range(2):
            om = md.omega[j]
            src = np.conj(self._one_nodes) @ (g.h * gw * np.exp(-1j * om * g.h * (1 - x)))
            decay = np.exp(-1j * om * g.h)
            q = np.zeros(g.n, dtype=complex)
            acc = 0.0j
            for k in range(g.n - 1):
                acc = decay * acc + src[k]
                q[k + 1] = acc
            overlap += md.v[1, j] * np.sum(w * np.conj(self.one) * self.eps[j] * q)
        overlap *= 2 * (-kappa / math.sqrt(2.0))
        nl2 = 0.0j
        for j in range(2):
            for l in range(2):
                weight = md.v[1, j] * np.conj(md.v[1, l])
                if weight == 0:  # decoupled atom: no cavity projection, maybe no decay
                    continue
                rate = 1j * (md.omega[j] - np.conj(md.omega[l]))
                nl2 += (
                    weight
                    / rate
                    * np.sum(w * self.eps[j] * np.conj(self.eps[l]))
                )
        nl2 = float((kappa**2 * nl2).real)
        n_lin = n_one**2
        n_out = n_lin + 2 * overlap.real + nl2
        b = (n_lin + overlap) / math.sqrt(n_out * n_lin)
        return ScatterReport(complex(b), n_out, n_lin, n_one, n_grid=g.n)


def scatter_gaussian(
    p: SystemParams, pulse: PulseParams, h: float | None = None, error_estimate: bool = True
) -> ScatterReport:
    """Beta and output norms for a product Gaussian input.

    With ``error_estimate`` the computation is repeated at half the grid
    spacing and ``beta_err`` is the change in beta.
    """
    es = eigenfrequencies(p)
    if es.degenerate:
        es = eigenfrequencies(p.nudged())
    grid = make_grid(es, pulse, h)
    rep = GaussianScatter(es, pulse, grid).report()
    if error_estimate:
        fine = GaussianScatter(es, pulse, grid.refined()).report()
        fine.beta_err = abs(fine.beta - rep.beta)
        return fine
    return rep
