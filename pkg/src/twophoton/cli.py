"""Command-line driver: parameter scans, single points, oracle comparisons, optimum pulses.

Usage::

    python -m twophoton scan --config configs/fig2.cfg --out fig2.csv --workers 4
    python -m twophoton norms --config configs/fig4.cfg --out fig4.csv
    python -m twophoton single --config configs/single-strong.cfg --out single/
    python -m twophoton oracle-compare --config configs/oracle-weak.cfg --out weak.csv
    python -m twophoton pulse --config configs/pulse-weak.cfg --out pulse-weak.csv

Exit status is 0 on success, 2 when any row is tolerance-flagged and 1 on a
hard error.  Data files never contain timestamps; run metadata is written to a
``<out>.meta.json`` sidecar.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.signal import fftconvolve

from . import __version__, oracle
from . import config as cfg
from .model import (
    GaussianPulse,
    PulseParams,
    SystemParams,
    eigenfrequencies,
    optimum_pulse,
)
from .propagators import one_photon_kernel
from .scattering import (
    GaussianScatter,
    Grid1D,
    Wavefunction1D,
    Wavefunction2D,
    WindowError,
    make_grid,
    propagate_one,
    scatter_gaussian,
)

log = logging.getLogger("twophoton")

EXIT_OK, EXIT_ERROR, EXIT_FLAGGED = 0, 1, 2

#: speed of light in m/s, for the length-unit helper
SPEED_OF_LIGHT = 299_792_458.0

SCAN_COLUMNS = [
    "kappa_g", "q_g", "gamma_g", "detuning_g", "g2d_kappa", "kappa_d", "gd",
    "re_beta", "im_beta", "abs_beta_minus_1", "norm_out", "norm_lin",
    "beta_err", "flag",
]
NORM_COLUMNS = [
    "kappa_g", "q_g", "gamma_g", "detuning_g", "g2d_kappa", "kappa_d", "gd",
    "norm_out", "norm_lin", "norm_one", "abs_beta_minus_1", "beta_err", "flag",
]


# --- scans -------------------------------------------------------------------------


@dataclass(frozen=True)
class ScanPoint:
    kappa_g: float
    q_g: float
    gamma_g: float
    detuning_g: float
    d: float
    tolerance: float
    error_estimate: bool
    margin: float

    def system(self) -> SystemParams:
        return SystemParams(
            g=1.0, omega_a=self.detuning_g, omega_c=0.0, gamma=self.gamma_g, kappa=self.kappa_g
        )

    def pulse(self) -> PulseParams:
        return PulseParams(q=self.q_g, d=self.d, margin=self.margin)


def evaluate_point(pt: ScanPoint) -> dict:
    """Beta and norms at one scan point; failures become flagged rows, not exceptions."""
    out = {
        "kappa_g": pt.kappa_g, "q_g": pt.q_g, "gamma_g": pt.gamma_g,
        "detuning_g": pt.detuning_g, "g2d_kappa": pt.d / pt.kappa_g,
        "kappa_d": pt.kappa_g * pt.d, "gd": pt.d,
    }
    try:
        rep = scatter_gaussian(pt.system(), pt.pulse(), error_estimate=pt.error_estimate)
    except (WindowError, ValueError, FloatingPointError) as exc:
        log.warning("point %s failed: %s", out, exc)
        nan = float("nan")
        out.update(re_beta=nan, im_beta=nan, abs_beta_minus_1=nan, norm_out=nan,
                   norm_lin=nan, norm_one=nan, beta_err=nan, flag=1)
        return out
    err = rep.beta_err if pt.error_estimate else 0.0
    flag = (
        not np.isfinite(rep.beta)
        or abs(rep.beta) > 1 + 1e-12
        or (pt.error_estimate and not err <= pt.tolerance)
    )
    out.update(
        re_beta=rep.beta.real, im_beta=rep.beta.imag, abs_beta_minus_1=abs(rep.beta - 1),
        norm_out=rep.norm_out, norm_lin=rep.norm_lin, norm_one=rep.norm_one,
        beta_err=err, flag=int(flag),
    )
    return out


def scan_points(conf: cfg.ScanConfig) -> list[ScanPoint]:
    pts = []
    for kg, qg, gg, dg in conf.curves():
        for v in conf.sweep_values():
            d = cfg.pulse_length(conf.sweep, float(v), kg)
            pts.append(ScanPoint(kg, qg, gg, dg, d, conf.tolerance, conf.error_estimate, conf.margin))
    return pts


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves input order regardless of completion order
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def run_scan(conf: cfg.ScanConfig, workers: int = 1, columns=SCAN_COLUMNS) -> cfg.Table:
    rows = _map(evaluate_point, scan_points(conf), workers)
    table = cfg.Table(list(columns))
    for r in rows:
        table.rows.append([r[c] if c != "flag" else int(r[c]) for c in columns])
    return table


def run_norms(conf: cfg.ScanConfig, workers: int = 1) -> cfg.Table:
    return run_scan(conf, workers, NORM_COLUMNS)


# --- single point ------------------------------------------------------------------


def length_in_metres(d: float, light_speed: float = SPEED_OF_LIGHT) -> float:
    """Convert a pulse length given in time units (rates in 1/s) to metres."""
    return d * light_speed


def optimum_length(g: float, kappa: float, g2d_kappa: float = 0.5,
                   light_speed: float = SPEED_OF_LIGHT) -> float:
    """Pulse length in metres at ``g^2 d / kappa = g2d_kappa``, rates in 1/s."""
    return length_in_metres(g2d_kappa * kappa / g**2, light_speed)


@dataclass
class SingleReport:
    params: SystemParams
    pulse: PulseParams
    eigen: dict
    beta: complex
    beta_err: float
    norm_one: float
    norm_out: float
    norm_lin: float
    length: float | None

    def lines(self) -> list[str]:
        out = [f"{k} = {v}" for k, v in asdict(self.params).items()]
        out += [f"q = {self.pulse.q}", f"d = {self.pulse.d}", f"a = {self.pulse.a}"]
        for k, v in self.eigen.items():
            out.append(f"{k} = {v.real:.12g}{v.imag:+.12g}j")
        out += [
            f"beta = {self.beta.real:.12g}{self.beta.imag:+.12g}j",
            f"abs_beta_minus_1 = {abs(self.beta - 1):.12g}",
            f"beta_err = {self.beta_err:.3g}",
            f"norm_one = {self.norm_one:.12g}",
            f"norm_out = {self.norm_out:.12g}",
            f"norm_lin = {self.norm_lin:.12g}",
        ]
        if self.length is not None:
            out.append(f"d_length = {self.length:.6g}")
        return out


def _params_dict(p: SystemParams, pulse: PulseParams) -> dict:
    return {**asdict(p), "q": pulse.q, "d": pulse.d, "a": pulse.a}


def run_single(pc: cfg.PointConfig, out_dir: Path | None = None) -> SingleReport:
    p = SystemParams(g=pc.g, omega_a=pc.omega_a, omega_c=pc.omega_c, gamma=pc.gamma, kappa=pc.kappa)
    pulse = PulseParams(q=pc.q, d=pc.pulse_d, margin=pc.margin)
    es = eigenfrequencies(p)
    eigen = {"omega_a_t": es.omega_a_t, "omega_c_t": es.omega_c_t,
             "omega_1": es.omega_1, "omega_2": es.omega_2,
             "nu_0": es.nu_0, "nu_1": es.nu_1, "nu_2": es.nu_2}
    if p.g == 0:
        # no atom: the output is the linear output, beta is exactly one
        one = propagate_one(GaussianPulse(pulse), one_photon_kernel(es))
        n1 = one.norm2()
        rep = SingleReport(p, pulse, eigen, 1 + 0j, 0.0, n1, n1 * n1, n1 * n1, None)
        scatter = None
    else:
        r = scatter_gaussian(p, pulse)
        rep = SingleReport(p, pulse, eigen, r.beta, r.beta_err, r.norm_one, r.norm_out, r.norm_lin, None)
        scatter = GaussianScatter(es if not es.degenerate else eigenfrequencies(p.nudged()), pulse)
    if pc.light_speed is not None:
        rep.length = length_in_metres(pulse.d, pc.light_speed)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        params = _params_dict(p, pulse)
        grid = make_grid(es if not es.degenerate else eigenfrequencies(p.nudged()), pulse)
        psi_in = Wavefunction1D(grid, GaussianPulse(pulse)(grid.r).astype(complex), params)
        _write(out_dir / "psi_in.csv", psi_in.to_csv())
        if scatter is not None:
            one = Wavefunction1D(scatter.grid, scatter.one, params)
            _write(out_dir / "psi_one.csv", one.to_csv())
            s = max(1, pc.csv_stride)
            sub = Grid1D(scatter.grid.r_min, scatter.grid.h * s, (scatter.grid.n - 1) // s + 1)
            full = scatter.output_square()[::s, ::s]
            lin = scatter.linear_square()[::s, ::s]
            _write(out_dir / "psi_out.csv", Wavefunction2D(sub, full, params).to_csv())
            _write(out_dir / "psi_lin.csv", Wavefunction2D(sub, lin, params).to_csv())
        _write(out_dir / "report.txt", "\n".join(rep.lines()) + "\n")
    return rep


# --- oracle comparison ---------------------------------------------------------------


def run_oracle_compare(pc: cfg.PointConfig, out_dir: Path | None = None) -> dict:
    """Analytic against mode-discretised outputs at one point.

    Returns relative L2 discrepancies of the one- and two-photon outputs, both
    betas, and a ``flag`` set when any discrepancy exceeds its tolerance.
    """
    p = SystemParams(g=pc.g, omega_a=pc.omega_a, omega_c=pc.omega_c, gamma=pc.gamma, kappa=pc.kappa)
    pulse = PulseParams(q=pc.q, d=pc.pulse_d, margin=pc.margin)
    settings = oracle.OracleSettings(
        band=pc.band, ringdown=pc.ringdown, ring_margin=pc.ring_margin, compensate=pc.compensate
    )
    es = eigenfrequencies(p)
    if es.degenerate:
        es = eigenfrequencies(p.nudged())
    # the two-photon comparison uses a coarser grid: the square costs n^2
    grid = make_grid(es, pulse, points=8)
    t0 = time.perf_counter()
    if p.g > 0:
        gs = GaussianScatter(es, pulse, grid)
        ana_one = gs.one
        ana_two = gs.output_square()
        beta_ana = gs.report().beta
    else:
        ana_one = propagate_one(GaussianPulse(pulse), one_photon_kernel(es), grid).values
        ana_two = np.outer(ana_one, ana_one)
        beta_ana = 1 + 0j
    t_ana = time.perf_counter() - t0
    t0 = time.perf_counter()
    run1 = oracle.run(p, pulse, grid, 1, settings)
    run2 = oracle.run(p, pulse, grid, 2, settings)
    t_orc = time.perf_counter() - t0
    mask = oracle.window_mask(grid, min(run1.t, run2.t))
    err1 = oracle.relative_l2(run1.output.values, ana_one, grid, mask)
    err2 = oracle.relative_l2(run2.output.values, ana_two, grid, mask)
    w = grid.weights * mask
    ww = np.outer(w, w)
    out2 = run2.output.values
    lin2 = np.outer(run1.output.values, run1.output.values)
    beta_orc = np.sum(ww * np.conj(lin2) * out2) / math.sqrt(
        np.sum(ww * abs(out2) ** 2) * np.sum(ww * abs(lin2) ** 2)
    )
    dnl = abs(abs(beta_orc - 1) - abs(beta_ana - 1))
    flag = (
        err1 > pc.tolerance_one
        or err2 > pc.tolerance_two
        or dnl > pc.tolerance_beta * (1 + abs(beta_ana - 1))
    )
    result = {
        "kappa": p.kappa, "g": p.g, "gamma": p.gamma, "q": pulse.q, "d": pulse.d,
        "n_modes": run2.basis.n_b, "t_run": run2.t,
        "err_one": err1, "err_two": err2,
        "abs_beta_minus_1_analytic": abs(beta_ana - 1),
        "abs_beta_minus_1_oracle": abs(beta_orc - 1),
        "delta_nonlinearity": dnl,
        "norm_one_oracle": float(np.sum(w * abs(run1.output.values) ** 2)),
        "norm_two_oracle": float(np.sum(ww * abs(out2) ** 2)),
        "seconds_analytic": t_ana, "seconds_oracle": t_orc,
        "flag": int(flag),
    }
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        params = _params_dict(p, pulse)
        _write(out_dir / "oracle_one.csv", Wavefunction1D(grid, run1.output.values, params).to_csv())
        _write(out_dir / "analytic_one.csv", Wavefunction1D(grid, ana_one, params).to_csv())
    return result


# --- optimum pulse ---------------------------------------------------------------------


@dataclass
class PulseReport:
    q: float
    d: float
    a: float
    overlap: float
    phi_norm: float
    table: cfg.Table
    phi: Wavefunction1D
    ridge: cfg.Table


def _gaussian_overlaps(phi_vals, r, h, q, d):
    """``|<phi|psi_in(. - a)>|^2`` for every grid shift ``a``."""
    amp = (2.0 / (math.pi * d * d)) ** 0.25
    half = int(math.ceil(6 * d / h))
    x = h * np.arange(-half, half + 1)
    psi = amp * np.exp(-(x**2) / d**2 + 1j * q * x)
    corr = fftconvolve(np.conj(phi_vals), psi[::-1], mode="same") * h
    return np.abs(corr) ** 2


def run_pulse(pc: cfg.PulseSweepConfig) -> PulseReport:
    """Overlap of shifted Gaussians with the optimum pulse over the (q, d) sweep.

    For every (q, d) the best shift ``a`` is found by cross-correlation; the
    global best is optionally polished by a local search in (q, d, a).
    """
    p = SystemParams(g=1.0, gamma=pc.gamma_g, kappa=pc.kappa_g)
    phi = optimum_pulse(p, pc.t)
    r = np.linspace(-pc.t, 0.0, pc.samples)
    h = r[1] - r[0]
    norm = phi.norm2()
    vals = phi(r) / math.sqrt(norm)
    table = cfg.Table(["q_g", "d_g", "a_g", "overlap"])
    ridge = cfg.Table(["q_g", "d_g", "a_g", "overlap"])
    best = (-1.0, 0.0, 0.0, 0.0)
    for q in pc.q_values():
        row_best = (-1.0, 0.0, 0.0, 0.0)
        for d in pc.d_values():
            ov = _gaussian_overlaps(vals, r, h, q, d)
            k = int(np.argmax(ov))
            entry = (float(ov[k]), float(q), float(d), float(r[k]))
            table.rows.append([entry[1], entry[2], entry[3], entry[0]])
            row_best = max(row_best, entry)
        ridge.rows.append([row_best[1], row_best[2], row_best[3], row_best[0]])
        best = max(best, row_best)
    ov, q, d, a = best
    if pc.refine:
        def neg(x):
            qq, ld, aa = x
            dd = math.exp(ld)
            amp = (2.0 / (math.pi * dd * dd)) ** 0.25
            psi = amp * np.exp(-((r - aa) ** 2) / dd**2 + 1j * qq * (r - aa))
            return -abs(np.sum(np.conj(vals) * psi) * h) ** 2

        res = minimize(neg, [q, math.log(d), a], method="Nelder-Mead",
                       options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000})
        if -res.fun >= ov:
            q, d, a, ov = float(res.x[0]), float(math.exp(res.x[1])), float(res.x[2]), float(-res.fun)
    params = {"g": 1.0, "kappa": pc.kappa_g, "gamma": pc.gamma_g, "t": pc.t}
    phi_wf = Wavefunction1D(Grid1D(r[0], h, len(r)), phi(r), params)
    return PulseReport(q, d, a, ov, norm, table, phi_wf, ridge)


# --- plotting helper ---------------------------------------------------------------------


def gnuplot_script(csv_path: str, table: cfg.Table, x: str, y: str, group: list[str]) -> str:
    """A gnuplot script drawing ``y`` against ``x``, one line per parameter group."""
    ix = table.columns.index(x) + 1
    iy = table.columns.index(y) + 1
    keys = sorted({tuple(row[table.columns.index(g)] for g in group) for row in table.rows})
    cond = []
    for key in keys:
        test = " && ".join(
            f"abs(${table.columns.index(g) + 1}-{v!r})<1e-12" for g, v in zip(group, key)
        )
        title = ", ".join(f"{g}={v:g}" for g, v in zip(group, key))
        cond.append(f"'{csv_path}' using {ix}:(({test}) ? ${iy} : 1/0) with lines title '{title}'")
    return (
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set logscale x\n"
        f"set xlabel '{x}'\nset ylabel '{y}'\n"
        "plot " + ", \\\n     ".join(cond) + "\n"
    )


# --- entry point --------------------------------------------------------------------------


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        _write(Path(out), text)


def _sidecar(out: str | None, meta: dict):
    if out is None:
        return
    path = Path(str(out).rstrip("/") + ".meta.json")
    meta = {
        **meta,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    _write(path, json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twophoton", description=__doc__.split("\n")[0])
    ap.add_argument("--log-level", default="WARNING")
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb, text in [
        ("scan", "beta along a sweep of pulse lengths"),
        ("norms", "output norms along a sweep of pulse lengths"),
        ("single", "full report and wavefunction CSVs for one point"),
        ("oracle-compare", "analytic against mode-discretised outputs"),
        ("pulse", "Gaussian overlaps with the optimum pulse"),
    ]:
        sp = sub.add_parser(verb, help=text)
        sp.add_argument("--config", required=True, help="key = value configuration file")
        sp.add_argument("--out", help="output file (scan/norms/pulse/oracle-compare) or directory (single)")
        sp.add_argument("--workers", type=int, default=1, help="parallel scan points")
        sp.add_argument("--tolerance", type=float, help="override the config's tolerance")
        if verb in ("scan", "norms"):
            sp.add_argument("--gnuplot", help="also write a gnuplot script here")
    return ap


def _main(args) -> int:
    raw = cfg.load(args.config)
    started = time.perf_counter()
    meta = {"verb": args.verb, "config": str(args.config), "settings": raw}
    if args.verb in ("scan", "norms"):
        if args.tolerance is not None:
            raw = {**raw, "tolerance": repr(args.tolerance)}
        conf = cfg.scan_config(raw)
        table = run_scan(conf, args.workers) if args.verb == "scan" else run_norms(conf, args.workers)
        _emit(table.to_csv(), args.out)
        flagged = int(sum(table.column("flag")))
        if args.gnuplot and args.out:
            x = conf.sweep
            y = "abs_beta_minus_1" if args.verb == "scan" else "norm_out"
            _write(Path(args.gnuplot), gnuplot_script(args.out, table, x, y, ["kappa_g", "q_g", "gamma_g"]))
        meta.update(rows=len(table.rows), flagged=flagged)
    elif args.verb == "single":
        pc = cfg.point_config(raw)
        rep = run_single(pc, Path(args.out) if args.out else None)
        sys.stdout.write("\n".join(rep.lines()) + "\n")
        flagged = int(args.tolerance is not None and rep.beta_err > args.tolerance)
        meta.update(flagged=flagged)
    elif args.verb == "oracle-compare":
        if args.tolerance is not None:
            raw = {**raw, "tolerance_two": repr(args.tolerance)}
        pc = cfg.point_config(raw)
        res = run_oracle_compare(pc)
        table = cfg.Table(list(res), [list(res.values())])
        _emit(table.to_csv(), args.out)
        if args.out:
            sys.stdout.write("".join(f"{k} = {v}\n" for k, v in res.items()))
        flagged = res["flag"]
        meta.update(flagged=flagged)
    else:
        pc = cfg.pulse_config(raw)
        rep = run_pulse(pc)
        _emit(rep.table.to_csv(), args.out)
        if args.out:
            stem = Path(args.out)
            _write(stem.with_suffix(".phi.csv"), rep.phi.to_csv())
            _write(stem.with_suffix(".ridge.csv"), rep.ridge.to_csv())
        sys.stdout.write(
            f"best_q_g = {rep.q:.8g}\nbest_d_g = {rep.d:.8g}\nbest_a_g = {rep.a:.8g}\n"
            f"best_overlap = {rep.overlap:.8g}\nphi_norm = {rep.phi_norm:.10g}\n"
        )
        flagged = 0
        meta.update(best={"q": rep.q, "d": rep.d, "a": rep.a, "overlap": rep.overlap})
    meta["seconds"] = time.perf_counter() - started
    _sidecar(args.out, meta)
    return EXIT_FLAGGED if flagged else EXIT_OK


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return _main(args)
    except (cfg.ConfigError, OSError, ValueError, RuntimeError) as exc:
        log.error("%s", exc)
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
