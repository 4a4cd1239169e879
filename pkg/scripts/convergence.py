"""Grid-spacing and oracle-basis convergence at the two reference points.

    python scripts/convergence.py

Prints beta against the number of grid points per feature for the analytic
path, and the oracle discrepancy against the mode spacing.  The acceptance
tolerances were chosen from studies like this one.
"""
from twophoton import cli
from twophoton import config as cfg
from twophoton.model import PulseParams, SystemParams, eigenfrequencies
from twophoton.scattering import GaussianScatter, make_grid

POINTS = {
    "weak": (SystemParams(g=1.0, kappa=5.0), PulseParams(q=0.0, d=2.5)),
    "strong": (SystemParams(g=1.0, kappa=0.5), PulseParams(q=0.9, d=8.0)),
}


def grid_study():
    for name, (p, pulse) in POINTS.items():
        es = eigenfrequencies(p)
        ref = None
        print(f"# {name}: points per feature, n, |beta - 1|, change")
        for points in (6, 12, 24, 48, 96):
            grid = make_grid(es, pulse, points=points)
            b = GaussianScatter(es, pulse, grid).report().beta
            change = float("nan") if ref is None else abs(b - ref)
            print(f"{points:4d} {grid.n:6d} {abs(b - 1):.12f} {change:.2e}")
            ref = b


def oracle_study():
    for name, raw in [
        ("weak", {"g": "1", "kappa": "5", "q": "0", "g2d_kappa": "0.5"}),
        ("strong", {"g": "1", "kappa": "0.5", "q": "0.9", "kappa_d": "4"}),
    ]:
        print(f"# {name}: band, err_one, err_two, delta |beta-1|")
        for band in (3.0, 5.0):
            pc = cfg.point_config({**raw, "band": str(band)})
            r = cli.run_oracle_compare(pc)
            print(f"{band:4.1f} {r['err_one']:.2e} {r['err_two']:.2e} {r['delta_nonlinearity']:.2e}")


if __name__ == "__main__":
    grid_study()
    oracle_study()
