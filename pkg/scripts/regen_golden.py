"""Regenerate the KernelSum golden dumps used by tests/test_residues.py.

Run only after an intentional change to the residue engine, and review the diff.
"""
from pathlib import Path

from twophoton.model import SystemParams, eigenfrequencies
from twophoton.propagators import i_kernel, one_photon_kernel

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"
PARAMS = SystemParams(g=1.0, kappa=5.0, gamma=0.3, omega_a=0.2)


def main():
    es = eigenfrequencies(PARAMS)
    GOLDEN.mkdir(parents=True, exist_ok=True)
    (GOLDEN / "one_photon.txt").write_text(one_photon_kernel(es).kernel_sum().dump())
    for which in (4, 6, 8):
        (GOLDEN / f"I{which}.txt").write_text(i_kernel(which, es).dump())
    print(f"wrote golden dumps to {GOLDEN}")


if __name__ == "__main__":
    main()
