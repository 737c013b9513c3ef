"""Write STO-3G FCIDUMP files for the trapezoidal H4 model (needs pyscf).

Atoms sit on an isosceles trapezoid with three sides of length ``a``:
``alpha = 0.5`` is a linear chain, ``alpha -> 0`` approaches a square.

    python scripts/make_h4_fcidump.py data/h4 0.005 0.5
"""

import argparse
from pathlib import Path

import numpy as np
from pyscf import fci, gto, scf
from pyscf.tools import fcidump


def h4_geometry(alpha: float, a: float = 2.0) -> list[tuple[str, tuple[float, float, float]]]:
    th = alpha * np.pi
    pts = [(-a / 2 - a * np.sin(th), a * np.cos(th)), (-a / 2, 0.0),
           (a / 2, 0.0), (a / 2 + a * np.sin(th), a * np.cos(th))]
    return [("H", (x, y, 0.0)) for x, y in pts]


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("out", type=Path)
    p.add_argument("alphas", type=float, nargs="+")
    p.add_argument("--bond", type=float, default=2.0, help="side length in bohr")
    args = p.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for alpha in args.alphas:
        mol = gto.M(atom=h4_geometry(alpha, args.bond), basis="sto-3g", unit="Bohr", verbose=0)
        mf = scf.RHF(mol).run()
        path = args.out / f"h4_alpha{alpha:.3f}.fcidump"
        fcidump.from_scf(mf, str(path), tol=1e-15)
        e_fci = fci.FCI(mf).kernel()[0]
        print(f"{path}: E_RHF={mf.e_tot:.8f} E_FCI={e_fci:.8f}")


if __name__ == "__main__":
    main()
