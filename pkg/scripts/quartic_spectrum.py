"""Bohr-Sommerfeld levels of p^2/2 + lam q^4 against the dense eigensolver."""
import argparse

from phaseflow import io, quantization
from phaseflow.core import Quartic


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nmax", type=int, default=10)
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--out", default="quartic_spectrum.csv")
    args = ap.parse_args(argv)

    res = quantization.bohr_sommerfeld_levels(Quartic(lam=args.lam), args.nmax, compare_exact=True)
    rows = [(qn[0], e, x, r) for qn, e, x, r in zip(res.quantum_numbers, res.energies, res.exact, res.relative_errors)]
    io.write_csv(args.out, ["n", "E_semiclassical", "E_exact", "rel_error"], rows)
    for n, _, _, r in rows:
        print(f"n={n:2d}  rel_error={r:.4f}")


if __name__ == "__main__":
    main()
