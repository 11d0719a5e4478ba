"""Write a flux CSV and an uncertainty CSV of synthetic spectra.

    python3 scripts/make_synthetic_spectra.py --rows 200 --out-dir data/
"""

import argparse
import csv
from pathlib import Path

from sigforest.synthetic import spectra


def write(path: Path, wavelengths, ids, values) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row_id", *(repr(float(w)) for w in wavelengths)])
        for rid, row in zip(ids, values):
            writer.writerow([rid, *(repr(float(v)) for v in row)])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=200)
    parser.add_argument("--bins", type=int, default=289)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", type=Path, default=Path("."))
    args = parser.parse_args()

    pair = spectra(args.seed, n=args.rows, bins=args.bins)
    ids = [f"sn{i:05d}" for i in range(args.rows)]
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write(args.out_dir / "flux.csv", pair.wavelengths, ids, pair.flux)
    write(args.out_dir / "uncertainty.csv", pair.wavelengths, ids, pair.uncertainty)
    print(f"wrote {args.rows} spectra with {args.bins} bins to {args.out_dir}")


if __name__ == "__main__":
    main()
