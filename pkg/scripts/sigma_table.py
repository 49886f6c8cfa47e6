#!/usr/bin/env python3
"""Print per-sigma tail masses and the matching working-point thresholds.

For each sigma band n the first column gives the percentage of a standard
normal outside n standard deviations (the one-dimensional false-positive
rate of a threshold at n). The remaining columns give the score threshold
that achieves the same false-positive rate at higher feature dimensions:
the threshold grows with dimension because squared scores follow a
chi-square law with that many degrees of freedom.

    python3 scripts/sigma_table.py --dims 1 2 10 64 1280
"""

import argparse

from gaussad.specfun import chi2_cdf, threshold_for_fpr


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sigmas", type=int, nargs="+", default=[1, 2, 3, 4, 5],
                    help="sigma bands to tabulate (default 1..5)")
    ap.add_argument("--dims", type=int, nargs="+", default=[1, 2, 10, 64, 1280],
                    help="feature dimensions for the threshold columns")
    args = ap.parse_args()

    header = ["sigma", "tail mass %"] + [f"t @ D={d}" for d in args.dims]
    rows = []
    for n in args.sigmas:
        fpr = 1.0 - chi2_cdf(1, float(n * n))
        cells = [str(n), f"{100.0 * fpr:.6g}"]
        for d in args.dims:
            cells.append(f"{threshold_for_fpr(d, fpr).threshold:.4f}")
        rows.append(cells)

    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    print("  ".join(h.rjust(w) for h, w in zip(header, widths)))
    for row in rows:
        print("  ".join(c.rjust(w) for c, w in zip(row, widths)))


if __name__ == "__main__":
    main()
