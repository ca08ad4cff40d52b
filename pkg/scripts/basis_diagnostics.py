"""Gram conditioning of the eigenfunctions and generalised coefficients of h.

Writes gram_condition.csv and h_coefficients.csv; the coefficients are the
finite-section Gram solve, which becomes unreliable once cond exceeds ~1e10.
"""

import argparse
import csv
import warnings
from pathlib import Path

import numpy as np

from singular_sl import build_factor, make_profile
from singular_sl import evolution as E
from singular_sl import spectrum as S


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=20)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fac = build_factor(make_profile("sine"), 1.0)
    eigs = S.eigen_system(fac, args.pairs)
    conds = [S.gram_condition(eigs, n) for n in range(1, len(eigs) + 1)]
    with (out / "gram_condition.csv").open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["n", "cond"])
        wr.writerows(enumerate(conds, 1))
    for n in (5, 10, 20, 30, 40):
        if n <= len(conds):
            print(f"cond(n={n:2d}) = {conds[n - 1]:.3e}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", S.IllConditionedWarning)
        n = len(eigs)
        c = S.biorthogonal_coeffs(eigs, E.test_profile_h, n)
        err = S.reconstruction_error(eigs[:n], E.test_profile_h, c)
    mu = np.array([e.eigenvalue_L for e in eigs])
    with (out / "h_coefficients.csv").open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["k", "im_mu", "re_c", "im_c", "abs_mu_c"])
        for k, (m, ck) in enumerate(zip(mu, c), 1):
            wr.writerow([k, m.imag, ck.real, ck.imag, abs(m * ck)])
    print(f"h: reconstruction error with {n} functions {err:.3e}; sum |mu c|^2 = {np.sum(np.abs(mu * c) ** 2):.4e}")


if __name__ == "__main__":
    main()
