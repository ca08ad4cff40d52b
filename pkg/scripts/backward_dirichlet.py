"""Dirichlet problem on a sub-interval of (-pi, 0), where eps f < 0.

There the equation d_t u = L u is backward-parabolic.  The script reports the
growth factor of the Crank-Nicolson step and of a smooth bump after a short
time as the grid is refined; unbounded growth with nx is the discrete trace of
ill-posedness.  No conclusion about existence is drawn.
"""

import argparse
import json
from pathlib import Path

import numpy as np
from scipy.sparse import identity
from scipy.sparse.linalg import splu

from singular_sl import build_factor, make_profile
from singular_sl.evolution import _fd_operator


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=1.0)
    ap.add_argument("--T", type=float, default=0.01)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    fac = build_factor(make_profile("sine"), args.eps)
    a, b = -2.5, -0.5
    rows = []
    for nx in (25, 50, 100, 200):
        x, A = _fd_operator(fac, a, b, nx)
        nt = 50
        dt = args.T / nt
        eye = identity(A.shape[0], format="csc")
        lu = splu((eye - 0.5 * dt * A).tocsc())
        B = eye + 0.5 * dt * A
        u = np.exp(-20 * (x[1:-1] + 1.5) ** 2) * (x[1:-1] - a) * (b - x[1:-1])
        n0 = np.linalg.norm(u) * np.sqrt(x[1] - x[0])
        for _ in range(nt):
            u = lu.solve(B @ u)
        growth = float(np.linalg.norm(u) * np.sqrt(x[1] - x[0]) / n0)
        lam_max = float(np.max(np.linalg.eigvals(A.toarray()).real))
        rows.append({"nx": nx, "max_re_eig": lam_max, "l2_growth": growth})
        print(f"nx={nx:4d}  max Re eig {lam_max:10.3e}  ||u(T)||/||g|| {growth:10.3e}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "backward_dirichlet.json").write_text(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
