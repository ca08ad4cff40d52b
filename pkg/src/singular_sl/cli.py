"""Command-line front end: singular-sl {validate,factor,greens,schatten,spectrum,evolve}.

Every run writes its CSV/JSON artifacts and a manifest.json into --out.  Exit
status is 0 when all gates pass, 1 when a gate fails and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .model import ProfileError, check_epsilon, make_profile, validate_profile

SUBCOMMANDS = ("validate", "factor", "greens", "schatten", "spectrum", "evolve")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    profile: str = "sine"
    profile_params: dict = field(default_factory=dict)
    epsilon: float = 1.0
    n_nodes: int = 2048
    n_svd: int = 256
    jmax: int = 14
    alpha: float = 0.25
    n_eigs: int = 5
    n_modes: int = 10
    tfinal: float = 0.5
    nt: int = 500
    nx: int = 200
    i0: tuple = (0.5, 2.5)
    green_n: int = 65
    out: str = "out"
    seed: int = 0

    def validate(self):
        """Check sizes, epsilon and the output directory; raises UsageError naming the field."""
        for name in ("n_nodes", "n_svd", "jmax", "n_eigs", "n_modes", "nt", "nx", "green_n"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v <= 0:
                raise UsageError(f"{name} must be a positive integer, got {v!r}")
        if not self.tfinal > 0:
            raise UsageError(f"tfinal must be positive, got {self.tfinal!r}")
        if not 0 < self.alpha < 1:
            raise UsageError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        try:
            prof = make_profile(self.profile, self.profile_params or None)
        except ProfileError as exc:
            raise UsageError(f"profile: {exc}") from exc
        try:
            check_epsilon(prof, self.epsilon)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"epsilon: {exc}") from exc
        if len(self.i0) != 2 or not 0 < self.i0[0] < self.i0[1] < np.pi:
            raise UsageError(f"i0 must be an interval with closure inside (0, pi), got {self.i0!r}")
        out = Path(self.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise UsageError(f"out: cannot create {out}: {exc}") from exc
        if not os.access(out, os.W_OK):
            raise UsageError(f"out: {out} is not writable")
        return prof


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, value):
    if name not in _FIELDS:
        raise UsageError(f"unknown configuration key {name!r}")
    default = getattr(RunConfig(), name)
    try:
        if isinstance(default, bool):
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            return tuple(float(v) for v in value)
        if isinstance(default, dict):
            if not isinstance(value, dict):
                raise ValueError
            return value
        return str(value)
    except (TypeError, ValueError):
        raise UsageError(f"{name}: cannot interpret {value!r}") from None


def load_config(path) -> dict:
    """Read a JSON object or key=value lines (values parsed as JSON when possible)."""
    text = Path(path).read_text()
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            raw = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {path}: {exc}") from exc
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config {path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            try:
                raw[key] = json.loads(val)
            except json.JSONDecodeError:
                raw[key] = val
    return {k.replace("-", "_"): v for k, v in raw.items()}


def make_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    vals = {}
    for src in (file_values or {}, overrides or {}):
        for k, v in src.items():
            if v is not None:
                vals[k] = _coerce(k, v)
    return RunConfig(**vals)


# ---------------------------------------------------------------------------
# subcommands; each returns (gates, artifacts)


def _factor(cfg, prof):
    from .singular_factor import build_factor

    return build_factor(prof, cfg.epsilon, n_nodes=cfg.n_nodes)


def run_validate(cfg, prof, out: Path):
    rep = validate_profile(prof)
    path = out / "validation.json"
    info = dataclasses.asdict(rep)
    info.update(passed=rep.passed, failures=rep.failures(), eps_max=prof.eps_max)
    path.write_text(json.dumps(info, indent=2, default=float) + "\n")
    return {"profile_conditions": rep.passed}, [path]


def run_factor(cfg, prof, out: Path):
    from .singular_factor import endpoint_exponents, homogeneous_residuals

    fac = _factor(cfg, prof)
    path = out / "factor.csv"
    np.savetxt(path, fac.table(), delimiter=",", header="x,p,w,psi", comments="", fmt="%.15g")
    res = homogeneous_residuals(fac)
    t0, tpi = endpoint_exponents(fac)
    a = fac.exponent
    gates = {
        "identity": res["identity"] <= 1e-5,
        "ell_psi": res["ell_psi"] <= 1e-5,
        "ell_one": res["ell_one"] == 0.0,
        "exponent_0": abs(t0 - a) <= 0.01 * a,
        "exponent_pi": abs(tpi + a) <= 0.01 * a,
    }
    summary = out / "factor_summary.json"
    summary.write_text(json.dumps({**res, "exponent_0": t0, "exponent_pi": tpi, "expected": a}, indent=2) + "\n")
    return gates, [path, summary]


def run_greens(cfg, prof, out: Path):
    from .resolvent import GreenKernel, green_grid, write_green_csv

    k = GreenKernel(_factor(cfg, prof))
    path = write_green_csv(out / "green.csv", k, cfg.green_n)
    X, Y, G = green_grid(k, cfg.green_n)
    upper = (Y > 0) & (Y < X)
    lower = (Y < 0) & (X < Y)
    gates = {
        "nonnegative_0<y<x": bool(np.all(G[upper] >= 0)),
        "nonpositive_x<y<0": bool(np.all(G[lower] <= 0)),
        "zero_elsewhere": bool(np.all(G[~(upper | lower)] == 0)),
    }
    return gates, [path]


def run_schatten(cfg, prof, out: Path):
    from .resolvent import GreenKernel, assemble_T, decay_slope, schatten_sum, singular_values, write_singular_values_csv
    from .schatten_dyadic import (
        dyadic_bound,
        dyadic_coefficients,
        discretize_separable,
        power_kernel,
        write_levels_csv,
    )

    k = GreenKernel(_factor(cfg, prof))
    s = singular_values(assemble_T(k, cfg.n_svd))
    sv_path = write_singular_values_csv(out / "singular_values.csv", s)
    slope = decay_slope(s)
    s1 = schatten_sum(s, 1.0)
    sep = power_kernel(cfg.alpha)
    p = 1 / (1 - cfg.alpha) + 0.05
    scheme = dyadic_coefficients(sep, cfg.jmax)
    bound = dyadic_bound(scheme, p)
    direct = schatten_sum(singular_values(discretize_separable(sep)), p)
    lv_path = write_levels_csv(out / "dyadic_levels.csv", scheme, p)
    summary = {
        "decay_slope": slope,
        "schatten_1": s1.value,
        "schatten_1_truncated": s1.truncated,
        "dyadic_alpha": cfg.alpha,
        "dyadic_p": p,
        "dyadic_bound": bound.value,
        "dyadic_converged": bound.converged,
        "dyadic_ratio": bound.ratio,
        "direct_schatten_p_norm": direct.value,
    }
    sm = out / "schatten_summary.json"
    sm.write_text(json.dumps(summary, indent=2, default=float) + "\n")
    gates = {
        "decay_slope<=-1.3": slope <= -1.3,
        "dyadic_dominates": bound.value >= direct.value,
    }
    return gates, [sv_path, lv_path, sm]


def run_spectrum(cfg, prof, out: Path):
    from . import spectrum as S

    fac = _factor(cfg, prof)
    pts = S.find_eigenvalues(fac, cfg.n_eigs)
    efs, paths = [], []
    ok = True
    for p in pts:
        try:
            efs.append(S.eigenfunction(fac, p))
        except S.ResidualGateError as exc:
            print(f"gate failure: {exc}", file=sys.stderr)
            ok = False
            efs.append(None)
    good = [e.point for e in efs if e is not None]
    paths.append(S.write_eigenvalues_csv(out / "eigenvalues.csv", good))
    paths.append(S.write_theta_csv(out / "theta.csv", S.theta_trace(fac, pts[-1].r * 1.05)))
    for e in efs:
        if e is not None:
            paths.append(S.write_eigenfunction_csv(out / f"eigenfunction_{e.point.m}.csv", e))
    gates = {
        "residual_gates": ok,
        "simple": all(abs(p.theta_prime) > 1e-4 for p in pts),
        "increasing": bool(np.all(np.diff([p.r for p in pts]) > 0)),
    }
    return gates, paths


def run_evolve(cfg, prof, out: Path):
    from . import evolution as E
    from . import spectrum as S

    fac = _factor(cfg, prof)
    eigs = S.eigen_system(fac, max(1, (cfg.n_modes + 1) // 2))
    grid = np.linspace(-np.pi, np.pi, 1001)
    times = np.linspace(0.0, cfg.tfinal, 51)
    single = E.spectral_evolve(eigs, eigs[0], 1, times, grid, label="phi_1")
    res_single = E.pde_residual(single, fac)
    fld = E.spectral_evolve(eigs, E.test_profile_h, cfg.n_modes, times, grid, label="h")
    res_h = E.pde_residual(fld, fac)

    def bump(y):
        a, b = cfg.i0
        m = 0.5 * (a + b)
        return np.exp(-20 * (y - m) ** 2) * (y - a) * (b - y)

    dfld = E.dirichlet_solve(fac, bump, cfg.i0, cfg.tfinal, cfg.nt, cfg.nx)
    norms = dfld.l2_norms()
    order, _ = E.convergence_order(fac, bump, cfg.i0, cfg.tfinal)
    slope = E.fourier_decay_rate(E.test_profile_h(E.periodic_grid())).slope
    paths = [
        E.write_field_csv(out / "spectral_h.csv", fld, stride_t=5, stride_x=10),
        E.write_field_csv(out / "dirichlet.csv", dfld, stride_t=max(1, cfg.nt // 50), stride_x=max(1, cfg.nx // 50)),
    ]
    summary = {
        "pde_residual_single_mode": res_single,
        "pde_residual_h": res_h,
        "n_modes": cfg.n_modes,
        "dirichlet_l2_start": norms[0],
        "dirichlet_l2_end": norms[-1],
        "dirichlet_order": order,
        "fourier_slope_h": slope,
    }
    paths.append(E.write_summary_json(out / "evolution_summary.json", summary))
    gates = {
        "single_mode_residual<=1e-3": res_single <= 1e-3,
        "dirichlet_l2_decreasing": bool(np.all(np.diff(norms) < 0)),
        "dirichlet_order>=1.8": order >= 1.8,
        "fourier_slope_h": abs(slope + 3) <= 0.3,
    }
    return gates, paths


RUNNERS = {
    "validate": run_validate,
    "factor": run_factor,
    "greens": run_greens,
    "schatten": run_schatten,
    "spectrum": run_spectrum,
    "evolve": run_evolve,
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run(subcommand: str, cfg: RunConfig) -> int:
    """Execute one subcommand and write manifest.json; returns the exit status."""
    if subcommand not in RUNNERS:
        raise UsageError(f"unknown subcommand {subcommand!r}")
    prof = cfg.validate()
    np.random.seed(cfg.seed)
    out = Path(cfg.out)
    t0 = time.perf_counter()
    gates, paths = RUNNERS[subcommand](cfg, prof, out)
    wall = time.perf_counter() - t0
    status = 0 if all(gates.values()) else 1
    manifest = {
        "subcommand": subcommand,
        "config": dataclasses.asdict(cfg),
        "versions": {
            "singular_sl": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "wall_time_s": wall,
        "gates": {k: bool(v) for k, v in gates.items()},
        "status": status,
        "artifacts": {Path(p).name: _sha256(p) for p in paths},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    for k, v in gates.items():
        print(f"{'PASS' if v else 'FAIL'}  {k}")
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="singular-sl", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="key=value or JSON configuration file")
    ap.add_argument("--profile", choices=["sine", "pwlinear", "perturbed"])
    ap.add_argument("--epsilon", type=float)
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--n-eigs", type=int, dest="n_eigs")
    ap.add_argument("--jmax", type=int)
    ap.add_argument("--tfinal", type=float)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        file_vals = load_config(args.config) if args.config else {}
        over = {k: getattr(args, k) for k in ("profile", "epsilon", "out", "n_eigs", "jmax", "tfinal")}
        cfg = make_config(file_vals, over)
        return run(args.subcommand, cfg)
    except (UsageError, FileNotFoundError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
