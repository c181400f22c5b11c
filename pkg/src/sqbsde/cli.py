"""Command-line entry point: ``sqbsde --config run.toml [--seed N] [--paths N] [--steps N] [--out DIR] [--quiet]``.

Every run writes into the output directory only:

* ``solution.csv``: ``t, Y1_mean.., Y1_std.., absZ_mean, absZ_max, sqrt_rho_bound``
  (``reflected.csv`` for the reflected-sde route, ``acceptance.txt`` and
  ``acceptance.csv`` for the acceptance route),
* ``certificate.txt``: sections in the fixed order plan, verdicts, z bound,
  envelopes, residuals; a section that does not apply says so,
* ``reproducibility.txt``: seed, package versions and the resolved config.

Exit status: 0 on success, 1 when the acceptance suite has a failing
criterion, 2 on a configuration error, 3 on any other typed solver failure.
"""

from __future__ import annotations

import argparse
import math
import pathlib
import platform
import sys

import numpy as np
import scipy

from . import __version__
from .acceptance import AcceptanceConfig, run_acceptance_suite
from .catalog import lookup_catalog
from .config import RunConfig, load_config, validate
from .errors import ConfigError, SolverError
from .fbsde_local import contraction_constant, solve_local_fbsde
from .global_bsde import (
    solve_diagonal_quadratic,
    solve_global_lipschitz_g,
    solve_global_superquadratic,
    solve_perturbed,
)
from .measure_change import fbsde_residual, fbsde_via_bsde
from .paths import PathPrefix, TimeGrid, simulate_brownian
from .reflection import ReflectionSpec, reflected_sde
from .regression import write_solution_csv

__all__ = ["main", "run", "build_parser"]

SECTIONS = ("plan", "verdicts", "z bound", "envelopes", "residuals")
EXIT_OK, EXIT_FAILED_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
STREAM_FRESH = 7


class _Artifacts:
    """Collects certificate sections and writes files under one directory."""

    def __init__(self, out: pathlib.Path):
        self.out = out
        self.sections = {name: [] for name in SECTIONS}

    def add(self, section: str, text: str) -> None:
        self.sections[section].extend(text.splitlines())

    def certificate(self, route: str) -> str:
        lines = [f"route: {route}"]
        for name in SECTIONS:
            lines.append(f"[{name}]")
            body = self.sections[name] or ["not applicable to this route"]
            lines.extend(body)
        return "\n".join(lines) + "\n"

    def path(self, name: str) -> pathlib.Path:
        return self.out / name


def _basis(cfg: RunConfig):
    return cfg.feature_basis()


def _bundle(cfg: RunConfig, spec, stream_offset: int = 0):
    grid = TimeGrid(spec.T, cfg.steps)
    return simulate_brownian(grid, cfg.n_paths, spec.m, cfg.seed * 1000 + stream_offset, workers=cfg.workers)


def _verdict_lines(cert: dict) -> str:
    out = []
    for key in sorted(cert):
        val = cert[key]
        if isinstance(val, bool):
            val = "yes" if val else "no"
        elif isinstance(val, float):
            val = f"{val:.6g}"
        out.append(f"{key}: {val}")
    return "\n".join(out)


def _z_bound_lines(sol) -> str:
    s = sol.solution
    zmax = s.z_max
    bound = sol.z_bound
    n = min(len(zmax), len(bound))
    ratios = [zmax[k] / bound[k] for k in range(n) if bound[k] > 0 and math.isfinite(bound[k])]
    worst = max(ratios) if ratios else 0.0
    status = "holds" if worst <= 1.05 else "fails"
    return f"max |Z| / sqrt(rho(T - t)) over grid: {worst:.6g}\nbound with 5% slack: {status}"


def _global_artifacts(art: _Artifacts, sol) -> None:
    art.add("plan", sol.plan.report())
    cert = {k: v for k, v in sol.certificate.items() if "envelope" not in k}
    env = {k: v for k, v in sol.certificate.items() if "envelope" in k}
    art.add("verdicts", _verdict_lines(cert) + "".join(f"\nnote: {n}" for n in sol.notes))
    art.add("z bound", _z_bound_lines(sol))
    if env:
        art.add("envelopes", _verdict_lines(env))
    sol.to_csv(art.path("solution.csv"))


def _route_global(cfg: RunConfig, art: _Artifacts) -> int:
    spec = cfg.spec()
    bundle = _bundle(cfg, spec)
    basis = _basis(cfg)
    if cfg.route == "lipschitz":
        sol = solve_global_lipschitz_g(spec, bundle, None, basis, cfg.tol, cfg.max_iter)
    elif cfg.route == "superquadratic":
        sol = solve_global_superquadratic(spec, bundle, basis, cfg.tol, cfg.max_iter)
    else:
        sol = solve_diagonal_quadratic(spec, bundle, basis, cfg.tol, cfg.max_iter)
    _global_artifacts(art, sol)
    return EXIT_OK


def _route_perturbed(cfg: RunConfig, art: _Artifacts) -> int:
    spec = cfg.spec()
    p = cfg.perturbed
    base = lookup_catalog(p["base"], p.get("base_params", {})).with_horizon(spec.T)
    bundle = _bundle(cfg, spec)
    outcome = solve_perturbed(spec, base, float(p.get("C_y", spec.C)), float(p.get("C_z", spec.C)), bundle,
                              basis=_basis(cfg), tol=cfg.tol, max_iter=cfg.max_iter, seed=cfg.seed)
    if outcome.accepted:
        _global_artifacts(art, outcome.solution)
    art.add("verdicts", outcome.report())
    return EXIT_OK


def _route_fbsde_local(cfg: RunConfig, art: _Artifacts) -> int:
    spec = cfg.spec()
    bundle = _bundle(cfg, spec)
    u = float(cfg.fbsde.get("u", 0.0))
    u_idx = bundle.grid.index_of(u)
    raw = cfg.fbsde.get("prefix")
    if raw is None:
        prefix = np.zeros((u_idx + 1, spec.m))
    else:
        prefix = np.asarray(raw, dtype=float).reshape(u_idx + 1, spec.m)
    sol = solve_local_fbsde(spec, u, PathPrefix(u_idx, prefix), bundle, cfg.tol, cfg.max_iter, _basis(cfg))
    eps = spec.T - u
    lines = [f"u: {u:.12g}", f"interval length: {eps:.12g}",
             f"analytic contraction constant: {contraction_constant(spec, eps):.6g}",
             f"iterations: {sol.iterations}", f"converged: {'yes' if sol.converged else 'no'}"]
    for row in sol.log:
        r = "-" if row["ratio"] is None else f"{row['ratio']:.6g}"
        lines.append(f"iteration {row['iteration']}: gap {row['gap']:.6g} ratio {r}")
    art.add("verdicts", "\n".join(lines))
    times = bundle.grid.points[u_idx:]
    write_solution_csv(art.path("solution.csv"), times, sol.Y, sol.Z)
    return EXIT_OK


def _route_fbsde_via_bsde(cfg: RunConfig, art: _Artifacts) -> int:
    spec = cfg.spec()
    train = _bundle(cfg, spec)
    basis = _basis(cfg)
    if spec.C_g is None:
        sol = solve_global_superquadratic(spec, train, basis, cfg.tol, cfg.max_iter)
    else:
        sol = solve_global_lipschitz_g(spec, train, None, basis, cfg.tol, cfg.max_iter)
    art.add("plan", sol.plan.report())
    art.add("verdicts", _verdict_lines(sol.certificate))
    art.add("z bound", _z_bound_lines(sol))
    fresh = _bundle(cfg, spec, STREAM_FRESH)
    cand = fbsde_via_bsde(spec, sol, fresh)
    report = fbsde_residual(cand, spec)
    art.add("residuals", report.text() + f"\n  bmo estimate of the drift: {cand.bmo:.6g}")
    write_solution_csv(art.path("solution.csv"), fresh.grid.points, cand.Q, cand.R)
    return EXIT_OK


def _route_reflected(cfg: RunConfig, art: _Artifacts) -> int:
    r = cfg.reflection
    spec = ReflectionSpec(r["normals"], r["offsets"], r.get("directions"), seed=cfg.seed)
    art.add("verdicts", spec.report())
    if "x0" not in r:
        raise ConfigError("route 'reflected-sde' needs key 'x0' in [reflection]")
    theta = float(r.get("theta", 0.0))
    T = 1.0 if cfg.T is None else cfg.T
    grid = TimeGrid(T, cfg.steps)
    driver = simulate_brownian(grid, cfg.n_paths, spec.dim, cfg.seed * 1000, workers=cfg.workers)

    def drift(t, phi, m):
        return -theta * phi[:, -1]

    stride = int(r.get("record_stride", 1))
    path, l = reflected_sde(drift, None, spec, driver, r["x0"], record_stride=stride)
    slack = spec.slack(path.values.reshape(-1, spec.dim)) if spec.n_faces else np.zeros(1)
    art.add("verdicts", f"worst one-sided violation: {max(0.0, -float(np.min(slack))):.6g}\n"
                        f"mean final regulator length: {float(np.mean(l[:, -1])):.6g}")
    path.to_csv(art.path("reflected.csv"), grid.points[::stride])
    return EXIT_OK


def _route_acceptance(cfg: RunConfig, art: _Artifacts) -> int:
    a = cfg.acceptance
    report = run_acceptance_suite(AcceptanceConfig(seed=cfg.seed, tol_scale=float(a.get("tol_scale", 1.0)),
                                                   reduced=bool(a.get("reduced", False)), workers=cfg.workers))
    report.write(art.out)
    art.add("verdicts", report.text())
    return EXIT_OK if report.passed else EXIT_FAILED_CHECK


ROUTE_RUNNERS = {
    "lipschitz": _route_global,
    "superquadratic": _route_global,
    "diagonal": _route_global,
    "perturbed": _route_perturbed,
    "fbsde-local": _route_fbsde_local,
    "fbsde-via-bsde": _route_fbsde_via_bsde,
    "reflected-sde": _route_reflected,
    "acceptance": _route_acceptance,
}


def reproducibility_text(cfg: RunConfig) -> str:
    lines = [
        f"seed: {cfg.seed}",
        f"sqbsde: {__version__}",
        f"python: {platform.python_version()}",
        f"numpy: {np.__version__}",
        f"scipy: {scipy.__version__}",
        "config:",
    ]
    lines.extend("  " + line for line in cfg.echo().splitlines())
    return "\n".join(lines) + "\n"


def run(cfg: RunConfig) -> int:
    """Execute the configured route and write its artifacts; typed failures propagate."""
    out = pathlib.Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    art = _Artifacts(out)
    status = ROUTE_RUNNERS[cfg.route](cfg, art)
    if not cfg.write_csv:
        for name in ("solution.csv", "reflected.csv", "acceptance.csv"):
            p = art.path(name)
            if p.exists():
                p.unlink()
    if cfg.write_certificate:
        art.path("certificate.txt").write_text(art.certificate(cfg.route))
    art.path("reproducibility.txt").write_text(reproducibility_text(cfg))
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sqbsde", description="Superquadratic BSDE and FBSDE solver runs.")
    p.add_argument("--config", required=True, help="TOML run description")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--paths", type=int, help="override n_paths")
    p.add_argument("--steps", type=int, help="override the number of time steps")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--quiet", action="store_true", help="print nothing on success")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    route = "?"
    try:
        cfg = load_config(args.config)
        route = cfg.route
        cfg = cfg.override(seed=args.seed, n_paths=args.paths, steps=args.steps, output_dir=args.out)
        validate(cfg)
        status = run(cfg)
    except ConfigError as exc:
        print(f"sqbsde: configuration error (route {route}): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"sqbsde: cannot read or write files (route {route}): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"sqbsde: {type(exc).__name__} in route {route}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if not args.quiet:
        print(pathlib.Path(cfg.output_dir, "certificate.txt").read_text() if cfg.write_certificate
              else f"route {route} finished with status {status}")
    return status


if __name__ == "__main__":
    sys.exit(main())
