"""Run configuration: a strict TOML schema with defaults and cross-checks.

A minimal file is three lines::

    seed = 1
    route = "lipschitz"
    problem = "zero"

``problem`` may also be a table ``{name = ..., params = {...}}``. Unknown keys
anywhere are fatal so that a typo never silently falls back to a default.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace

from .catalog import lookup_catalog
from .errors import CatalogError, ConfigError
from .regression import FeatureBasis

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["RunConfig", "ROUTES", "parse_config", "load_config", "check_route"]

ROUTES = (
    "lipschitz",
    "superquadratic",
    "diagonal",
    "perturbed",
    "fbsde-local",
    "fbsde-via-bsde",
    "reflected-sde",
    "acceptance",
)

_TOP = {"seed", "route", "problem", "n_paths", "steps", "T", "tol", "max_iter", "workers", "basis", "output",
        "perturbed", "fbsde", "reflection", "acceptance"}
_SUB = {
    "problem": {"name", "params"},
    "basis": {"kind", "degree", "bins", "running_max", "running_integral"},
    "output": {"directory", "csv", "certificate"},
    "perturbed": {"base", "base_params", "C_y", "C_z"},
    "fbsde": {"u", "prefix"},
    "reflection": {"normals", "offsets", "directions", "x0", "theta", "record_stride"},
    "acceptance": {"tol_scale", "reduced"},
}
_NO_PROBLEM = ("acceptance", "reflected-sde")


@dataclass(frozen=True)
class RunConfig:
    seed: int
    route: str
    problem: str | None = None
    params: dict = field(default_factory=dict)
    n_paths: int = 100_000
    steps: int = 50
    T: float | None = None
    tol: float = 1e-6
    max_iter: int = 50
    workers: int = 1
    basis: dict = field(default_factory=dict)
    output_dir: str = "out"
    write_csv: bool = True
    write_certificate: bool = True
    perturbed: dict = field(default_factory=dict)
    fbsde: dict = field(default_factory=dict)
    reflection: dict = field(default_factory=dict)
    acceptance: dict = field(default_factory=dict)

    def feature_basis(self) -> FeatureBasis | None:
        return FeatureBasis(**self.basis) if self.basis else None

    def spec(self):
        if self.problem is None:
            return None
        spec = lookup_catalog(self.problem, self.params)
        return spec if self.T is None else spec.with_horizon(self.T)

    def override(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self

    def echo(self) -> str:
        """Canonical ``key = value`` listing of every resolved field."""
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_canonical(getattr(self, f.name))}")
        return "\n".join(lines)


def _canonical(v) -> str:
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k} = {_canonical(v[k])}" for k in sorted(v)) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_canonical(x) for x in v) + "]"
    if isinstance(v, str):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _unknown(where: str, keys, allowed) -> None:
    extra = sorted(set(keys) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key {extra[0]!r} in {where}; allowed: {', '.join(sorted(allowed))}")


def _table(raw: dict, key: str) -> dict:
    val = raw.get(key, {})
    if not isinstance(val, dict):
        raise ConfigError(f"key {key!r} must be a table")
    _unknown(f"[{key}]", val, _SUB[key])
    return dict(val)


def _typed(raw: dict, key: str, kind, default):
    if key not in raw:
        return default
    val = raw[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or (kind is int and isinstance(val, bool)):
        raise ConfigError(f"key {key!r} must be {kind.__name__}, got {type(val).__name__}")
    return val


def parse_config(text: str) -> RunConfig:
    """Validate TOML ``text`` into a :class:`RunConfig`."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None
    _unknown("the top level", raw, _TOP)
    if "seed" not in raw:
        raise ConfigError("key 'seed' is mandatory (no entropy default)")
    seed = _typed(raw, "seed", int, None)
    if seed < 0:
        raise ConfigError("key 'seed' must be nonnegative")
    route = _typed(raw, "route", str, None)
    if route is None:
        raise ConfigError("key 'route' is mandatory")
    if route not in ROUTES:
        raise ConfigError(f"unknown route {route!r}; choose one of {', '.join(ROUTES)}")
    problem, params = None, {}
    if "problem" in raw:
        if isinstance(raw["problem"], str):
            problem = raw["problem"]
        else:
            tab = _table(raw, "problem")
            if "name" not in tab:
                raise ConfigError("table [problem] needs key 'name'")
            problem, params = tab["name"], dict(tab.get("params", {}))
    elif route not in _NO_PROBLEM:
        raise ConfigError(f"key 'problem' is mandatory for route {route!r}")
    cfg = RunConfig(
        seed=seed,
        route=route,
        problem=problem,
        params=params,
        n_paths=_typed(raw, "n_paths", int, 100_000),
        steps=_typed(raw, "steps", int, 50),
        T=_typed(raw, "T", float, None),
        tol=_typed(raw, "tol", float, 1e-6),
        max_iter=_typed(raw, "max_iter", int, 50),
        workers=_typed(raw, "workers", int, 1),
        basis=_table(raw, "basis"),
        perturbed=_table(raw, "perturbed"),
        fbsde=_table(raw, "fbsde"),
        reflection=_table(raw, "reflection"),
        acceptance=_table(raw, "acceptance"),
    )
    out = _table(raw, "output")
    cfg = replace(cfg, output_dir=str(out.get("directory", "out")), write_csv=bool(out.get("csv", True)),
                  write_certificate=bool(out.get("certificate", True)))
    validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def validate(cfg: RunConfig) -> None:
    if cfg.n_paths < 2:
        raise ConfigError("key 'n_paths' must be at least 2")
    if cfg.steps < 1:
        raise ConfigError("key 'steps' must be positive")
    if not cfg.tol > 0:
        raise ConfigError("key 'tol' must be positive")
    if cfg.max_iter < 1:
        raise ConfigError("key 'max_iter' must be positive")
    if cfg.workers < 1:
        raise ConfigError("key 'workers' must be positive")
    if cfg.basis:
        try:
            cfg.feature_basis()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid [basis]: {exc}") from None
    check_route(cfg)


def check_route(cfg: RunConfig) -> None:
    """Reject route and problem combinations the catalog entry cannot support."""
    if cfg.route == "reflected-sde":
        for key in ("normals", "offsets"):
            if key not in cfg.reflection:
                raise ConfigError(f"route 'reflected-sde' needs key {key!r} in [reflection]")
    if cfg.route == "perturbed" and "base" not in cfg.perturbed:
        raise ConfigError("route 'perturbed' needs key 'base' in [perturbed]")
    if cfg.problem is None:
        return
    try:
        spec = cfg.spec()
    except CatalogError as exc:
        raise ConfigError(str(exc)) from None
    route = cfg.route
    if route == "diagonal" and spec.a is None:
        raise ConfigError(f"route 'diagonal' needs quadratic weights a, which {spec.name!r} does not declare")
    if route == "diagonal" and spec.f_reads_z:
        raise ConfigError(f"route 'diagonal' needs f free of z, and {spec.name!r} reads z")
    if route == "lipschitz" and spec.C_g is None:
        raise ConfigError(f"route 'lipschitz' needs a declared C_g; {spec.name!r} has none (use superquadratic)")
    if route == "superquadratic" and spec.l is None and spec.C_g is None:
        raise ConfigError(f"route 'superquadratic' needs a growth function l for {spec.name!r}")
    if route == "fbsde-via-bsde" and (not spec.markovian or spec.sigma is not None):
        raise ConfigError(f"route 'fbsde-via-bsde' needs a Markovian problem with unit volatility; "
                          f"{spec.name!r} is not")
    if route == "fbsde-local" and spec.C_g is None:
        raise ConfigError(f"route 'fbsde-local' needs a declared C_g for {spec.name!r}")
