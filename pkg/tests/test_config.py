import pytest

from sqbsde.config import ROUTES, parse_config
from sqbsde.errors import ConfigError

MINIMAL = 'seed = 1\nroute = "lipschitz"\nproblem = "zero"\n'


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert (cfg.n_paths, cfg.steps, cfg.tol) == (100_000, 50, 1e-6)
    assert cfg.seed == 1 and cfg.problem == "zero" and cfg.route == "lipschitz"


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="pathz"):
        parse_config(MINIMAL + "pathz = 3\n")
    with pytest.raises(ConfigError, match="degre"):
        parse_config(MINIMAL + "[basis]\ndegre = 2\n")


def test_seed_is_mandatory():
    with pytest.raises(ConfigError, match="seed"):
        parse_config('route = "lipschitz"\nproblem = "zero"\n')


def test_parse_error_has_line_and_column():
    with pytest.raises(ConfigError, match="line 2, column"):
        parse_config('seed = 1\nroute = "lipschitz\n')


def test_route_problem_mismatch():
    with pytest.raises(ConfigError, match="diagonal"):
        parse_config('seed = 1\nroute = "diagonal"\nproblem = "zero"\n')
    with pytest.raises(ConfigError, match="fbsde-via-bsde"):
        parse_config('seed = 1\nroute = "fbsde-via-bsde"\nproblem = "lipschitz-mixed"\n')
    with pytest.raises(ConfigError, match="reflection"):
        parse_config('seed = 1\nroute = "reflected-sde"\n')


def test_unknown_catalog_parameter_is_a_config_error():
    with pytest.raises(ConfigError, match="cc"):
        parse_config('seed = 1\nroute = "lipschitz"\nproblem = { name = "affine", params = { cc = 1 } }\n')


def test_types_are_checked():
    with pytest.raises(ConfigError, match="n_paths"):
        parse_config(MINIMAL + 'n_paths = "many"\n')
    with pytest.raises(ConfigError, match="seed"):
        parse_config('seed = true\nroute = "lipschitz"\nproblem = "zero"\n')


def test_every_route_is_known():
    assert len(ROUTES) == 8
    with pytest.raises(ConfigError, match="unknown route"):
        parse_config('seed = 1\nroute = "magic"\nproblem = "zero"\n')


def test_echo_is_canonical():
    a = parse_config(MINIMAL + "[basis]\nkind = 'polynomial'\ndegree = 1\n")
    b = parse_config("[basis]\ndegree = 1\nkind = 'polynomial'\n" if False else MINIMAL + "[basis]\ndegree = 1\nkind = 'polynomial'\n")
    assert a.echo() == b.echo()
