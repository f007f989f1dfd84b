"""Flat ``key = value`` run configuration with ``#`` comments."""
import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

DEFAULT_SEED = 20240101


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


@dataclass
class RunConfig:
    # problem
    problem: str = None  # manufactured problem id; otherwise model + source below
    model: str = "unit"
    source: float = 1.0
    neumann: float = 0.0
    dirichlet: float = 0.0
    mesh: str = None  # path or generator spec such as "interval 8"
    field: str = None
    out: str = "."
    seed: int = DEFAULT_SEED
    threads: int = None
    # solver
    linear_tol: float = 1e-10
    linear_max_iter: int = 10_000
    nonlinear_tol: float = 1e-10
    nonlinear_max_iter: int = 200
    damping: float = 1.0
    quad_order: int = 2
    # certificate overrides
    k_alpha: float = None
    lipschitz: float = None
    # adaptivity
    rounds: int = None
    strategy: str = "all-violating"
    theta: float = 1.0
    budget: int = 100_000
    t_min: float = None
    # convergence bands
    l2_rate_min: float = 1.8
    l2_rate_max: float = 2.2
    h1_rate_min: float = 0.8
    h1_rate_max: float = 1.2
    # counterexample
    k: float = None
    u1: float = 1.0
    dim: int = 1
    extra: dict = dataclasses.field(default_factory=dict)

    def update(self, **overrides):
        for key, value in overrides.items():
            if value is not None:
                setattr(self, key, value)
        return self


_TYPES = {f.name: f.type for f in fields(RunConfig) if f.name != "extra"}
_PARSERS = {float: float, int: int, str: str, bool: _bool}


def parse_config(text):
    """Parse config text into a :class:`RunConfig`; unknown keys and bad values raise :class:`ConfigError`."""
    cfg = RunConfig()
    seen = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}", n)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise ConfigError(f"unknown key {key!r}", n)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first on line {seen[key]})", n)
        seen[key] = n
        try:
            setattr(cfg, key, _PARSERS[_TYPES[key]](value))
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", n) from None
    return cfg


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
