"""Model configuration files.

One TOML file drives every command: the model triple as nested tables
(atoms as [location, weight] pairs, selection polynomial as a coefficient
list) plus optional per-topic sections with run defaults that command-line
flags may override.

Example::

    [model.lambda]
    atoms = [[0.5, 1.0]]

    [model.mu]
    atoms = [[0.3, 0.2], [-0.3, 0.2]]

    [model.sigma]
    coefficients = [1.0, -2.0]

    [classify]
    gamma = 1.0

    [background]
    seed = 42
    eps_neutral = 1e-3
    eps_env = 1e-3

    [renewal]
    kappa = 0.2
    eta = 0.2
    center = 0.5

    [levy]
    b = 1.3862943611198906
    delta = 0.25
"""

from __future__ import annotations

from dataclasses import dataclass, field

try:
    import tomllib as _toml
except ModuleNotFoundError:  # python 3.10
    import tomli as _toml

from .errors import ConfigError, LwfError
from .measures import MeasureSpec, ModelParams, SelectionFn

__all__ = ["RunConfig", "load_config"]

_DEFAULTS = {
    "classify": {"gamma": 1.0, "critical_tol": 1e-9},
    "background": {"seed": 0, "eps_neutral": 1e-3, "eps_env": 1e-3},
    "drift": {},
    "renewal": {"kappa": 0.2, "eta": 0.2, "center": 0.5},
    "levy": {"b": 1.3862943611198906, "delta": 0.25},
    "run": {"reps": 10000, "workers": 1},
}


@dataclass
class RunConfig:
    """Parsed and validated configuration: the model plus per-topic defaults."""

    params: ModelParams
    sections: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)
    path: str = ""

    def get(self, section: str, key: str, default=None):
        sec = self.sections.get(section, {})
        if key in sec:
            return sec[key]
        return _DEFAULTS.get(section, {}).get(key, default)


def _atoms(table: dict, where: str) -> list[tuple[float, float]]:
    raw = table.get("atoms", [])
    if not isinstance(raw, list):
        raise ConfigError(f"{where}.atoms must be a list of [location, weight] pairs")
    out = []
    for i, pair in enumerate(raw):
        if not (isinstance(pair, list) and len(pair) == 2
                and all(isinstance(v, (int, float)) for v in pair)):
            raise ConfigError(
                f"{where}.atoms[{i}] must be a [location, weight] number pair, got {pair!r}"
            )
        out.append((float(pair[0]), float(pair[1])))
    return out


def load_config(path) -> RunConfig:
    """Load and validate a TOML configuration file."""
    try:
        with open(path, "rb") as fh:
            raw = _toml.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc

    model = raw.get("model")
    if not isinstance(model, dict):
        raise ConfigError("config needs a [model] table with lambda/mu/sigma entries")
    if "lambda" not in model:
        raise ConfigError("config needs a [model.lambda] table")
    try:
        lam = MeasureSpec(atoms=_atoms(model["lambda"], "model.lambda"),
                          support_interval=(0.0, 1.0))
        mu_table = model.get("mu", {})
        mu = MeasureSpec(atoms=_atoms(mu_table, "model.mu"),
                         support_interval=(-1.0, 1.0))
        coeffs = model.get("sigma", {}).get("coefficients", [0.0])
        if not (isinstance(coeffs, list) and
                all(isinstance(v, (int, float)) for v in coeffs)):
            raise ConfigError("model.sigma.coefficients must be a list of numbers")
        params = ModelParams(lam, mu, SelectionFn(coeffs))
    except ConfigError:
        raise
    except LwfError as exc:
        raise ConfigError(f"invalid model in {path}: {exc}") from exc

    sections = {k: v for k, v in raw.items() if k != "model" and isinstance(v, dict)}
    for name, sec in sections.items():
        known = _DEFAULTS.get(name)
        if known is None:
            continue
        for key, val in sec.items():
            if key in known and not isinstance(val, type(known[key])) \
                    and not (isinstance(val, (int, float)) and isinstance(known[key], (int, float))):
                raise ConfigError(f"[{name}].{key} has wrong type {type(val).__name__}")
    return RunConfig(params=params, sections=sections, raw=raw, path=str(path))
