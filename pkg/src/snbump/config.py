"""Run configuration: INI file, then command-line overrides.

Sections and keys (all optional)::

    [run]        out, cache_dir, seed, threads
    [potential]  V0, a, m, theta, target_radius, target_s, convention
    [ring]       s
    [grid]       h, W, radial_h, R_rad, spectral_h, spectral_R
    [solver]     tol, inner_rtol, max_iter, n_r, alpha_relative

An empty ``a`` selects the target-radius rule.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .exceptions import ConfigError

__all__ = ["RunConfig", "load_config", "default_cache_dir", "CACHE_ENV"]

CACHE_ENV = "SNBUMP_CACHE_DIR"

_SECTIONS = {
    "run": ("out", "cache_dir", "seed", "threads"),
    "potential": ("V0", "a", "m", "theta", "target_radius", "target_s", "convention"),
    "ring": ("s",),
    "grid": ("h", "W", "radial_h", "R_rad", "spectral_h", "spectral_R"),
    "solver": ("tol", "inner_rtol", "max_iter", "n_r", "alpha_relative"),
}


def default_cache_dir() -> str:
    return os.environ.get(CACHE_ENV) or str(Path.home() / ".cache" / "snbump")


@dataclass
class RunConfig:
    command: str = ""
    out: str = "out"
    cache_dir: str = field(default_factory=default_cache_dir)
    seed: int = 0
    threads: int = 1
    V0: float = 1.0
    a: float | None = None
    m: float = 0.5
    theta: float = 2.0
    target_radius: float = 32.0
    target_s: int = 4
    convention: str = "consistent"
    s: tuple = (4, 6, 8)
    h: float = 0.3
    W: float = 9.0
    radial_h: float = 1e-3
    R_rad: float = 60.0
    spectral_h: float = 1e-2
    spectral_R: float = 40.0
    tol: float = 1e-8
    inner_rtol: float = 1e-9
    max_iter: int = 30
    n_r: int = 9
    alpha_relative: float = 0.3

    def __post_init__(self):
        self.validate()

    def validate(self) -> "RunConfig":
        if isinstance(self.s, int):
            self.s = (self.s,)
        self.s = tuple(int(x) for x in self.s)
        if not self.s or min(self.s) < 1:
            raise ConfigError(f"s must be a nonempty list of positive integers, got {self.s}")
        for name in ("V0", "theta", "target_radius", "h", "W", "radial_h", "R_rad", "spectral_h",
                     "spectral_R", "tol", "inner_rtol", "alpha_relative"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 < self.m < 1.0:
            raise ConfigError(f"m must lie in (0, 1), got {self.m}")
        if self.a is not None and self.a < 0:
            raise ConfigError(f"a must be nonnegative, got {self.a}")
        if self.threads < 1 or self.max_iter < 1 or self.n_r < 3 or self.target_s < 2:
            raise ConfigError("threads, max_iter >= 1, n_r >= 3 and target_s >= 2 are required")
        if self.convention not in ("printed", "consistent"):
            raise ConfigError(f"convention must be 'printed' or 'consistent', got {self.convention!r}")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["s"] = list(self.s)
        return d

    def override(self, **kw) -> "RunConfig":
        """Copy with the non-``None`` entries of ``kw`` replaced."""
        d = self.to_dict()
        for k, v in kw.items():
            if v is None:
                continue
            if k not in d:
                raise ConfigError(f"unknown setting {k!r}")
            d[k] = v
        return RunConfig(**d)


def _convert(name: str, raw: str):
    types = {f.name: f.type for f in fields(RunConfig)}
    raw = raw.strip()
    try:
        if name == "s":
            return tuple(int(x) for x in raw.replace(" ", "").split(",") if x)
        if name == "a":
            return None if raw in ("", "none", "None") else float(raw)
        t = types[name]
        if t == "int":
            return int(raw)
        if t == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {name} = {raw!r}") from None


def load_config(path=None, **overrides) -> RunConfig:
    """Defaults, then the INI file at ``path``, then ``overrides``."""
    values = {}
    if path is not None:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        for section in cp.sections():
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}] in {path}")
            for key, raw in cp.items(section):
                if key not in _SECTIONS[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                values[key] = _convert(key, raw)
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.override(**overrides)
