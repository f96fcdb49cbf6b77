"""Flat ``key=value`` run configuration.

One key per line, ``#`` starts a comment, lists are comma separated.  Every
field has a default, so a config file only needs the keys it changes, and
command-line flags override file values.
"""
from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from .core import ModelSpec

__all__ = ["ConfigError", "RunConfig", "parse_config_text", "load_config"]


class ConfigError(ValueError):
    """Invalid run configuration (maps to exit code 2)."""


EXPERIMENTS = ("bound", "stability", "instability")


def _floats(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(x) for x in text.split(","))


@dataclass
class RunConfig:
    model: str = "nlkg"
    p: float = 3.0
    dim: int = 1
    a1: float = 1.0
    p1: float = 3.0
    a2: float = 1.0
    p2: float = 7.0
    omega: Optional[float] = None
    omega_min: Optional[float] = None
    omega_max: Optional[float] = None
    n_samples: int = 17
    n: int = 4096
    span: float = 40.0
    h_omega: float = 1e-3
    tol: float = 1e-11
    atol: float = 1e-3
    experiment: str = "bound"
    T: float = 100.0
    dt: float = 0.01
    out_dt: float = 0.5
    order: int = 2
    dyn_h: float = 0.05
    deltas: tuple = (1e-2,)
    lambdas: tuple = ()
    sponge: float = 0.0
    with_k0: bool = True
    out_dir: str = "."

    # keys excluded from the content hash (they do not change the numbers)
    _NON_NUMERIC = ("out_dir",)

    def __post_init__(self):
        self.validate()

    # -- (de)serialization ---------------------------------------------------

    @classmethod
    def field_types(cls) -> dict:
        return {f.name: f.type for f in fields(cls)}

    @classmethod
    def coerce(cls, key: str, value):
        """Convert a string (or value) to the field's type."""
        types = cls.field_types()
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        t = types[key]
        if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none")):
            if "Optional" in str(t):
                return None
            if t == "tuple":
                return ()
            raise ConfigError(f"{key} needs a value")
        try:
            if t == "tuple":
                return _floats(value) if isinstance(value, str) else tuple(float(x) for x in value)
            if t == "bool":
                if isinstance(value, bool):
                    return value
                v = str(value).strip().lower()
                if v in ("1", "true", "yes", "on"):
                    return True
                if v in ("0", "false", "no", "off"):
                    return False
                raise ValueError(value)
            if t == "int":
                f = float(value)
                if f != int(f):
                    raise ValueError(value)
                return int(f)
            if t in ("float", "Optional[float]"):
                return float(value)
            return str(value).strip()
        except (TypeError, ValueError):
            raise ConfigError(f"bad value for {key}: {value!r}") from None

    @classmethod
    def from_mapping(cls, mapping: dict, base: Optional["RunConfig"] = None) -> "RunConfig":
        data = asdict(base) if base is not None else {}
        for k, v in mapping.items():
            data[k] = cls.coerce(k, v)
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                s = ",".join(repr(float(x)) for x in v)
            elif isinstance(v, float):
                s = repr(v)
            elif v is None:
                s = "none"
            elif isinstance(v, bool):
                s = "true" if v else "false"
            else:
                s = str(v)
            lines.append(f"{f.name}={s}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: Optional["RunConfig"] = None) -> "RunConfig":
        return cls.from_mapping(parse_config_text(text), base)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["deltas"], d["lambdas"] = list(self.deltas), list(self.lambdas)
        return d

    def echo(self) -> dict:
        """to_dict() without the keys that do not affect results (written into artifacts)."""
        d = self.to_dict()
        for k in self._NON_NUMERIC:
            d.pop(k)
        return d

    def content_hash(self) -> str:
        text = "\n".join(l for l in self.to_text().splitlines()
                         if l.split("=", 1)[0] not in self._NON_NUMERIC)
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    # -- validation ------------------------------------------------------------

    def model_spec(self) -> ModelSpec:
        if self.model == "nlkg":
            return ModelSpec.nlkg(self.p, self.dim)
        return ModelSpec.dpnls(self.a1, self.p1, self.a2, self.p2)

    def validate(self) -> None:
        if self.model not in ("nlkg", "dpnls"):
            raise ConfigError(f"model must be nlkg or dpnls, got {self.model!r}")
        if self.model == "dpnls" and self.dim != 1:
            raise ConfigError("dpnls is one-dimensional (dim=1)")
        if self.model == "nlkg" and self.dim > 3:
            raise ConfigError("dim must be 1, 2 or 3")
        try:
            m = self.model_spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        for w in (self.omega, self.omega_min, self.omega_max):
            if w is not None and not m.omega_ok(w):
                raise ConfigError(f"omega={w} outside the existence range of {self.model}")
        if self.omega is not None and m.kind == "nlkg" and self.omega < 0:
            raise ConfigError("omega must be >= 0")
        if (self.omega_min is None) != (self.omega_max is None):
            raise ConfigError("give both omega_min and omega_max")
        if self.omega_min is not None and not self.omega_min < self.omega_max:
            raise ConfigError("omega_min must be < omega_max")
        if self.n_samples < 3:
            raise ConfigError("n_samples must be >= 3")
        if self.n < 64:
            raise ConfigError("n must be >= 64")
        for k in ("span", "h_omega", "tol", "atol", "dt", "out_dt", "dyn_h"):
            if not getattr(self, k) > 0:
                raise ConfigError(f"{k} must be > 0")
        if self.T < 0:
            raise ConfigError("T must be >= 0")
        if self.out_dt < self.dt:
            raise ConfigError("out_dt must be >= dt")
        if self.order not in (2, 4):
            raise ConfigError("order must be 2 or 4")
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
        if any(not d >= 0 for d in self.deltas):
            raise ConfigError("deltas must be >= 0")
        if any(l == 0 for l in self.lambdas):
            raise ConfigError("lambdas must be nonzero")
        if self.sponge < 0:
            raise ConfigError("sponge must be >= 0")


def parse_config_text(text: str) -> dict:
    out = {}
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {i}: expected key=value")
        k, v = line.split("=", 1)
        k = k.strip()
        if k in out:
            raise ConfigError(f"line {i}: duplicate key {k!r}")
        out[k] = v.strip()
    return out


def load_config(path, base: Optional[RunConfig] = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return RunConfig.from_text(text, base)
