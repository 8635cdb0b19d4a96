"""Run configuration: flat ``key = value`` files plus command-line overrides."""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from ..errors import ConfigError

OUTPUT_ENV = "PDBUNDLE_OUTPUT_DIR"

_METHOD_RE = re.compile(
    r"^(?:(cs-spp|pb-spp-1cut|pb-spp-2cut|pdpb|pds)"
    r"|pb-spp-multicut(?:\((\d+)\))?"
    r"|cg(?:\(([a-z-]+)\))?)$"
)
CG_RULES = ("open-loop", "alpha", "beta")
PDPB_SCHEMES = ("one-cut", "two-cuts", "multi-cuts")


@dataclass(frozen=True)
class Method:
    kind: str
    max_cuts: int = 10
    rule: str = "open-loop"

    @property
    def label(self) -> str:
        if self.kind == "pb-spp-multicut":
            return f"pb-spp-multicut({self.max_cuts})"
        if self.kind == "cg":
            return f"cg({self.rule})"
        return self.kind


def parse_method(text: str) -> Method:
    """Parse ``cs-spp``, ``pb-spp-multicut(20)``, ``cg(beta)`` and friends."""
    m = _METHOD_RE.match(text.strip())
    if m is None:
        raise ConfigError(f"unknown method {text!r}")
    plain, k, rule = m.groups()
    if plain:
        return Method(plain)
    if text.startswith("pb-spp-multicut"):
        k = int(k) if k else 10
        if k < 3:
            raise ConfigError("pb-spp-multicut needs at least 3 cuts")
        return Method("pb-spp-multicut", max_cuts=k)
    rule = rule or "open-loop"
    if rule not in CG_RULES:
        raise ConfigError(f"unknown cg rule {rule!r}; expected one of {CG_RULES}")
    return Method("cg", rule=rule)


@dataclass
class RunConfig:
    """Everything a run needs.

    Instance: either ``instance`` (path to a triplet file) or the generation
    parameters.  ``lam`` is the constant stepsize of cs-spp, pdpb, pds and cg
    (defaults per method); ``lam1`` the initial PB-SPP stepsize.
    ``log_cadence`` and ``max_iters`` default per method as well.
    """

    method: str = "pb-spp-2cut"
    instance: Optional[str] = None
    m: int = 100
    n: int = 100
    density: float = 0.05
    gamma_x: float = 0.05
    gamma_y: float = 0.05
    seed: int = 0
    eps_bar: float = 1e-4
    lam: Optional[float] = None
    lam1: Optional[float] = None
    log_cadence: Optional[int] = None
    max_iters: Optional[int] = None
    scheme: str = "two-cuts"
    improved: bool = False
    output: Optional[str] = None

    def __post_init__(self):
        self.validate()

    @property
    def parsed_method(self) -> Method:
        return parse_method(self.method)

    def validate(self):
        meth = parse_method(self.method)
        for name in ("density", "eps_bar"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v}")
        if self.density > 1:
            raise ConfigError("density must not exceed 1")
        for name in ("gamma_x", "gamma_y"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be nonnegative, got {v}")
        for name in ("lam", "lam1"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v}")
        if self.m < 1 or self.n < 1:
            raise ConfigError("m and n must be positive")
        if self.log_cadence is not None and self.log_cadence < 1:
            raise ConfigError("log_cadence must be at least 1")
        if self.max_iters is not None and self.max_iters < 0:
            raise ConfigError("max_iters must be nonnegative")
        if self.scheme not in PDPB_SCHEMES:
            raise ConfigError(f"scheme must be one of {PDPB_SCHEMES}")
        if self.improved and (meth.kind == "pb-spp-1cut"
                              or (meth.kind == "pdpb" and self.scheme == "one-cut")):
            raise ConfigError("improved termination needs the two- or multi-cut scheme")

    def cadence(self) -> int:
        if self.log_cadence is not None:
            return self.log_cadence
        kind = self.parsed_method.kind
        if kind == "cs-spp":
            return 1000
        if kind.startswith("pb-spp"):
            return 10
        return 1

    def output_path(self) -> Path:
        if self.output:
            return Path(self.output)
        base = Path(os.environ.get(OUTPUT_ENV, "."))
        name = self.parsed_method.label.replace("(", "-").replace(")", "")
        return base / f"{name}_seed{self.seed}.csv"


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw: str, where: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    optional = "Optional" in str(kind)
    if optional and raw.lower() in ("", "none", "default"):
        return None
    try:
        if "bool" in str(kind):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if "int" in str(kind):
            return int(raw)
        if "float" in str(kind):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: field '{key}': {exc}") from None
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{source}:{lineno}: unknown field '{key}'")
        out[key] = _convert(key, value, f"{source}:{lineno}")
    return out


def load_config(path=None, overrides: Optional[dict] = None) -> RunConfig:
    """File values first, then ``overrides`` (already typed or raw strings)."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        values.update(parse_config_text(text, str(path)))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown field '{key}'")
        values[key] = _convert(key, value, "override") if isinstance(value, str) else value
    return RunConfig(**values)
