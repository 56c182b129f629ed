"""Dotted-key run configuration.

The config file is plain text: one ``key = value`` per line, ``#`` comments,
keys nested with dots (``potential.kind = hat_well``).  Values are parsed as
JSON when possible (numbers, lists, booleans, quoted strings) and kept as
bare strings otherwise.  See docs/config.md for the full key reference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .potential import PairPotential, potential_from_config

__all__ = ["RunConfig", "ConfigError", "parse_value", "load_config"]


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_lines(lines) -> dict:
    flat: dict[str, object] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        flat[key] = parse_value(val)
    return flat


@dataclass
class RunConfig:
    """Flat dotted-key mapping with typed access and common-block validation."""

    flat: dict = field(default_factory=dict)

    def get(self, key: str, default=None):
        return self.flat.get(key, default)

    def require(self, key: str):
        if key not in self.flat:
            raise ConfigError(f"missing required config key {key!r}")
        return self.flat[key]

    def section(self, prefix: str) -> dict:
        """Sub-mapping of keys under ``prefix.``, with the prefix stripped."""
        dot = prefix + "."
        return {k[len(dot) :]: v for k, v in self.flat.items() if k.startswith(dot)}

    def override(self, assignment: str):
        if "=" not in assignment:
            raise ConfigError(f"--set expects key=value, got {assignment!r}")
        key, val = assignment.split("=", 1)
        self.flat[key.strip()] = parse_value(val)

    # typed accessors -------------------------------------------------------

    @property
    def seed(self) -> int:
        seed = self.require("seed")
        if not isinstance(seed, int):
            raise ConfigError("seed must be an integer (wall-clock seeding is not supported)")
        return seed

    @property
    def dim(self) -> int:
        d = int(self.require("dim"))
        if d not in (1, 2, 3):
            raise ConfigError("dim must be 1, 2, or 3")
        return d

    @property
    def beta(self) -> float:
        b = float(self.require("beta"))
        if b <= 0:
            raise ConfigError("beta must be positive")
        return b

    @property
    def radius(self) -> float:
        return float(self.require("radius"))

    def density(self) -> float:
        """rho, either direct or through the (nu, beta) parametrization."""
        import math

        has_rho, has_nu = "rho" in self.flat, "nu" in self.flat
        if has_rho == has_nu:
            raise ConfigError("give exactly one of rho or nu")
        if has_rho:
            rho = float(self.flat["rho"])
        else:
            rho = math.exp(-self.beta * float(self.flat["nu"]))
        if rho <= 0:
            raise ConfigError("density must be positive")
        return rho

    def build_potential(self) -> PairPotential:
        kind = self.require("potential.kind")
        params = self.section("potential.params")
        pot = potential_from_config(kind, params, self.get("potential.table_path"))
        if "radius" in self.flat and self.radius <= pot.support:
            raise ConfigError(
                f"connectivity radius {self.radius} must exceed the interaction range {pot.support}"
            )
        return pot

    def counts_positive(self, *keys):
        for key in keys:
            if key in self.flat and int(self.flat[key]) < 1:
                raise ConfigError(f"{key} must be >= 1")

    def validate_common(self):
        _ = self.seed
        if "rho" in self.flat and "nu" in self.flat:
            raise ConfigError("give exactly one of rho or nu")
        self.counts_positive(
            "groundstate.k_max",
            "groundstate.restarts",
            "groundstate.iterations",
            "partfun.k_max",
            "partfun.samples",
            "sampler.n",
            "sampler.sweeps",
            "sampler.steps",
        )


def load_config(path, overrides=()) -> RunConfig:
    with open(path) as fh:
        flat = _parse_lines(fh)
    cfg = RunConfig(flat=flat)
    for assignment in overrides:
        cfg.override(assignment)
    cfg.validate_common()
    return cfg
