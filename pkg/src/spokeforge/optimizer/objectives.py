"""Objective definitions and their scalarization into a single loss."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from ..errors import ConfigError
from ..evaluator import OUTPUTS

KINDS = ("min", "max", "target", "ignore")
BACKENDS = ("surrogate", "proxy")
DEFAULT_TARGET_SCALE = 0.05  # fraction of |target| when no scale is given


@dataclass(frozen=True)
class Directive:
    output: str
    kind: str
    value: float | None = None
    scale: float | None = None

    def __post_init__(self):
        if self.output not in OUTPUTS:
            raise ConfigError(f"unknown output {self.output!r}; expected one of {', '.join(OUTPUTS)}")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown directive {self.kind!r}")
        if self.kind == "target":
            if self.value is None or not math.isfinite(self.value):
                raise ConfigError(f"target for {self.output} needs a finite value")
            scale = self.scale if self.scale is not None else DEFAULT_TARGET_SCALE * abs(self.value)
            if not scale > 0:
                raise ConfigError(f"target scale for {self.output} must be positive")
            object.__setattr__(self, "scale", float(scale))
            object.__setattr__(self, "value", float(self.value))

    def __str__(self) -> str:
        if self.kind == "target":
            return f"target:{self.output}={self.value:g}/{self.scale:g}"
        return f"{self.kind}:{self.output}"


@dataclass(frozen=True)
class ObjectiveSpec:
    directives: tuple[Directive, ...]
    backend: str = "surrogate"

    def __post_init__(self):
        object.__setattr__(self, "directives", tuple(self.directives))
        if not any(d.kind != "ignore" for d in self.directives):
            raise ConfigError("objective needs at least one min, max or target directive")
        outs = [d.output for d in self.directives]
        if len(set(outs)) != len(outs):
            raise ConfigError("each output may appear in at most one directive")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")

    @property
    def active(self) -> tuple[Directive, ...]:
        return tuple(d for d in self.directives if d.kind != "ignore")

    @property
    def tag(self) -> str:
        return "_".join(
            f"{d.kind}-{d.output}" for d in self.active
        )

    def __str__(self) -> str:
        return ",".join(str(d) for d in self.active)


_TERM = re.compile(r"^(min|max|ignore):(\w+)$|^target:(\w+)=([^/]+)(?:/(.+))?$")


def parse_objective(text: str, backend: str = "surrogate") -> ObjectiveSpec:
    """Parse ``min:<out>|max:<out>|target:<out>=<val>[/<scale>]`` terms joined by commas."""
    directives = []
    for term in (t.strip() for t in text.split(",")):
        m = _TERM.match(term)
        if not m:
            raise ConfigError(f"cannot parse objective term {term!r}")
        if m.group(3):
            try:
                value = float(m.group(4))
                scale = float(m.group(5)) if m.group(5) else None
            except ValueError:
                raise ConfigError(f"bad number in objective term {term!r}") from None
            directives.append(Directive(m.group(3), "target", value, scale))
        else:
            directives.append(Directive(m.group(2), m.group(1)))
    return ObjectiveSpec(tuple(directives), backend)


def scalarize(record, spec: ObjectiveSpec, base) -> float:
    """Loss to minimize: squared scaled target misses plus base-normalized min/max terms."""
    loss = 0.0
    for d in spec.active:
        y = record[d.output]
        if d.kind == "target":
            loss += ((y - d.value) / d.scale) ** 2
        elif d.kind == "min":
            loss += y / base[d.output]
        else:
            loss -= y / base[d.output]
    return loss


scalarize_targeted = scalarize


def minimization_vector(record, spec: ObjectiveSpec, base) -> list[float]:
    """Per-directive objectives in minimization form, normalized by the base design."""
    out = []
    for d in spec.active:
        y = record[d.output]
        if d.kind == "target":
            out.append(((y - d.value) / d.scale) ** 2)
        elif d.kind == "min":
            out.append(y / base[d.output])
        else:
            out.append(-y / base[d.output])
    return out
