"""
Network input formats.

Two forms are accepted, as JSON files or as Python mappings:

* explicit edges::

    {"n": 3, "edges": [{"i": 0, "j": 1, "b": 1.0}, ...],
     "inertia": 1, "damping": 1, "kappa": 1}

* a generated preset::

    {"preset": {"kind": "complete", "n": 10, "weight": 1.0},
     "inertia": 1, "damping": 1}

plus a compact preset string for the command line, ``kind:n[,key=value...]``,
e.g. ``erdos-renyi:20,p=0.3,seed=7,weight=0.1..10`` or ``from-file:topo.json``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Union

import pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .exceptions import ParseError
from .network import (
    DEFAULT_CONNECTIVITY_RTOL,
    PRESET_KINDS,
    GraphPreset,
    NetworkSpec,
    build_preset,
    laplacian_spectrum,
)
from .report import atomic_write_text

logger = logging.getLogger(__name__)


class EdgeModel(BaseModel):
    """
    One transmission line.
    """
    i: int = Field(..., description="First endpoint (0-based bus index).")
    j: int = Field(..., description="Second endpoint (0-based bus index).")
    b: float = Field(..., description="Line susceptance in per-unit; must be positive.")


class WeightRangeModel(BaseModel):
    """
    Seeded uniform range for random edge weights.
    """
    model_config = ConfigDict(populate_by_name=True)

    low: float = Field(..., alias="min", description="Smallest weight.")
    high: float = Field(..., alias="max", description="Largest weight.")
    seed: int = Field(0, description="Seed of the weight generator.")


class PresetModel(BaseModel):
    kind: Literal["complete", "path", "cycle", "star", "erdos-renyi", "from-file"]
    n: int = Field(0, description="Number of buses (ignored for from-file).")
    weight: Optional[Union[float, WeightRangeModel]] = Field(None, description="Uniform weight or a seeded range.")
    p: Optional[float] = Field(None, description="Edge probability for erdos-renyi.")
    seed: Optional[int] = Field(None, description="Graph seed for erdos-renyi.")
    path: Optional[str] = Field(None, description="Topology file for from-file.")

    def to_preset(self) -> GraphPreset:
        weight: Any = self.weight
        if isinstance(weight, WeightRangeModel):
            weight = (weight.low, weight.high, weight.seed)
        return GraphPreset(kind=self.kind, n=self.n, weight=weight, p=self.p, seed=self.seed, path=self.path)


class NetworkFileModel(BaseModel):
    """
    Network file: explicit ``n``/``edges`` or a ``preset``, never both.
    """
    n: Optional[int] = Field(None, description="Number of buses.")
    edges: Optional[List[EdgeModel]] = Field(None, description="Undirected weighted edges.")
    preset: Optional[PresetModel] = Field(None, description="Generated topology.")
    inertia: Optional[float] = Field(None, description="Homogeneous inertia M.")
    damping: Optional[float] = Field(None, description="Homogeneous damping D.")
    kappa: Optional[float] = Field(None, description="Frequency weight for the combined output.")
    bus_susceptance: Optional[float] = Field(None, description="Tie from bus 0 to an infinite bus.")

    @model_validator(mode="after")
    def _one_topology(self) -> "NetworkFileModel":
        explicit = self.n is not None or self.edges is not None
        if explicit and self.preset is not None:
            raise ValueError("give either n/edges or preset, not both")
        if not explicit and self.preset is None:
            raise ValueError("missing topology: give n/edges or preset")
        if explicit and self.n is None:
            raise ValueError("explicit edges need n")
        return self


# ------------------------------------------------------------------ parsing
def parse_preset_string(text: str) -> GraphPreset:
    """Parse ``kind:n[,key=value...]`` into a :class:`GraphPreset`."""
    source = "preset string"
    kind, sep, rest = text.strip().partition(":")
    if not sep or kind not in PRESET_KINDS:
        raise ParseError(f"expected kind:n with kind in {PRESET_KINDS}, got {text!r}", source=source)
    if kind == "from-file":
        if not rest:
            raise ParseError("from-file needs a path", source=source, field="path")
        return GraphPreset(kind=kind, n=0, path=rest)

    head, *options = rest.split(",")
    try:
        n = int(head)
    except ValueError:
        raise ParseError(f"node count must be an integer, got {head!r}", source=source, field="n")

    values: Dict[str, str] = {}
    for option in options:
        key, eq, value = option.partition("=")
        if not eq or key not in ("p", "seed", "weight", "weight_seed"):
            raise ParseError(f"unknown option {option!r}", source=source, field=key or option)
        values[key] = value

    try:
        p = float(values["p"]) if "p" in values else None
        seed = int(values["seed"]) if "seed" in values else None
        weight: Any = None
        if "weight" in values:
            low, dots, high = values["weight"].partition("..")
            if dots:
                weight_seed = int(values.get("weight_seed", seed if seed is not None else 0))
                weight = (float(low), float(high), weight_seed)
            else:
                weight = float(low)
    except ValueError as e:
        raise ParseError(f"bad option value: {e}", source=source)
    return GraphPreset(kind=kind, n=n, weight=weight, p=p, seed=seed)


def _looks_like_preset(text: str) -> bool:
    kind, sep, _ = text.partition(":")
    return bool(sep) and kind in PRESET_KINDS


def _load_json(path: Path) -> Any:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ParseError("network file not found", source=str(path))
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        logger.error(f"Malformed network JSON in {path}: {e}")
        raise ParseError(e.msg, source=str(path), line=e.lineno, column=e.colno)


def _validate_payload(payload: Any, source: str) -> NetworkFileModel:
    try:
        return NetworkFileModel.model_validate(payload)
    except pydantic.ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or None
        raise ParseError(first["msg"], source=source, field=field)


def parse_network(
    source: Union[str, Path, Mapping[str, Any]],
    *,
    inertia: Optional[float] = None,
    damping: Optional[float] = None,
    kappa: Optional[float] = None,
    bus_susceptance: Optional[float] = None,
    defaults: Optional[Mapping[str, Any]] = None,
    connectivity_rtol: float = DEFAULT_CONNECTIVITY_RTOL,
) -> NetworkSpec:
    """
    Build a validated, connected :class:`NetworkSpec` from a file path, a
    preset string or a mapping.

    Keyword parameters override values from the source; ``defaults`` (the
    ``network`` config section) fills whatever is still missing.  Connectivity
    is checked here, so a disconnected network fails at parse time.
    """
    defaults = dict(defaults or {})
    model: Optional[NetworkFileModel] = None
    preset: Optional[GraphPreset] = None
    if isinstance(source, Mapping):
        label = "<mapping>"
        model = _validate_payload(dict(source), label)
    elif isinstance(source, str) and _looks_like_preset(source) and not Path(source).exists():
        label = source
        preset = parse_preset_string(source)
    else:
        label = str(source)
        model = _validate_payload(_load_json(Path(source)), label)
    if model is not None and model.preset is not None:
        preset = model.preset.to_preset()

    def pick(name: str, override: Optional[float], fallback: float) -> float:
        if override is not None:
            return override
        value = getattr(model, name) if model is not None else None
        return value if value is not None else defaults.get(name, fallback)

    M = pick("inertia", inertia, 1.0)
    D = pick("damping", damping, 1.0)
    k = pick("kappa", kappa, 1.0)
    bus = pick("bus_susceptance", bus_susceptance, 0.0)

    if preset is not None:
        spec = build_preset(
            preset,
            inertia=M,
            damping=D,
            kappa=k,
            retries=int(defaults.get("random_retries", 200)),
        )
        spec = replace(spec, bus_susceptance=bus or 0.0, connectivity_rtol=connectivity_rtol)
    else:
        assert model is not None
        edges = [(e.i, e.j, e.b) for e in model.edges or []]
        spec = NetworkSpec(
            n=model.n,
            edges=tuple(edges),
            inertia=M,
            damping=D,
            kappa=k,
            bus_susceptance=bus,
            connectivity_rtol=connectivity_rtol,
        )

    laplacian_spectrum(spec)
    logger.debug(f"Parsed {label}: n={spec.n}, {len(spec.edges)} edges, hash {spec.spec_hash()[:12]}")
    return spec


def emit_network(spec: NetworkSpec, path: Optional[str | Path] = None) -> str:
    """Explicit-edge JSON of ``spec``; written atomically when ``path`` is given."""
    text = json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n"
    if path is not None:
        atomic_write_text(path, text)
    return text
