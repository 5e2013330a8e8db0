"""
Network model: generator networks, their Laplacians and spectra.

A network is a connected, weighted, undirected graph over ``n`` generator
buses with homogeneous inertia ``M`` and damping ``D``.  Edge weights are line
susceptances.  Node 0 may additionally be tied to an infinite bus, which turns
the single-node network into the single-machine infinite-bus (SMIB) system.

Graphs are built with ``networkx``; spectra come from a dense symmetric
eigensolver and are cached per topology so that sweeps over ``M``/``D`` do not
repeat the decomposition.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from .exceptions import DisconnectedGraph, NonPositiveParameter, ParseError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_CONNECTIVITY_RTOL = 1e-9

PRESET_KINDS = ("complete", "path", "cycle", "star", "erdos-renyi", "from-file")

WeightSpec = Union[float, Tuple[float, float, int]]


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    b: float

    @property
    def key(self) -> Tuple[int, int]:
        return (min(self.i, self.j), max(self.i, self.j))


@dataclass(frozen=True)
class NetworkSpec:
    """
    Validated, immutable description of a swing network.

    ``connectivity_rtol`` is the relative zero-eigenvalue tolerance of every
    spectrum computed for this spec.  It is left out of equality and the hash.
    """

    n: int
    edges: Tuple[Edge, ...]
    inertia: float
    damping: float
    kappa: float = 1.0
    bus_susceptance: float = 0.0
    connectivity_rtol: float = field(default=DEFAULT_CONNECTIVITY_RTOL, compare=False)

    def __post_init__(self) -> None:
        edges = tuple(_coerce_edge(edge) for edge in self.edges)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "inertia", float(self.inertia))
        object.__setattr__(self, "damping", float(self.damping))
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "bus_susceptance", float(self.bus_susceptance))
        object.__setattr__(self, "connectivity_rtol", float(self.connectivity_rtol))
        self._validate()

    # -------------------------------------------------------------- builders
    @classmethod
    def smib(cls, inertia: float, damping: float, susceptance: float) -> "NetworkSpec":
        """Single machine tied to an infinite bus through ``susceptance``."""
        if not susceptance > 0:
            raise NonPositiveParameter(f"SMIB susceptance B must be positive, got {susceptance}")
        return cls(n=1, edges=(), inertia=inertia, damping=damping, bus_susceptance=susceptance)

    def with_parameters(
        self,
        *,
        inertia: Optional[float] = None,
        damping: Optional[float] = None,
        kappa: Optional[float] = None,
    ) -> "NetworkSpec":
        """Copy with some of the machine parameters replaced."""
        return replace(
            self,
            inertia=self.inertia if inertia is None else inertia,
            damping=self.damping if damping is None else damping,
            kappa=self.kappa if kappa is None else kappa,
        )

    # ------------------------------------------------------------ properties
    @property
    def has_zero_mode(self) -> bool:
        """True when no bus tie grounds the network, i.e. L has a zero eigenvalue."""
        return self.bus_susceptance == 0.0

    @property
    def total_susceptance(self) -> float:
        return float(sum(edge.b for edge in self.edges))

    def to_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        for edge in self.edges:
            graph.add_edge(edge.i, edge.j, b=edge.b)
        return graph

    # -------------------------------------------------------- serialization
    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "n": self.n,
            "edges": [{"i": e.i, "j": e.j, "b": e.b} for e in self.edges],
            "inertia": self.inertia,
            "damping": self.damping,
            "kappa": self.kappa,
        }
        if self.bus_susceptance:
            payload["bus_susceptance"] = self.bus_susceptance
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "NetworkSpec":
        return cls(
            n=int(payload["n"]),
            edges=tuple(Edge(int(e["i"]), int(e["j"]), float(e["b"])) for e in payload.get("edges", [])),
            inertia=float(payload["inertia"]),
            damping=float(payload["damping"]),
            kappa=float(payload.get("kappa", 1.0)),
            bus_susceptance=float(payload.get("bus_susceptance", 0.0)),
        )

    def spec_hash(self) -> str:
        """SHA-256 of the canonical JSON form; stable across emit/parse."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    # ------------------------------------------------------------ internals
    def _validate(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise ValidationError(f"Node count must be a positive integer, got {self.n!r}")
        for name in ("inertia", "damping", "kappa"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise NonPositiveParameter(f"{name} must be positive and finite, got {value}")
        if not (math.isfinite(self.bus_susceptance) and self.bus_susceptance >= 0):
            raise NonPositiveParameter(f"bus_susceptance must be non-negative, got {self.bus_susceptance}")
        if not (math.isfinite(self.connectivity_rtol) and 0 < self.connectivity_rtol < 1):
            raise ValidationError(f"connectivity_rtol must lie in (0, 1), got {self.connectivity_rtol}")

        seen: Dict[Tuple[int, int], int] = {}
        for idx, edge in enumerate(self.edges):
            if not (0 <= edge.i < self.n and 0 <= edge.j < self.n):
                raise ValidationError(
                    f"Edge #{idx} ({edge.i}, {edge.j}) references a node outside [0, {self.n})"
                )
            if edge.i == edge.j:
                raise ValidationError(f"Edge #{idx} ({edge.i}, {edge.j}) is a self-loop")
            if not (math.isfinite(edge.b) and edge.b > 0):
                raise ValidationError(
                    f"Edge #{idx} ({edge.i}, {edge.j}) has non-positive susceptance b={edge.b}"
                )
            if edge.key in seen:
                raise ValidationError(
                    f"Edge #{idx} ({edge.i}, {edge.j}) duplicates edge #{seen[edge.key]}"
                )
            seen[edge.key] = idx

        if not self.edges and not (self.n == 1 and self.bus_susceptance > 0):
            raise DisconnectedGraph("Network has no edges", lambda2=0.0)


def _coerce_edge(edge: Union[Edge, Sequence[Any], Dict[str, Any]]) -> Edge:
    if isinstance(edge, Edge):
        return Edge(int(edge.i), int(edge.j), float(edge.b))
    if isinstance(edge, dict):
        return Edge(int(edge["i"]), int(edge["j"]), float(edge["b"]))
    i, j, b = edge
    return Edge(int(i), int(j), float(b))


# --------------------------------------------------------------------- presets
@dataclass(frozen=True)
class GraphPreset:
    """Named graph family used for fixtures, sweeps and the CLI shorthand."""

    kind: str
    n: int
    weight: Optional[WeightSpec] = None
    p: Optional[float] = None
    seed: Optional[int] = None
    path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in PRESET_KINDS:
            raise ValidationError(f"Unknown preset kind '{self.kind}', expected one of {PRESET_KINDS}")
        if self.kind == "erdos-renyi" and (self.p is None or not 0 < self.p <= 1):
            raise ValidationError(f"erdos-renyi preset needs an edge probability p in (0, 1], got {self.p}")
        if self.kind == "from-file" and not self.path:
            raise ValidationError("from-file preset needs a path")


def build_preset(
    preset: GraphPreset,
    *,
    inertia: float,
    damping: float,
    kappa: float = 1.0,
    retries: int = 200,
) -> NetworkSpec:
    """Generate a connected network for ``preset``."""
    if preset.kind == "from-file":
        n, pairs, file_weights = _topology_from_file(Path(preset.path or ""))
    else:
        n = preset.n
        graph = _preset_graph(preset, retries=retries)
        pairs = sorted((min(u, v), max(u, v)) for u, v in graph.edges())
        file_weights = None

    if file_weights is not None and preset.weight is None:
        weights = file_weights
    else:
        weights = _preset_weights(len(pairs), 1.0 if preset.weight is None else preset.weight)
    edges = tuple(Edge(i, j, float(b)) for (i, j), b in zip(pairs, weights))
    return NetworkSpec(n=n, edges=edges, inertia=inertia, damping=damping, kappa=kappa)


def _preset_graph(preset: GraphPreset, *, retries: int) -> nx.Graph:
    n = preset.n
    if n < 1:
        raise ValidationError(f"Preset size must be positive, got {n}")
    if preset.kind == "complete":
        return nx.complete_graph(n)
    if preset.kind == "path":
        return nx.path_graph(n)
    if preset.kind == "cycle":
        return nx.cycle_graph(n)
    if preset.kind == "star":
        return nx.star_graph(n - 1)

    base_seed = 0 if preset.seed is None else int(preset.seed)
    for attempt in range(retries):
        graph = nx.erdos_renyi_graph(n, preset.p, seed=base_seed + attempt)
        if n > 1 and nx.is_connected(graph):
            if attempt:
                logger.debug(f"erdos-renyi(n={n}, p={preset.p}) connected after {attempt + 1} draws")
            return graph
    raise DisconnectedGraph(
        f"erdos-renyi(n={n}, p={preset.p}, seed={base_seed}) stayed disconnected after {retries} draws"
    )


def _preset_weights(count: int, weight: WeightSpec) -> List[float]:
    if isinstance(weight, (tuple, list)):
        low, high, seed = weight
        if not 0 < low <= high:
            raise ValidationError(f"Weight range must satisfy 0 < min <= max, got ({low}, {high})")
        rng = np.random.default_rng(int(seed))
        return [float(w) for w in rng.uniform(low, high, size=count)]
    if not weight > 0:
        raise ValidationError(f"Uniform weight must be positive, got {weight}")
    return [float(weight)] * count


def _topology_from_file(path: Path) -> Tuple[int, List[Tuple[int, int]], List[float]]:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ParseError("topology file not found", source=str(path))
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, source=str(path), line=e.lineno, column=e.colno)
    try:
        n = int(payload["n"])
        raw = [(int(e["i"]), int(e["j"]), float(e.get("b", 1.0))) for e in payload["edges"]]
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"malformed topology: {e}", source=str(path))
    raw.sort(key=lambda item: (min(item[0], item[1]), max(item[0], item[1])))
    pairs = [(min(i, j), max(i, j)) for i, j, _ in raw]
    return n, pairs, [b for _, _, b in raw]


# ------------------------------------------------------------------ matrices
def build_laplacian(spec: NetworkSpec) -> np.ndarray:
    """Weighted Laplacian ``L = D - A`` (plus the bus tie on node 0, if any)."""
    laplacian = nx.laplacian_matrix(spec.to_graph(), nodelist=range(spec.n), weight="b")
    L = np.asarray(laplacian.toarray(), dtype=float)
    if spec.bus_susceptance:
        L[0, 0] += spec.bus_susceptance
    return L


def build_incidence(spec: NetworkSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Oriented incidence matrix and edge weights with ``B diag(w) B^T = L``.

    Each edge column has +1 on its lower node index and -1 on the higher one.
    A bus tie contributes a final column with a single +1 on node 0.
    """
    columns = len(spec.edges) + (1 if spec.bus_susceptance else 0)
    incidence = np.zeros((spec.n, columns))
    weights = np.zeros(columns)
    for col, edge in enumerate(spec.edges):
        low, high = edge.key
        incidence[low, col] = 1.0
        incidence[high, col] = -1.0
        weights[col] = edge.b
    if spec.bus_susceptance:
        incidence[0, -1] = 1.0
        weights[-1] = spec.bus_susceptance
    return incidence, weights


# ------------------------------------------------------------------ spectrum
@dataclass(frozen=True)
class LaplacianSpectrum:
    """Ascending Laplacian eigenvalues with an orthonormal eigenvector basis."""

    eigenvalues: np.ndarray
    basis: np.ndarray
    tolerance: float
    zero_mode: bool = True

    @property
    def n(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def algebraic_connectivity(self) -> float:
        if self.n < 2:
            raise ValidationError("Algebraic connectivity needs at least two nodes")
        return float(self.eigenvalues[1])

    @property
    def governing_eigenvalue(self) -> float:
        """Smallest positive eigenvalue: lambda2, or lambda1 for a grounded network."""
        return float(self.eigenvalues[1] if self.zero_mode else self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    def sqrt_laplacian(self) -> np.ndarray:
        """``V diag(sqrt(lambda)) V^T`` with the zero eigenvalue clamped."""
        roots = np.sqrt(np.clip(self.eigenvalues, 0.0, None))
        return (self.basis * roots) @ self.basis.T


def spectrum(
    L: np.ndarray,
    connectivity_tol: Optional[float] = None,
    *,
    zero_mode: bool = True,
    connectivity_rtol: float = DEFAULT_CONNECTIVITY_RTOL,
) -> LaplacianSpectrum:
    """
    Eigendecomposition of a (possibly grounded) Laplacian.

    With ``zero_mode`` the first eigenvalue must vanish within
    ``connectivity_tol`` (default ``connectivity_rtol * lambda_n``) and is
    clamped to exactly 0 with eigenvector ``1/sqrt(n)``; ``lambda_2`` must exceed
    the tolerance.  Without it every eigenvalue must exceed the tolerance.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValidationError(f"Laplacian must be square, got shape {L.shape}")
    scale = float(np.max(np.abs(L))) if L.size else 0.0
    if not np.allclose(L, L.T, rtol=0.0, atol=1e-12 * max(scale, 1.0)):
        raise ValidationError("Laplacian must be symmetric")

    eigenvalues, basis = np.linalg.eigh(L)
    n = eigenvalues.shape[0]
    lam_max = float(abs(eigenvalues[-1])) if n else 0.0
    tol = connectivity_tol if connectivity_tol is not None else connectivity_rtol * max(lam_max, np.finfo(float).tiny)

    if zero_mode:
        if n < 2:
            raise DisconnectedGraph("A network without a bus tie needs at least two nodes", lambda2=0.0)
        if abs(eigenvalues[0]) >= tol:
            raise ValidationError(
                f"Matrix is not a Laplacian: smallest eigenvalue {eigenvalues[0]:.3e} is not zero"
            )
        if eigenvalues[1] <= tol:
            logger.error(f"Disconnected network: lambda2={eigenvalues[1]:.3e} <= tol={tol:.3e}")
            raise DisconnectedGraph("Network is disconnected", lambda2=float(eigenvalues[1]))
        eigenvalues[0] = 0.0
        basis[:, 0] = 1.0 / math.sqrt(n)
        first = 1
    else:
        if eigenvalues[0] <= tol:
            raise DisconnectedGraph(
                "Grounded network has a component without a bus tie", lambda2=float(eigenvalues[0])
            )
        first = 0

    for col in range(first, n):
        pivot = int(np.argmax(np.abs(basis[:, col])))
        if basis[pivot, col] < 0:
            basis[:, col] *= -1.0

    eigenvalues.setflags(write=False)
    basis.setflags(write=False)
    return LaplacianSpectrum(eigenvalues=eigenvalues, basis=basis, tolerance=float(tol), zero_mode=zero_mode)


def laplacian_spectrum(
    spec: NetworkSpec,
    *,
    connectivity_rtol: Optional[float] = None,
) -> LaplacianSpectrum:
    """Spectrum of ``spec``'s Laplacian, cached per topology and tolerance (default ``spec.connectivity_rtol``)."""
    rtol = spec.connectivity_rtol if connectivity_rtol is None else connectivity_rtol
    return _cached_spectrum(spec.n, spec.edges, spec.bus_susceptance, rtol)


@lru_cache(maxsize=256)
def _cached_spectrum(
    n: int,
    edges: Tuple[Edge, ...],
    bus_susceptance: float,
    connectivity_rtol: float,
) -> LaplacianSpectrum:
    topology = NetworkSpec(n=n, edges=edges, inertia=1.0, damping=1.0, bus_susceptance=bus_susceptance)
    return spectrum(
        build_laplacian(topology),
        zero_mode=topology.has_zero_mode,
        connectivity_rtol=connectivity_rtol,
    )


def edges_from_pairs(pairs: Iterable[Tuple[int, int]], weight: float = 1.0) -> Tuple[Edge, ...]:
    """Convenience for tests and scripts: unit (or uniform) weighted edges."""
    return tuple(Edge(int(i), int(j), float(weight)) for i, j in pairs)
