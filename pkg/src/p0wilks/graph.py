"""Directed graphs without self-loops, bi-degree sequences and edge-list I/O."""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .exceptions import EdgeListError, EmptyGraphError, InvalidSizeError

__all__ = [
    "BiDegree",
    "DirectedGraph",
    "bi_degree",
    "check_adjacency",
    "density",
    "from_edge_list",
    "read_edge_list",
    "to_edge_list",
    "transpose",
]

_SPLIT = re.compile(r"[\s,]+")
_NODES_DIRECTIVE = re.compile(r"^[#%]\s*nodes\s*[:=]?\s*(\d+)\s*$", re.IGNORECASE)


def check_adjacency(adj, copy: bool = True) -> np.ndarray:
    """Validate a square 0/1 adjacency matrix and return it as ``int8``.

    The diagonal must be zero; a nonzero diagonal is rejected rather than
    silently cleared so that callers notice malformed input.
    """
    arr = np.array(adj, copy=copy)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"adjacency must be a square matrix, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise EmptyGraphError("adjacency matrix has zero nodes")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("adjacency entries must be 0 or 1")
    arr = arr.astype(np.int8)
    if np.any(np.diagonal(arr)):
        raise ValueError("adjacency has self-loops (nonzero diagonal)")
    return arr


@dataclass(frozen=True)
class BiDegree:
    out_deg: np.ndarray
    in_deg: np.ndarray

    @property
    def n(self) -> int:
        return len(self.out_deg)


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Binary directed graph on nodes ``1..n`` stored as a dense matrix.

    ``adj[i, j] == 1`` iff there is an edge from node ``i + 1`` to node
    ``j + 1``. Instances are read-only; ``labels`` keeps the original node
    identifiers when the graph came from an edge list.
    """

    adj: np.ndarray
    labels: tuple | None = field(default=None)

    def __post_init__(self):
        adj = check_adjacency(self.adj)
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)
        if self.labels is not None and len(self.labels) != adj.shape[0]:
            raise ValueError("labels must have one entry per node")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "DirectedGraph":
        """Build from 1-based ``(src, dst)`` pairs; self-loops are dropped."""
        adj = np.zeros((n, n), dtype=np.int8)
        for i, j in edges:
            if not (1 <= i <= n and 1 <= j <= n):
                raise ValueError(f"edge ({i}, {j}) outside 1..{n}")
            if i != j:
                adj[i - 1, j - 1] = 1
        return cls(adj)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.adj.sum())

    @property
    def out_deg(self) -> np.ndarray:
        return self.degrees.out_deg

    @property
    def in_deg(self) -> np.ndarray:
        return self.degrees.in_deg

    @property
    def degrees(self) -> BiDegree:
        cached = self.__dict__.get("_degrees")
        if cached is None:
            cached = bi_degree(self)
            object.__setattr__(self, "_degrees", cached)
        return cached

    def edges(self) -> list[tuple[int, int]]:
        src, dst = np.nonzero(self.adj)
        return [(int(i) + 1, int(j) + 1) for i, j in zip(src, dst)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return self.adj.shape == other.adj.shape and bool(np.array_equal(self.adj, other.adj))

    def __hash__(self) -> int:
        return hash((self.n, self.adj.tobytes()))

    def __repr__(self) -> str:
        return f"DirectedGraph(n={self.n}, edges={self.n_edges})"


def bi_degree(g: DirectedGraph) -> BiDegree:
    adj = g.adj.astype(np.int64)
    return BiDegree(out_deg=adj.sum(axis=1), in_deg=adj.sum(axis=0))


def transpose(g: DirectedGraph) -> DirectedGraph:
    return DirectedGraph(g.adj.T.copy(), labels=g.labels)


def density(g: DirectedGraph) -> float:
    if g.n < 2:
        raise InvalidSizeError(f"density needs at least 2 nodes, got {g.n}")
    return g.n_edges / (g.n * (g.n - 1))


def _parse_id(token: str):
    try:
        return int(token)
    except ValueError:
        return token


def _sort_key(ids: Sequence) -> list:
    if all(isinstance(x, int) for x in ids):
        return sorted(ids)
    return sorted(ids, key=str)


def from_edge_list(
    text: str | TextIO,
    weighted: bool = False,
    threshold: float = 1.0,
    relabel: bool = True,
) -> DirectedGraph:
    """Parse an edge list into a :class:`DirectedGraph`.

    Each data line is ``src dst`` or ``src dst weight`` separated by
    whitespace or commas. Lines starting with ``#`` or ``%`` are comments;
    a ``# nodes: N`` comment declares integer nodes ``1..N`` up front so
    isolated nodes survive a round trip.

    With ``weighted`` set, an edge is kept only when its weight is at least
    ``threshold`` (a missing weight counts as 1). Duplicates collapse to a
    single edge and self-loops are dropped, but the nodes they mention are
    kept. With ``relabel`` the distinct IDs are mapped to ``1..n`` in sorted
    order (numeric when every ID is an integer); without it IDs must already
    be positive integers and ``n`` is the largest one.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    stream = io.StringIO(text) if isinstance(text, str) else text

    declared = 0
    nodes: dict = {}
    raw_edges: list[tuple] = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        if line[0] in "#%":
            m = _NODES_DIRECTIVE.match(line)
            if m:
                declared = max(declared, int(m.group(1)))
            continue
        tokens = [t for t in _SPLIT.split(line) if t]
        if len(tokens) not in (2, 3):
            raise EdgeListError(f"line {lineno}: expected 'src dst [weight]', got {line!r}")
        src, dst = _parse_id(tokens[0]), _parse_id(tokens[1])
        weight = 1.0
        if len(tokens) == 3:
            try:
                weight = float(tokens[2])
            except ValueError:
                raise EdgeListError(f"line {lineno}: weight {tokens[2]!r} is not a number") from None
        nodes.setdefault(src, None)
        nodes.setdefault(dst, None)
        if src == dst or (weighted and weight < threshold):
            continue
        raw_edges.append((src, dst))

    for k in range(1, declared + 1):
        nodes.setdefault(k, None)
    if not nodes:
        raise EmptyGraphError("edge list contains no nodes")

    if relabel:
        labels = _sort_key(list(nodes))
        index = {lab: k for k, lab in enumerate(labels, start=1)}
        n = len(labels)
    else:
        bad = [x for x in nodes if not isinstance(x, int) or x < 1]
        if bad:
            raise EdgeListError(f"without relabeling node IDs must be positive integers, got {bad[0]!r}")
        n = max(nodes)
        labels = list(range(1, n + 1))
        index = {k: k for k in labels}

    adj = np.zeros((n, n), dtype=np.int8)
    for src, dst in raw_edges:
        adj[index[src] - 1, index[dst] - 1] = 1
    return DirectedGraph(adj, labels=tuple(labels))


def read_edge_list(path, **opts) -> DirectedGraph:
    with open(path, encoding="utf-8") as fh:
        return from_edge_list(fh, **opts)


def to_edge_list(g: DirectedGraph, header: bool = True) -> str:
    """Canonical export: sorted 1-based ``src dst`` pairs, one per line."""
    lines = [f"# nodes: {g.n}"] if header else []
    lines.extend(f"{i} {j}" for i, j in sorted(g.edges()))
    return "\n".join(lines) + "\n"
