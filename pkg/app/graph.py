"""
Graph ingestion and partitioning.

Responsibilities:
  1. Parse `src dst [weight]` edge-list files ('#' lines are comments)
  2. Build the shared, read-only CSR adjacency every job runs over
  3. Split the vertex range into fixed-size contiguous blocks (the scheduling unit)

Graph and BlockTable are immutable once built: their numpy buffers are flagged
read-only so concurrent jobs can share them without copying.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_WEIGHT = 1.0


class EdgeListParseError(ValueError):
    """A line of an edge-list file could not be parsed."""

    def __init__(self, line_number: int, line: str, reason: str) -> None:
        self.line_number = line_number
        self.line = line
        super().__init__(f"line {line_number}: {reason}: {line!r}")


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


# ---------------------------------------------------------------------------
# Edge lists
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EdgeList:
    """Parallel src/dst/weight arrays, in input order."""

    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray

    def __len__(self) -> int:
        return int(self.src.size)

    def __iter__(self) -> Iterator[tuple[int, int, float]]:
        for s, d, w in zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist()):
            yield s, d, w

    @classmethod
    def from_tuples(cls, edges: Iterable[tuple]) -> "EdgeList":
        """
        Build an EdgeList from (src, dst) or (src, dst, weight) tuples.

        Raises:
            ValueError: On negative vertex ids or negative / non-finite weights.
        """
        src: list[int] = []
        dst: list[int] = []
        weight: list[float] = []
        for edge in edges:
            if len(edge) not in (2, 3):
                raise ValueError(f"Edge must have 2 or 3 fields, got {edge!r}.")
            s, d = int(edge[0]), int(edge[1])
            w = float(edge[2]) if len(edge) == 3 else DEFAULT_WEIGHT
            if s < 0 or d < 0:
                raise ValueError(f"Vertex ids must be non-negative, got {edge!r}.")
            if not math.isfinite(w) or w < 0:
                raise ValueError(f"Edge weight must be finite and >= 0, got {edge!r}.")
            src.append(s)
            dst.append(d)
            weight.append(w)
        return cls(
            src=np.asarray(src, dtype=np.int64),
            dst=np.asarray(dst, dtype=np.int64),
            weight=np.asarray(weight, dtype=np.float64),
        )


def _parse_line(line_number: int, raw: str) -> tuple[int, int, float]:
    tokens = raw.split()
    if len(tokens) not in (2, 3):
        raise EdgeListParseError(line_number, raw, f"expected 2 or 3 fields, got {len(tokens)}")
    try:
        src, dst = int(tokens[0]), int(tokens[1])
    except ValueError:
        raise EdgeListParseError(line_number, raw, "vertex ids must be integers") from None
    if src < 0 or dst < 0:
        raise EdgeListParseError(line_number, raw, "vertex ids must be non-negative")

    weight = DEFAULT_WEIGHT
    if len(tokens) == 3:
        try:
            weight = float(tokens[2])
        except ValueError:
            raise EdgeListParseError(line_number, raw, "weight must be a number") from None
        if not math.isfinite(weight) or weight < 0:
            raise EdgeListParseError(line_number, raw, "weight must be finite and >= 0")
    return src, dst, weight


def load_edge_list(path: str | Path) -> EdgeList:
    """
    Read an edge-list file: one `src dst [weight]` edge per line.

    Blank lines and lines starting with '#' are skipped. Missing weights
    default to 1.0.

    Raises:
        FileNotFoundError: If `path` does not exist.
        EdgeListParseError: On the first malformed line (carries its line number).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Edge-list file not found: {path}")

    edges: list[tuple[int, int, float]] = []
    with path.open("r", encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            stripped = raw.strip()
            if not stripped or stripped.startswith("#"):
                continue
            edges.append(_parse_line(line_number, stripped))

    logger.info("Loaded %d edge(s) from %s", len(edges), path)
    return EdgeList.from_tuples(edges)


# ---------------------------------------------------------------------------
# CSR graph
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Graph:
    """
    Out-edge CSR adjacency shared by every job.

    Edges of vertex i live at out_targets[out_offsets[i]:out_offsets[i + 1]],
    with matching out_weights.
    """

    vertex_count: int
    out_offsets: np.ndarray
    out_targets: np.ndarray
    out_weights: np.ndarray

    @property
    def edge_count(self) -> int:
        return int(self.out_offsets[-1])

    @cached_property
    def out_degree(self) -> np.ndarray:
        return _frozen(np.diff(self.out_offsets))

    def neighbors(self, v: int) -> np.ndarray:
        return self.out_targets[self.out_offsets[v] : self.out_offsets[v + 1]]


def build_graph(edges: EdgeList, vertex_count: int | None = None) -> Graph:
    """
    Group edges by source into CSR form.

    vertex_count defaults to 1 + the largest id seen; pass it explicitly to
    keep trailing isolated vertices. Edges of one source keep their input
    order; duplicates and self-loops are retained.

    Raises:
        ValueError: If the edge list is empty or vertex_count is too small.
    """
    if len(edges) == 0:
        raise ValueError("Cannot build a graph from an empty edge list.")

    max_id = int(max(edges.src.max(), edges.dst.max()))
    if vertex_count is None:
        vertex_count = max_id + 1
    elif vertex_count <= max_id:
        raise ValueError(f"vertex_count={vertex_count} but edge list references vertex {max_id}.")

    order = np.argsort(edges.src, kind="stable")
    counts = np.bincount(edges.src, minlength=vertex_count)
    offsets = np.zeros(vertex_count + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])

    return Graph(
        vertex_count=vertex_count,
        out_offsets=_frozen(offsets),
        out_targets=_frozen(edges.dst[order].astype(np.int64)),
        out_weights=_frozen(edges.weight[order].astype(np.float64)),
    )


# ---------------------------------------------------------------------------
# Blocks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockTable:
    """Contiguous vertex ranges of block_size vertices; the last may be short."""

    vertex_count: int
    block_size: int

    @property
    def block_count(self) -> int:
        return -(-self.vertex_count // self.block_size)

    @cached_property
    def starts(self) -> np.ndarray:
        return _frozen(np.arange(0, self.vertex_count, self.block_size, dtype=np.int64))

    @property
    def ranges(self) -> list[tuple[int, int]]:
        return [self.range_of(b) for b in range(self.block_count)]

    def range_of(self, block_id: int) -> tuple[int, int]:
        if not 0 <= block_id < self.block_count:
            raise ValueError(f"Block {block_id} out of range [0, {self.block_count}).")
        start = block_id * self.block_size
        return start, min(start + self.block_size, self.vertex_count)


def partition_blocks(graph: Graph, block_size: int) -> BlockTable:
    """
    Partition [0, V_N) into ceil(V_N / block_size) contiguous blocks.

    Raises:
        ValueError: If block_size < 1.
    """
    if block_size < 1:
        raise ValueError(f"block_size must be >= 1, got {block_size}.")
    table = BlockTable(vertex_count=graph.vertex_count, block_size=block_size)
    logger.info(
        "Partitioned %d vertices into %d block(s) of %d",
        graph.vertex_count,
        table.block_count,
        block_size,
    )
    return table


def block_of(table: BlockTable, v: int) -> int:
    """Return the id of the block holding vertex v."""
    if not 0 <= v < table.vertex_count:
        raise ValueError(f"Vertex {v} out of range [0, {table.vertex_count}).")
    return v // table.block_size
