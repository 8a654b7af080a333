"""
Tests for edge-list parsing, CSR construction and block partitioning in app/graph.py.
"""

from pathlib import Path

import numpy as np
import pytest

from app.bench import generate_graph
from app.graph import (
    Graph,
    EdgeList,
    EdgeListParseError,
    block_of,
    build_graph,
    load_edge_list,
    partition_blocks,
)


def _graph(edges: list[tuple]) -> Graph:
    return build_graph(EdgeList.from_tuples(edges))


# ---------------------------------------------------------------------------
# load_edge_list
# ---------------------------------------------------------------------------

class TestLoadEdgeList:
    """Parsing of `src dst [weight]` files."""

    def test_missing_weight_defaults_to_one(self, tmp_path: Path):
        """Two-field lines get weight 1.0 and keep file order."""
        path = tmp_path / "g.el"
        path.write_text("0 1\n1 2\n")
        assert list(load_edge_list(path)) == [(0, 1, 1.0), (1, 2, 1.0)]

    def test_explicit_weight_is_parsed(self, tmp_path: Path):
        """A third field is read as the edge weight."""
        path = tmp_path / "g.el"
        path.write_text("0 1 2.5\n")
        assert list(load_edge_list(path)) == [(0, 1, 2.5)]

    def test_comments_and_blank_lines_skipped(self, tmp_path: Path):
        """'#' lines and blank lines do not produce edges."""
        path = tmp_path / "g.el"
        path.write_text("# header\n\n0 1\n   \n# trailing\n2 0 3\n")
        assert list(load_edge_list(path)) == [(0, 1, 1.0), (2, 0, 3.0)]

    def test_malformed_token_reports_line_number(self, tmp_path: Path):
        """A non-integer vertex id raises a parse error naming line 1."""
        path = tmp_path / "g.el"
        path.write_text("0 x\n")
        with pytest.raises(EdgeListParseError) as exc_info:
            load_edge_list(path)
        assert exc_info.value.line_number == 1
        assert "line 1" in str(exc_info.value)

    def test_line_number_counts_comments(self, tmp_path: Path):
        """Line numbers refer to physical file lines, comments included."""
        path = tmp_path / "g.el"
        path.write_text("# c\n0 1\n0 1 2 3\n")
        with pytest.raises(EdgeListParseError) as exc_info:
            load_edge_list(path)
        assert exc_info.value.line_number == 3

    @pytest.mark.parametrize("line", ["-1 2", "0 1 -0.5", "0 1 nan", "0 1 inf", "5"])
    def test_invalid_values_rejected(self, tmp_path: Path, line: str):
        """Negative ids, negative or non-finite weights and short lines are errors."""
        path = tmp_path / "g.el"
        path.write_text(line + "\n")
        with pytest.raises(EdgeListParseError):
            load_edge_list(path)

    def test_missing_file_raises(self, tmp_path: Path):
        """A path that does not exist raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_edge_list(tmp_path / "nope.el")


# ---------------------------------------------------------------------------
# build_graph
# ---------------------------------------------------------------------------

class TestBuildGraph:
    """CSR construction."""

    def test_two_edge_star(self):
        """Both edges of vertex 0 land in its CSR slice."""
        graph = _graph([(0, 1, 1.0), (0, 2, 1.0)])
        assert graph.out_offsets.tolist() == [0, 2, 2, 2]
        assert graph.out_targets.tolist() == [1, 2]

    def test_sink_vertex(self):
        """Vertex count covers destination-only ids; sinks have degree 0."""
        graph = _graph([(1, 0, 1.0)])
        assert graph.vertex_count == 2
        assert graph.out_degree[0] == 0

    def test_three_cycle_degrees(self):
        """Every vertex of a 3-cycle has out-degree 1."""
        graph = _graph([(0, 1), (1, 2), (2, 0)])
        assert graph.out_degree.tolist() == [1, 1, 1]

    def test_edges_grouped_by_source_in_input_order(self):
        """Unsorted input is grouped by source; duplicates survive in input order."""
        graph = _graph([(2, 0, 1.0), (0, 2, 4.0), (2, 1, 2.0), (0, 2, 5.0)])
        assert graph.neighbors(0).tolist() == [2, 2]
        assert graph.out_weights[graph.out_offsets[0] : graph.out_offsets[1]].tolist() == [4.0, 5.0]
        assert graph.neighbors(2).tolist() == [0, 1]

    def test_empty_edge_list_raises(self):
        """An empty edge list is rejected."""
        with pytest.raises(ValueError):
            build_graph(EdgeList.from_tuples([]))

    def test_explicit_vertex_count_keeps_isolated_tail(self):
        """A larger vertex_count adds trailing isolated vertices."""
        graph = build_graph(EdgeList.from_tuples([(0, 1)]), vertex_count=5)
        assert graph.vertex_count == 5
        assert graph.out_offsets.tolist() == [0, 1, 1, 1, 1, 1]

    def test_csr_invariants_on_random_graph(self):
        """Offsets start at 0, never decrease, end at E; degrees sum to E; targets in range."""
        graph = generate_graph(500, 6, seed=3)
        assert graph.out_offsets[0] == 0
        assert np.all(np.diff(graph.out_offsets) >= 0)
        assert graph.out_offsets[-1] == graph.edge_count
        assert graph.out_degree.sum() == graph.edge_count
        assert graph.out_targets.max() < graph.vertex_count

    def test_deterministic(self):
        """The same edge list always yields the same CSR arrays."""
        edges = EdgeList.from_tuples([(3, 1), (0, 2), (3, 0), (1, 1)])
        a, b = build_graph(edges), build_graph(edges)
        assert np.array_equal(a.out_offsets, b.out_offsets)
        assert np.array_equal(a.out_targets, b.out_targets)
        assert np.array_equal(a.out_weights, b.out_weights)

    def test_arrays_are_read_only(self):
        """The shared CSR buffers cannot be mutated."""
        graph = _graph([(0, 1)])
        with pytest.raises(ValueError):
            graph.out_targets[0] = 0


# ---------------------------------------------------------------------------
# partition_blocks / block_of
# ---------------------------------------------------------------------------

class TestPartitionBlocks:
    """Fixed-size contiguous partitioning."""

    def test_ceil_division(self):
        """10 vertices in blocks of 4 give [0,4), [4,8), [8,10)."""
        table = partition_blocks(build_graph(EdgeList.from_tuples([(0, 9)])), 4)
        assert table.block_count == 3
        assert table.ranges == [(0, 4), (4, 8), (8, 10)]

    def test_single_block(self):
        """Block size equal to V_N gives one block."""
        table = partition_blocks(build_graph(EdgeList.from_tuples([(0, 7)])), 8)
        assert table.ranges == [(0, 8)]

    def test_million_vertices(self):
        """1,000,000 vertices in blocks of 1000 give 1000 blocks."""
        table = partition_blocks(build_graph(EdgeList.from_tuples([(999_999, 0)])), 1000)
        assert table.block_count == 1000

    def test_zero_block_size_raises(self):
        """block_size 0 is rejected."""
        with pytest.raises(ValueError):
            partition_blocks(build_graph(EdgeList.from_tuples([(0, 1)])), 0)

    @pytest.mark.parametrize("v, expected", [(0, 0), (7, 1), (9, 2)])
    def test_block_of(self, v: int, expected: int):
        """block_of is floor(v / V_B), including the short last block."""
        table = partition_blocks(build_graph(EdgeList.from_tuples([(0, 9)])), 4)
        assert block_of(table, v) == expected

    def test_block_of_out_of_range(self):
        """A vertex id >= V_N is rejected."""
        table = partition_blocks(build_graph(EdgeList.from_tuples([(0, 9)])), 4)
        with pytest.raises(ValueError):
            block_of(table, 10)

    def test_round_trip_covers_every_vertex_once(self):
        """Every vertex lies in the range of its own block; ranges tile [0, V_N)."""
        table = partition_blocks(generate_graph(103, 2, seed=1), 10)
        covered = []
        for v in range(table.vertex_count):
            lo, hi = table.range_of(block_of(table, v))
            assert lo <= v < hi
        for lo, hi in table.ranges:
            covered.extend(range(lo, hi))
        assert covered == list(range(103))
        assert all(hi - lo == 10 for lo, hi in table.ranges[:-1])
