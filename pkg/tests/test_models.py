"""
Tests for Pydantic models in app/models.py.

These tests require no graph. They verify that the model layer enforces
its own contracts (jobspec grammar, field constraints, defaults, metrics
accumulation) before any engine code runs.
"""

import json

import pytest
from pydantic import ValidationError

from app.models import (
    Algorithm,
    JobSpec,
    Metrics,
    Mode,
    RunConfig,
    SchedulerConfig,
    StaggeredJob,
    TraceRecord,
)


# ---------------------------------------------------------------------------
# JobSpec
# ---------------------------------------------------------------------------

class TestJobSpec:
    """Validates the jobspec grammar `pagerank[:d=<real>]` | `sssp:src=<int>`."""

    def test_bare_pagerank_uses_default_damping(self):
        """`pagerank` with no options gets d = 0.85."""
        spec = JobSpec.parse("pagerank")
        assert spec.algorithm is Algorithm.PAGERANK
        assert spec.damping == 0.85
        assert spec.source is None

    def test_pagerank_damping_option(self):
        """`pagerank:d=0.9` sets the damping factor."""
        assert JobSpec.parse("pagerank:d=0.9").damping == 0.9

    def test_sssp_source_option(self):
        """`sssp:src=7` sets the source vertex."""
        spec = JobSpec.parse("sssp:src=7")
        assert spec.algorithm is Algorithm.SSSP
        assert spec.source == 7

    def test_sssp_without_source_raises(self):
        """An SSSP job must name its source."""
        with pytest.raises(ValueError):
            JobSpec.parse("sssp")

    @pytest.mark.parametrize(
        "text",
        ["bfs", "pagerank:src=1", "sssp:d=0.5", "pagerank:d", "pagerank:d=1.0", "pagerank:d=0", "sssp:src=-1", ""],
    )
    def test_malformed_specs_raise(self, text: str):
        """Unknown algorithms, misplaced options and out-of-range values are rejected."""
        with pytest.raises(ValueError):
            JobSpec.parse(text)

    @pytest.mark.parametrize("text", ["pagerank:d=0.9", "sssp:src=3", "pagerank:d=0.85"])
    def test_str_is_parseable(self, text: str):
        """str(spec) is canonical jobspec text that parses back to the same spec."""
        spec = JobSpec.parse(text)
        assert str(spec) == text
        assert JobSpec.parse(str(spec)) == spec


class TestStaggeredJob:
    """Validates `<superstep>:<jobspec>` parsing."""

    def test_parses_step_and_spec(self):
        """The text before the first colon is the superstep."""
        item = StaggeredJob.parse("3:sssp:src=0")
        assert item.superstep == 3
        assert item.job == JobSpec.parse("sssp:src=0")

    @pytest.mark.parametrize("text", ["pagerank", "x:pagerank", "0:pagerank"])
    def test_malformed_stagger_raises(self, text: str):
        """Missing or non-positive supersteps are rejected."""
        with pytest.raises(ValueError):
            StaggeredJob.parse(text)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

class TestRunConfig:
    """Validates defaults and constraints of the run configuration."""

    def test_defaults(self):
        """Only graph_path and jobs are required; every other knob has its default."""
        config = RunConfig(graph_path="g.el", jobs=["pagerank"])
        assert config.block_size == 4096
        assert config.c_const == 100.0
        assert config.alpha == 0.8
        assert config.samples == 500
        assert config.epsilon_frac == 0.2
        assert config.tolerance == 1e-9
        assert config.mode is Mode.TWO_LEVEL
        assert config.seed == 42
        assert config.max_supersteps == 10_000

    def test_string_jobs_are_parsed(self):
        """Jobspec strings become JobSpec models."""
        config = RunConfig(graph_path="g.el", jobs=["pagerank", "sssp:src=0"])
        assert [spec.algorithm for spec in config.jobs] == [Algorithm.PAGERANK, Algorithm.SSSP]

    @pytest.mark.parametrize(
        "overrides",
        [
            {"alpha": 1.5},
            {"alpha": 0.0},
            {"tolerance": 0.0},
            {"block_size": 0},
            {"samples": 0},
            {"max_supersteps": 0},
            {"c_const": -1.0},
            {"workers": 0},
        ],
    )
    def test_constraint_violations_raise(self, overrides: dict):
        """Counts below 1, alpha outside (0, 1] and non-positive tolerance are rejected."""
        with pytest.raises(ValidationError):
            RunConfig(graph_path="g.el", jobs=["pagerank"], **overrides)

    def test_alpha_of_one_is_allowed(self):
        """alpha = 1 (no reserve) is a valid setting."""
        assert SchedulerConfig(alpha=1.0).alpha == 1.0

    def test_empty_job_list_raises(self):
        """At least one job is required."""
        with pytest.raises(ValidationError):
            RunConfig(graph_path="g.el", jobs=[])

    @pytest.mark.parametrize("level", ["foo", "", "verbose"])
    def test_unknown_log_level_raises(self, level: str):
        """log_level must name a logging level."""
        with pytest.raises(ValidationError):
            RunConfig(graph_path="g.el", jobs=["pagerank"], log_level=level)

    def test_log_level_is_upper_cased(self):
        """Known levels are accepted in any case."""
        assert RunConfig(graph_path="g.el", jobs=["pagerank"], log_level="warning").log_level == "WARNING"

    def test_env_default_for_workers(self, monkeypatch):
        """GRAPHSCHED_WORKERS supplies the worker default."""
        monkeypatch.setenv("GRAPHSCHED_WORKERS", "3")
        assert SchedulerConfig().workers == 3

    def test_echo_is_json_ready(self):
        """echo() renders jobs and staggers back to their text forms."""
        config = RunConfig(graph_path="g.el", jobs=["pagerank:d=0.9"], stagger=["2:sssp:src=1"])
        echoed = config.echo()
        json.dumps(echoed)
        assert echoed["jobs"] == ["pagerank:d=0.9"]
        assert echoed["stagger"] == ["2:sssp:src=1"]
        assert echoed["alpha"] == 0.8
        assert echoed["mode"] == "two-level"


# ---------------------------------------------------------------------------
# Metrics / TraceRecord
# ---------------------------------------------------------------------------

class TestMetrics:
    """Validates metric accumulation and the deterministic view."""

    def test_absorb_adds_counters(self):
        """absorb() sums supersteps, loads and per-job counters."""
        total = Metrics(mode=Mode.NAIVE, supersteps=1, block_loads=4, per_job_iterations={0: 1})
        total.absorb(
            Metrics(
                mode=Mode.NAIVE,
                supersteps=1,
                block_loads=3,
                per_job_iterations={0: 1, 1: 1},
                per_job_vertex_updates={1: 10},
            )
        )
        assert total.supersteps == 2
        assert total.block_loads == 7
        assert total.per_job_iterations == {0: 2, 1: 1}
        assert total.per_job_vertex_updates == {1: 10}

    def test_deterministic_view_drops_wall_time(self):
        """Two metrics differing only in wall time have equal deterministic views."""
        a = Metrics(mode=Mode.TWO_LEVEL, supersteps=2, wall_time_ms=1.0)
        b = Metrics(mode=Mode.TWO_LEVEL, supersteps=2, wall_time_ms=99.0)
        assert "wall_time_ms" not in a.deterministic_view()
        assert a.deterministic_view() == b.deterministic_view()

    def test_trace_record_json(self):
        """A trace record serialises to {superstep, block, jobs}."""
        line = TraceRecord(superstep=2, block=5, jobs=[0, 1]).model_dump_json()
        assert json.loads(line) == {"superstep": 2, "block": 5, "jobs": [0, 1]}
