"""
Pydantic models for run configuration, job specs, metrics and traces.

Environment defaults are loaded via python-dotenv (see .env.example). CLI
flags always take precedence over environment values.
"""

import logging
import os
import re
from enum import Enum
from pathlib import Path
from typing import Any, List, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator, model_validator

load_dotenv()


# ---------------------------------------------------------------------------
# Job specs
# ---------------------------------------------------------------------------

class Algorithm(str, Enum):
    PAGERANK = "pagerank"
    SSSP = "sssp"


_JOBSPEC_RE = re.compile(r"^(?P<name>[a-z]+)(?::(?P<options>.*))?$")


class JobSpec(BaseModel):
    """
    One analytics job: delta-based PageRank or single-source shortest paths.

    Text grammar: `pagerank[:d=<real>]` | `sssp:src=<int>`.
    """

    algorithm: Algorithm
    damping: float = Field(default=0.85, gt=0.0, lt=1.0, description="PageRank damping factor d.")
    source: Optional[int] = Field(default=None, ge=0, description="SSSP source vertex.")

    @model_validator(mode="after")
    def _check_algorithm_fields(self) -> "JobSpec":
        if self.algorithm is Algorithm.SSSP and self.source is None:
            raise ValueError("sssp jobs need a source vertex (sssp:src=<int>).")
        if self.algorithm is Algorithm.PAGERANK and self.source is not None:
            raise ValueError("pagerank jobs do not take a source vertex.")
        return self

    @classmethod
    def parse(cls, text: str) -> "JobSpec":
        """
        Parse a jobspec string.

        Raises:
            ValueError: On unknown algorithms, unknown options, or bad values.
        """
        match = _JOBSPEC_RE.match(text.strip())
        if not match:
            raise ValueError(f"Malformed jobspec {text!r}.")
        name, options = match.group("name"), match.group("options")
        try:
            algorithm = Algorithm(name)
        except ValueError:
            raise ValueError(f"Unknown algorithm {name!r} in jobspec {text!r}.") from None

        allowed = {"d": "damping"} if algorithm is Algorithm.PAGERANK else {"src": "source"}
        fields: dict[str, Any] = {"algorithm": algorithm}
        if options:
            for option in options.split(","):
                key, sep, value = option.partition("=")
                if not sep or key not in allowed:
                    raise ValueError(f"Unknown option {option!r} in jobspec {text!r}.")
                fields[allowed[key]] = value
        return cls(**fields)

    def __str__(self) -> str:
        if self.algorithm is Algorithm.SSSP:
            return f"sssp:src={self.source}"
        return f"pagerank:d={self.damping:g}"


class StaggeredJob(BaseModel):
    """A job admitted at the start of a later superstep (`<superstep>:<jobspec>`)."""

    superstep: int = Field(..., ge=1)
    job: JobSpec

    @classmethod
    def parse(cls, text: str) -> "StaggeredJob":
        step, sep, spec = text.partition(":")
        if not sep or not step.strip().isdigit():
            raise ValueError(f"Malformed stagger {text!r}; expected <superstep>:<jobspec>.")
        return cls(superstep=int(step), job=JobSpec.parse(spec))


class Mode(str, Enum):
    TWO_LEVEL = "two-level"
    NAIVE = "naive"


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

class SchedulerConfig(BaseModel):
    """Knobs consumed by the scheduling engine."""

    c_const: float = Field(default=100.0, gt=0.0, description="C in q = C * B_N / sqrt(V_N).")
    alpha: float = Field(default=0.8, gt=0.0, le=1.0, description="Share of the global queue ranked by Pri.")
    samples: int = Field(default=500, ge=1, description="Sample size s for threshold estimation.")
    epsilon_frac: float = Field(default=0.2, gt=0.0, description="epsilon = epsilon_frac * P_avg of the higher block.")
    tolerance: float = Field(default=1e-9, gt=0.0, description="PageRank per-vertex convergence tolerance.")
    seed: int = Field(default=42)
    max_supersteps: int = Field(default=10_000, ge=1)
    workers: int = Field(
        default_factory=lambda: int(os.getenv("GRAPHSCHED_WORKERS", "1")),
        ge=1,
        description="Worker threads; 1 is the deterministic single-worker mode.",
    )
    queue_length: Optional[int] = Field(
        default=None,
        ge=1,
        description="Override for q; computed from C, B_N and V_N when unset.",
    )


class RunConfig(SchedulerConfig):
    """Everything one CLI run needs."""

    graph_path: Path
    jobs: List[JobSpec] = Field(..., min_length=1)
    block_size: int = Field(default=4096, ge=1, description="Vertices per block (V_B).")
    mode: Mode = Mode.TWO_LEVEL
    out_dir: Path = Field(default_factory=lambda: Path(os.getenv("GRAPHSCHED_OUT_DIR", "results")))
    trace_path: Optional[Path] = None
    stagger: List[StaggeredJob] = Field(default_factory=list)
    log_level: str = Field(default_factory=lambda: os.getenv("GRAPHSCHED_LOG_LEVEL", "INFO"))

    @field_validator("log_level")
    @classmethod
    def _known_log_level(cls, value: str) -> str:
        level = value.strip().upper()
        # getLevelNamesMapping() is 3.11+; it returns a copy of _nameToLevel.
        names = getattr(logging, "getLevelNamesMapping", lambda: dict(logging._nameToLevel))()
        if level not in names:
            raise ValueError(f"unknown log level {value!r}")
        return level

    @field_validator("jobs", mode="before")
    @classmethod
    def _parse_jobspecs(cls, value: Any) -> Any:
        if isinstance(value, (list, tuple)):
            return [JobSpec.parse(item) if isinstance(item, str) else item for item in value]
        return value

    @field_validator("stagger", mode="before")
    @classmethod
    def _parse_staggers(cls, value: Any) -> Any:
        if isinstance(value, (list, tuple)):
            return [StaggeredJob.parse(item) if isinstance(item, str) else item for item in value]
        return value

    def echo(self) -> dict:
        """JSON-ready copy of every knob, as echoed into metrics.json."""
        data = self.model_dump(mode="json")
        data["jobs"] = [str(spec) for spec in self.jobs]
        data["stagger"] = [f"{item.superstep}:{item.job}" for item in self.stagger]
        return data


# ---------------------------------------------------------------------------
# Metrics and traces
# ---------------------------------------------------------------------------

class Metrics(BaseModel):
    """
    Counters for one run (or one superstep, when used as a delta).

    block_loads counts one load per block activation in two-level mode and
    one per (job, block) activation in naive mode.
    """

    mode: Mode
    supersteps: int = 0
    block_loads: int = 0
    per_job_iterations: dict[int, int] = Field(default_factory=dict)
    per_job_vertex_updates: dict[int, int] = Field(default_factory=dict)
    wall_time_ms: float = 0.0
    converged: bool = False
    jobs: dict[int, str] = Field(default_factory=dict)
    config: dict = Field(default_factory=dict)

    def absorb(self, delta: "Metrics") -> None:
        """Add a superstep delta's counters into this run total."""
        self.supersteps += delta.supersteps
        self.block_loads += delta.block_loads
        for job_id, count in delta.per_job_iterations.items():
            self.per_job_iterations[job_id] = self.per_job_iterations.get(job_id, 0) + count
        for job_id, count in delta.per_job_vertex_updates.items():
            self.per_job_vertex_updates[job_id] = self.per_job_vertex_updates.get(job_id, 0) + count

    def deterministic_view(self) -> dict:
        """The metrics document without wall-clock fields."""
        return self.model_dump(mode="json", exclude={"wall_time_ms"})


class TraceRecord(BaseModel):
    """One block activation: the block walked and the jobs dispatched on it."""

    superstep: int
    block: int
    jobs: List[int]
