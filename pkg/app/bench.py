"""
Redundancy benchmark: two-level vs naive scheduling on seeded random graphs.

For each job count J, runs the same J jobs once per mode on fresh engines and
reports block loads per mode, the naive/two-level load ratio, supersteps,
wall time, and the largest per-vertex disagreement between the two modes'
final values.

CLI usage:
    python -m app.bench --vertices 5000 --degree 8 --jobs 2 4 8
    python -m app.bench --vertices 2000 --jobs 4 --mixed --block-size 128
"""

import argparse
import json
import logging
import sys
from typing import Sequence

import numpy as np
from pydantic import BaseModel, Field

from app.controller import Engine
from app.graph import EdgeList, Graph, build_graph, partition_blocks
from app.models import JobSpec, Mode, SchedulerConfig


class ModeResult(BaseModel):
    supersteps: int
    block_loads: int
    wall_time_ms: float


class BenchReport(BaseModel):
    """Outcome of one two-level vs naive comparison."""

    vertices: int
    edges: int
    blocks: int
    q: int
    jobs: list[str]
    results: dict[Mode, ModeResult]
    redundancy_ratio: float = Field(..., description="Naive block loads / two-level block loads.")
    max_value_gap: float = Field(..., description="Largest |two-level - naive| over all finite job values.")


def generate_graph(
    vertex_count: int,
    avg_degree: float,
    seed: int,
    weighted: bool = False,
    low: int = 1,
    high: int = 10,
) -> Graph:
    """
    Uniform random directed multigraph with vertex_count * avg_degree edges.

    Weighted graphs draw integer weights uniformly from [low, high].
    """
    if vertex_count < 1 or avg_degree <= 0:
        raise ValueError(f"Need vertex_count >= 1 and avg_degree > 0, got {vertex_count}, {avg_degree}.")
    rng = np.random.default_rng(seed)
    edge_count = max(1, int(round(vertex_count * avg_degree)))
    src = rng.integers(0, vertex_count, size=edge_count, dtype=np.int64)
    dst = rng.integers(0, vertex_count, size=edge_count, dtype=np.int64)
    if weighted:
        weight = rng.integers(low, high + 1, size=edge_count).astype(np.float64)
    else:
        weight = np.ones(edge_count, dtype=np.float64)
    return build_graph(EdgeList(src=src, dst=dst, weight=weight), vertex_count=vertex_count)


def _run_mode(
    graph: Graph,
    specs: Sequence[JobSpec],
    block_size: int,
    config: SchedulerConfig,
    mode: Mode,
) -> tuple[ModeResult, list[np.ndarray], int, int]:
    blocks = partition_blocks(graph, block_size)
    with Engine(graph, blocks, config) as engine:
        for spec in specs:
            engine.admit_job(spec)
        metrics = engine.run_to_convergence(mode)
        values = [job.value.copy() for job in engine.jobs]
        q = engine.q
    result = ModeResult(
        supersteps=metrics.supersteps,
        block_loads=metrics.block_loads,
        wall_time_ms=metrics.wall_time_ms,
    )
    return result, values, blocks.block_count, q


def _max_gap(left: list[np.ndarray], right: list[np.ndarray]) -> float:
    gap = 0.0
    for a, b in zip(left, right):
        finite = np.isfinite(a)
        if not np.array_equal(finite, np.isfinite(b)):
            return float("inf")
        if finite.any():
            gap = max(gap, float(np.max(np.abs(a[finite] - b[finite]))))
    return gap


def compare_modes(
    graph: Graph,
    specs: Sequence[JobSpec],
    block_size: int,
    config: SchedulerConfig,
) -> BenchReport:
    """Run `specs` in both modes on `graph` and summarise the difference."""
    two_level, two_level_values, block_count, q = _run_mode(graph, specs, block_size, config, Mode.TWO_LEVEL)
    naive, naive_values, _, _ = _run_mode(graph, specs, block_size, config, Mode.NAIVE)
    ratio = naive.block_loads / two_level.block_loads if two_level.block_loads else 0.0
    return BenchReport(
        vertices=graph.vertex_count,
        edges=graph.edge_count,
        blocks=block_count,
        q=q,
        jobs=[str(spec) for spec in specs],
        results={Mode.TWO_LEVEL: two_level, Mode.NAIVE: naive},
        redundancy_ratio=ratio,
        max_value_gap=_max_gap(two_level_values, naive_values),
    )


def job_mix(count: int, mixed: bool, vertex_count: int) -> list[JobSpec]:
    """`count` identical PageRank jobs, or an alternating PageRank/SSSP mix."""
    if not mixed:
        return [JobSpec.parse("pagerank") for _ in range(count)]
    dampings = (0.85, 0.8, 0.9, 0.75)
    specs = []
    for i in range(count):
        if i % 2 == 0:
            specs.append(JobSpec.parse(f"pagerank:d={dampings[(i // 2) % len(dampings)]}"))
        else:
            specs.append(JobSpec.parse(f"sssp:src={(i * 7919) % vertex_count}"))
    return specs


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m app.bench",
        description="Compare block loads of two-level and naive scheduling.",
    )
    parser.add_argument("--vertices", type=int, default=5000)
    parser.add_argument("--degree", type=float, default=8.0)
    parser.add_argument("--jobs", type=int, nargs="+", default=[2, 4, 8], help="Job counts to benchmark.")
    parser.add_argument("--block-size", type=int, default=256)
    parser.add_argument("--c-const", type=float, default=100.0)
    parser.add_argument("--tolerance", type=float, default=1e-9)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--mixed", action="store_true", help="Alternate PageRank and SSSP jobs.")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.WARNING)
    try:
        config = SchedulerConfig(c_const=args.c_const, tolerance=args.tolerance, seed=args.seed)
        graph = generate_graph(args.vertices, args.degree, args.seed, weighted=args.mixed)
        for count in args.jobs:
            report = compare_modes(graph, job_mix(count, args.mixed, graph.vertex_count), args.block_size, config)
            print(json.dumps(report.model_dump(mode="json"), sort_keys=True))
    except ValueError as exc:
        print(f"[error] {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
