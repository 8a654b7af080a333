"""
Command-line entry point: load a graph, run concurrent jobs, write results.

Outputs (in --out-dir):
  job_<id>.txt   one `vertex<TAB>value` line per vertex, written as each job converges
  metrics.json   counters for the run plus an echo of every config knob

CLI usage:
    python -m app.cli --graph g.el --job pagerank --job sssp:src=0
    python -m app.cli --graph g.el --job pagerank:d=0.9 --mode naive --trace trace.jsonl

Exit codes: 0 all jobs converged, 1 runtime error, 2 usage error,
3 superstep limit reached (metrics.json still written).
"""

import argparse
import json
import logging
import sys
from contextlib import ExitStack
from pathlib import Path
from typing import Sequence

from pydantic import ValidationError

from app.controller import Engine, SuperstepLimitExceeded
from app.graph import build_graph, load_edge_list, partition_blocks
from app.models import Mode, RunConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_LIMIT = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m app.cli",
        description="Run concurrent PageRank / SSSP jobs over one shared graph with block-level co-scheduling.",
    )
    parser.add_argument("--graph", dest="graph_path", required=True, help="Edge-list file (`src dst [weight]`).")
    parser.add_argument(
        "--job",
        dest="jobs",
        action="append",
        required=True,
        metavar="JOBSPEC",
        help="Repeatable. `pagerank[:d=<real>]` or `sssp:src=<int>`.",
    )
    parser.add_argument("--block-size", type=int, help="Vertices per block (default 4096).")
    parser.add_argument("--c-const", type=float, help="C in the queue-length rule (default 100).")
    parser.add_argument("--alpha", type=float, help="Share of the global queue ranked by Pri (default 0.8).")
    parser.add_argument("--samples", type=int, help="Sample size for threshold estimation (default 500).")
    parser.add_argument("--epsilon-frac", type=float, help="Comparator epsilon factor (default 0.2).")
    parser.add_argument("--tolerance", type=float, help="PageRank convergence tolerance (default 1e-9).")
    parser.add_argument("--mode", choices=[m.value for m in Mode], help="two-level (default) or naive.")
    parser.add_argument("--seed", type=int, help="Sampling seed (default 42).")
    parser.add_argument("--max-supersteps", type=int, help="Superstep limit (default 10000).")
    parser.add_argument("--workers", type=int, help="Worker threads (default 1, deterministic).")
    parser.add_argument("--out-dir", help="Directory for results and metrics.json.")
    parser.add_argument("--trace", dest="trace_path", help="Write one JSON line per block activation here.")
    parser.add_argument(
        "--stagger",
        action="append",
        default=[],
        metavar="STEP:JOBSPEC",
        help="Repeatable. Admit JOBSPEC at the start of superstep STEP.",
    )
    parser.add_argument("--log-level", help="Logging level (default from GRAPHSCHED_LOG_LEVEL or INFO).")
    return parser


def parse_args(argv: Sequence[str] | None = None) -> RunConfig:
    """
    Parse CLI flags into a validated RunConfig.

    Unset flags fall back to the model defaults. Any constraint violation
    exits through argparse with status 2 and the validation message.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    fields = {key: value for key, value in vars(args).items() if value is not None}
    try:
        return RunConfig(**fields)
    except ValidationError as exc:
        parser.error(_describe(exc))


def _describe(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(item) for item in error["loc"]) or "config"
        parts.append(f"{location}: {error['msg']}")
    return "; ".join(parts)


def _write_metrics(path: Path, document: dict) -> None:
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run(config: RunConfig) -> int:
    """
    Execute one configured run end to end and return the exit code.

    Steps:
      1. Load the edge list and build the CSR graph
      2. Partition vertices into blocks and derive q
      3. Admit every --job, run to convergence in the chosen mode
      4. Write job_<id>.txt files (as jobs converge) and metrics.json
    """
    try:
        edges = load_edge_list(config.graph_path)
        graph = build_graph(edges)
        blocks = partition_blocks(graph, config.block_size)
        print(f"[load] {graph.vertex_count:,} vertices, {graph.edge_count:,} edges, {blocks.block_count} block(s)")

        config.out_dir.mkdir(parents=True, exist_ok=True)
        with ExitStack() as stack:
            trace = None
            if config.trace_path is not None:
                trace = stack.enter_context(config.trace_path.open("w", encoding="utf-8"))
            engine = stack.enter_context(Engine(graph, blocks, config, out_dir=config.out_dir, trace=trace))
            for spec in config.jobs:
                engine.admit_job(spec)
            print(f"[run] {len(config.jobs)} job(s), mode={config.mode.value}, q={engine.q}")

            code = EXIT_OK
            try:
                metrics = engine.run_to_convergence(config.mode, config.stagger)
            except SuperstepLimitExceeded as exc:
                print(f"[error] {exc}", file=sys.stderr)
                metrics, code = exc.metrics, EXIT_LIMIT

        metrics.config = config.echo()
        _write_metrics(config.out_dir / "metrics.json", metrics.model_dump(mode="json"))
        print(
            f"[done] supersteps={metrics.supersteps} block_loads={metrics.block_loads} "
            f"wall_time_ms={metrics.wall_time_ms:.1f}"
        )
        return code
    except (OSError, ValueError) as exc:
        print(f"[error] {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:
        logger.exception("Unexpected failure")
        print(f"[error] Unexpected error during run: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main(argv: Sequence[str] | None = None) -> int:
    config = parse_args(argv)
    logging.basicConfig(
        level=config.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
