"""
Superstep loop for concurrent jobs over one shared graph.

Two-level mode (one superstep):
  1. Each active job builds its Ptable and selects its own top-q blocks
     (in parallel across jobs when workers > 1)
  2. The per-job queues are merged into one global queue
  3. The global queue is walked block by block; every job with pending work
     on the current block processes it before the next block is touched.
     Each such block activation counts as one block load.

Naive mode runs the same per-job selection, but every job walks its own
queue on its own; each (job, block) activation counts as a load.

The first superstep of a run has no priority history, so every job sees all
blocks in id order. Deltas pushed into blocks not yet walked in the current
superstep are picked up when those blocks are reached.
"""

import logging
import threading
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, TextIO, TypeVar

from app.global_queue import build_global_queue
from app.graph import BlockTable, Graph
from app.jobs import JobState, UpdateSummary, apply_block, finalize, init_job, job_converged
from app.models import JobSpec, Metrics, Mode, SchedulerConfig, StaggeredJob, TraceRecord
from app.priority import JobQueue, build_ptable, do_select, queue_length, uniform_queue

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# on_event(kind, superstep, block, job_id); kind is "load" or "apply".
EventHook = Callable[[str, int, int, Optional[int]], None]


class SuperstepLimitExceeded(RuntimeError):
    """The run hit max_supersteps with jobs still pending; carries partial metrics."""

    def __init__(self, metrics: Metrics, limit: int) -> None:
        self.metrics = metrics
        super().__init__(f"Superstep limit of {limit} reached before all jobs converged.")


class Engine:
    """
    Owns the job set for one graph and runs supersteps over it.

    Jobs are dispatched on a block in admission order. New jobs join at the
    next superstep boundary.
    """

    def __init__(
        self,
        graph: Graph,
        blocks: BlockTable,
        config: SchedulerConfig,
        *,
        out_dir: Path | None = None,
        trace: TextIO | None = None,
        on_event: EventHook | None = None,
    ) -> None:
        self.graph = graph
        self.blocks = blocks
        self.config = config
        self.out_dir = out_dir
        self.q = config.queue_length or queue_length(blocks.block_count, graph.vertex_count, config.c_const)
        self.q = min(self.q, blocks.block_count)
        self.jobs: list[JobState] = []
        self.superstep = 0
        self._admitted: list[JobState] = []
        self._next_id = 0
        self._trace = trace
        self._trace_lock = threading.Lock()
        self._on_event = on_event
        self._executor = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
        logger.info(
            "Engine ready: V_N=%d B_N=%d q=%d workers=%d",
            graph.vertex_count,
            blocks.block_count,
            self.q,
            config.workers,
        )

    # -- lifecycle -----------------------------------------------------------

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self) -> "Engine":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- admission -----------------------------------------------------------

    def admit_job(self, spec: JobSpec | str) -> int:
        """
        Validate a job and queue it to join at the next superstep boundary.

        Raises:
            ValueError: If the job spec is malformed or names a vertex outside the graph.
        """
        if isinstance(spec, str):
            spec = JobSpec.parse(spec)
        job = init_job(spec, self.graph, self.config.tolerance, job_id=self._next_id)
        self._next_id += 1
        self._admitted.append(job)
        logger.info("Admitted job %d (%s) for superstep %d", job.job_id, spec, self.superstep + 1)
        return job.job_id

    def _join_admitted(self) -> None:
        if self._admitted:
            self.jobs.extend(self._admitted)
            self._admitted = []

    @property
    def active_jobs(self) -> list[JobState]:
        return [job for job in self.jobs if not job.done]

    @property
    def has_work(self) -> bool:
        return bool(self._admitted) or any(not job.done for job in self.jobs)

    # -- helpers -------------------------------------------------------------

    def _map(self, fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
        if self._executor is None or len(items) < 2:
            return [fn(item) for item in items]
        return list(self._executor.map(fn, items))

    def _emit(self, kind: str, block: int, job_id: int | None = None) -> None:
        if self._on_event is not None:
            self._on_event(kind, self.superstep, block, job_id)

    def _record(self, block: int, job_ids: list[int]) -> None:
        if self._trace is None:
            return
        line = TraceRecord(superstep=self.superstep, block=block, jobs=job_ids).model_dump_json()
        with self._trace_lock:
            self._trace.write(line + "\n")

    def _seed(self) -> list[int]:
        # shared by every job, so identical jobs draw identical samples
        return [self.config.seed, self.superstep]

    def _job_queue(self, job: JobState) -> JobQueue:
        ptable = build_ptable(job, self.blocks)
        return do_select(ptable, self.q, self.config.samples, self._seed(), self.config.epsilon_frac)

    def _apply(self, job: JobState, block: int) -> UpdateSummary:
        lo, hi = self.blocks.range_of(block)
        self._emit("apply", block, job.job_id)
        return apply_block(job, self.graph, lo, hi)

    def _begin(self, mode: Mode) -> tuple[list[JobState], Metrics]:
        self._join_admitted()
        active = self.active_jobs
        delta = Metrics(mode=mode)
        if active:
            self.superstep += 1
            delta.supersteps = 1
        return active, delta

    def _settle(self, active: Iterable[JobState]) -> None:
        for job in active:
            job.done = job_converged(job)
            if job.done:
                logger.info("Job %d (%s) converged at superstep %d", job.job_id, job.spec, self.superstep)
                if self.out_dir is not None:
                    finalize(job, self.out_dir / f"job_{job.job_id}.txt")

    # -- supersteps ----------------------------------------------------------

    def run_superstep_two_level(self) -> Metrics:
        """One superstep of shared, block-at-a-time processing; returns the counter delta."""
        active, delta = self._begin(Mode.TWO_LEVEL)
        if not active:
            return delta

        if self.superstep == 1:
            walk = uniform_queue(self.blocks).entries
        else:
            queues = self._map(self._job_queue, active)
            walk = build_global_queue(
                queues, self.q, self.config.alpha, self.config.samples, self._seed()
            ).entries

        touched: set[int] = set()
        for block in walk:
            lo, hi = self.blocks.range_of(block)
            ready = [job for job in active if job.has_pending(lo, hi)]
            if not ready:
                continue
            delta.block_loads += 1
            self._emit("load", block)
            summaries = self._map(lambda job: self._apply(job, block), ready)
            self._record(block, [job.job_id for job in ready])
            for job, summary in zip(ready, summaries):
                updates = delta.per_job_vertex_updates
                updates[job.job_id] = updates.get(job.job_id, 0) + summary.processed
                touched.add(job.job_id)

        for job_id in touched:
            delta.per_job_iterations[job_id] = 1
        logger.debug(
            "Superstep %d (two-level): walked %d block(s), %d load(s)",
            self.superstep,
            len(walk),
            delta.block_loads,
        )
        self._settle(active)
        return delta

    def _walk_own_queue(self, job: JobState) -> tuple[int, int]:
        walk = uniform_queue(self.blocks).entries if self.superstep == 1 else self._job_queue(job).entries
        loads = processed = 0
        for block in walk:
            lo, hi = self.blocks.range_of(block)
            if not job.has_pending(lo, hi):
                continue
            loads += 1
            self._emit("load", block)
            processed += self._apply(job, block).processed
            self._record(block, [job.job_id])
        return loads, processed

    def run_superstep_naive(self) -> Metrics:
        """One superstep where every job walks its own queue independently."""
        active, delta = self._begin(Mode.NAIVE)
        if not active:
            return delta

        for job, (loads, processed) in zip(active, self._map(self._walk_own_queue, active)):
            delta.block_loads += loads
            if loads:
                delta.per_job_iterations[job.job_id] = 1
                delta.per_job_vertex_updates[job.job_id] = processed
        logger.debug("Superstep %d (naive): %d load(s)", self.superstep, delta.block_loads)
        self._settle(active)
        return delta

    # -- full run ------------------------------------------------------------

    def run_to_convergence(
        self,
        mode: Mode = Mode.TWO_LEVEL,
        stagger: Sequence[StaggeredJob] = (),
    ) -> Metrics:
        """
        Run supersteps until every job is done.

        Staggered jobs are admitted before the superstep they name; if all
        other work finishes first they are admitted straight away.

        Raises:
            ValueError: If no job was ever admitted.
            SuperstepLimitExceeded: If max_supersteps is reached first.
        """
        step = self.run_superstep_two_level if mode is Mode.TWO_LEVEL else self.run_superstep_naive
        schedule: dict[int, list[JobSpec]] = defaultdict(list)
        for item in stagger:
            schedule[item.superstep].append(item.job)

        started = time.perf_counter()
        metrics = Metrics(mode=mode)
        while True:
            for spec in schedule.pop(self.superstep + 1, []):
                self.admit_job(spec)
            if not self.has_work and schedule:
                for spec in schedule.pop(min(schedule)):
                    self.admit_job(spec)
            if not self.jobs and not self._admitted:
                raise ValueError("run_to_convergence needs at least one admitted job.")
            if not self.has_work:
                break
            if metrics.supersteps >= self.config.max_supersteps:
                self._finish(metrics, started, converged=False)
                logger.warning("Superstep limit %d reached", self.config.max_supersteps)
                raise SuperstepLimitExceeded(metrics, self.config.max_supersteps)
            metrics.absorb(step())

        self._finish(metrics, started, converged=True)
        logger.info(
            "Run finished (%s): %d superstep(s), %d block load(s)",
            mode.value,
            metrics.supersteps,
            metrics.block_loads,
        )
        return metrics

    def _finish(self, metrics: Metrics, started: float, converged: bool) -> None:
        for job in self.jobs:
            metrics.per_job_iterations.setdefault(job.job_id, 0)
            metrics.per_job_vertex_updates.setdefault(job.job_id, 0)
            metrics.jobs[job.job_id] = str(job.spec)
        metrics.per_job_iterations = dict(sorted(metrics.per_job_iterations.items()))
        metrics.per_job_vertex_updates = dict(sorted(metrics.per_job_vertex_updates.items()))
        metrics.jobs = dict(sorted(metrics.jobs.items()))
        metrics.converged = converged
        metrics.wall_time_ms = (time.perf_counter() - started) * 1000.0
