"""
Per-job algorithm state and update rules.

Two algorithms share one push-style engine over the out-edge CSR:

  PageRank (delta-based accumulative form)
      value[v] += delta[v]; each out-neighbour u gets delta[u] += d * delta[v] / outdeg(v).
      A vertex is pending while delta[v] >= tolerance. Dangling vertices absorb
      their delta into value without redistributing it.

  SSSP
      A pending vertex v proposes value[v] + w to every out-neighbour; strictly
      smaller proposals are accepted and mark the neighbour pending.

Block updates snapshot the pending set at entry, so work pushed into the same
block during a call waits for that block's next visit.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from app.graph import Graph
from app.models import Algorithm, JobSpec

logger = logging.getLogger(__name__)


class UpdateSummary(NamedTuple):
    processed: int
    emitted: int


@dataclass(eq=False)
class JobState:
    """
    Mutable per-job vectors. Owned by one worker at a time; the graph is shared.

    PageRank uses value/delta; SSSP uses value (distances) and the pending mask.
    """

    job_id: int
    spec: JobSpec
    value: np.ndarray
    delta: np.ndarray
    pending: np.ndarray
    tolerance: float
    done: bool = False

    @property
    def is_pagerank(self) -> bool:
        return self.spec.algorithm is Algorithm.PAGERANK

    def pending_mask(self, lo: int = 0, hi: int | None = None) -> np.ndarray:
        """Boolean mask of vertices in [lo, hi) that still have work."""
        if self.is_pagerank:
            return self.delta[lo:hi] >= self.tolerance
        return self.pending[lo:hi]

    def has_pending(self, lo: int, hi: int) -> bool:
        return bool(self.pending_mask(lo, hi).any())

    def magnitude_scale(self) -> float:
        """
        SSSP priority offset M = (largest finite distance) + 1.

        Stored SSSP magnitudes are M - D(v), so nearer vertices rank higher
        while every magnitude stays positive. PageRank needs no offset.
        """
        if self.is_pagerank:
            return 0.0
        finite = self.value[np.isfinite(self.value)]
        return float(finite.max()) + 1.0 if finite.size else 1.0

    def block_magnitudes(self, lo: int, hi: int, scale: float) -> tuple[np.ndarray, np.ndarray]:
        """
        Return (pending mask, priority magnitudes) for vertices in [lo, hi).

        Converged vertices have magnitude 0; so do pending SSSP vertices
        whose distance is still infinite.
        """
        mask = self.pending_mask(lo, hi)
        if self.is_pagerank:
            return mask, np.where(mask, self.delta[lo:hi], 0.0)
        distances = self.value[lo:hi]
        reachable = mask & np.isfinite(distances)
        safe = np.where(reachable, distances, 0.0)
        return mask, np.where(reachable, scale - safe, 0.0)


def init_job(spec: JobSpec, graph: Graph, tolerance: float, job_id: int = 0) -> JobState:
    """
    Create fresh vertex state for a job.

    PageRank starts with value 0 and delta 1 - d everywhere. SSSP starts with
    the source at distance 0 (pending) and every other vertex at +inf, idle.

    Raises:
        ValueError: If tolerance <= 0 or the SSSP source is not a vertex.
    """
    if not tolerance > 0:
        raise ValueError(f"tolerance must be > 0, got {tolerance}.")

    n = graph.vertex_count
    pending = np.zeros(n, dtype=bool)
    if spec.algorithm is Algorithm.PAGERANK:
        value = np.zeros(n, dtype=np.float64)
        delta = np.full(n, 1.0 - spec.damping, dtype=np.float64)
    else:
        if spec.source is None or not 0 <= spec.source < n:
            raise ValueError(f"SSSP source {spec.source} is not a vertex of a {n}-vertex graph.")
        value = np.full(n, np.inf, dtype=np.float64)
        value[spec.source] = 0.0
        delta = np.zeros(0, dtype=np.float64)
        pending[spec.source] = True
        if graph.out_degree[spec.source] == 0:
            logger.warning("SSSP source %d has no out-edges; only it is reachable.", spec.source)

    return JobState(
        job_id=job_id,
        spec=spec,
        value=value,
        delta=delta,
        pending=pending,
        tolerance=tolerance,
    )


# ---------------------------------------------------------------------------
# Block update
# ---------------------------------------------------------------------------

def _block_edges(graph: Graph, lo: int, hi: int, active_local: np.ndarray) -> tuple[int, int, np.ndarray]:
    """Edge slice [e0, e1) of the block plus a per-edge mask of active sources."""
    e0, e1 = int(graph.out_offsets[lo]), int(graph.out_offsets[hi])
    edge_active = np.repeat(active_local, graph.out_degree[lo:hi])
    return e0, e1, edge_active


def _apply_pagerank(job: JobState, graph: Graph, lo: int, hi: int) -> UpdateSummary:
    active_local = job.delta[lo:hi] >= job.tolerance
    if not active_local.any():
        return UpdateSummary(0, 0)

    pushed = np.where(active_local, job.delta[lo:hi], 0.0)
    job.delta[lo:hi][active_local] = 0.0
    job.value[lo:hi] += pushed

    degree = graph.out_degree[lo:hi]
    share = np.zeros(hi - lo, dtype=np.float64)
    spreading = active_local & (degree > 0)
    share[spreading] = job.spec.damping * pushed[spreading] / degree[spreading]

    e0, e1, edge_active = _block_edges(graph, lo, hi, spreading)
    targets = graph.out_targets[e0:e1][edge_active]
    np.add.at(job.delta, targets, np.repeat(share, degree)[edge_active])
    return UpdateSummary(int(active_local.sum()), int(targets.size))


def _apply_sssp(job: JobState, graph: Graph, lo: int, hi: int) -> UpdateSummary:
    active_local = job.pending[lo:hi].copy()
    if not active_local.any():
        return UpdateSummary(0, 0)

    job.pending[lo:hi][active_local] = False
    e0, e1, edge_active = _block_edges(graph, lo, hi, active_local)
    targets = graph.out_targets[e0:e1][edge_active]
    if targets.size == 0:
        return UpdateSummary(int(active_local.sum()), 0)

    source_values = np.repeat(job.value[lo:hi], graph.out_degree[lo:hi])[edge_active]
    proposals = source_values + graph.out_weights[e0:e1][edge_active]

    touched, inverse = np.unique(targets, return_inverse=True)
    best = np.full(touched.size, np.inf)
    np.minimum.at(best, inverse, proposals)
    improved = best < job.value[touched]
    winners = touched[improved]
    job.value[winners] = best[improved]
    job.pending[winners] = True
    return UpdateSummary(int(active_local.sum()), int(winners.size))


def apply_block(job: JobState, graph: Graph, lo: int, hi: int) -> UpdateSummary:
    """
    Process every pending vertex in [lo, hi) once.

    Only vertices inside the range act as sources; vertices outside it only
    receive deltas or distance proposals. A fully converged range is a no-op.
    """
    if job.is_pagerank:
        return _apply_pagerank(job, graph, lo, hi)
    return _apply_sssp(job, graph, lo, hi)


# ---------------------------------------------------------------------------
# Priorities, convergence, results
# ---------------------------------------------------------------------------

def node_priority(job: JobState, v: int) -> float:
    """
    The per-node priority: pending delta for PageRank, -D(v) for SSSP.

    Converged vertices (and pending vertices at infinite distance) return 0.
    """
    if job.is_pagerank:
        delta = float(job.delta[v])
        return delta if delta >= job.tolerance else 0.0
    distance = float(job.value[v])
    if not job.pending[v] or not np.isfinite(distance):
        return 0.0
    return -distance


def job_converged(job: JobState) -> bool:
    """True when no vertex has pending work."""
    return not bool(job.pending_mask().any())


def _render(value: float) -> str:
    return format(value, ".17g")


def finalize(job: JobState, path: str | Path) -> Path:
    """
    Write `vertex<TAB>value` lines for a finished job.

    Unreachable SSSP vertices render as `inf`.

    Raises:
        ValueError: If the job is not done.
        OSError: If the file cannot be written.
    """
    if not job.done:
        raise ValueError(f"Job {job.job_id} has not converged; refusing to write results.")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{v}\t{_render(x)}" for v, x in enumerate(job.value.tolist())]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("Job %d results written to %s", job.job_id, path)
    return path
