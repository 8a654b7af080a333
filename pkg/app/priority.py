"""
Per-job block priorities and approximate top-q block selection.

Each (job, block) is summarised by a PriorityPair <node_un, p_avg>: how many
vertices of the block still have work and their mean priority magnitude.
Pairs are ordered with the dual-factor comparator `cbp`, which prefers the
higher mean unless the means are within epsilon of each other and the other
block carries more total priority.

`do_select` picks roughly the top q blocks without sorting the whole table:
it sorts a small random sample, reads the threshold off the sample at rank
q * s / B_N, keeps every block at least as high as the threshold in one pass,
then sorts only what it kept.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from app.graph import BlockTable
from app.jobs import JobState

logger = logging.getLogger(__name__)

DEFAULT_EPSILON_FRAC = 0.2


class PriorityPair(NamedTuple):
    block_id: int
    node_un: int
    p_avg: float


Ptable = list[PriorityPair]


@dataclass
class SelectionStats:
    """Work done by one do_select call."""

    sampled: int = 0
    scanned: int = 0
    collected: int = 0
    largest_sort: int = 0


@dataclass
class JobQueue:
    """A job's block ids, highest priority first."""

    entries: list[int] = field(default_factory=list)
    threshold: PriorityPair | None = None
    stats: SelectionStats = field(default_factory=SelectionStats)

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


# ---------------------------------------------------------------------------
# Pairs
# ---------------------------------------------------------------------------

def compute_pair(
    job: JobState,
    lo: int,
    hi: int,
    block_id: int,
    scale: float | None = None,
) -> PriorityPair:
    """
    Summarise one block of one job as <node_un, p_avg>.

    p_avg is the sum of priority magnitudes over unconverged vertices divided
    by their count; an all-converged block is <0, 0.0>.
    """
    if scale is None:
        scale = job.magnitude_scale()
    mask, magnitudes = job.block_magnitudes(lo, hi, scale)
    node_un = int(mask.sum())
    if node_un == 0:
        return PriorityPair(block_id, 0, 0.0)
    return PriorityPair(block_id, node_un, float(magnitudes.sum()) / node_un)


def build_ptable(job: JobState, blocks: BlockTable) -> Ptable:
    """All B_N pairs of a job in one vectorised pass."""
    mask, magnitudes = job.block_magnitudes(0, blocks.vertex_count, job.magnitude_scale())
    counts = np.add.reduceat(mask.astype(np.int64), blocks.starts)
    sums = np.add.reduceat(magnitudes, blocks.starts)
    averages = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
    return [
        PriorityPair(block_id, node_un, p_avg)
        for block_id, (node_un, p_avg) in enumerate(zip(counts.tolist(), averages.tolist()))
    ]


# ---------------------------------------------------------------------------
# Comparator and ordering
# ---------------------------------------------------------------------------

def cbp(a: PriorityPair, b: PriorityPair, epsilon_frac: float = DEFAULT_EPSILON_FRAC) -> bool:
    """
    Is block a's priority at least block b's?

    Compare by mean first (swapping so `a` is the higher mean). When `a` has
    fewer unconverged vertices, a mean gap below epsilon_frac * p_avg(a) and a
    smaller total, the answer flips. Identical pairs compare true.
    """
    state = True
    if a.p_avg < b.p_avg:
        a, b = b, a
        state = not state
    if a.node_un < b.node_un:
        if a.p_avg - b.p_avg < epsilon_frac * a.p_avg and a.p_avg * a.node_un < b.p_avg * b.node_un:
            state = not state
    return state


def rank_sorted(pairs: Sequence[PriorityPair], epsilon_frac: float = DEFAULT_EPSILON_FRAC) -> list[PriorityPair]:
    """Sort pairs highest priority first; mutual ties fall back to ascending block id."""

    def compare(a: PriorityPair, b: PriorityPair) -> int:
        a_ge, b_ge = cbp(a, b, epsilon_frac), cbp(b, a, epsilon_frac)
        if a_ge and not b_ge:
            return -1
        if b_ge and not a_ge:
            return 1
        return a.block_id - b.block_id

    return sorted(pairs, key=cmp_to_key(compare))


# ---------------------------------------------------------------------------
# Queue length and selection
# ---------------------------------------------------------------------------

def queue_length(block_count: int, vertex_count: int, c_const: float = 100.0) -> int:
    """q = C * B_N / sqrt(V_N), rounded half-up and clamped into [1, B_N]."""
    if block_count < 1 or vertex_count < 1 or not c_const > 0:
        raise ValueError(
            f"queue_length needs B_N >= 1, V_N >= 1, C > 0; got {block_count}, {vertex_count}, {c_const}."
        )
    raw = c_const * block_count / math.sqrt(vertex_count)
    return max(1, min(block_count, math.floor(raw + 0.5)))


def uniform_queue(blocks: BlockTable) -> JobQueue:
    """Every block at equal priority: walk them all in id order."""
    return JobQueue(entries=list(range(blocks.block_count)))


def do_select(
    ptable: Ptable,
    q: int,
    s: int,
    seed: int | Sequence[int],
    epsilon_frac: float = DEFAULT_EPSILON_FRAC,
) -> JobQueue:
    """
    Approximately select the q highest-priority blocks of a Ptable.

    Samples min(s, B_N) pairs without replacement, takes the sample at index
    floor(q * s / B_N) (clamped to the last sample) as the threshold, keeps
    every block with work whose pair is at least the threshold, sorts the kept
    pairs and truncates to q. When q >= B_N every block with work is kept.

    Raises:
        ValueError: If q < 1 or s < 1.
    """
    if q < 1 or s < 1:
        raise ValueError(f"do_select needs q >= 1 and s >= 1, got q={q}, s={s}.")
    block_count = len(ptable)
    if block_count == 0:
        return JobQueue()

    if q >= block_count:
        # every block fits: no threshold to estimate
        sample_count, threshold = 0, None
        collected = [r for r in ptable if r.node_un > 0]
    else:
        rng = np.random.default_rng(seed)
        sample_count = min(s, block_count)
        picks = rng.choice(block_count, size=sample_count, replace=False)
        samples = rank_sorted([ptable[i] for i in picks.tolist()], epsilon_frac)

        cut = min((q * s) // block_count, sample_count - 1)
        threshold = samples[cut]
        collected = [r for r in ptable if r.node_un > 0 and cbp(r, threshold, epsilon_frac)]

    ordered = rank_sorted(collected, epsilon_frac)[:q]

    stats = SelectionStats(
        sampled=sample_count,
        scanned=block_count,
        collected=len(collected),
        largest_sort=max(sample_count, len(collected)),
    )
    logger.debug(
        "do_select: B_N=%d q=%d threshold=%s collected=%d", block_count, q, threshold, len(collected)
    )
    return JobQueue(
        entries=[pair.block_id for pair in ordered],
        threshold=threshold,
        stats=stats,
    )
