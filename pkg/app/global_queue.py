"""
Global priority queue synthesis.

Every job's queue awards Pri = q, q-1, ..., 1 to its entries by rank; a
block's global score is the sum of its Pri over all jobs. The first
floor(alpha * q) global slots go to the highest scores. The remaining slots
are reserved for blocks that matter to individual jobs: jobs take turns
adding their best block not yet in the queue.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.8
APPROXIMATE_FACTOR = 4


@dataclass
class GlobalQueue:
    """Block ids for one superstep: the score-ranked main section, then the reserve."""

    entries: list[int] = field(default_factory=list)
    scores: dict[int, int] = field(default_factory=dict)
    main_count: int = 0

    @property
    def main(self) -> list[int]:
        return self.entries[: self.main_count]

    @property
    def reserved(self) -> list[int]:
        return self.entries[self.main_count :]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def assign_pri(queue: Iterable[int], q: int) -> dict[int, int]:
    """Entry at rank r (0-based) gets Pri = q - r."""
    entries = list(queue)
    if len(entries) > q:
        raise ValueError(f"Queue of length {len(entries)} exceeds q={q}.")
    return {block: q - rank for rank, block in enumerate(entries)}


def _score_key(item: tuple[int, int]) -> tuple[int, int]:
    block, score = item
    return -score, block


def _top_scored(
    scores: Counter,
    slots: int,
    q: int,
    samples: int,
    seed: int | Sequence[int] | None,
) -> list[int]:
    """
    The `slots` highest-scoring blocks (score desc, id asc).

    More than 4 * q candidates are pre-filtered with a sampled score
    threshold; if the filter keeps fewer than `slots` blocks the full set is
    sorted instead, so the result is always the exact top.
    """
    if slots <= 0:
        return []
    candidates = list(scores.items())
    if len(candidates) > APPROXIMATE_FACTOR * q:
        logger.debug("Sampling a score threshold over %d candidates", len(candidates))
        rng = np.random.default_rng(seed)
        sample_count = min(samples, len(candidates))
        picks = rng.choice(len(candidates), size=sample_count, replace=False)
        sampled = sorted((candidates[i][1] for i in picks.tolist()), reverse=True)
        cut = min((slots * sample_count) // len(candidates), sample_count - 1)
        threshold = sampled[cut]
        kept = [item for item in candidates if item[1] >= threshold]
        if len(kept) >= slots:
            candidates = kept
    candidates.sort(key=_score_key)
    return [block for block, _ in candidates[:slots]]


def _unrepresented(queues: Sequence[list[int]], main: list[int]) -> list[int]:
    present = set(main)
    return [j for j, queue in enumerate(queues) if queue and present.isdisjoint(queue)]


def build_global_queue(
    job_queues: Sequence[Iterable[int]],
    q: int,
    alpha: float = DEFAULT_ALPHA,
    samples: int = 500,
    seed: int | Sequence[int] | None = None,
) -> GlobalQueue:
    """
    Merge per-job queues into one global queue of at most q blocks.

    Main section: the floor(alpha * q) highest cumulative-Pri blocks. Reserve:
    jobs not yet represented in the queue pick first (in job order), then
    plain round-robin from job 0; each pick is that job's highest-ranked
    block not already queued.

    When more jobs are missing from the main section than there are reserved
    slots, the lowest-scored main blocks are dropped until every job with a
    non-empty queue fits. This applies only while the job count is at most q.

    Raises:
        ValueError: If alpha is outside (0, 1] or q < 1.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}.")
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}.")

    queues = [list(queue) for queue in job_queues]
    scores: Counter = Counter()
    for queue in queues:
        scores.update(assign_pri(queue, q))

    main = _top_scored(scores, math.floor(alpha * q), q, samples, seed)
    if sum(1 for queue in queues if queue) <= q:
        while main and len(_unrepresented(queues, main)) > q - len(main):
            main.pop()
    chosen = set(main)
    reserved: list[int] = []
    cursors = [0] * len(queues)

    def next_absent(j: int) -> int | None:
        queue = queues[j]
        while cursors[j] < len(queue) and queue[cursors[j]] in chosen:
            cursors[j] += 1
        return queue[cursors[j]] if cursors[j] < len(queue) else None

    def take(block: int) -> None:
        chosen.add(block)
        reserved.append(block)

    slots = q - len(main)
    for j, queue in enumerate(queues):
        if len(reserved) >= slots:
            break
        if queue and not chosen.intersection(queue):
            take(queue[0])

    while len(reserved) < slots:
        added = False
        for j in range(len(queues)):
            if len(reserved) >= slots:
                break
            block = next_absent(j)
            if block is not None:
                take(block)
                added = True
        if not added:
            break

    logger.debug(
        "Global queue: %d main + %d reserved from %d job queue(s)", len(main), len(reserved), len(queues)
    )
    return GlobalQueue(entries=main + reserved, scores=dict(scores), main_count=len(main))
