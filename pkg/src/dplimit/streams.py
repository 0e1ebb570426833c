"""Input stream sources: enumerations, the swap adversary, i.i.d. samplers and
neighboring-pair construction for privacy audits.

All generators are pure functions of (spec, seed): identical specs materialize
identical prefixes of any length.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .languages import Collection, Language
from .mechanisms import rng_from_seed

STREAM_KINDS = ("canonical", "interleaved", "delayed", "swap_adversary", "iid")


@dataclass(frozen=True)
class StreamSpec:
    """Serializable description of an input stream."""

    kind: str
    target: int = 1
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in STREAM_KINDS:
            raise ValueError(f"unknown stream kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "target": self.target,
                "params": dict(self.params), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "StreamSpec":
        return cls(kind=d["kind"], target=int(d.get("target", 1)),
                   params=dict(d.get("params", {})), seed=int(d.get("seed", 0)))


def canonical_stream(language: Language, n: int) -> np.ndarray:
    """enumerator(1), enumerator(2), ...: the ascending duplicate-free enumeration."""
    return language.prefix(n)


def interleaved_stream(language: Language, n: int, block: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Round-robin over two seeded shuffles of the first 2*block elements, then
    canonical.  Still a duplicate-free enumeration of the language."""
    if block < 1:
        raise ValueError("block must be >= 1")
    head = language.prefix(min(n, 2 * block))
    a = head[:block].copy()
    b = head[block:].copy()
    rng.shuffle(a)
    rng.shuffle(b)
    woven = np.empty(a.size + b.size, dtype=np.int64)
    woven[0:2 * b.size:2] = a[:b.size]
    woven[1:2 * b.size:2] = b
    if a.size > b.size:
        woven[2 * b.size:] = a[b.size:]
    if n <= woven.size:
        return woven[:n]
    tail = language.prefix(n)[woven.size:]
    return np.concatenate([woven, tail])


def delayed_stream(language: Language, n: int, delay: int, stall: int) -> np.ndarray:
    """Holds back the ``delay`` smallest elements for ``stall`` steps while the
    enumeration continues above them; no repeats, still complete."""
    if delay < 0 or stall < delay:
        raise ValueError("need 0 <= delay <= stall")
    m = delay + stall
    head = language.prefix(min(n, m) if n <= m else m)
    reordered = np.concatenate([head[delay:delay + stall], head[:delay]])
    if n <= reordered.size:
        return reordered[:n]
    tail = language.prefix(n)[m:]
    return np.concatenate([reordered, tail])


def iid_stream(language: Language, n: int, rng: np.random.Generator,
               p: float = 0.5) -> np.ndarray:
    """i.i.d. draws: geometric(p) over the enumerator, so the j-th smallest
    element has mass (1-p)^(j-1) * p.  Duplicates are expected."""
    if not 0 < p < 1:
        raise ValueError("geometric parameter must be in (0, 1)")
    ranks = rng.geometric(p, size=n)
    uniq, inverse = np.unique(ranks, return_inverse=True)
    values = np.array([language.enumerator(int(j)) for j in uniq], dtype=np.int64)
    return values[inverse]


@dataclass(frozen=True)
class SwapFixture:
    """Ingredients of the swap-adversary stream for a pair L_i, L_j with an
    infinite intersection and finite difference.

    ``finite_part`` is L_i minus L_j (already role-swapped so that the other
    side difference is at least as large); ``shared`` enumerates the
    intersection; ``extra`` enumerates L_j minus L_i.
    """

    left_index: int
    right_index: int
    finite_part: tuple[int, ...]
    shared: Callable[[int], int]
    extra: Callable[[int], int]
    extra_size: int | None = None      # None means infinite

    def __post_init__(self):
        if self.extra_size is not None and self.extra_size < len(self.finite_part):
            raise ValueError("role swap invariant violated: need |extra| >= |finite_part|")


def pair_subset_swap_fixture(collection: Collection) -> SwapFixture:
    """Swap fixture for the evens-inside-naturals barrier pair: the finite
    difference is empty, the shared part is the evens, the extras are the odds."""
    if collection.family != "pair_subset":
        raise ValueError("fixture is defined for the pair_subset family")
    return SwapFixture(
        left_index=1, right_index=2,
        finite_part=(),
        shared=lambda j: 2 * j,
        extra=lambda j: 2 * j - 1,
        extra_size=None,
    )


def default_swap_schedule(k: int) -> int:
    return 4 ** k


def swap_stream(fixture: SwapFixture, n: int,
                schedule: Callable[[int], int] | Sequence[int] = default_swap_schedule,
                ) -> np.ndarray:
    """Materialize the first ``n`` steps of the swap-adversary stream.

    Starts from the enumeration (extras replacing the finite part, then the
    shared intersection) and performs one replacement at each schedule time,
    always inserting the smallest element still missing; displaced elements
    return to the pool and are re-inserted later.  The limit enumerates the
    right-hand language without duplicates.
    """
    m = len(fixture.finite_part)

    def schedule_times() -> Iterable[int]:
        if callable(schedule):
            k = 1
            while True:
                yield int(schedule(k))
                k += 1
        else:
            times = [int(t) for t in schedule]
            for t in times:
                yield t
            # auto-extend by doubling if the explicit schedule runs short
            last = times[-1] if times else 1
            while True:
                last *= 2
                yield last

    def base_value(t: int) -> int:
        if t <= m:
            return fixture.extra(t)
        return fixture.shared(t - m)

    values = [base_value(t) for t in range(1, n + 1)]
    displaced: list[int] = []        # heap of elements bumped out of the stream
    next_extra = m + 1               # first never-scheduled extra element
    prev_time = 0
    for t_k in schedule_times():
        if t_k > n:
            break
        if t_k <= prev_time:
            raise ValueError("swap schedule times must be strictly increasing")
        prev_time = t_k
        extra_available = fixture.extra_size is None or next_extra <= fixture.extra_size
        if not displaced and not extra_available:
            break  # pool drained: the stream already enumerates everything
        take_extra = extra_available and (
            not displaced or fixture.extra(next_extra) < displaced[0])
        if take_extra:
            incoming = fixture.extra(next_extra)
            next_extra += 1
        else:
            incoming = heapq.heappop(displaced)
        heapq.heappush(displaced, values[t_k - 1])
        values[t_k - 1] = incoming
    return np.array(values, dtype=np.int64)


def materialize(spec: StreamSpec, collection: Collection, n: int,
                run_seed: int = 0) -> np.ndarray:
    """Produce the first n elements of the stream described by ``spec``.

    ``run_seed`` extends the seed lineage so per-seed experiment repetitions
    draw independent stochastic streams while staying replayable.
    """
    language = collection.language(spec.target)
    rng = rng_from_seed(spec.seed, 104, spec.target, run_seed)
    if spec.kind == "canonical":
        return canonical_stream(language, n)
    if spec.kind == "interleaved":
        return interleaved_stream(language, n, int(spec.params.get("block", 16)), rng)
    if spec.kind == "delayed":
        return delayed_stream(language, n, int(spec.params.get("delay", 8)),
                              int(spec.params.get("stall", 32)))
    if spec.kind == "iid":
        return iid_stream(language, n, rng, float(spec.params.get("p", 0.5)))
    if spec.kind == "swap_adversary":
        fixture = pair_subset_swap_fixture(collection)
        base = float(spec.params.get("base", 4.0))
        return swap_stream(fixture, n, schedule=lambda k: int(base ** k))
    raise ValueError(f"unknown stream kind {spec.kind!r}")


def dump_prefix(path: str, stream: Sequence[int]) -> None:
    """Write a materialized prefix one element per line, for replay."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for value in stream:
            fh.write(f"{int(value)}\n")


def load_prefix(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        return np.array([int(line) for line in fh if line.strip()],
                        dtype=np.int64)


def neighbor_pair(stream: Sequence[int], position: int, replacement: int,
                  must_contain: Language | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Two streams identical except at ``position`` (1-based)."""
    arr = np.asarray(stream, dtype=np.int64)
    if not 1 <= position <= arr.size:
        raise ValueError(f"position {position} beyond materialized prefix {arr.size}")
    if must_contain is not None and not must_contain.contains(int(replacement)):
        raise ValueError("replacement violates the declared stream constraint")
    other = arr.copy()
    other[position - 1] = replacement
    return arr, other


def multi_neighbor(stream: Sequence[int],
                   replacements: dict[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """c-neighbor generalization: replace several 1-based positions at once."""
    arr = np.asarray(stream, dtype=np.int64)
    other = arr.copy()
    for position, value in replacements.items():
        if not 1 <= position <= arr.size:
            raise ValueError(f"position {position} beyond materialized prefix")
        other[position - 1] = value
    return arr, other
