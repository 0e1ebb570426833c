"""Private generators.

Two routes:

* ``IntersectionGenerator`` serves any countable collection in the continual
  release model: it maintains noisy consistency priorities (Laplace releases at
  the sparse steps t = k^6), orders languages by priority, keeps the maximal
  incremental infinite intersection, and at every step emits a uniform element
  from the first 200*t^3 elements of that intersection.

* The subset mechanism serves finite collections of known closure dimension:
  it scores every non-empty index subset by how much of the input its closure
  explains plus a size reward, samples one subset exponentially, and emits an
  unseen element from the sampled closure.  ``run_subset_generator_continual``
  re-runs it on the epsilon_t = (6/pi^2) eps/t^2 schedule at sample sizes
  n_t = 2^t + d and post-processes between releases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .languages import ClosureDescriptor, Collection, EnumerationBudgetError
from .mechanisms import (BudgetSchedule, ExpMechSpec, MechanismTranscript,
                         sample_index, sample_laplace, uniform_int)


def sixth_root_floor(t: int) -> int:
    k = int(round(t ** (1.0 / 6.0)))
    while k ** 6 > t:
        k -= 1
    while (k + 1) ** 6 <= t:
        k += 1
    return k


@dataclass(frozen=True)
class LedgerRow:
    """One noisy-count release: epsilon_spent = sensitivity / noise_scale."""

    release_k: int
    sensitivity: int
    noise_scale: float
    epsilon_spent: float


def intersection_privacy_ledger(epsilon: float, horizon: int) -> list[LedgerRow]:
    """Per-release budget rows for the noisy-priority generator.

    Release k (at step t = k^6) perturbs a k-coordinate count vector of
    L1-sensitivity k with Laplace scale k^3/eps0, spending eps0/k^2; the rows
    sum below eps0 * pi^2/6 = epsilon for every horizon.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    eps0 = 6.0 * epsilon / math.pi ** 2
    rows = []
    k = 1
    while k ** 6 <= horizon:
        rows.append(LedgerRow(k, k, k ** 3 / eps0, eps0 / k ** 2))
        k += 1
    return rows


@dataclass(frozen=True)
class GenOutput:
    """One generation step; ``selected`` is the intersected index prefix in
    priority order (audit only)."""

    t: int
    element: int | None
    selected: tuple[int, ...]
    released: bool
    k: int
    j_t: int
    epsilon_cum: float


class IntersectionGenerator:
    """Continual-release generator over a countable collection.

    Priorities change only at release steps, so the priority order, the
    incremental-intersection depth J_t, and the held intersection descriptor
    are recomputed exactly there; between releases only the output window
    200*t^3 grows.
    """

    def __init__(self, collection: Collection, epsilon: float,
                 rng: np.random.Generator, window_coef: int = 200,
                 seed_lineage: str = ""):
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        self.collection = collection
        self.epsilon = float(epsilon)
        self.eps0 = 6.0 * epsilon / math.pi ** 2
        self.rng = rng
        self.window_coef = int(window_coef)
        self.seed_lineage = seed_lineage
        self.bumps: dict[int, int] = {}
        self.prefix: list[int] = []
        self.t = 0
        self.k = 0
        self.j_t = 0
        self.epsilon_cum = 0.0
        self.selected: tuple[int, ...] = ()
        self.descriptor: ClosureDescriptor | None = None
        self.transcripts: list[MechanismTranscript] = []

    def priority(self, i: int) -> int:
        return i + self.bumps.get(i, 0)

    def _probed_count(self) -> int:
        size = self.collection.size
        return self.k if size is None else min(self.k, size)

    def _release(self) -> None:
        t, k = self.t, self.k
        scale = k ** 3 / self.eps0
        arr = np.asarray(self.prefix, dtype=np.int64)
        for i in range(1, self._probed_count() + 1):
            lang = self.collection.language(i)
            true_count = int(np.count_nonzero(~lang.contains_bulk(arr)))
            noisy = max(0.0, true_count + float(sample_laplace(scale, self.rng)))
            if noisy / t > 1.0 / (200.0 * i * i):
                self.bumps[i] = self.bumps.get(i, 0) + 1
        self.epsilon_cum += self.eps0 / (k * k)
        self.transcripts.append(MechanismTranscript(
            release_index=k, epsilon_spent=self.eps0 / (k * k),
            support_size=self._probed_count(), output_index=-1,
            seed_lineage=self.seed_lineage))

    def _reselect(self) -> None:
        count = self._probed_count()
        order = sorted(range(1, count + 1), key=lambda i: (self.priority(i), i))
        depth = 1
        descriptor = self.collection.closure(order[:1])
        while depth < len(order):
            candidate = self.collection.closure(order[:depth + 1])
            if not candidate.is_infinite:
                break
            depth += 1
            descriptor = candidate
        self.j_t = depth
        self.selected = tuple(order[:depth])
        self.descriptor = descriptor

    def step(self, x: int) -> GenOutput:
        self.t += 1
        self.prefix.append(int(x))
        t = self.t
        k = sixth_root_floor(t)
        released = (k ** 6 == t)
        if released:
            self.k = k
            self._release()
            self._reselect()
        window = self.window_coef * t ** 3
        j = uniform_int(self.rng, window) + 1
        try:
            element = self.descriptor.element_at(j)
        except EnumerationBudgetError:
            # scan-backed intersections can run out of candidates; leave a
            # diagnostic release row before surfacing the run failure
            self.transcripts.append(MechanismTranscript(
                release_index=self.k, epsilon_spent=0.0,
                support_size=self._probed_count(), output_index=-2,
                seed_lineage=self.seed_lineage))
            raise
        return GenOutput(t=t, element=element, selected=self.selected,
                         released=released, k=self.k, j_t=self.j_t,
                         epsilon_cum=self.epsilon_cum)

    def run(self, stream: Sequence[int], horizon: int) -> list[GenOutput]:
        return [self.step(int(stream[t])) for t in range(horizon)]


GEN_STEP_HEADER = ["run_id", "t", "released", "k", "J_t", "output_element",
                   "correct", "epsilon_spent_cumulative"]


def gen_step_csv_rows(run_id: str, outputs: Sequence[GenOutput],
                      correct: Sequence[bool]):
    """Per-step audit rows of a generator run."""
    for out, ok in zip(outputs, correct):
        yield [run_id, out.t, int(out.released), out.k, out.j_t,
               out.element, int(bool(ok)), f"{out.epsilon_cum:.12g}"]


def score_offset(k: int, d: int, epsilon: float, n: int,
                 log_base: str = "natural") -> float:
    """Size reward per selected language: f(n) = (n - d - 2k*log2/eps)/k.

    ``log_base`` switches the log-2 constant between ln 2 (default) and 1
    for sensitivity analysis; f may be negative for small n and is kept so.
    """
    if log_base == "natural":
        log2 = math.log(2.0)
    elif log_base == "two":
        log2 = 1.0
    else:
        raise ValueError("log_base must be 'natural' or 'two'")
    return (n - d - 2.0 * k * log2 / epsilon) / k


def nonempty_subsets(k: int) -> list[tuple[int, ...]]:
    """All non-empty index subsets of [k], in binary-mask order (deterministic)."""
    return [tuple(i + 1 for i in range(k) if mask >> i & 1)
            for mask in range(1, 1 << k)]


def subset_score(collection: Collection, subset: Sequence[int],
                 prefix: Sequence[int], d: int, epsilon: float,
                 log_base: str = "natural") -> float:
    """u(S, x_{1:n}) = |Cl(L_S) intersect x_{1:n}| + f(n)*|S|; sensitivity 1
    across neighboring duplicate-free prefixes (only the count term moves)."""
    arr = np.asarray(prefix, dtype=np.int64)
    if np.unique(arr).size != arr.size:
        raise ValueError("prefix must be duplicate-free")
    if not subset:
        raise ValueError("subset must be non-empty")
    inside = np.ones(arr.size, dtype=bool)
    for i in subset:
        inside &= collection.language(i).contains_bulk(arr)
    k = collection.size
    return float(inside.sum()) + score_offset(k, d, epsilon, arr.size, log_base) * len(subset)


def subset_mechanism_probabilities(collection: Collection, d: int, epsilon: float,
                                   prefix: Sequence[int],
                                   log_base: str = "natural",
                                   ) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """Exact selection probabilities over all 2^k - 1 non-empty subsets with
    temperature epsilon/2 (score sensitivity 1)."""
    k = collection.size
    if k is None:
        raise ValueError("the subset mechanism needs a finite collection")
    arr = np.asarray(prefix, dtype=np.int64)
    if np.unique(arr).size != arr.size:
        raise ValueError("prefix must be duplicate-free")
    member = np.stack([collection.language(i).contains_bulk(arr)
                       for i in range(1, k + 1)]) if arr.size else \
        np.zeros((k, 0), dtype=bool)
    f = score_offset(k, d, epsilon, arr.size, log_base)
    subsets = nonempty_subsets(k)
    utilities = np.empty(len(subsets))
    for pos, subset in enumerate(subsets):
        rows = member[[i - 1 for i in subset]]
        utilities[pos] = rows.all(axis=0).sum() + f * len(subset)
    spec = ExpMechSpec(utilities=utilities, temperature=epsilon / 2.0)
    return subsets, spec.probabilities()


def collision_window(n: int, log_beta: float) -> int:
    """Smallest practical window of size >= 2n/beta, given log(beta) <= 0.

    Windows beyond the float range fall back to an exact integer upper bound
    (3^ceil(-log beta) >= e^(-log beta)), keeping the collision guarantee.
    """
    if log_beta > 0:
        raise ValueError("beta must lie in (0, 1]")
    target = math.log(2 * n) - log_beta
    if target < 60.0:
        return max(1, math.ceil(math.exp(target)))
    if -log_beta < 500.0:
        return math.ceil(2 * n * math.exp(-log_beta))
    return 2 * n * 3 ** math.ceil(-log_beta)


def sample_unseen(descriptor: ClosureDescriptor, n: int, rng: np.random.Generator,
                  beta: float | None = None, log_beta: float | None = None) -> int:
    """Uniform draw from the first ceil(2n/beta) enumerated elements of an
    infinite closure; collides with the at most 2n seen-or-emitted elements
    with probability at most beta.  Pass ``log_beta`` when beta underflows."""
    if not descriptor.is_infinite:
        raise ValueError("sample_unseen needs an infinite closure descriptor")
    if log_beta is None:
        if beta is None or not 0 < beta < 1:
            raise ValueError("need beta in (0,1) or log_beta <= 0")
        log_beta = math.log(beta)
    window = collision_window(n, log_beta)
    return descriptor.element_at(uniform_int(rng, window) + 1)


@dataclass(frozen=True)
class SubsetDraw:
    """One run of the subset mechanism plus the element emission."""

    subset: tuple[int, ...]
    descriptor: ClosureDescriptor
    element: int | None
    probabilities: np.ndarray
    window: int


def _emit_from_descriptor(descriptor: ClosureDescriptor, n: int,
                          rng: np.random.Generator, log_beta: float,
                          ) -> tuple[int | None, int]:
    """Data-independent element draw given a sampled closure.

    Infinite closures go through the collision window; finite non-empty ones
    are sampled uniformly in full (the harness judges collisions); an empty
    closure yields the failure marker None.
    """
    if descriptor.is_infinite:
        window = collision_window(n, log_beta)
        return descriptor.element_at(uniform_int(rng, window) + 1), window
    if descriptor.finite_elements:
        pool = descriptor.finite_elements
        return pool[uniform_int(rng, len(pool))], len(pool)
    return None, 0


def generate_once(collection: Collection, d: int, epsilon: float,
                  prefix: Sequence[int], rng: np.random.Generator,
                  log_base: str = "natural") -> SubsetDraw:
    """Finite-sample private generation: sample a subset, emit an element.

    The unseen-element failure probability target is
    beta_n = exp(-eps (n - d) / (2k)).
    """
    subsets, probs = subset_mechanism_probabilities(
        collection, d, epsilon, prefix, log_base)
    pos = sample_index(probs, rng)
    subset = subsets[pos]
    descriptor = collection.closure(subset)
    n = len(prefix)
    log_beta = min(-epsilon * (n - d) / (2.0 * collection.size), -1e-12)
    element, window = _emit_from_descriptor(descriptor, n, rng, log_beta)
    return SubsetDraw(subset=subset, descriptor=descriptor, element=element,
                      probabilities=probs, window=window)


@dataclass(frozen=True)
class ContinualStep:
    n: int
    element: int | None
    subset: tuple[int, ...]
    released: bool
    release_ordinal: int
    epsilon_cum: float


def release_times(d: int, horizon: int) -> list[int]:
    """n_t = 2^t + d for t = 1, 2, ... within the horizon."""
    times, t = [], 1
    while 2 ** t + d <= horizon:
        times.append(2 ** t + d)
        t += 1
    return times


def run_subset_generator_continual(collection: Collection, d: int, epsilon: float,
                                   stream: Sequence[int], horizon: int,
                                   rng: np.random.Generator,
                                   log_base: str = "natural",
                                   seed_lineage: str = "",
                                   ) -> tuple[list[ContinualStep], list[MechanismTranscript]]:
    """Continual-release wrapper: re-run the subset mechanism with budget
    epsilon_t = (6/pi^2) eps/t^2 at steps n_t = 2^t + d and post-process the
    held closure in between.

    The epoch-level unseen-element failure budget exp(-eps_t (n_t - d)/(2k))
    is split uniformly over the epoch's steps, so the whole epoch fails with
    at most that probability.
    """
    k = collection.size
    if k is None:
        raise ValueError("the subset mechanism needs a finite collection")
    schedule = BudgetSchedule(epsilon)
    held_subset: tuple[int, ...] = (1,)
    held_descriptor = collection.closure(held_subset)   # data-independent start
    step_log_beta = math.log(0.5)
    epsilon_cum = 0.0
    ordinal = 0
    steps: list[ContinualStep] = []
    transcripts: list[MechanismTranscript] = []
    for n in range(1, horizon + 1):
        released = False
        if n == 2 ** (ordinal + 1) + d:
            ordinal += 1
            eps_t = schedule.epsilon_at(ordinal)
            subsets, probs = subset_mechanism_probabilities(
                collection, d, eps_t, stream[:n], log_base)
            pos = sample_index(probs, rng)
            held_subset = subsets[pos]
            held_descriptor = collection.closure(held_subset)
            epoch_len = 2 ** ordinal
            log_beta = min(-eps_t * (n - d) / (2.0 * k), -1e-12)
            step_log_beta = log_beta - math.log(epoch_len)
            epsilon_cum += eps_t
            released = True
            transcripts.append(MechanismTranscript(
                release_index=ordinal, epsilon_spent=eps_t,
                support_size=len(subsets), output_index=pos,
                seed_lineage=seed_lineage))
        element, _ = _emit_from_descriptor(held_descriptor, n, rng, step_log_beta)
        steps.append(ContinualStep(n=n, element=element, subset=held_subset,
                                   released=released, release_ordinal=ordinal,
                                   epsilon_cum=epsilon_cum))
    return steps, transcripts
