"""Private identifiers.

``run_epoch_identifier`` handles adversarial enumerations of collections whose
pairwise intersections are finite: at epoch ends t_s = 2^s it samples an index
from {1..W_s} exponentially in the negated error counts, where the cap W_s is
computed from the public overlap bound M(.) alone and never from the stream.

``run_telltale_identifier`` handles i.i.d. streams from any collection with
tell-tales: utilities subtract both the error count and the tell-tale deficit
(threshold k_s = s^3), the base measure pi(i) * s^(-2i) is data independent,
and sampling over the countable support is exact by rejection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .languages import Collection, TellTale
from .mechanisms import (BudgetSchedule, ExpMechSpec, MechanismTranscript,
                         exp_mechanism_countable, sample_index)


def active_cap(overlap: Callable[[int], float], s: int, t_s: int | None = None) -> int:
    """W_s = max({1} union {d <= s : M(d) <= t_s/2}); depends only on the
    public overlap function and the epoch clock."""
    if t_s is None:
        t_s = 2 ** s
    best = 1
    for d in range(1, s + 1):
        if overlap(d) <= t_s / 2.0:
            best = max(best, d)
    return best


def error_count(collection: Collection, i: int, prefix: np.ndarray) -> int:
    """Number of prefix positions outside L_i, recomputed from scratch."""
    lang = collection.language(i)
    return int(np.count_nonzero(~lang.contains_bulk(prefix)))


def epoch_release_probabilities(collection: Collection, epsilon: float, s: int,
                                prefix: Sequence[int],
                                overlap: Callable[[int], float] | None = None,
                                ) -> np.ndarray:
    """Exact index distribution of the epoch-s release given the prefix
    x_{1:2^s}; support is 1..W_s, temperature epsilon_s/2 (sensitivity 1)."""
    if overlap is None:
        overlap = collection.pairwise_overlap
    t_s = 2 ** s
    arr = np.asarray(prefix, dtype=np.int64)[:t_s]
    if arr.size != t_s:
        raise ValueError(f"epoch {s} needs a prefix of length {t_s}")
    cap = active_cap(overlap, s, t_s)
    utilities = np.array([-error_count(collection, i, arr)
                          for i in range(1, cap + 1)], dtype=np.float64)
    lam = BudgetSchedule(epsilon).epsilon_at(s) / 2.0
    return ExpMechSpec(utilities=utilities, temperature=lam).probabilities()


@dataclass(frozen=True)
class EpochRelease:
    s: int
    t: int
    support: int
    chosen: int              # 1-based language index
    epsilon_spent: float
    rejections: int = 0


@dataclass
class IdentificationRun:
    """Per-step output indices (held constant between releases) plus the
    release transcript and cumulative budget."""

    outputs: np.ndarray
    epsilon_cum: np.ndarray
    releases: list[EpochRelease] = field(default_factory=list)

    def mistakes(self, target: int) -> np.ndarray:
        return self.outputs != target

    def transcripts(self, seed_lineage: str = "") -> list[MechanismTranscript]:
        return [MechanismTranscript(release_index=r.s, epsilon_spent=r.epsilon_spent,
                                    support_size=r.support, output_index=r.chosen,
                                    seed_lineage=seed_lineage)
                for r in self.releases]


IDENT_STEP_HEADER = ["run_id", "t", "epoch_s", "output_index", "target_index",
                     "mistake", "epsilon_spent_cumulative"]


def ident_step_csv_rows(run_id: str, run: "IdentificationRun", target: int):
    """Per-step audit rows; epoch_s is the release ordinal in effect."""
    epoch = 0
    for idx in range(run.outputs.size):
        t = idx + 1
        if epoch < len(run.releases) and run.releases[epoch].t == t:
            epoch += 1
        yield [run_id, t, epoch, int(run.outputs[idx]), target,
               int(run.outputs[idx] != target), f"{run.epsilon_cum[idx]:.12g}"]


def _hold_outputs(horizon: int, initial_index: int,
                  releases: list[EpochRelease]) -> IdentificationRun:
    outputs = np.full(horizon, initial_index, dtype=np.int64)
    eps_cum = np.zeros(horizon, dtype=np.float64)
    spent = 0.0
    for rel in releases:
        spent += rel.epsilon_spent
        outputs[rel.t - 1:] = rel.chosen
        eps_cum[rel.t - 1:] = spent
    return IdentificationRun(outputs=outputs, epsilon_cum=eps_cum, releases=releases)


def run_epoch_identifier(collection: Collection, epsilon: float,
                         stream: Sequence[int], horizon: int,
                         rng: np.random.Generator,
                         overlap: Callable[[int], float] | None = None,
                         allow_duplicates: bool = False,
                         initial_index: int = 1) -> IdentificationRun:
    """Epoch exponential mechanism for adversarial enumerations.

    Rejects streams with duplicates (a model violation) unless
    ``allow_duplicates`` is set for experimentation.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    arr = np.asarray(stream, dtype=np.int64)[:horizon]
    if arr.size < horizon:
        raise ValueError("stream shorter than horizon")
    if not allow_duplicates and np.unique(arr).size != arr.size:
        raise ValueError("duplicate element in stream: not a valid enumeration")
    if overlap is None:
        overlap = collection.pairwise_overlap
    schedule = BudgetSchedule(epsilon)
    releases: list[EpochRelease] = []
    s = 1
    while 2 ** s <= horizon:
        t_s = 2 ** s
        probs = epoch_release_probabilities(collection, epsilon, s, arr[:t_s], overlap)
        chosen = sample_index(probs, rng) + 1
        releases.append(EpochRelease(s=s, t=t_s, support=len(probs), chosen=chosen,
                                     epsilon_spent=schedule.epsilon_at(s)))
        s += 1
    return _hold_outputs(horizon, initial_index, releases)


def epoch_error_bound(s: int, epsilon: float) -> float:
    """Closed-form per-epoch misidentification bound s * exp(-lambda_s 2^(s-1))
    with lambda_s = 3*eps/(pi^2 s^2)."""
    lam = 3.0 * epsilon / (math.pi ** 2 * s * s)
    return s * math.exp(-lam * 2.0 ** (s - 1))


def telltale_deficit(tale: TellTale, counts: dict[int, int], k_s: int) -> int:
    """Sum over tell-tale elements of max(0, k_s - multiplicity seen)."""
    return sum(max(0, k_s - counts.get(w, 0)) for w in tale.elements)


def make_telltale_oracle(collection: Collection):
    """Cached tell-tale lookups; the runtime oracle is an explicit input and
    skips the construction-time validity probe."""
    cache: dict[int, TellTale] = {}

    def oracle(i: int) -> TellTale:
        if i not in cache:
            cache[i] = collection.telltale(i, validate=False)
        return cache[i]

    return oracle


def telltale_utility(collection: Collection, i: int, prefix: np.ndarray,
                     counts: dict[int, int], k_s: int,
                     telltale_oracle=None) -> float:
    """u_s(i) = -Err(i) - Def(i); integer-valued and never positive."""
    if telltale_oracle is None:
        telltale_oracle = make_telltale_oracle(collection)
    tale = telltale_oracle(i)
    return float(-error_count(collection, i, prefix)
                 - telltale_deficit(tale, counts, k_s))


DEFAULT_PRIOR_LOG_RATIO = -math.log(2.0)   # pi(i) = 2^(-i)


def run_telltale_identifier(collection: Collection, epsilon: float,
                            stream: Sequence[int], horizon: int,
                            rng: np.random.Generator,
                            log_prior: Callable[[int], float] | None = None,
                            prior_log_ratio: float = DEFAULT_PRIOR_LOG_RATIO,
                            prior_log_scale: float = 0.0,
                            telltale_oracle=None,
                            max_rejections: int = 10 ** 6,
                            initial_index: int = 1) -> IdentificationRun:
    """Tell-tale deficit identifier for i.i.d. streams.

    The epoch-s release samples index i with probability proportional to
    pi(i) * s^(-2i) * exp(lambda_s u_s(i)), lambda_s = epsilon_s/6
    (sensitivity 3), exactly, by rejection against the geometric dominator
    exp(prior_log_scale + i*(prior_log_ratio - 2 log s)).  The prior must obey
    log pi(i) <= prior_log_scale + i * prior_log_ratio; the default is
    pi(i) = 2^(-i).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    arr = np.asarray(stream, dtype=np.int64)[:horizon]
    if arr.size < horizon:
        raise ValueError("stream shorter than horizon")
    if log_prior is None:
        log_prior = lambda i: i * DEFAULT_PRIOR_LOG_RATIO
    if telltale_oracle is None:
        telltale_oracle = make_telltale_oracle(collection)
    schedule = BudgetSchedule(epsilon)
    releases: list[EpochRelease] = []
    s = 1
    while 2 ** s <= horizon:
        t_s = 2 ** s
        prefix = arr[:t_s]
        values, multiplicities = np.unique(prefix, return_counts=True)
        counts = {int(v): int(c) for v, c in zip(values, multiplicities)}
        k_s = s ** 3
        lam = schedule.epsilon_at(s) / 6.0
        cache: dict[int, float] = {}

        def utility(i: int, prefix=prefix, counts=counts, k_s=k_s,
                    cache=cache) -> float:
            if i not in cache:
                cache[i] = telltale_utility(collection, i, prefix, counts, k_s,
                                            telltale_oracle)
            return cache[i]

        chosen, rejections = exp_mechanism_countable(
            utility, lam, rng,
            log_ratio=prior_log_ratio - 2.0 * math.log(s),
            log_base_weight=lambda i, s=s: log_prior(i) - 2.0 * i * math.log(s),
            log_scale=prior_log_scale,
            max_rejections=max_rejections)
        releases.append(EpochRelease(s=s, t=t_s, support=len(cache),
                                     chosen=chosen,
                                     epsilon_spent=schedule.epsilon_at(s),
                                     rejections=rejections))
        s += 1
    return _hold_outputs(horizon, initial_index, releases)


def telltale_release_weights(collection: Collection, epsilon: float, s: int,
                             prefix: Sequence[int], upto: int,
                             log_prior: Callable[[int], float] | None = None,
                             telltale_oracle=None) -> np.ndarray:
    """Unnormalized log weights of indices 1..upto at epoch s (diagnostics and
    truncated exact distributions for sampler tests)."""
    if log_prior is None:
        log_prior = lambda i: i * DEFAULT_PRIOR_LOG_RATIO
    if telltale_oracle is None:
        telltale_oracle = make_telltale_oracle(collection)
    arr = np.asarray(prefix, dtype=np.int64)[:2 ** s]
    values, multiplicities = np.unique(arr, return_counts=True)
    counts = {int(v): int(c) for v, c in zip(values, multiplicities)}
    k_s = s ** 3
    lam = BudgetSchedule(epsilon).epsilon_at(s) / 6.0
    return np.array([
        log_prior(i) - 2.0 * i * math.log(s)
        + lam * telltale_utility(collection, i, arr, counts, k_s, telltale_oracle)
        for i in range(1, upto + 1)
    ])


def utility_sensitivity_probe(collection: Collection, n_pairs: int,
                              rng: np.random.Generator,
                              prefix_len: int = 256,
                              element_bound: int = 64,
                              index_bound: int = 8,
                              epochs: Sequence[int] = (2, 3, 4, 5)) -> float:
    """Randomized worst-case probe of |u_s(i; X) - u_s(i; X')| over single-
    replacement neighbors; the exact bound is 3 (1 from the error count plus 2
    from the deficit)."""
    oracle = make_telltale_oracle(collection)
    worst = 0.0
    for _ in range(n_pairs):
        prefix = rng.integers(1, element_bound + 1, size=prefix_len).astype(np.int64)
        position = int(rng.integers(prefix_len))
        replacement = int(rng.integers(1, element_bound + 1))
        other = prefix.copy()
        other[position] = replacement
        i = int(rng.integers(1, index_bound + 1))
        s = int(epochs[int(rng.integers(len(epochs)))])
        k_s = s ** 3
        u = []
        for arr in (prefix, other):
            values, multiplicities = np.unique(arr, return_counts=True)
            counts = {int(v): int(c) for v, c in zip(values, multiplicities)}
            u.append(telltale_utility(collection, i, arr, counts, k_s,
                                      oracle))
        worst = max(worst, abs(u[0] - u[1]))
    return worst
