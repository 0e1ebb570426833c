"""Noise primitives, budget schedules and privacy checkers.

Everything random flows through a counter-based Philox generator keyed by an
explicit seed lineage, so any release can be replayed bit-for-bit.  Exponential
mechanisms are computed in log space with a max-utility shift; the countable
variant samples exactly by rejection against a geometric dominating measure
instead of truncating the support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

BASEL = math.pi ** 2 / 6


def rng_from_seed(seed: int, *path: int) -> np.random.Generator:
    """Philox generator for the given seed lineage; children are independent."""
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))))


def seed_label(seed: int, *path: int) -> str:
    return "/".join(str(p) for p in (seed, *path))


def uniform_int(rng: np.random.Generator, n: int) -> int:
    """Exact uniform draw from {0, ..., n-1} for arbitrarily large n.

    Composes 32-bit words and rejects overshoots, so the draw stays exact and
    replayable even when n exceeds the int64 range.
    """
    n = int(n)
    if n < 1:
        raise ValueError("uniform_int needs n >= 1")
    if n <= (1 << 62):
        return int(rng.integers(0, n))
    bits = (n - 1).bit_length()
    while True:
        x = 0
        remaining = bits
        while remaining > 0:
            take = min(remaining, 32)
            x = (x << take) | int(rng.integers(0, 1 << take))
            remaining -= take
        if x < n:
            return x


@dataclass(frozen=True)
class BudgetSchedule:
    """Continual-release budget split epsilon_s = 6*eps/(pi^2 s^2).

    Partial sums stay strictly below the total for every finite horizon and
    converge to it; the same rule covers the eps0/k^2 ledger of the noisy
    intersection generator (eps0 = 6*eps/pi^2).
    """

    total_epsilon: float

    def __post_init__(self):
        if self.total_epsilon <= 0:
            raise ValueError("total epsilon must be positive")

    def epsilon_at(self, s: int) -> float:
        if s < 1:
            raise ValueError("release index starts at 1")
        return 6.0 * self.total_epsilon / (math.pi ** 2 * s * s)

    def partial_sum(self, upto: int) -> float:
        if upto < 1:
            raise ValueError("partial sum needs at least one release")
        inv_sq = 1.0 / np.arange(1, upto + 1, dtype=np.float64) ** 2
        return float(6.0 * self.total_epsilon / math.pi ** 2 * inv_sq.sum())

    def cumulative(self, upto: int) -> np.ndarray:
        """Cumulative spend after releases 1..upto."""
        inv_sq = 1.0 / np.arange(1, upto + 1, dtype=np.float64) ** 2
        return 6.0 * self.total_epsilon / math.pi ** 2 * np.cumsum(inv_sq)


def budget_partial_sum(schedule: BudgetSchedule, upto: int) -> float:
    return schedule.partial_sum(upto)


def laplace_inverse_cdf(u, scale: float):
    """Quantile function of Laplace(0, scale); u = 1/2 maps to exactly 0."""
    if scale <= 0:
        raise ValueError("laplace scale must be positive")
    u = np.asarray(u, dtype=np.float64)
    u = np.clip(u, 2.0 ** -53, 1.0 - 2.0 ** -53)
    shifted = u - 0.5
    out = -scale * np.sign(shifted) * np.log1p(-2.0 * np.abs(shifted))
    return out if out.shape else float(out)


def sample_laplace(scale: float, rng: np.random.Generator, size: int | None = None):
    """Inverse-CDF Laplace samples; deterministic given the generator state."""
    u = rng.random() if size is None else rng.random(size)
    return laplace_inverse_cdf(u, scale)


@dataclass(frozen=True)
class ExpMechSpec:
    """Finite-support exponential mechanism: weight_i = base_i * exp(lam * u_i)."""

    utilities: np.ndarray
    temperature: float
    base_weights: np.ndarray | None = None

    def __post_init__(self):
        u = np.asarray(self.utilities, dtype=np.float64)
        if u.size == 0:
            raise ValueError("empty support")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        object.__setattr__(self, "utilities", u)
        if self.base_weights is not None:
            b = np.asarray(self.base_weights, dtype=np.float64)
            if b.shape != u.shape or np.any(b <= 0) or not np.all(np.isfinite(b)):
                raise ValueError("base weights must be positive, finite, same shape")
            object.__setattr__(self, "base_weights", b)

    def probabilities(self) -> np.ndarray:
        """Exact selection probabilities, computed with a max-shift in log space."""
        log_w = self.temperature * self.utilities
        if self.base_weights is not None:
            log_w = log_w + np.log(self.base_weights)
        log_w = log_w - log_w.max()
        w = np.exp(log_w)
        total = w.sum()
        assert total > 0 and np.all(np.isfinite(w)), "weights degenerate after shift"
        return w / total


def sample_index(probabilities: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw over a probability vector."""
    cdf = np.cumsum(probabilities)
    idx = int(np.searchsorted(cdf, rng.random(), side="right"))
    return min(idx, len(probabilities) - 1)


def exp_mechanism_finite(spec: ExpMechSpec,
                         rng: np.random.Generator) -> tuple[int, np.ndarray]:
    """Sample a support position and return it with the exact probability vector."""
    probs = spec.probabilities()
    return sample_index(probs, rng), probs


class RejectionCapError(RuntimeError):
    """The countable sampler exceeded its rejection cap."""


def exp_mechanism_countable(utility: Callable[[int], float],
                            temperature: float,
                            rng: np.random.Generator,
                            log_ratio: float,
                            log_base_weight: Callable[[int], float] | None = None,
                            log_scale: float = 0.0,
                            max_rejections: int = 10 ** 6) -> tuple[int, int]:
    """Exact sampler over i >= 1 with weight base(i) * exp(temperature * u(i)).

    Requires u(i) <= 0 everywhere and the base weights dominated by the
    geometric bound log base(i) <= log_scale + i * log_ratio (log_ratio < 0).
    Proposes i from the normalized dominator and accepts with probability
    exp(log base(i) + temperature*u(i) - log_scale - i*log_ratio); utilities
    are evaluated lazily only at proposed indices and the output distribution
    equals the target exactly.  All bookkeeping stays in log space, so epoch
    penalties like s^(-2i) never underflow.  Returns (index, rejected count).
    """
    if log_ratio >= 0:
        raise ValueError("dominating ratio must be in (0, 1): log_ratio < 0")
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    if log_base_weight is None:
        log_base_weight = lambda i: log_scale + i * log_ratio
    ratio = math.exp(log_ratio)
    rejections = 0
    while True:
        i = int(rng.geometric(1.0 - ratio))
        u = float(utility(i))
        if u > 1e-12:
            raise ValueError(f"utility at index {i} is positive ({u}); "
                             "the countable sampler needs non-positive utilities")
        log_accept = (log_base_weight(i) + temperature * min(u, 0.0)
                      - log_scale - i * log_ratio)
        if log_accept > 1e-9:
            raise ValueError(f"weight at {i} exceeds the geometric dominator")
        if rng.random() < math.exp(min(log_accept, 0.0)):
            return i, rejections
        rejections += 1
        if rejections >= max_rejections:
            raise RejectionCapError(
                f"gave up after {rejections} rejections (last proposal {i}, "
                f"log acceptance {log_accept:.3g})")


@dataclass
class DpCheckResult:
    max_log_ratio: float
    bound: float
    passed: bool
    support_mismatch: bool = False

    def __bool__(self) -> bool:
        return self.passed


def dp_check_exact(prob_fn: Callable[[Sequence[int]], np.ndarray],
                   x, x_prime,
                   epsilon: float,
                   group_size: int = 1,
                   slack: float = 1e-9) -> DpCheckResult:
    """Exact pure-DP check over a finite outcome space.

    ``prob_fn`` maps an input to the mechanism's exact per-outcome probability
    vector (consistent outcome order).  Passes iff the max absolute log ratio
    is at most group_size * epsilon + slack; a one-sided zero probability is an
    automatic failure.
    """
    p = np.asarray(prob_fn(x), dtype=np.float64)
    q = np.asarray(prob_fn(x_prime), dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("probability vectors must share an outcome space")
    bound = group_size * epsilon
    both = (p > 0) & (q > 0)
    mismatch = bool(np.any((p > 0) != (q > 0)))
    if mismatch:
        return DpCheckResult(math.inf, bound, False, support_mismatch=True)
    if not both.any():
        return DpCheckResult(0.0, bound, True)
    ratios = np.abs(np.log(p[both]) - np.log(q[both]))
    worst = float(ratios.max())
    return DpCheckResult(worst, bound, worst <= bound + slack)


def clopper_pearson(successes: int, trials: int,
                    confidence: float = 0.99) -> tuple[float, float]:
    """Exact two-sided binomial confidence interval."""
    alpha = 1.0 - confidence
    if successes == 0:
        lo = 0.0
    else:
        lo = float(stats.beta.ppf(alpha / 2, successes, trials - successes + 1))
    if successes == trials:
        hi = 1.0
    else:
        hi = float(stats.beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


@dataclass
class AuditCell:
    cell: int
    count_a: int
    count_b: int
    log_ratio: float          # point estimate, may be +-inf on one-sided cells
    certified: float          # CI-backed lower bound on |log ratio|, 0 if none


@dataclass
class AuditReport:
    trials: int
    budget: float
    epsilon_hat: float        # max |log ratio| point estimate over usable cells
    certified_lower: float    # max CI lower bound on |log ratio|
    violation: bool
    cells: list[AuditCell] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def dp_audit_empirical(run_fn: Callable[[Sequence[int], np.random.Generator], object],
                       stream_a: Sequence[int],
                       stream_b: Sequence[int],
                       partition: Callable[[object], int],
                       trials: int,
                       budget: float,
                       rng: np.random.Generator,
                       confidence: float = 0.99,
                       n_cells: int | None = None) -> AuditReport:
    """Monte-Carlo privacy audit over a neighboring stream pair.

    Estimates the outcome-cell distributions under both streams and reports the
    max log ratio with Clopper-Pearson intervals.  A violation is flagged only
    when the interval lower bound on some cell's log ratio exceeds the budget;
    cells empty on both sides are excluded with a warning.
    """
    if trials < 10 ** 4:
        raise ValueError("empirical audits need at least 10^4 trials per stream")
    cells_a: dict[int, int] = {}
    cells_b: dict[int, int] = {}
    for _ in range(trials):
        ca = int(partition(run_fn(stream_a, rng)))
        cells_a[ca] = cells_a.get(ca, 0) + 1
        cb = int(partition(run_fn(stream_b, rng)))
        cells_b[cb] = cells_b.get(cb, 0) + 1
    cell_ids = sorted(set(cells_a) | set(cells_b))
    if len(cell_ids) > 32:
        raise ValueError(f"partition produced {len(cell_ids)} cells (max 32)")
    report = AuditReport(trials=trials, budget=budget, epsilon_hat=0.0,
                         certified_lower=0.0, violation=False)
    for cid in cell_ids:
        na, nb = cells_a.get(cid, 0), cells_b.get(cid, 0)
        if na == 0 and nb == 0:
            report.warnings.append(f"cell {cid} empty on both sides; excluded")
            continue
        pa, pb = na / trials, nb / trials
        if na > 0 and nb > 0:
            point = abs(math.log(pa) - math.log(pb))
        else:
            point = math.inf
        lo_a, hi_a = clopper_pearson(na, trials, confidence)
        lo_b, hi_b = clopper_pearson(nb, trials, confidence)
        certified = 0.0
        if lo_a > 0 and hi_b > 0:
            certified = max(certified, math.log(lo_a) - math.log(hi_b))
        if lo_b > 0 and hi_a > 0:
            certified = max(certified, math.log(lo_b) - math.log(hi_a))
        certified = max(certified, 0.0)
        report.cells.append(AuditCell(cid, na, nb, point, certified))
        report.epsilon_hat = max(report.epsilon_hat, point)
        report.certified_lower = max(report.certified_lower, certified)
    report.violation = report.certified_lower > budget
    return report


@dataclass(frozen=True)
class MechanismTranscript:
    """Per-release audit record."""

    release_index: int
    epsilon_spent: float
    support_size: int
    output_index: int
    seed_lineage: str
    probabilities: tuple[float, ...] | None = None

    def csv_row(self, run_id: str) -> list:
        return [run_id, self.release_index, f"{self.epsilon_spent:.12g}",
                self.output_index, self.seed_lineage]


TRANSCRIPT_HEADER = ["run_id", "release_s", "epsilon_spent", "output_index", "seed"]
