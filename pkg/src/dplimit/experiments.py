"""Run configuration, per-seed execution, metrics, sweeps, audits and CSV output.

CSV schemas (fixed):
  steps.csv    run_id,t,epoch,output,correct,mistake,epsilon_cum,seed
  summary.csv  seed,last_mistake_time,mistake_count,success,epsilon_spent
  sweep.csv    family,k,epsilon,n,target,trials,successes,success_rate
  audit.csv    kind,release,budget,measured,certified,passed

Success for a generation step means the emitted element lies in the target
language and was neither an input so far nor a previous output; for an
identification step it means the emitted index equals the target's index.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from statistics import median
from typing import Iterable, Sequence

import numpy as np

from . import generation, identification
from .languages import (Collection, NoTelltaleError, collection_from_spec)
from .mechanisms import (AuditReport, dp_audit_empirical, dp_check_exact,
                         rng_from_seed, sample_laplace, seed_label)
from .streams import StreamSpec, materialize, multi_neighbor, neighbor_pair

ALGORITHMS = ("alg1", "uniform_finite", "uniform_continual", "alg2", "alg3")

# Empirical stabilization points per fixture; the continual generators converge
# at fixture-dependent times, so acceptance burn-ins are configuration data.
DEFAULT_BURNIN = {
    ("alg1", "threshold"): 5000,
    ("alg1", "sperner"): 5000,
    ("uniform_continual", "sperner"): 2048,
    ("alg2", "dyadic"): 4096,
    ("alg3", "threshold"): 1024,
}

STEP_HEADER = ["run_id", "t", "epoch", "output", "correct", "mistake",
               "epsilon_cum", "seed"]
SUMMARY_HEADER = ["seed", "last_mistake_time", "mistake_count", "success",
                  "epsilon_spent"]
SWEEP_HEADER = ["family", "k", "epsilon", "n", "target", "trials", "successes",
                "success_rate"]
AUDIT_HEADER = ["kind", "release", "budget", "measured", "certified", "passed"]


class ConfigError(ValueError):
    """Invalid or incompatible run configuration."""


@dataclass(frozen=True)
class RunConfig:
    collection: dict
    stream: dict
    algorithm: str
    epsilon: float
    horizon: int
    seeds: tuple[int, ...]
    out: str | None = None
    burn_in: int | None = None
    allow_duplicates: bool = False
    log_base: str = "natural"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.log_base not in ("natural", "two"):
            raise ConfigError("log_base must be 'natural' or 'two'")

    def to_json(self) -> str:
        payload = {
            "collection": self.collection, "stream": self.stream,
            "algorithm": self.algorithm, "epsilon": self.epsilon,
            "horizon": self.horizon, "seeds": list(self.seeds),
            "out": self.out, "burn_in": self.burn_in,
            "allow_duplicates": self.allow_duplicates, "log_base": self.log_base,
        }
        return json.dumps(payload, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        d = json.loads(text)
        try:
            return cls(collection=d["collection"], stream=d["stream"],
                       algorithm=d["algorithm"], epsilon=float(d["epsilon"]),
                       horizon=int(d["horizon"]), seeds=tuple(int(s) for s in d["seeds"]),
                       out=d.get("out"), burn_in=d.get("burn_in"),
                       allow_duplicates=bool(d.get("allow_duplicates", False)),
                       log_base=d.get("log_base", "natural"))
        except KeyError as missing:
            raise ConfigError(f"config is missing {missing}") from None

    def effective_burn_in(self, family: str) -> int:
        if self.burn_in is not None:
            return int(self.burn_in)
        return DEFAULT_BURNIN.get((self.algorithm, family), self.horizon // 2)


def check_compatibility(config: RunConfig, collection: Collection) -> None:
    """Reject structurally impossible pairings before running."""
    if config.algorithm in ("uniform_finite", "uniform_continual"):
        if collection.kind != "finite":
            raise ConfigError(f"{config.algorithm} needs a finite collection")
    if config.algorithm == "alg3":
        try:
            collection.telltale(1)
        except NoTelltaleError as err:
            raise ConfigError(f"alg3 needs tell-tales: {err}") from None
    stream_kind = config.stream.get("kind")
    if stream_kind == "swap_adversary" and collection.family != "pair_subset":
        raise ConfigError("the swap adversary fixture is defined on pair_subset")
    if (config.algorithm == "alg2" and stream_kind == "iid"
            and not config.allow_duplicates):
        raise ConfigError("alg2 expects a duplicate-free enumeration; i.i.d. "
                          "streams need allow_duplicates")
    if config.algorithm in ("uniform_finite", "uniform_continual") \
            and stream_kind == "iid":
        raise ConfigError(f"{config.algorithm} scores duplicate-free prefixes; "
                          "i.i.d. streams are not valid inputs")


@dataclass(frozen=True)
class SeedResult:
    seed: int
    last_mistake_time: int        # 0 when the run never erred
    mistake_count: int
    success: bool                 # no mistakes after the burn-in
    epsilon_spent: float


@dataclass
class StepRecord:
    """Columnar per-step transcript of one seed's run."""

    t: np.ndarray
    epoch: np.ndarray
    output: list            # int or None per step
    correct: np.ndarray
    epsilon_cum: np.ndarray


@dataclass
class RunMetrics:
    results: list[SeedResult]
    burn_in: int

    @property
    def success_rate(self) -> float:
        return sum(r.success for r in self.results) / len(self.results)

    @property
    def median_last_mistake(self) -> float:
        return median(r.last_mistake_time for r in self.results)


def summarize_steps(seed: int, record: StepRecord, burn_in: int) -> SeedResult:
    mistakes = ~record.correct
    times = record.t[mistakes]
    last = int(times.max()) if times.size else 0
    return SeedResult(
        seed=seed,
        last_mistake_time=last,
        mistake_count=int(mistakes.sum()),
        success=bool(last <= burn_in),
        epsilon_spent=float(record.epsilon_cum[-1]) if record.epsilon_cum.size else 0.0,
    )


def _judge_generation(target_lang, stream, elements: list,
                      ) -> np.ndarray:
    """Correctness of generation outputs: in-language, not an input seen so
    far, not a previous output."""
    seen: set[int] = set()
    emitted: set[int] = set()
    verdicts = np.zeros(len(elements), dtype=bool)
    for idx, element in enumerate(elements):
        seen.add(int(stream[idx]))
        ok = (element is not None and target_lang.contains(element)
              and element not in seen and element not in emitted)
        verdicts[idx] = ok
        if element is not None:
            emitted.add(element)
    return verdicts


def run_seed(config: RunConfig, collection: Collection, seed: int) -> StepRecord:
    """Execute one seed of the configured experiment; deterministic in
    (config, seed)."""
    spec = StreamSpec.from_dict(config.stream)
    rng = rng_from_seed(seed, 1)
    horizon = config.horizon
    target_lang = collection.language(spec.target)

    if config.algorithm == "alg1":
        stream = materialize(spec, collection, horizon, run_seed=seed)
        gen = generation.IntersectionGenerator(
            collection, config.epsilon, rng, seed_lineage=seed_label(seed, 1))
        outs = gen.run(stream, horizon)
        elements = [o.element for o in outs]
        return StepRecord(
            t=np.arange(1, horizon + 1),
            epoch=np.array([o.k for o in outs]),
            output=elements,
            correct=_judge_generation(target_lang, stream, elements),
            epsilon_cum=np.array([o.epsilon_cum for o in outs]),
        )

    if config.algorithm == "uniform_continual":
        stream = materialize(spec, collection, horizon, run_seed=seed)
        d = collection.closure_dimension()
        steps, _ = generation.run_subset_generator_continual(
            collection, max(d, 0), config.epsilon, stream, horizon, rng,
            log_base=config.log_base, seed_lineage=seed_label(seed, 1))
        elements = [s.element for s in steps]
        return StepRecord(
            t=np.arange(1, horizon + 1),
            epoch=np.array([s.release_ordinal for s in steps]),
            output=elements,
            correct=_judge_generation(target_lang, stream, elements),
            epsilon_cum=np.array([s.epsilon_cum for s in steps]),
        )

    if config.algorithm == "uniform_finite":
        stream = materialize(spec, collection, horizon, run_seed=seed)
        d = collection.closure_dimension()
        draw = generation.generate_once(collection, max(d, 0), config.epsilon,
                                        stream, rng, log_base=config.log_base)
        seen = set(int(v) for v in stream)
        ok = (draw.element is not None and target_lang.contains(draw.element)
              and draw.element not in seen)
        return StepRecord(
            t=np.array([horizon]),
            epoch=np.array([0]),
            output=[draw.element],
            correct=np.array([ok]),
            epsilon_cum=np.array([config.epsilon]),
        )

    if config.algorithm == "alg2":
        stream = materialize(spec, collection, horizon, run_seed=seed)
        run = identification.run_epoch_identifier(
            collection, config.epsilon, stream, horizon, rng,
            allow_duplicates=config.allow_duplicates)
    elif config.algorithm == "alg3":
        stream = materialize(spec, collection, horizon, run_seed=seed)
        run = identification.run_telltale_identifier(
            collection, config.epsilon, stream, horizon, rng)
    else:  # pragma: no cover - guarded by RunConfig
        raise ConfigError(f"unknown algorithm {config.algorithm!r}")

    target = spec.target
    epochs = np.floor(np.log2(np.maximum(np.arange(1, horizon + 1), 1))).astype(int)
    return StepRecord(
        t=np.arange(1, horizon + 1),
        epoch=epochs,
        output=[int(v) for v in run.outputs],
        correct=run.outputs == target,
        epsilon_cum=run.epsilon_cum,
    )


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("" if v is None else str(v) for v in row) + "\n")


def step_rows(run_id: str, seed: int, record: StepRecord) -> Iterable[list]:
    for idx in range(record.t.size):
        correct = bool(record.correct[idx])
        yield [run_id, int(record.t[idx]), int(record.epoch[idx]),
               record.output[idx], int(correct), int(not correct),
               _fmt(float(record.epsilon_cum[idx])), seed]


def summary_rows(results: Sequence[SeedResult]) -> Iterable[list]:
    for r in results:
        yield [r.seed, r.last_mistake_time, r.mistake_count, int(r.success),
               _fmt(r.epsilon_spent)]


def metrics_from_step_csv(path: str, burn_in: int) -> list[SeedResult]:
    """Recompute the summary from a written step transcript (idempotence)."""
    per_seed: dict[int, dict[str, list]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        col = {name: idx for idx, name in enumerate(header)}
        for line in fh:
            parts = line.rstrip("\n").split(",")
            seed = int(parts[col["seed"]])
            bucket = per_seed.setdefault(seed, {"t": [], "correct": [], "eps": []})
            bucket["t"].append(int(parts[col["t"]]))
            bucket["correct"].append(parts[col["correct"]] == "1")
            bucket["eps"].append(float(parts[col["epsilon_cum"]]))
    out = []
    for seed in sorted(per_seed):
        bucket = per_seed[seed]
        record = StepRecord(
            t=np.array(bucket["t"]), epoch=np.zeros(len(bucket["t"]), dtype=int),
            output=[None] * len(bucket["t"]),
            correct=np.array(bucket["correct"]),
            epsilon_cum=np.array(bucket["eps"]))
        out.append(summarize_steps(seed, record, burn_in))
    return out


def run_experiment(config: RunConfig) -> RunMetrics:
    """Execute all seeds; write step and summary CSVs when an output directory
    is configured.  Partial outputs are removed if any seed fails."""
    collection = collection_from_spec(config.collection)
    check_compatibility(config, collection)
    burn_in = config.effective_burn_in(collection.family)
    run_tag = f"{config.algorithm}-{collection.family}"
    results: list[SeedResult] = []
    written: list[str] = []
    step_path = summary_path = None
    try:
        step_fh = None
        if config.out:
            os.makedirs(config.out, exist_ok=True)
            step_path = os.path.join(config.out, "steps.csv")
            summary_path = os.path.join(config.out, "summary.csv")
            step_fh = open(step_path, "w", encoding="utf-8", newline="\n")
            written.append(step_path)
            step_fh.write(",".join(STEP_HEADER) + "\n")
        try:
            for seed in config.seeds:
                record = run_seed(config, collection, seed)
                results.append(summarize_steps(seed, record, burn_in))
                if step_fh is not None:
                    for row in step_rows(f"{run_tag}-s{seed}", seed, record):
                        step_fh.write(",".join(
                            "" if v is None else str(v) for v in row) + "\n")
        finally:
            if step_fh is not None:
                step_fh.close()
        if config.out:
            write_csv(summary_path, SUMMARY_HEADER, summary_rows(results))
            written.append(summary_path)
    except Exception:
        for path in written:
            if os.path.exists(path):
                os.unlink(path)
        raise
    return RunMetrics(results=results, burn_in=burn_in)


@dataclass
class SweepResult:
    family: str
    k: int
    rows: list[tuple]                      # SWEEP_HEADER-shaped
    _matrix: dict[tuple[float, int], float] = field(default_factory=dict)

    def success(self, epsilon: float, n: int) -> float:
        return self._matrix[(epsilon, n)]

    def threshold_n(self, epsilon: float, level: float = 2.0 / 3.0) -> int | None:
        """Smallest grid n whose worst-target success reaches ``level``."""
        candidates = sorted(n for (eps, n) in self._matrix if eps == epsilon)
        for n in candidates:
            if self._matrix[(epsilon, n)] >= level:
                return n
        return None

    def write(self, path: str) -> None:
        write_csv(path, SWEEP_HEADER, self.rows)


def sample_complexity_sweep(collection: Collection,
                            epsilons: Sequence[float],
                            ns: Sequence[int],
                            n_seeds: int,
                            targets: Sequence[int] | None = None,
                            base_seed: int = 0,
                            log_base: str = "natural") -> SweepResult:
    """Empirical success matrix of the finite-sample subset generator.

    For each (epsilon, n, target): feed the first n elements of the target's
    canonical enumeration to ``generate_once`` across seeds; the matrix entry
    is the success probability minimized over targets.
    """
    if collection.kind != "finite":
        raise ConfigError("sweeps need a finite collection")
    k = collection.size
    d = max(collection.closure_dimension(), 0)
    if targets is None:
        targets = range(1, k + 1)
    rows: list[tuple] = []
    matrix: dict[tuple[float, int], float] = {}
    for ei, epsilon in enumerate(epsilons):
        for ni, n in enumerate(ns):
            worst = 1.0
            for target in targets:
                lang = collection.language(target)
                prefix = lang.prefix(n)
                seen = set(int(v) for v in prefix)
                successes = 0
                for seed in range(n_seeds):
                    rng = rng_from_seed(base_seed, ei, ni, target, seed)
                    draw = generation.generate_once(collection, d, epsilon,
                                                    prefix, rng, log_base)
                    ok = (draw.element is not None and lang.contains(draw.element)
                          and draw.element not in seen)
                    successes += ok
                rate = successes / n_seeds
                worst = min(worst, rate)
                rows.append((collection.family, k, _fmt(epsilon), n, target,
                             n_seeds, successes, _fmt(rate)))
            matrix[(float(epsilon), int(n))] = worst
    return SweepResult(family=collection.family, k=k, rows=rows, _matrix=matrix)


@dataclass(frozen=True)
class AuditRow:
    kind: str
    release: str
    budget: float
    measured: float
    certified: float
    passed: bool

    def csv(self) -> list:
        return [self.kind, self.release, _fmt(self.budget), _fmt(self.measured),
                _fmt(self.certified), int(self.passed)]


def _random_duplicate_free_prefix(rng, n: int, universe: int) -> np.ndarray:
    return rng.choice(np.arange(1, universe + 1, dtype=np.int64), size=n,
                      replace=False)


def audit_subset_mechanism(collection: Collection, epsilon: float, n: int,
                           n_pairs: int, rng, group_size: int = 1,
                           log_base: str = "natural",
                           universe: int = 512) -> list[AuditRow]:
    """Exact DP checks of the subset release over random neighboring
    duplicate-free prefixes (``group_size`` positions changed)."""
    d = max(collection.closure_dimension(), 0)

    def probs(prefix):
        return generation.subset_mechanism_probabilities(
            collection, d, epsilon, prefix, log_base)[1]

    rows = []
    for pair in range(n_pairs):
        prefix = _random_duplicate_free_prefix(rng, n, universe)
        outside = np.setdiff1d(np.arange(1, universe + 1, dtype=np.int64), prefix)
        positions = rng.choice(n, size=group_size, replace=False) + 1
        fresh = rng.choice(outside, size=group_size, replace=False)
        _, other = multi_neighbor(prefix, {int(p): int(v)
                                           for p, v in zip(positions, fresh)})
        check = dp_check_exact(probs, prefix, other, epsilon, group_size)
        rows.append(AuditRow(kind="uniform_finite", release=f"pair{pair}",
                             budget=group_size * epsilon,
                             measured=check.max_log_ratio,
                             certified=check.max_log_ratio, passed=check.passed))
    return rows


def audit_epoch_identifier(collection: Collection, epsilon: float, max_epoch: int,
                           n_pairs: int, rng, group_size: int = 1,
                           universe: int = 10 ** 6) -> list[AuditRow]:
    """Exact DP checks of each epoch release at its scheduled budget."""
    from .mechanisms import BudgetSchedule
    schedule = BudgetSchedule(epsilon)
    rows = []
    n = 2 ** max_epoch
    for pair in range(n_pairs):
        prefix = _random_duplicate_free_prefix(rng, n, universe)
        positions = rng.choice(n, size=group_size, replace=False) + 1
        fresh = rng.integers(universe + 1, 2 * universe, size=group_size)
        _, other = multi_neighbor(prefix, {int(p): int(v)
                                           for p, v in zip(positions, fresh)})
        for s in range(1, max_epoch + 1):
            def probs(pfx, s=s):
                return identification.epoch_release_probabilities(
                    collection, epsilon, s, np.asarray(pfx)[:2 ** s])
            eps_s = schedule.epsilon_at(s)
            check = dp_check_exact(probs, prefix, other, eps_s, group_size)
            rows.append(AuditRow(kind="alg2", release=f"pair{pair}/s{s}",
                                 budget=group_size * eps_s,
                                 measured=check.max_log_ratio,
                                 certified=check.max_log_ratio,
                                 passed=check.passed))
    return rows


def audit_noisy_count_release(collection: Collection, epsilon: float,
                              trials: int, rng,
                              noiseless: bool = False) -> tuple[AuditRow, AuditReport]:
    """Empirical audit of the first noisy-count release (k = 1, scale 1/eps0).

    ``noiseless`` runs the negative control that releases the raw count; the
    audit must flag it.
    """
    eps0 = 6.0 * epsilon / math.pi ** 2
    lang = collection.language(1)
    inside = lang.enumerator(1)
    # 0 is a valid element value and lies outside every built-in language
    outside = next(x for x in range(0, inside + 2) if not lang.contains(x))

    def release(stream, run_rng):
        count = sum(0 if lang.contains(int(x)) else 1 for x in stream)
        if noiseless:
            return float(count)
        return max(0.0, count + float(sample_laplace(1.0 / eps0, run_rng)))

    def cell(value: float) -> int:
        edges = (0.25, 0.75, 1.5, 3.0, 6.0)
        for idx, edge in enumerate(edges):
            if value < edge:
                return idx
        return len(edges)

    stream_a, stream_b = neighbor_pair([inside], 1, outside)
    report = dp_audit_empirical(release, stream_a, stream_b, cell, trials,
                                eps0, rng)
    row = AuditRow(kind="alg1" + ("-nonoise" if noiseless else ""),
                   release="k1", budget=eps0, measured=report.epsilon_hat,
                   certified=report.certified_lower,
                   passed=not report.violation)
    return row, report
