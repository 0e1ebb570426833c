"""Run orchestration: configs, metrics, CSV round-trips, sweeps, audits."""

import json
import math
import os

import numpy as np
import pytest

from dplimit.experiments import (ConfigError, DEFAULT_BURNIN, RunConfig,
                                 audit_epoch_identifier,
                                 audit_noisy_count_release,
                                 audit_subset_mechanism, check_compatibility,
                                 metrics_from_step_csv, run_experiment,
                                 sample_complexity_sweep, summary_rows)
from dplimit.languages import (collection_from_spec, make_sperner_collection,
                               make_threshold_collection)
from dplimit.mechanisms import rng_from_seed


def small_config(**overrides):
    base = dict(
        collection={"family": "dyadic"},
        stream={"kind": "canonical", "target": 2},
        algorithm="alg2",
        epsilon=1.0,
        horizon=256,
        seeds=(0, 1, 2),
        burn_in=64,
    )
    base.update(overrides)
    return RunConfig(**base)


# --- config ------------------------------------------------------------------

def test_config_roundtrip_identity():
    config = small_config()
    assert RunConfig.from_json(config.to_json()) == config
    assert config.to_json() == RunConfig.from_json(config.to_json()).to_json()


def test_config_validation():
    with pytest.raises(ConfigError):
        small_config(algorithm="nope")
    with pytest.raises(ConfigError):
        small_config(epsilon=0.0)
    with pytest.raises(ConfigError):
        small_config(seeds=())
    with pytest.raises(ConfigError):
        small_config(horizon=0)


def test_compatibility_checks():
    with pytest.raises(ConfigError):
        check_compatibility(small_config(algorithm="alg3",
                                         collection={"family": "sperner", "k": 4}),
                            make_sperner_collection(4))
    with pytest.raises(ConfigError):
        check_compatibility(
            small_config(algorithm="uniform_continual",
                         collection={"family": "threshold"}),
            make_threshold_collection())
    with pytest.raises(ConfigError):
        run_experiment(small_config(
            algorithm="alg2",
            stream={"kind": "swap_adversary", "target": 2},
            collection={"family": "dyadic"}))


def test_default_burnin_lookup():
    config = small_config(burn_in=None)
    assert config.effective_burn_in("dyadic") == DEFAULT_BURNIN[("alg2", "dyadic")]
    assert config.effective_burn_in("unknown") == config.horizon // 2


# --- experiment runs -----------------------------------------------------------

def test_identification_run_metrics_and_budget(tmp_path):
    out = tmp_path / "run1"
    config = small_config(out=str(out), seeds=tuple(range(4)))
    metrics = run_experiment(config)
    assert len(metrics.results) == 4
    assert all(r.epsilon_spent < config.epsilon for r in metrics.results)
    steps = (out / "steps.csv").read_text().splitlines()
    assert steps[0] == "run_id,t,epoch,output,correct,mistake,epsilon_cum,seed"
    assert len(steps) == 1 + 4 * config.horizon
    # budget column non-decreasing per seed, increments match the schedule
    eps_cols = {}
    for line in steps[1:]:
        parts = line.split(",")
        eps_cols.setdefault(parts[7], []).append(float(parts[6]))
    from dplimit.mechanisms import BudgetSchedule
    schedule = BudgetSchedule(config.epsilon).cumulative(8)
    for seed, values in eps_cols.items():
        arr = np.array(values)
        assert np.all(np.diff(arr) >= 0)
        # value at each release time equals the schedule's partial sum
        for s in range(1, 9):
            assert abs(arr[2 ** s - 1] - schedule[s - 1]) < 1e-12


def test_replay_is_byte_identical(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    metrics_a = run_experiment(small_config(out=str(out_a)))
    metrics_b = run_experiment(small_config(out=str(out_b)))
    assert (out_a / "steps.csv").read_bytes() == (out_b / "steps.csv").read_bytes()
    assert (out_a / "summary.csv").read_bytes() == (out_b / "summary.csv").read_bytes()
    assert metrics_a.results == metrics_b.results


def test_summary_recomputable_from_step_csv(tmp_path):
    out = tmp_path / "run2"
    config = small_config(out=str(out), seeds=(0, 1))
    metrics = run_experiment(config)
    rebuilt = metrics_from_step_csv(str(out / "steps.csv"), config.burn_in)
    original = [list(r) for r in summary_rows(metrics.results)]
    recomputed = [list(r) for r in summary_rows(rebuilt)]
    assert original == recomputed


def test_generation_run_alg1_threshold(tmp_path):
    config = RunConfig(
        collection={"family": "threshold"},
        stream={"kind": "canonical", "target": 5},
        algorithm="alg1", epsilon=1.0, horizon=2000, seeds=(0, 1),
        burn_in=1000, out=str(tmp_path / "g"))
    metrics = run_experiment(config)
    assert metrics.success_rate == 1.0
    assert all(r.epsilon_spent < 1.0 for r in metrics.results)


def test_generation_run_uniform_continual():
    config = RunConfig(
        collection={"family": "sperner", "k": 4},
        stream={"kind": "canonical", "target": 1},
        algorithm="uniform_continual", epsilon=4.0, horizon=512,
        seeds=(0, 1, 2), burn_in=256)
    metrics = run_experiment(config)
    assert metrics.success_rate >= 2 / 3


def test_identification_run_alg3_iid():
    config = RunConfig(
        collection={"family": "threshold"},
        stream={"kind": "iid", "target": 1, "params": {"p": 0.5}},
        algorithm="alg3", epsilon=1.0, horizon=2 ** 11,
        seeds=(0, 1, 2), burn_in=2 ** 10)
    metrics = run_experiment(config)
    assert metrics.success_rate >= 2 / 3
    assert all(r.epsilon_spent < 1.0 for r in metrics.results)


def test_uniform_finite_single_shot():
    config = RunConfig(
        collection={"family": "sperner", "k": 4},
        stream={"kind": "canonical", "target": 2},
        algorithm="uniform_finite", epsilon=2.0, horizon=20,
        seeds=tuple(range(20)), burn_in=0)
    metrics = run_experiment(config)
    assert metrics.success_rate >= 0.8


def test_iid_stream_statically_rejected_for_enumeration_identifier():
    with pytest.raises(ConfigError):
        run_experiment(small_config(stream={"kind": "iid", "target": 2}))
    with pytest.raises(ConfigError):
        run_experiment(small_config(
            algorithm="uniform_continual",
            collection={"family": "sperner", "k": 4},
            stream={"kind": "iid", "target": 1}))


def test_partial_outputs_removed_on_failure(tmp_path):
    out = tmp_path / "broken"
    # invalid stream parameters surface while the step file is already open
    config = small_config(out=str(out),
                          stream={"kind": "delayed", "target": 2,
                                  "params": {"delay": 8, "stall": 2}})
    with pytest.raises(ValueError):
        run_experiment(config)
    assert not (out / "steps.csv").exists()
    assert not (out / "summary.csv").exists()


# --- sweep ----------------------------------------------------------------------

def test_sweep_matrix_and_threshold(tmp_path):
    coll = make_sperner_collection(4)
    result = sample_complexity_sweep(coll, epsilons=(0.5, 2.0), ns=(4, 16, 48),
                                     n_seeds=80)
    assert result.success(2.0, 48) >= result.success(2.0, 4) - 0.05
    n_small_eps = result.threshold_n(0.5)
    n_big_eps = result.threshold_n(2.0)
    assert n_big_eps is not None
    if n_small_eps is not None:
        assert n_big_eps <= n_small_eps
    path = tmp_path / "sweep.csv"
    result.write(str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "family,k,epsilon,n,target,trials,successes,success_rate"
    assert len(lines) == 1 + 2 * 3 * 4


def test_sweep_single_language_collection_meets_collision_bound():
    # k = 1: the only subset is always selected, so success is limited only by
    # the collision budget beta_n = exp(-eps * n / 2)
    solo = make_threshold_collection().truncate(1)
    result = sample_complexity_sweep(solo, epsilons=(1.0,), ns=(1, 2, 4, 8),
                                     n_seeds=200)
    for n in (1, 2, 4, 8):
        beta = math.exp(-1.0 * n / 2.0)
        assert result.success(1.0, n) >= 1 - beta - 0.08
    threshold = result.threshold_n(1.0)
    assert threshold is not None and threshold <= 2


# --- audits ----------------------------------------------------------------------

def test_audit_subset_mechanism_all_pass():
    rows = audit_subset_mechanism(make_sperner_collection(4), 1.0, n=10,
                                  n_pairs=40, rng=rng_from_seed(0, 2))
    assert all(r.passed for r in rows)
    assert all(r.measured <= r.budget + 1e-9 for r in rows)


def test_audit_epoch_identifier_all_pass():
    rows = audit_epoch_identifier(make_threshold_collection(), 1.0, max_epoch=5,
                                  n_pairs=8, rng=rng_from_seed(0, 3))
    assert rows and all(r.passed for r in rows)


def test_audit_noisy_count_release_within_budget():
    coll = make_threshold_collection()
    row, report = audit_noisy_count_release(coll, 1.0, trials=20000,
                                            rng=rng_from_seed(0, 4))
    assert row.passed
    assert row.certified <= row.budget


def test_audit_negative_control_flagged():
    coll = make_threshold_collection()
    row, report = audit_noisy_count_release(coll, 1.0, trials=10 ** 4,
                                            rng=rng_from_seed(0, 5),
                                            noiseless=True)
    assert not row.passed
    assert report.violation
