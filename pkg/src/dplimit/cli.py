"""Command-line entry point.

Subcommands: generate | identify | sweep | audit | closure.  A JSON config
file supplies defaults; flags override.  Exit codes: 0 success, 2 config
error, 3 run failure.  Partial output files are removed on failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .experiments import (AUDIT_HEADER, ConfigError, RunConfig,
                          audit_epoch_identifier, audit_noisy_count_release,
                          audit_subset_mechanism, run_experiment,
                          sample_complexity_sweep, write_csv)
from .languages import Collection, collection_from_token
from .mechanisms import rng_from_seed

EXIT_OK, EXIT_CONFIG, EXIT_RUN = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dplimit",
        description="Differentially private generation and identification "
                    "in the limit: simulations, sweeps and privacy audits.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_stream=True):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--collection", help="family token, e.g. sperner:4")
        p.add_argument("--epsilon", type=float)
        p.add_argument("--horizon", type=int)
        p.add_argument("--seeds", type=int, help="number of seeds (0..n-1)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--burn-in", type=int, dest="burn_in")
        if with_stream:
            p.add_argument("--target", type=int)
            p.add_argument("--stream", default=None,
                           help="canonical|interleaved|delayed|swap_adversary|iid")

    gen = sub.add_parser("generate", help="run a private generator")
    common(gen)
    gen.add_argument("--algorithm", default=None,
                     choices=["alg1", "uniform_finite", "uniform_continual"])

    ident = sub.add_parser("identify", help="run a private identifier")
    common(ident)
    ident.add_argument("--algorithm", default=None, choices=["alg2", "alg3"])

    sweep = sub.add_parser("sweep", help="sample-complexity success matrix")
    common(sweep, with_stream=False)
    sweep.add_argument("--epsilon-grid", default="0.5,1,2")
    sweep.add_argument("--n-grid", default="2,4,8,16,32,64")

    audit = sub.add_parser("audit", help="privacy audit of one release")
    common(audit, with_stream=False)
    audit.add_argument("--algorithm", default="uniform_finite",
                       choices=["uniform_finite", "alg2", "alg1"])
    audit.add_argument("--pairs", type=int, default=100)
    audit.add_argument("--n", type=int, default=10)
    audit.add_argument("--trials", type=int, default=20000)

    closure = sub.add_parser("closure", help="closure facts of a collection")
    closure.add_argument("--collection", required=True)
    return parser


def _load_config(args, default_stream: str, default_algorithm: str) -> RunConfig:
    base: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            base = json.load(fh)
    collection = base.get("collection")
    if args.collection:
        collection = collection_from_token(args.collection).spec()
    if collection is None:
        raise ConfigError("no collection configured")
    stream = base.get("stream", {})
    if getattr(args, "stream", None):
        stream = {**stream, "kind": args.stream}
    stream.setdefault("kind", default_stream)
    if getattr(args, "target", None) is not None:
        stream["target"] = args.target
    stream.setdefault("target", 1)
    seeds = base.get("seeds", list(range(50)))
    if args.seeds is not None:
        seeds = list(range(args.seeds))
    return RunConfig(
        collection=collection,
        stream=stream,
        algorithm=getattr(args, "algorithm", None) or base.get("algorithm", default_algorithm),
        epsilon=args.epsilon if args.epsilon is not None else base.get("epsilon", 1.0),
        horizon=args.horizon if args.horizon is not None else base.get("horizon", 1024),
        seeds=tuple(int(s) for s in seeds),
        out=args.out or base.get("out"),
        burn_in=args.burn_in if args.burn_in is not None else base.get("burn_in"),
        allow_duplicates=bool(base.get("allow_duplicates", False)),
        log_base=base.get("log_base", "natural"),
    )


def _cmd_run(args, default_stream: str, default_algorithm: str) -> int:
    config = _load_config(args, default_stream, default_algorithm)
    metrics = run_experiment(config)
    print(f"seeds={len(metrics.results)} success_rate={metrics.success_rate:.4f} "
          f"median_last_mistake={metrics.median_last_mistake:.1f} "
          f"burn_in={metrics.burn_in}")
    if config.out:
        print(f"wrote {os.path.join(config.out, 'steps.csv')} and summary.csv")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    if not args.collection:
        raise ConfigError("sweep needs --collection")
    collection = collection_from_token(args.collection)
    epsilons = [float(x) for x in args.epsilon_grid.split(",") if x]
    ns = [int(x) for x in args.n_grid.split(",") if x]
    seeds = args.seeds or 200
    result = sample_complexity_sweep(collection, epsilons, ns, seeds)
    for eps in epsilons:
        print(f"epsilon={eps:g} threshold_n(2/3)={result.threshold_n(eps)}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "sweep.csv")
        result.write(path)
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_audit(args) -> int:
    if not args.collection:
        raise ConfigError("audit needs --collection")
    collection = collection_from_token(args.collection)
    epsilon = args.epsilon if args.epsilon is not None else 1.0
    rng = rng_from_seed(args.seeds or 0, 9)
    if args.algorithm == "uniform_finite":
        rows = audit_subset_mechanism(collection, epsilon, args.n, args.pairs, rng)
    elif args.algorithm == "alg2":
        rows = audit_epoch_identifier(collection, epsilon, max_epoch=6,
                                      n_pairs=max(1, args.pairs // 10), rng=rng)
    else:
        row, _ = audit_noisy_count_release(collection, epsilon, args.trials, rng)
        rows = [row]
    failed = [r for r in rows if not r.passed]
    print(f"checks={len(rows)} passed={len(rows) - len(failed)} failed={len(failed)}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "audit.csv")
        write_csv(path, AUDIT_HEADER, (r.csv() for r in rows))
        print(f"wrote {path}")
    return EXIT_OK if not failed else EXIT_RUN


def _cmd_closure(args) -> int:
    collection: Collection = collection_from_token(args.collection)
    if collection.kind != "finite":
        raise ConfigError("closure dimension needs a finite collection "
                          "(use e.g. sperner:4)")
    dim = collection.closure_dimension()
    print(f"family={collection.family} size={collection.size} "
          f"closure_dimension={dim}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        # argparse exits 2 on unknown flags; keep that as the config error code
        return int(err.code or EXIT_CONFIG)
    try:
        if args.command == "generate":
            return _cmd_run(args, "canonical", "alg1")
        if args.command == "identify":
            return _cmd_run(args, "canonical", "alg2")
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "audit":
            return _cmd_audit(args)
        if args.command == "closure":
            return _cmd_closure(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, FileNotFoundError, json.JSONDecodeError, ValueError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as err:  # run failures
        print(f"run failure: {err}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    raise SystemExit(main())
