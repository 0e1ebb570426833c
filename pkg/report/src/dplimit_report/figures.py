"""Figure builders over the documented experiment CSV schemas.

Four figure kinds:

* ``success_vs_n``   sweep.csv   success probability vs n, one line per epsilon
* ``frontier``       sweep.csv   smallest n reaching 2/3 success vs k/epsilon
* ``mistake_decay``  steps.csv   aggregate mistakes per epoch across seeds
* ``audit_hist``     audit.csv   measured log-ratio histogram with budget lines

Everything is deterministic given the input bytes: fixed styles, no
timestamps, stable ordering.
"""

from __future__ import annotations

import csv
import hashlib
import io
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


class SchemaError(ValueError):
    """An input CSV does not match its documented schema."""


SCHEMAS = {
    "sweep": ["family", "k", "epsilon", "n", "target", "trials", "successes",
              "success_rate"],
    "steps": ["run_id", "t", "epoch", "output", "correct", "mistake",
              "epsilon_cum", "seed"],
    "audit": ["kind", "release", "budget", "measured", "certified", "passed"],
}

FIGURE_INPUTS = {
    "success_vs_n": "sweep",
    "frontier": "sweep",
    "mistake_decay": "steps",
    "audit_hist": "audit",
}

SAVE_METADATA = {"Software": "dplimit-report"}
FIGSIZE = (6.0, 4.0)
DPI = 120


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[dict]
    sha256: str

    def floats(self, column: str) -> np.ndarray:
        return np.array([float(r[column]) for r in self.rows])


def read_table(path: str, schema: str) -> Table:
    """Load and schema-check one CSV; missing columns are named."""
    with open(path, "rb") as fh:
        raw = fh.read()
    digest = hashlib.sha256(raw).hexdigest()
    reader = csv.DictReader(io.StringIO(raw.decode("utf-8")))
    columns = reader.fieldnames or []
    for required in SCHEMAS[schema]:
        if required not in columns:
            raise SchemaError(
                f"{os.path.basename(path)}: missing column {required!r} "
                f"(expected schema {schema!r})")
    rows = list(reader)
    if not rows:
        raise SchemaError(f"{os.path.basename(path)}: no data rows")
    return Table(name=os.path.basename(path), columns=list(columns),
                 rows=rows, sha256=digest)


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _worst_target_matrix(table: Table) -> dict[tuple[str, float, int], float]:
    """(k-group, epsilon, n) -> success rate minimized over targets."""
    worst: dict[tuple[str, float, int], float] = {}
    for row in table.rows:
        key = (f"{row['family']}:{row['k']}", float(row["epsilon"]),
               int(row["n"]))
        rate = float(row["success_rate"])
        worst[key] = min(worst.get(key, 1.0), rate)
    return worst


def fig_success_vs_n(table: Table):
    worst = _worst_target_matrix(table)
    groups = sorted({g for g, _, _ in worst})
    fig, ax = _new_axes("Generation success vs sample size",
                        "n (log scale)", "worst-target success probability")
    for group in groups:
        epsilons = sorted({e for g, e, _ in worst if g == group})
        for eps in epsilons:
            ns = sorted(n for g, e, n in worst if g == group and e == eps)
            ys = [worst[(group, eps, n)] for n in ns]
            ax.plot(ns, ys, marker="o",
                    label=f"{group} eps={eps:g}")
    ax.set_xscale("log", base=2)
    ax.set_ylim(-0.02, 1.02)
    ax.axhline(2 / 3, linestyle=":", color="gray", label="2/3 target")
    ax.legend(fontsize=7)
    return fig


def fig_frontier(table: Table, level: float = 2.0 / 3.0):
    worst = _worst_target_matrix(table)
    points = []
    for group in sorted({g for g, _, _ in worst}):
        k = int(group.split(":")[1])
        for eps in sorted({e for g, e, _ in worst if g == group}):
            ns = sorted(n for g, e, n in worst if g == group and e == eps)
            hit = next((n for n in ns if worst[(group, eps, n)] >= level), None)
            if hit is not None:
                points.append((k / eps, hit, group, eps))
    if not points:
        raise SchemaError("no (k, epsilon) cell reaches the success level")
    fig, ax = _new_axes("Sample-complexity frontier",
                        "k / epsilon", "smallest n with success >= 2/3")
    points.sort()
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    ax.plot(xs, ys, marker="s", color="tab:blue")
    for x, y, group, eps in points:
        ax.annotate(f"{group},{eps:g}", (x, y), fontsize=6,
                    xytext=(3, 3), textcoords="offset points")
    return fig


def fig_mistake_decay(table: Table):
    per_epoch: dict[int, int] = {}
    seeds = set()
    for row in table.rows:
        seeds.add(row["seed"])
        if row["mistake"] == "1":
            epoch = int(row["epoch"])
            per_epoch[epoch] = per_epoch.get(epoch, 0) + 1
    if not seeds:
        raise SchemaError("steps.csv contains no seeds")
    epochs = sorted(set(int(r["epoch"]) for r in table.rows))
    ys = [per_epoch.get(e, 0) / len(seeds) for e in epochs]
    fig, ax = _new_axes("Mistake decay across epochs",
                        "epoch", "mistakes per seed")
    ax.plot(epochs, ys, marker="o", color="tab:red")
    return fig


def fig_audit_hist(table: Table):
    measured = table.floats("measured")
    finite = measured[np.isfinite(measured)]
    if finite.size == 0:
        raise SchemaError("audit.csv has no finite measured log-ratios")
    budgets = sorted(set(round(float(r["budget"]), 12) for r in table.rows))
    fig, ax = _new_axes("Audit log-ratios", "max |log probability ratio|",
                        "checks")
    hi = max(float(finite.max()), max(budgets)) * 1.05 + 1e-9
    ax.hist(finite, bins=np.linspace(0.0, hi, 33), color="tab:green",
            alpha=0.8)
    for budget in budgets:
        ax.axvline(budget, linestyle="--", color="black", linewidth=1)
    return fig


FIGURE_BUILDERS = {
    "success_vs_n": fig_success_vs_n,
    "frontier": fig_frontier,
    "mistake_decay": fig_mistake_decay,
    "audit_hist": fig_audit_hist,
}


@dataclass(frozen=True)
class ReportSpec:
    """Which figures to build from which CSVs, and where to put them."""

    inputs: dict          # schema name -> csv path
    out_dir: str
    figures: tuple[str, ...] = tuple(sorted(FIGURE_BUILDERS))
    image_format: str = "png"

    def __post_init__(self):
        for kind in self.figures:
            if kind not in FIGURE_BUILDERS:
                raise SchemaError(f"unknown figure kind {kind!r}")


def make_figures(spec: ReportSpec) -> list[str]:
    """Validate inputs, render the requested figures and a markdown index.

    All inputs are read and checked before anything is written, so a schema
    violation leaves no partial output.  Returns the written paths.
    """
    wanted = [k for k in spec.figures if FIGURE_INPUTS[k] in spec.inputs]
    if not wanted:
        raise SchemaError("no requested figure has a matching input CSV")
    tables: dict[str, Table] = {}
    for kind in wanted:
        schema = FIGURE_INPUTS[kind]
        if schema not in tables:
            tables[schema] = read_table(spec.inputs[schema], schema)
    rendered = [(kind, FIGURE_BUILDERS[kind](tables[FIGURE_INPUTS[kind]]))
                for kind in wanted]

    os.makedirs(spec.out_dir, exist_ok=True)
    written: list[str] = []
    for kind, fig in rendered:
        path = os.path.join(spec.out_dir, f"{kind}.{spec.image_format}")
        fig.savefig(path, format=spec.image_format, metadata=SAVE_METADATA)
        plt.close(fig)
        written.append(path)

    index = os.path.join(spec.out_dir, "index.md")
    with open(index, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# Experiment report\n\n## Inputs\n\n")
        for schema in sorted(tables):
            table = tables[schema]
            fh.write(f"- `{table.name}` ({schema} schema, {len(table.rows)} rows) "
                     f"sha256=`{table.sha256}`\n")
        fh.write("\n## Figures\n\n")
        for kind, _ in rendered:
            fh.write(f"- ![{kind}]({kind}.{spec.image_format})\n")
    written.append(index)
    return written
