"""End-to-end orchestration: kernels, solver, spectral clustering, metrics,
and artifact emission.

One call to :func:`run_pipeline` factors each view's Gram matrix, solves for
the representations, builds the affinity, clusters it ``runs`` times with
derived seeds, and writes every artifact needed to reproduce the run:
``labels.csv`` (one column per run), ``affinity.csv``, ``trace.csv``,
``metrics.json``, and ``resolved_config.json``. All outputs are
byte-deterministic for fixed inputs.
"""

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ktclust.kernels import KernelSpec, factor_kernel, gram_matrix, median_bandwidth
from ktclust.metrics import evaluate_runs
from ktclust.solver import SolverConfig, solve
from ktclust.spectral import build_affinity, spectral_cluster

__all__ = [
    "PipelineConfig",
    "config_from_dict",
    "run_pipeline",
    "sweep_lambda",
]

DEFAULT_RESTARTS = 30


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one clustering run depends on besides the data itself.

    ``kernels`` is either a single :class:`KernelSpec` applied to every view
    or a list with one spec per view.
    """

    solver: SolverConfig
    n_clusters: int
    kernels: object = KernelSpec("linear")
    runs: int = 10
    seed: int = 0
    out_dir: str | None = None

    def __post_init__(self):
        if self.n_clusters < 1:
            raise ValueError(f"n_clusters must be positive, got {self.n_clusters}")
        if self.runs < 1:
            raise ValueError(f"runs must be positive, got {self.runs}")

    def kernels_for(self, n_views):
        if isinstance(self.kernels, KernelSpec):
            return [self.kernels] * n_views
        specs = list(self.kernels)
        if len(specs) != n_views:
            raise ValueError(
                f"{len(specs)} kernel specs for {n_views} views"
            )
        return specs


def config_from_dict(raw, out_dir=None, default_lam=None):
    """Build a :class:`PipelineConfig` from parsed JSON.

    Keys mirror the dataclass fields; ``solver`` and each kernel spec are
    nested objects keyed by their own field names. ``default_lam`` fills a
    missing ``solver.lam`` (used by the sweep command, which overrides it
    per grid point anyway).
    """
    raw = dict(raw)
    solver_raw = dict(raw.pop("solver", {}))
    if "lam" not in solver_raw:
        if default_lam is None:
            raise ValueError("config is missing solver.lam")
        solver_raw["lam"] = default_lam
    solver = SolverConfig(**solver_raw)
    kernels_raw = raw.pop("kernels", {"kind": "linear"})
    if isinstance(kernels_raw, dict):
        kernels = KernelSpec(**kernels_raw)
    else:
        kernels = [KernelSpec(**k) for k in kernels_raw]
    if "n_clusters" not in raw:
        raise ValueError("config is missing n_clusters")
    if out_dir is not None:
        raw["out_dir"] = str(out_dir)
    return PipelineConfig(solver=solver, kernels=kernels, **raw)


def _resolve_kernels(dataset, config):
    """Pin concrete per-view kernel parameters (median bandwidths included)."""
    specs = config.kernels_for(dataset.n_views)
    resolved = []
    for x, spec in zip(dataset.views, specs):
        if spec.kind == "gaussian" and spec.bandwidth is None:
            spec = KernelSpec("gaussian", bandwidth=median_bandwidth(x))
        resolved.append(spec)
    return resolved


def _json_dump(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_float_matrix(path, mat):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in mat:
            fh.write(",".join("%.17g" % x for x in row) + "\n")


def _write_label_matrix(path, labels_by_run):
    stacked = np.column_stack(labels_by_run)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in stacked:
            fh.write(",".join(str(int(x)) for x in row) + "\n")


def _compute(dataset, config):
    """Kernels through clustering, no file IO."""
    resolved = _resolve_kernels(dataset, config)
    factors = [
        factor_kernel(gram_matrix(x, spec), config.solver.rank_tol)
        for x, spec in zip(dataset.views, resolved)
    ]
    z, trace, converged = solve(factors, config.solver)
    affinity = build_affinity(z)
    labels_by_run = [
        spectral_cluster(
            affinity, config.n_clusters, seed=config.seed + r,
            restarts=DEFAULT_RESTARTS,
        )
        for r in range(config.runs)
    ]
    return resolved, z, trace, converged, affinity, labels_by_run


def _spec_as_dict(spec):
    return {"kind": spec.kind, "bandwidth": spec.bandwidth}


def _resolved_config_dict(config, resolved_specs):
    solver = config.solver
    return {
        "kernels": [_spec_as_dict(s) for s in resolved_specs],
        "solver": {
            "lam": solver.lam,
            "mu0": solver.mu0,
            "rho0": solver.rho0,
            "eta": solver.eta,
            "mu_max": solver.mu_max,
            "rho_max": solver.rho_max,
            "epsilon": solver.epsilon,
            "max_iter": solver.max_iter,
            "bisect_tol": solver.bisect_tol,
            "rank_tol": solver.rank_tol,
            "seed": solver.seed,
        },
        "n_clusters": config.n_clusters,
        "runs": config.runs,
        "seed": config.seed,
        "out_dir": config.out_dir,
        "restarts": DEFAULT_RESTARTS,
    }


def run_pipeline(dataset, config):
    """Full run plus artifacts; returns (mean metrics or None, artifact paths).

    With ground-truth labels on the dataset, ``metrics.json`` carries the six
    scores averaged over runs plus their standard deviations; without them it
    records only where the predicted labels live. A non-converged solve is
    reported in the JSON, not raised.
    """
    if config.out_dir is None:
        raise ValueError("config.out_dir is required to write artifacts")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    resolved, z, trace, converged, affinity, labels_by_run = _compute(
        dataset, config
    )

    paths = {
        "labels": out / "labels.csv",
        "affinity": out / "affinity.csv",
        "trace": out / "trace.csv",
        "metrics": out / "metrics.json",
        "resolved_config": out / "resolved_config.json",
    }
    _write_label_matrix(paths["labels"], labels_by_run)
    _write_float_matrix(paths["affinity"], affinity)
    trace.write_csv(paths["trace"])
    for i, zi in enumerate(z):
        p = out / f"z_view_{i + 1}.csv"
        _write_float_matrix(p, zi)
        paths[f"z_view_{i + 1}"] = p

    payload = {
        "converged": bool(converged),
        "iterations": len(trace),
        "runs": config.runs,
        "labels_file": "labels.csv",
    }
    means = None
    if dataset.labels is not None:
        means, stds = evaluate_runs(labels_by_run, dataset.labels)
        payload.update(means.as_dict())
        payload.update({f"{k}_std": v for k, v in stds.as_dict().items()})
    _json_dump(payload, paths["metrics"])
    _json_dump(_resolved_config_dict(config, resolved), paths["resolved_config"])
    return means, paths


def sweep_lambda(dataset, config, lambda_grid):
    """Re-run the pipeline per trade-off value; tabulate mean NMI and ACC.

    Returns rows ``(lam, nmi, acc, best)`` with ``best`` marking the first
    row attaining the maximal NMI, and writes ``sweep.csv`` under the
    config's output directory when one is set.
    """
    grid = [float(v) for v in lambda_grid]
    if not grid:
        raise ValueError("lambda grid is empty")
    if any(v <= 0 for v in grid):
        raise ValueError("lambda values must be positive")
    if dataset.labels is None:
        raise ValueError("sweep needs ground-truth labels to score runs")
    rows = []
    for lam in grid:
        cfg = replace(config, solver=replace(config.solver, lam=lam))
        _, _, _, _, _, labels_by_run = _compute(dataset, cfg)
        means, _ = evaluate_runs(labels_by_run, dataset.labels)
        rows.append((lam, means.nmi, means.acc))
    best_idx = int(np.argmax([r[1] for r in rows]))
    table = [
        (lam, nmi, acc, 1 if i == best_idx else 0)
        for i, (lam, nmi, acc) in enumerate(rows)
    ]
    if config.out_dir is not None:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "sweep.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("lambda,nmi,acc,best\n")
            for lam, nmi, acc, best in table:
                fh.write("%.17g,%.17g,%.17g,%d\n" % (lam, nmi, acc, best))
    return table
