"""Command-line front end.

Subcommands: ``cluster`` (full pipeline on a dataset directory), ``synth``
(generate a synthetic dataset), ``eval`` (score predicted labels against
truth), ``sweep`` (trade-off grid), and ``solve`` (representations only).
Every command exits 0 on success and nonzero with a single diagnostic line
on stderr otherwise.
"""

import argparse
import json
import sys
from pathlib import Path

from ktclust.data import (
    DatasetError,
    load_dataset,
    load_label_columns,
    load_labels_csv,
    save_dataset,
    synth_multiview,
)
from ktclust.kernels import factor_kernel, gram_matrix
from ktclust.metrics import evaluate_runs
from ktclust.pipeline import (
    _resolve_kernels,
    _write_float_matrix,
    config_from_dict,
    run_pipeline,
    sweep_lambda,
)
from ktclust.solver import solve

__all__ = ["main"]


def _load_config(path, out_dir, default_lam=None):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValueError(f"config {path} must be a JSON object")
    try:
        return config_from_dict(raw, out_dir=out_dir, default_lam=default_lam)
    except TypeError as exc:
        raise ValueError(f"config {path} has an unknown key: {exc}") from exc


def _cmd_cluster(args):
    dataset = load_dataset(args.dataset_dir)
    config = _load_config(args.config, args.out)
    means, paths = run_pipeline(dataset, config)
    if means is not None:
        for key, value in sorted(means.as_dict().items()):
            print(f"{key}: {value:.6f}")
    else:
        print("no ground-truth labels; metrics skipped")
    print(f"artifacts written to {Path(args.out).resolve()}")
    return 0


def _cmd_synth(args):
    dims = [int(d) for d in args.views.split(",") if d]
    dataset = synth_multiview(
        kind=args.kind,
        clusters=args.clusters,
        per_cluster=args.per_cluster,
        dims=dims,
        noise_sigma=args.noise,
        seed=args.seed,
    )
    save_dataset(dataset, args.out)
    print(
        f"wrote {dataset.n_views} views x {dataset.n_samples} samples to "
        f"{Path(args.out).resolve()}"
    )
    return 0


def _cmd_eval(args):
    truth = load_labels_csv(args.truth)
    pred = load_label_columns(args.pred)
    runs = [pred[:, j] for j in range(pred.shape[1])]
    means, stds = evaluate_runs(runs, truth)
    payload = dict(sorted(means.as_dict().items()))
    if len(runs) > 1:
        payload.update(
            {f"{k}_std": v for k, v in sorted(stds.as_dict().items())}
        )
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_sweep(args):
    grid = [float(v) for v in args.lambda_grid.split(",") if v]
    dataset = load_dataset(args.dataset_dir)
    config = _load_config(
        args.config, args.out, default_lam=grid[0] if grid else None
    )
    table = sweep_lambda(dataset, config, grid)
    print("lambda,nmi,acc,best")
    for lam, nmi, acc, best in table:
        print(f"{lam:g},{nmi:.6f},{acc:.6f},{best}")
    return 0


def _cmd_solve(args):
    dataset = load_dataset(args.dataset_dir)
    config = _load_config(args.config, args.out)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    resolved = _resolve_kernels(dataset, config)
    factors = [
        factor_kernel(gram_matrix(x, spec), config.solver.rank_tol)
        for x, spec in zip(dataset.views, resolved)
    ]
    z, trace, converged = solve(factors, config.solver)
    for i, zi in enumerate(z):
        _write_float_matrix(out / f"z_view_{i + 1}.csv", zi)
    trace.write_csv(out / "trace.csv")
    print(
        f"solver {'converged' if converged else 'stopped'} after "
        f"{len(trace)} iterations; representations in {out.resolve()}"
    )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ktclust",
        description=(
            "Kernelized multi-view self-representation clustering with "
            "tensor low-rank regularization"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="full pipeline on a dataset directory")
    p.add_argument("dataset_dir")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.add_argument("--out", required=True, help="artifact output directory")
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument(
        "--kind",
        required=True,
        choices=["linear_subspaces", "nonlinear_rings"],
    )
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--per-cluster", type=int, required=True)
    p.add_argument(
        "--views",
        required=True,
        help="comma-separated feature dimension per view, e.g. 6,8",
    )
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("eval", help="score predicted labels against truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--pred", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="grid over the trade-off parameter")
    p.add_argument("dataset_dir")
    p.add_argument("--config", required=True)
    p.add_argument(
        "--lambda",
        dest="lambda_grid",
        required=True,
        help="comma-separated positive values, e.g. 0.01,0.1,1",
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("solve", help="representations only, no clustering")
    p.add_argument("dataset_dir")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_solve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, ValueError, FloatingPointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
