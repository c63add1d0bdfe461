"""Multi-view dataset IO and synthetic test-bed generators.

A dataset is a directory of ``view_1.csv .. view_V.csv`` (rows are samples)
plus an optional ``labels.csv`` with one integer per line. In memory each
view is kept as a d x N matrix with samples in columns. The two generators
cover the cases the clustering model is meant to tell apart: unions of
low-dimensional linear subspaces, and concentric rings that no linear
self-representation separates well.
"""

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "DatasetError",
    "MultiViewDataset",
    "load_dataset",
    "save_dataset",
    "load_labels_csv",
    "load_label_columns",
    "synth_multiview",
]

_VIEW_NAME = re.compile(r"^view_(\d+)\.csv$")


class DatasetError(Exception):
    """Raised for malformed or inconsistent dataset files."""


@dataclass
class MultiViewDataset:
    """Feature matrices per view (d_v x N, samples in columns), optional
    integer labels, and view names."""

    views: list
    labels: np.ndarray | None = None
    names: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.views) == 0:
            raise DatasetError("dataset has no views")
        self.views = [np.asarray(v, dtype=float) for v in self.views]
        n = self.views[0].shape[1]
        for i, v in enumerate(self.views):
            if v.ndim != 2:
                raise DatasetError(f"view {i} is not a matrix")
            if v.shape[1] != n:
                raise DatasetError(
                    f"views disagree on sample count: view 0 has {n}, "
                    f"view {i} has {v.shape[1]}"
                )
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (n,):
                raise DatasetError(
                    f"labels length {self.labels.shape[0]} does not match "
                    f"{n} samples"
                )
        if not self.names:
            self.names = [f"view_{i + 1}" for i in range(len(self.views))]

    @property
    def n_samples(self):
        return self.views[0].shape[1]

    @property
    def n_views(self):
        return len(self.views)


def _read_numeric_csv(path):
    try:
        first = path.open(encoding="utf-8").readline()
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    skip = 0
    cells = first.strip().split(",")
    if cells and cells != [""]:
        try:
            [float(c) for c in cells]
        except ValueError:
            skip = 1
    try:
        return np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    except ValueError as exc:
        raise DatasetError(f"non-numeric cell in {path}: {exc}") from exc


def load_label_columns(path):
    """Integer label matrix, one sample per row, one labeling per column."""
    path = Path(path)
    raw = _read_numeric_csv(path)
    rounded = np.rint(raw)
    if np.max(np.abs(raw - rounded)) > 0:
        raise DatasetError(f"labels in {path} are not integers")
    return rounded.astype(np.int64)


def load_labels_csv(path):
    """One integer per line; floats with zero fractional part are accepted."""
    return load_label_columns(path).ravel()


def load_dataset(path):
    """Read ``view_<k>.csv`` files (sorted by k) and optional ``labels.csv``.

    Each view file holds one sample per row; a single non-numeric first row
    is treated as a header. Views are transposed to the in-memory d x N
    convention.
    """
    root = Path(path)
    if not root.is_dir():
        raise DatasetError(f"dataset directory does not exist: {root}")
    entries = []
    for child in root.iterdir():
        m = _VIEW_NAME.match(child.name)
        if m:
            entries.append((int(m.group(1)), child))
    if not entries:
        raise DatasetError(f"no view_<k>.csv files in {root}")
    entries.sort()
    views, names = [], []
    for _, child in entries:
        rows = _read_numeric_csv(child)
        views.append(rows.T)
        names.append(child.stem)
    n = views[0].shape[1]
    for name, v in zip(names, views):
        if v.shape[1] != n:
            raise DatasetError(
                f"inconsistent sample count: {names[0]} has {n} rows, "
                f"{name} has {v.shape[1]}"
            )
    labels = None
    labels_path = root / "labels.csv"
    if labels_path.exists():
        labels = load_labels_csv(labels_path)
        if labels.shape[0] != n:
            raise DatasetError(
                f"labels.csv has {labels.shape[0]} entries for {n} samples"
            )
    return MultiViewDataset(views=views, labels=labels, names=names)


def _write_matrix_csv(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(",".join("%.17g" % x for x in row) + "\n")


def save_dataset(dataset, path):
    """Write views (samples as rows), labels, and a small manifest."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    for i, v in enumerate(dataset.views):
        _write_matrix_csv(root / f"view_{i + 1}.csv", v.T)
    if dataset.labels is not None:
        with open(root / "labels.csv", "w", encoding="utf-8", newline="\n") as fh:
            for lab in dataset.labels:
                fh.write(f"{int(lab)}\n")
    manifest = {
        "n_samples": dataset.n_samples,
        "has_labels": dataset.labels is not None,
        "views": [
            {"name": name, "dim": int(v.shape[0])}
            for name, v in zip(dataset.names, dataset.views)
        ],
    }
    with open(root / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return root


def _linear_subspace_view(
    rng, dim, clusters, per_cluster, noise_sigma, subspace_dim, scale
):
    cols = []
    for _ in range(clusters):
        basis = np.linalg.qr(rng.standard_normal((dim, subspace_dim)))[0]
        cols.append(basis @ rng.standard_normal((subspace_dim, per_cluster)))
    x = np.concatenate(cols, axis=1)
    if noise_sigma > 0:
        x = x + noise_sigma * rng.standard_normal(x.shape)
    return scale * x / np.maximum(np.linalg.norm(x, axis=0), 1e-12)


def _ring_view(rng, dim, clusters, per_cluster, noise_sigma):
    pts = []
    for c in range(clusters):
        radius = 1.0 + c
        jitter = rng.uniform(-0.25, 0.25, size=per_cluster)
        theta = (
            2.0 * np.pi * (np.arange(per_cluster) + jitter) / per_cluster
            + rng.uniform(0.0, 2.0 * np.pi)
        )
        pts.append(radius * np.stack([np.cos(theta), np.sin(theta)]))
    x = np.zeros((dim, clusters * per_cluster))
    x[:2] = np.concatenate(pts, axis=1)
    rot = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
    x = rot @ x
    if noise_sigma > 0:
        x = x + noise_sigma * rng.standard_normal(x.shape)
    return x


def synth_multiview(
    kind,
    clusters,
    per_cluster,
    dims,
    noise_sigma=0.01,
    seed=0,
    subspace_dim=2,
    scale=50.0,
):
    """Generate a labeled multi-view dataset of one of two geometries.

    Parameters
    ----------
    kind : {"linear_subspaces", "nonlinear_rings"}
        ``linear_subspaces`` draws each cluster from a random
        ``subspace_dim``-dimensional subspace per view and sets every column
        norm to ``scale``; ``nonlinear_rings`` places clusters on concentric
        circles (radius 1, 2, ...) randomly rotated into ``dim`` dimensions,
        keeping the raw scale so the radii stay meaningful.
    clusters, per_cluster : int
        Cluster count and samples per cluster.
    dims : sequence of int
        One ambient dimension per view.
    noise_sigma : float
        Additive Gaussian noise level.
    seed : int
        Everything is drawn from ``default_rng(seed)``.
    subspace_dim : int
        Subspace dimension for the linear geometry.
    scale : float
        Column magnitude for the linear geometry; chosen large by default so
        inner-product kernels weigh representation error well above the
        low-rank term at moderate trade-off settings.
    """
    if clusters < 1 or per_cluster < 1:
        raise ValueError("clusters and per_cluster must be positive")
    dims = [int(d) for d in dims]
    if not dims:
        raise ValueError("need at least one view dimension")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be nonnegative, got {noise_sigma}")
    rng = np.random.default_rng(seed)
    views = []
    if kind == "linear_subspaces":
        if subspace_dim < 1:
            raise ValueError("subspace_dim must be positive")
        if not scale > 0:
            raise ValueError(f"scale must be positive, got {scale}")
        for d in dims:
            if d < subspace_dim:
                raise ValueError(
                    f"view dimension {d} is below subspace_dim {subspace_dim}"
                )
            views.append(
                _linear_subspace_view(
                    rng, d, clusters, per_cluster, noise_sigma, subspace_dim,
                    scale,
                )
            )
    elif kind == "nonlinear_rings":
        for d in dims:
            if d < 2:
                raise ValueError(f"view dimension {d} is too small for rings")
            views.append(_ring_view(rng, d, clusters, per_cluster, noise_sigma))
    else:
        raise ValueError(
            f"unknown kind {kind!r}, expected 'linear_subspaces' or "
            "'nonlinear_rings'"
        )
    labels = np.repeat(np.arange(clusters, dtype=np.int64), per_cluster)
    return MultiViewDataset(views=views, labels=labels)
