"""Kernelized multi-view self-representation clustering with a low-rank
coefficient tensor.

The pieces compose left to right: per-view Gram matrices are factored
(:mod:`ktclust.kernels`), an alternating-direction solver finds coupled
self-representation coefficients (:mod:`ktclust.solver`) whose stacked
tensor is pushed toward low slice-wise spectral rank
(:mod:`ktclust.tensorops`), the coefficients become an affinity for
spectral clustering (:mod:`ktclust.spectral`), and the labelings are
scored (:mod:`ktclust.metrics`). :mod:`ktclust.pipeline` wires the whole
chain together and :mod:`ktclust.cli` exposes it as a command line.
"""

from ktclust.data import (
    DatasetError,
    MultiViewDataset,
    load_dataset,
    save_dataset,
    synth_multiview,
)
from ktclust.kernels import (
    KernelFactor,
    KernelSpec,
    factor_kernel,
    gram_matrix,
    h_value,
    median_bandwidth,
)
from ktclust.metrics import (
    MetricsReport,
    acc,
    adjusted_rand,
    evaluate_runs,
    nmi,
    pairwise_prf,
    report,
)
from ktclust.pipeline import (
    PipelineConfig,
    config_from_dict,
    run_pipeline,
    sweep_lambda,
)
from ktclust.solver import SolverConfig, SolveTrace, objective, solve
from ktclust.spectral import build_affinity, spectral_cluster
from ktclust.tensorops import rotate, tnn, tnn_prox, tsvd, unrotate

__version__ = "0.1.0"

__all__ = [
    "DatasetError",
    "KernelFactor",
    "KernelSpec",
    "MetricsReport",
    "MultiViewDataset",
    "PipelineConfig",
    "SolveTrace",
    "SolverConfig",
    "acc",
    "adjusted_rand",
    "build_affinity",
    "config_from_dict",
    "evaluate_runs",
    "factor_kernel",
    "gram_matrix",
    "h_value",
    "load_dataset",
    "median_bandwidth",
    "nmi",
    "objective",
    "pairwise_prf",
    "report",
    "rotate",
    "run_pipeline",
    "save_dataset",
    "solve",
    "spectral_cluster",
    "sweep_lambda",
    "synth_multiview",
    "tnn",
    "tnn_prox",
    "tsvd",
    "unrotate",
]
