"""Alternating-direction solver for kernelized multi-view self-representation
with a low-rank coupling tensor.

Each view v seeks coefficients ``Z_v`` with ``I = Z_v + P_v`` where ``P_v``
carries the feature-space residual cost ``h(P_v) = sum_i sqrt(p_i.T K_v p_i)``
and the stacked ``Z_v`` tensor is pushed toward low slice-wise spectral rank.
Every subproblem has a closed form: ``Z_v`` by a linear average, the columns
of ``P_v`` by a weighted-norm shrinkage whose scale comes from a scalar
bisection, and the coupling tensor by spectral singular value thresholding.
Multipliers follow standard dual ascent with geometrically growing penalties.
"""

from dataclasses import dataclass, field

import numpy as np

from ktclust.kernels import KernelFactor, h_value
from ktclust.tensorops import rotate, tnn, tnn_prox, unrotate

__all__ = [
    "SolverConfig",
    "SolverState",
    "SolveTrace",
    "solve_z",
    "bisect_alpha",
    "prox_weighted_l2_column",
    "solve_p",
    "solve_g",
    "update_multipliers",
    "residuals",
    "per_view_residuals",
    "objective",
    "solve",
]

_MAX_BISECT_STEPS = 200


@dataclass(frozen=True)
class SolverConfig:
    """Solver constants.

    ``lam`` weighs the per-view residual cost against the low-rank term and
    is the only field without a sensible universal default. The penalty
    schedule (``mu0``, ``rho0``, growth ``eta``, caps) and the stopping
    tolerance follow the usual inexact augmented Lagrangian recipe.
    """

    lam: float
    mu0: float = 1e-5
    rho0: float = 1e-5
    eta: float = 2.0
    mu_max: float = 1e13
    rho_max: float = 1e13
    epsilon: float = 1e-7
    max_iter: int = 200
    bisect_tol: float = 1e-10
    rank_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.eta > 1:
            raise ValueError(f"eta must exceed 1, got {self.eta}")
        if self.mu0 > self.mu_max or not self.mu0 > 0:
            raise ValueError(f"need 0 < mu0 <= mu_max, got {self.mu0}")
        if self.rho0 > self.rho_max or not self.rho0 > 0:
            raise ValueError(f"need 0 < rho0 <= rho_max, got {self.rho0}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be positive, got {self.max_iter}")


@dataclass
class SolverState:
    """All iterates of one solve: per-view matrices, coupling tensors,
    current penalties, and the 0-based iteration counter."""

    z: list
    p: list
    y: list
    g: np.ndarray
    w: np.ndarray
    mu: float
    rho: float
    iteration: int = 0

    @property
    def n_views(self):
        return len(self.z)

    @property
    def n(self):
        return self.z[0].shape[0]


@dataclass(frozen=True)
class SolveTrace:
    """Per-iteration diagnostics; all arrays share one length."""

    recon_error: np.ndarray
    match_error: np.ndarray
    objective: np.ndarray
    mu: np.ndarray
    rho: np.ndarray

    def __len__(self):
        return self.recon_error.shape[0]

    def write_csv(self, path):
        """Write the trace as CSV with full float precision."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("iteration,recon_error,match_error,objective,mu,rho\n")
            for i in range(len(self)):
                fh.write(
                    "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                    % (
                        i,
                        self.recon_error[i],
                        self.match_error[i],
                        self.objective[i],
                        self.mu[i],
                        self.rho[i],
                    )
                )


def solve_z(y, p, g_v, w_v, mu, rho):
    """Closed-form coefficient update for one view.

    Minimizes the quadratic coupling of ``Z`` to both the representation
    split (``I = Z + P`` with multiplier ``y``, weight ``mu``) and the
    low-rank target slice (``g_v`` with multiplier ``w_v``, weight ``rho``).
    """
    n = y.shape[0]
    return (mu * np.eye(n) + y + rho * g_v - mu * p - w_v) / (mu + rho)


def bisect_alpha(t_u, sigmas, tau, tol=1e-10):
    """Root of ``sum_i sigmas_i**2 t_u_i**2 / (alpha + sigmas_i**2)**2 = 1/tau**2``.

    The left side is strictly decreasing in ``alpha`` with limit 0, so a
    unique positive root exists whenever the value at 0 exceeds the target;
    that is exactly the shrinkage-branch condition and is enforced here.
    The bracket starts at [0, 1] and doubles its upper end until it
    straddles the root.
    """
    t_u = np.asarray(t_u, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    target = 1.0 / tau**2

    def f(alpha):
        return float(np.sum(sigmas**2 * t_u**2 / (alpha + sigmas**2) ** 2))

    if not f(0.0) > target:
        raise ValueError(
            "no positive root: branch condition not met "
            f"(value at 0 is {f(0.0):.6g}, target {target:.6g})"
        )
    lo, hi = 0.0, 1.0
    while f(hi) >= target:
        lo, hi = hi, 2.0 * hi
    for _ in range(_MAX_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        val = f(mid)
        if abs(val - target) <= tol * target:
            return mid
        if val > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def prox_weighted_l2_column(c, factor, tau, tol=1e-10):
    """Minimize ``sqrt(p.T K p) + (tau/2) * ||p - c||**2`` over one column.

    Splitting ``c`` along the kernel's eigenbasis, the component outside the
    kernel's range passes through untouched. The range component is either
    annihilated (when it is small enough that the nonsmooth term dominates)
    or shrunk mode-wise by ``sigmas**2 / (alpha + sigmas**2)`` with ``alpha``
    from :func:`bisect_alpha`.
    """
    c = np.asarray(c, dtype=float)
    if factor.rank == 0:
        return c.copy()
    t_u = factor.eigvecs.T @ c
    if np.linalg.norm(t_u / factor.sigmas) > 1.0 / tau:
        alpha = bisect_alpha(t_u, factor.sigmas, tau, tol)
        shrunk = (factor.sigmas**2 / (alpha + factor.sigmas**2)) * t_u
        return c - factor.eigvecs @ shrunk
    return c - factor.eigvecs @ t_u


def solve_p(z, y, factor, mu, lam, bisect_tol=1e-10):
    """Residual-coefficient update for one view.

    The target ``C = I - Z + Y/mu`` decouples over columns; each column gets
    the weighted-norm shrinkage at scale ``tau = mu/lam``.
    """
    n = z.shape[0]
    c = np.eye(n) - z + y / mu
    tau = mu / lam
    p = np.empty_like(c)
    for i in range(n):
        p[:, i] = prox_weighted_l2_column(c[:, i], factor, tau, bisect_tol)
    return p


def solve_g(z_tensor, w, rho):
    """Low-rank coupling update: spectral shrinkage of ``Z + W/rho``.

    The threshold ``n3/rho`` makes the result the exact minimizer of the
    slice-spectral nuclear norm plus ``(rho/2)`` times the squared distance.
    """
    return tnn_prox(z_tensor + w / rho, z_tensor.shape[2] / rho)


def update_multipliers(state, config):
    """Dual ascent on both constraint families plus penalty growth.

    Mutates ``state`` in place and returns it: ``Y_v`` absorbs the per-view
    split residual, ``W`` the tensor match residual, then both penalties
    grow by ``eta`` up to their caps.
    """
    eye = np.eye(state.n)
    for v in range(state.n_views):
        state.y[v] = state.y[v] + state.mu * (eye - state.z[v] - state.p[v])
    z_tensor = rotate(state.z)
    state.w = state.w + state.rho * (z_tensor - state.g)
    state.mu = min(config.eta * state.mu, config.mu_max)
    state.rho = min(config.eta * state.rho, config.rho_max)
    return state


def per_view_residuals(state):
    """Per-view max-abs residuals of both constraint families."""
    eye = np.eye(state.n)
    g_views = unrotate(state.g)
    recon = [
        float(np.max(np.abs(eye - state.z[v] - state.p[v])))
        for v in range(state.n_views)
    ]
    match = [
        float(np.max(np.abs(state.z[v] - g_views[v])))
        for v in range(state.n_views)
    ]
    return recon, match


def residuals(state):
    """View-averaged max-abs residuals: (split error, low-rank match error)."""
    recon, match = per_view_residuals(state)
    return float(np.mean(recon)), float(np.mean(match))


def objective(state, factors, lam):
    """Model objective: weighted per-view residual costs plus the
    slice-spectral nuclear norm of the stacked coefficients."""
    h_total = sum(h_value(state.p[v], factors[v]) for v in range(state.n_views))
    return lam * h_total + tnn(rotate(state.z))


def _check_finite(state):
    for v in range(state.n_views):
        if not (
            np.all(np.isfinite(state.z[v]))
            and np.all(np.isfinite(state.p[v]))
            and np.all(np.isfinite(state.y[v]))
        ):
            return False
    return bool(np.all(np.isfinite(state.g)) and np.all(np.isfinite(state.w)))


def solve(factors, config, callback=None):
    """Run the alternating loop to convergence or ``max_iter``.

    Parameters
    ----------
    factors : sequence of KernelFactor
        One factored Gram matrix per view; all must share the sample count.
    config : SolverConfig
    callback : callable, optional
        Called with the state at the end of every iteration (after the
        multiplier step, before the stopping test); useful for diagnostics.

    Returns
    -------
    (z, trace, converged)
        Final per-view coefficient matrices, the per-iteration trace, and
        whether both residual families fell below ``epsilon`` for every view.
    """
    n_views = len(factors)
    if n_views == 0:
        raise ValueError("need at least one view")
    n = factors[0].n
    if any(f.n != n for f in factors):
        raise ValueError("kernel factors disagree on sample count")

    state = SolverState(
        z=[np.zeros((n, n)) for _ in range(n_views)],
        p=[np.eye(n) for _ in range(n_views)],
        y=[np.zeros((n, n)) for _ in range(n_views)],
        g=np.zeros((n, n_views, n)),
        w=np.zeros((n, n_views, n)),
        mu=config.mu0,
        rho=config.rho0,
    )
    recon_tr, match_tr, obj_tr, mu_tr, rho_tr = [], [], [], [], []
    converged = False
    for it in range(config.max_iter):
        state.iteration = it
        mu_used, rho_used = state.mu, state.rho
        g_views = unrotate(state.g)
        w_views = unrotate(state.w)
        state.z = [
            solve_z(state.y[v], state.p[v], g_views[v], w_views[v], mu_used, rho_used)
            for v in range(n_views)
        ]
        state.p = [
            solve_p(
                state.z[v], state.y[v], factors[v], mu_used, config.lam,
                config.bisect_tol,
            )
            for v in range(n_views)
        ]
        state.g = solve_g(rotate(state.z), state.w, rho_used)
        update_multipliers(state, config)
        if not _check_finite(state):
            raise FloatingPointError(
                f"non-finite iterate at iteration {it}"
            )
        recon_mean, match_mean = residuals(state)
        recon_tr.append(recon_mean)
        match_tr.append(match_mean)
        obj_tr.append(objective(state, factors, config.lam))
        mu_tr.append(mu_used)
        rho_tr.append(rho_used)
        if callback is not None:
            callback(state)
        recon_pv, match_pv = per_view_residuals(state)
        if max(recon_pv) < config.epsilon and max(match_pv) < config.epsilon:
            converged = True
            break
    trace = SolveTrace(
        recon_error=np.asarray(recon_tr),
        match_error=np.asarray(match_tr),
        objective=np.asarray(obj_tr),
        mu=np.asarray(mu_tr),
        rho=np.asarray(rho_tr),
    )
    return [zi.copy() for zi in state.z], trace, converged
