"""Empirical validation of certificates.

Grid search sweeps the certified perturbation box and reports the worst
spectral radius found; exact second-moment propagation and a seeded Monte
Carlo simulation cross-check the mean-square stability verdicts. The exact
covariance recursion is the primary verification path; trajectory sampling
exists for demonstration and statistical sanity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.linalg as la

from .errors import DimensionError, GridSizeError
from .matops import is_psd, symmetrize
from .model import DirList, PerturbationBox

__all__ = [
    "GridReport",
    "MonteCarloConfig",
    "MomentHistory",
    "grid_verify",
    "simulate_second_moment",
    "MAX_GRID_POINTS",
]

MAX_GRID_POINTS = 10_000_000

#: Shrink factor keeping grid points strictly inside the open box.
_INTERIOR = 1.0 - 1e-9


@dataclass
class GridReport:
    """Worst case found on a tensor grid over a perturbation box."""

    samples: int
    worst_rho: float
    worst_mu: np.ndarray
    all_stable: bool


@dataclass
class MonteCarloConfig:
    """Trajectory-sampling configuration.

    The noise law only needs to be zero-mean with the modeled variances;
    mean-square stability does not depend on the distribution beyond that,
    so the law is configurable. ``seed`` feeds a PCG64 generator through
    per-trial spawned streams, making reports reproducible across platforms
    and independent of trial execution order.
    """

    horizon: int
    trials: int
    seed: int
    noise_law: str = "gaussian"

    def __post_init__(self):
        if self.horizon < 1 or self.trials < 1:
            raise ValueError("horizon and trials must be >= 1")
        if self.noise_law not in ("gaussian", "rademacher"):
            raise ValueError(
                f"unknown noise law {self.noise_law!r}; "
                "expected 'gaussian' or 'rademacher'"
            )


@dataclass
class MomentHistory:
    """Second-moment trajectories: Monte Carlo estimate and the exact
    covariance recursion, both of shape (horizon + 1, n, n)."""

    empirical: np.ndarray
    exact: np.ndarray


def _grid_axes(box: PerturbationBox, samples_per_dir: int) -> list[np.ndarray]:
    axes = []
    for b in box.bounds:
        if b == 0.0:
            axes.append(np.zeros(1))
        elif box.bidirectional:
            axes.append(np.linspace(-b, b, samples_per_dir) * _INTERIOR)
        else:
            axes.append(np.linspace(0.0, b, samples_per_dir) * _INTERIOR)
    return axes


def grid_verify(
    A_cl, dirs: DirList, box: PerturbationBox, samples_per_dir: int
) -> GridReport:
    """Sweep a tensor grid over the box and report the worst spectral
    radius of the perturbed closed loop.

    Zero-margin directions contribute the single point 0. Grids beyond
    ``MAX_GRID_POINTS`` are rejected; use fewer samples per direction.
    """
    A_cl = np.asarray(A_cl, dtype=float)
    if samples_per_dir < 2:
        raise ValueError("samples_per_dir must be >= 2")
    if box.bounds.size != len(dirs):
        raise DimensionError(
            f"box has {box.bounds.size} entries for {len(dirs)} directions"
        )
    axes = _grid_axes(box, samples_per_dir)
    total = 1
    for ax in axes:
        total *= ax.size
    if total > MAX_GRID_POINTS:
        raise GridSizeError(
            f"grid of {total} points exceeds {MAX_GRID_POINTS}; "
            "reduce samples_per_dir"
        )
    if len(dirs) == 0:
        rho = float(np.max(np.abs(la.eigvals(A_cl))))
        return GridReport(samples=1, worst_rho=rho, worst_mu=np.zeros(0),
                          all_stable=rho < 1.0)
    mesh = np.meshgrid(*axes, indexing="ij")
    combos = np.stack([m.reshape(-1) for m in mesh], axis=1)
    D = np.stack([np.asarray(M, dtype=float) for M, _ in dirs])
    worst = -np.inf
    worst_mu = combos[0]
    chunk = 65536
    for start in range(0, combos.shape[0], chunk):
        part = combos[start:start + chunk]
        mats = A_cl[None, :, :] + np.tensordot(part, D, axes=(1, 0))
        rho = np.abs(la.eigvals(mats)).max(axis=1)
        idx = int(np.argmax(rho))
        if rho[idx] > worst:
            worst = float(rho[idx])
            worst_mu = part[idx].copy()
    return GridReport(
        samples=int(combos.shape[0]),
        worst_rho=worst,
        worst_mu=worst_mu,
        all_stable=worst < 1.0,
    )


def _psd_sqrt(S: np.ndarray) -> np.ndarray:
    w, V = la.eigh(symmetrize(S))
    return V * np.sqrt(np.clip(w, 0.0, None))


def exact_moment_recursion(
    A_cl, dirs: DirList, sigma0, steps: int
) -> np.ndarray:
    """Propagate the state covariance exactly:
    Sigma_{t+1} = A_cl Sigma_t A_cl^T + sum_k alpha_k D_k Sigma_t D_k^T."""
    A_cl = np.asarray(A_cl, dtype=float)
    n = A_cl.shape[0]
    out = np.zeros((steps + 1, n, n))
    out[0] = symmetrize(sigma0)
    for t in range(steps):
        S = A_cl @ out[t] @ A_cl.T
        for D, a in dirs:
            if a != 0.0:
                D = np.asarray(D, dtype=float)
                S += a * (D @ out[t] @ D.T)
        out[t + 1] = symmetrize(S)
    return out


def simulate_second_moment(
    A_cl, dirs: DirList, cfg: MonteCarloConfig, x0_cov
) -> MomentHistory:
    """Monte Carlo estimate of E[x_t x_t^T] alongside the exact recursion.

    Initial states are Gaussian with covariance ``x0_cov`` regardless of
    the noise law. Each trial draws from its own spawned stream (initial
    state first, then the horizon-by-direction noise block), so results do
    not depend on how trials are scheduled.
    """
    A_cl = np.asarray(A_cl, dtype=float)
    n = A_cl.shape[0]
    x0_cov = symmetrize(x0_cov)
    if x0_cov.shape != (n, n):
        raise DimensionError(f"x0_cov must be {n}x{n}, got {x0_cov.shape}")
    if not is_psd(x0_cov):
        raise ValueError("x0_cov must be positive semidefinite")
    k = len(dirs)
    stds = np.sqrt(np.array([v for _, v in dirs])) if k else np.zeros(0)
    Lx = _psd_sqrt(x0_cov)

    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.trials)
    X = np.zeros((cfg.trials, n))
    noise = np.zeros((cfg.trials, cfg.horizon, k))
    for i, child in enumerate(streams):
        rng = np.random.Generator(np.random.PCG64(child))
        X[i] = Lx @ rng.standard_normal(n)
        if k:
            if cfg.noise_law == "gaussian":
                noise[i] = rng.standard_normal((cfg.horizon, k)) * stds
            else:
                signs = rng.integers(0, 2, size=(cfg.horizon, k)) * 2 - 1
                noise[i] = signs * stds

    D = np.stack([np.asarray(M, dtype=float) for M, _ in dirs]) if k else None
    empirical = np.zeros((cfg.horizon + 1, n, n))
    empirical[0] = np.einsum("ti,tj->ij", X, X) / cfg.trials
    for t in range(cfg.horizon):
        Xn = X @ A_cl.T
        if k:
            # gamma_{t,k} * (D_k x_t), summed over directions per trial
            Xn = Xn + np.einsum("tk,kij,tj->ti", noise[:, t, :], D, X)
        X = Xn
        empirical[t + 1] = np.einsum("ti,tj->ij", X, X) / cfg.trials

    exact = exact_moment_recursion(A_cl, dirs, x0_cov, cfg.horizon)
    return MomentHistory(empirical=empirical, exact=exact)
