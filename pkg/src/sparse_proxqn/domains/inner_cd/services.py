"""Randomized coordinate descent for the l1-regularized quadratic model."""

import numpy as np

from sparse_proxqn.domains.lbfgs_core.models import LbfgsState

from .models import InnerDirection


def soft_threshold(x, tau):
    """sign(x) * max(|x| - tau, 0), elementwise for arrays."""
    if np.ndim(x) == 0:
        return float(np.sign(x) * max(abs(x) - tau, 0.0))
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def cd_step(w_j: float, d_j: float, g_j: float, a: float, bd_j: float, lam: float) -> float:
    """Exact minimizer of 0.5*a*z^2 + b*z + lam*|c + z| with b = g_j + bd_j, c = w_j + d_j."""
    b = g_j + bd_j
    c = w_j + d_j
    return -c + soft_threshold(c - b / a, lam / a)


def inner_sweep_budget(total_coords: int, active: int, max_inner: int = 10) -> int:
    return max(1, min(max_inner, total_coords // active))


def model_decrease(g: np.ndarray, w: np.ndarray, d: np.ndarray, lam: float) -> float:
    return float(g @ d + lam * (np.abs(w + d).sum() - np.abs(w).sum()))


def solve_subproblem(
    g: np.ndarray,
    w: np.ndarray,
    coords: np.ndarray,
    lbfgs: LbfgsState,
    sweeps: int,
    rng: int | np.random.Generator,
    lam: float,
) -> InnerDirection:
    """
    ``sweeps`` passes of coordinate descent over ``coords`` starting at d = 0.
    ``g`` and ``w`` are aligned with ``coords``. Each pass visits the working
    set in a fresh permutation drawn from ``rng``.
    """
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    coords = np.asarray(coords, dtype=np.int64)
    rng = np.random.default_rng(rng)
    gamma = lbfgs.gamma
    q_rows, qhat_rows = lbfgs.rows(coords)
    # B is fixed for the whole inner solve
    diag = gamma - np.einsum("ij,ij->i", q_rows, qhat_rows)

    d = np.zeros(coords.size)
    d_hat = np.zeros(q_rows.shape[1])
    for _ in range(sweeps):
        for i in rng.permutation(coords.size):
            bd_i = gamma * d[i] - q_rows[i] @ d_hat
            z = cd_step(w[i], d[i], g[i], diag[i], bd_i, lam)
            if z != 0.0:
                d[i] += z
                d_hat += z * qhat_rows[i]

    return InnerDirection(
        coords=coords,
        d=d,
        d_hat=d_hat,
        delta_model=model_decrease(g, w, d, lam),
        sweeps=sweeps,
    )
