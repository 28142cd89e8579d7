"""Exact L2-regularized empirical risk minimization for logistic loss.

The objective over a dataset with m rows is

    J(theta) = (1/m) * sum_i ln(1 + exp(-y_i theta.x_i)) + (lam/2) |theta|^2,

with no intercept term.  J is lam-strongly convex, so the minimizer is
unique; `train` finds it to a gradient-norm tolerance with damped Newton
steps (exact Hessian -- the feature dimension is small everywhere this
package is used) and falls back to gradient steps if a Hessian solve is
unusable.  Training always starts from the origin, so results are
deterministic for a given dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import NumericalError

DEFAULT_TOL = 1e-10
MAX_ITER = 10_000

# A model point is a plain (d,) float64 vector throughout the package.
ModelPoint = np.ndarray


@dataclass(frozen=True)
class BaseSolution:
    """Trained model vector with its convergence evidence.

    `n` is the logical row count of the training data (n for the base
    dataset, n-1 for a neighbor view); `lam` the regularization constant.
    """

    model: ModelPoint
    n: int
    lam: float
    grad_norm: float
    objective: float

    def __post_init__(self):
        m = np.ascontiguousarray(self.model, dtype=np.float64)
        m.flags.writeable = False
        object.__setattr__(self, "model", m)
        if not np.all(np.isfinite(self.model)):
            raise NumericalError("model parameters are not finite")

    @property
    def d(self) -> int:
        return self.model.shape[0]


def _margins(theta: np.ndarray, data) -> np.ndarray:
    X = data.features
    if theta.shape != (X.shape[1],):
        raise ValueError(f"theta has shape {theta.shape}, expected ({X.shape[1]},)")
    return data.labels * (X @ theta)


def objective(theta: ModelPoint, data, lam: float) -> float:
    """J(theta) over a Dataset or NeighborView."""
    theta = np.asarray(theta, dtype=np.float64)
    m = _margins(theta, data)
    return float(np.logaddexp(0.0, -m).mean() + 0.5 * lam * (theta @ theta))


def loss_gradient_row(theta: ModelPoint, x: np.ndarray, y: float) -> np.ndarray:
    """Gradient of the logistic loss of one row at theta: -y * x * sigma(-y theta.x)."""
    theta = np.asarray(theta, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != theta.shape:
        raise ValueError(f"x has shape {x.shape}, expected {theta.shape}")
    return -y * x * float(expit(-y * (theta @ x)))


def loss_gradients(theta: ModelPoint, data) -> np.ndarray:
    """Per-row loss gradients at theta, stacked into an (m, d) array."""
    theta = np.asarray(theta, dtype=np.float64)
    m = _margins(theta, data)
    s = expit(-m)
    return -(data.labels * s)[:, None] * data.features


def gradient(theta: ModelPoint, data, lam: float) -> np.ndarray:
    """Gradient of J at theta."""
    theta = np.asarray(theta, dtype=np.float64)
    return loss_gradients(theta, data).mean(axis=0) + lam * theta


def hessian(theta: ModelPoint, data, lam: float) -> np.ndarray:
    """Hessian of J at theta (exact)."""
    theta = np.asarray(theta, dtype=np.float64)
    m = _margins(theta, data)
    s = expit(-m)
    w = s * (1.0 - s)
    X = data.features
    H = (X.T * w) @ X / X.shape[0]
    H[np.diag_indices_from(H)] += lam
    return H


def train(data, lam: float, tol: float = DEFAULT_TOL) -> BaseSolution:
    """Minimize J to |grad J| <= tol; returns the unique global minimizer.

    Damped Newton with Armijo backtracking; a gradient step is substituted
    whenever the Newton system is singular or yields a non-descent
    direction.  Raises NumericalError if the iteration cap is hit.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    rows = data.features.shape[0]
    if rows < 1:
        raise ValueError("need at least one row to train")

    theta = np.zeros(data.d, dtype=np.float64)
    value = objective(theta, data, lam)
    for _ in range(MAX_ITER):
        g = gradient(theta, data, lam)
        grad_norm = float(np.linalg.norm(g))
        if grad_norm <= tol:
            return BaseSolution(
                model=theta, n=rows, lam=float(lam),
                grad_norm=grad_norm, objective=value,
            )
        step = None
        try:
            step = np.linalg.solve(hessian(theta, data, lam), -g)
        except np.linalg.LinAlgError:
            step = None
        if step is None or not np.all(np.isfinite(step)) or g @ step >= 0.0:
            step = -g  # fallback: plain gradient direction
        slope = float(g @ step)

        # The slack term keeps the test meaningful near the minimum, where
        # the true descent per step falls below float resolution of J.
        slack = 1e-15 * (1.0 + abs(value))
        t = 1.0
        for _ in range(60):
            candidate = theta + t * step
            cand_value = objective(candidate, data, lam)
            if cand_value <= value + 1e-4 * t * slope + slack:
                break
            t *= 0.5
        theta, value = candidate, cand_value

    raise NumericalError(
        f"no convergence in {MAX_ITER} iterations; final |grad| = {grad_norm:.3e}"
    )
