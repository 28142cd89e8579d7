"""Sphere-bounded locations of row-removed neighbor models, without retraining.

For an L2-regularized empirical risk minimizer, editing the training set
confines the new minimizer A(y) to a sphere computed from the base
minimizer A(x) and per-row loss gradients only (Okumura et al., 2015).
For the single-row-removal case used here the sphere center and radius
reduce to

    R = (1 + 1/(2(n-1))) A(x) + (1/(2 lam (n-1))) g_i
    r = (1/(2(n-1))) |A(x) + g_i / lam|,

where g_i is the gradient of the logistic loss of row i evaluated at
A(x).  The base point always sits on the sphere surface (r = |R - A(x)|
identically), and the point diametrically across it,

    A_wc(y_i) = 2 R - A(x),

is an accurate stand-in for the exact retrained neighbor model under the
unit-ball normalization used by this package.  `exact_neighbor` provides
the retraining oracle used to validate that claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import erm
from .data import Dataset, neighbor
from .erm import BaseSolution, ModelPoint


@dataclass(frozen=True)
class SphereBound:
    """Sphere S(center, radius) containing the minimizer after removing one row."""

    index: int
    center: np.ndarray
    radius: float


@dataclass(eq=False)
class NeighborSet:
    """All n sphere bounds and worst-case points for a trained base model.

    Array fields hold row i in row i: `centers` (n, d), `radii` (n,),
    `wc` (n, d).  `distances[i]` is |A_wc(y_i) - A(x)| = 2 * radii[i].
    """

    base: BaseSolution
    centers: np.ndarray
    radii: np.ndarray
    wc: np.ndarray

    @property
    def n(self) -> int:
        return self.wc.shape[0]

    @property
    def distances(self) -> np.ndarray:
        return 2.0 * self.radii

    @property
    def bounds(self) -> list[SphereBound]:
        return [
            SphereBound(index=i, center=self.centers[i], radius=float(self.radii[i]))
            for i in range(self.n)
        ]

    @property
    def wc_points(self) -> list[ModelPoint]:
        return [self.wc[i] for i in range(self.n)]


def sphere_general(
    theta: ModelPoint,
    lam: float,
    n0: int,
    n1: int,
    added_grads: np.ndarray,
    removed_grads: np.ndarray,
) -> tuple[np.ndarray, float]:
    """Sphere (center, radius) for a general dataset edit.

    `added_grads` / `removed_grads` are (k, d) stacks of per-row loss
    gradients at theta for the rows added to / removed from the original
    n0-row dataset; n1 is the edited row count.  Only the single-row
    removal reduction is exposed elsewhere; this general form exists so
    that the reduction is checkable against it.
    """
    theta = np.asarray(theta, dtype=np.float64)
    added_grads = np.atleast_2d(np.asarray(added_grads, dtype=np.float64))
    removed_grads = np.atleast_2d(np.asarray(removed_grads, dtype=np.float64))
    n_added = added_grads.shape[0] if added_grads.size else 0
    n_removed = removed_grads.shape[0] if removed_grads.size else 0
    k = n_added + n_removed
    if k == 0:
        raise ValueError("edit must add or remove at least one row")
    if n1 < 1:
        raise ValueError("edited dataset must keep at least one row")

    delta_s = np.zeros_like(theta)
    if n_added:
        delta_s += added_grads.sum(axis=0)
    if n_removed:
        delta_s -= removed_grads.sum(axis=0)
    delta_s /= k

    center = ((n0 + n1) / (2 * n1)) * theta - (k / (2 * lam * n1)) * delta_s
    radius = float(
        np.linalg.norm(
            ((n_added - n_removed) / (2 * n1)) * theta
            + (k / (2 * lam * n1)) * delta_s
        )
    )
    return center, radius


def sphere_bound(base: BaseSolution, data: Dataset, i: int) -> SphereBound:
    """Sphere confining the minimizer after removing row i of `data`."""
    n = data.n
    if n < 2:
        raise ValueError("need n >= 2 for a row-removed neighbor")
    if not 0 <= i < n:
        raise IndexError(f"row index {i} out of range [0, {n})")
    g = erm.loss_gradient_row(base.model, data.features[i], float(data.labels[i]))
    center, radius = sphere_general(
        base.model, base.lam, n0=n, n1=n - 1,
        added_grads=np.empty((0, data.d)), removed_grads=g[None, :],
    )
    return SphereBound(index=i, center=center, radius=radius)


def worst_case_point(bound: SphereBound, base: BaseSolution) -> ModelPoint:
    """Point diametrically across the sphere from the base model: 2R - A(x)."""
    return 2.0 * bound.center - base.model


def exact_neighbor(
    data: Dataset, i: int, lam: float, tol: float = erm.DEFAULT_TOL
) -> ModelPoint:
    """Retrain on the dataset minus row i: the validation oracle."""
    return erm.train(neighbor(data, i), lam, tol=tol).model


def build_neighbor_set(base: BaseSolution, data: Dataset) -> NeighborSet:
    """All n bounds and worst-case points in one O(n d) vectorized pass."""
    n = data.n
    if n < 2:
        raise ValueError("need n >= 2 for row-removed neighbors")
    theta = base.model
    grads = erm.loss_gradients(theta, data)  # (n, d)
    scale = 1.0 / (2.0 * (n - 1))
    centers = (1.0 + scale) * theta + (scale / base.lam) * grads
    radii = scale * np.linalg.norm(theta + grads / base.lam, axis=1)
    wc = 2.0 * centers - theta
    return NeighborSet(base=base, centers=centers, radii=radii, wc=wc)


def relative_deviation(
    wc_point: np.ndarray, exact_point: np.ndarray, base_point: np.ndarray
) -> float:
    """|A_wc - A(y)| / |A(y) - A(x)|, with 0/0 resolved to 0.

    The 0/0 case is a removed row that leaves the minimizer unchanged
    (e.g. a duplicated row); both the projection error and the neighbor
    displacement vanish together.
    """
    num = float(np.linalg.norm(np.asarray(wc_point) - np.asarray(exact_point)))
    den = float(np.linalg.norm(np.asarray(exact_point) - np.asarray(base_point)))
    if den == 0.0:
        return 0.0 if num < 1e-12 else math.inf
    return num / den


def validate_against_retraining(
    base: BaseSolution, data: Dataset, tol: float = erm.DEFAULT_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Full oracle loop: retrain all n neighbors and compare to A_wc.

    Returns (exact (n, d), rel_dev (n,)) where rel_dev[i] is the worst-case
    projection error relative to the true neighbor displacement.
    """
    nbr_set = build_neighbor_set(base, data)
    exact = np.empty_like(nbr_set.wc)
    rel_dev = np.empty(data.n)
    for i in range(data.n):
        exact[i] = exact_neighbor(data, i, base.lam, tol=tol)
        rel_dev[i] = relative_deviation(nbr_set.wc[i], exact[i], base.model)
    return exact, rel_dev
